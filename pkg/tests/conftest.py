import numpy as np
import pytest

from molpla.dataset import DatasetConfig, build_pretrain_dataset
from molpla.smiles import parse_smiles


def corpus_lines():
    from importlib import resources
    text = (resources.files("molpla") / "data" / "corpus.smi").read_text()
    return [line for line in text.splitlines() if line.strip()]


@pytest.fixture(scope="session")
def corpus():
    return corpus_lines()


@pytest.fixture(scope="session")
def small_dataset(corpus):
    """Dataset over the first 60 corpus molecules (fast, shared)."""
    return build_pretrain_dataset(corpus[:60], DatasetConfig())


@pytest.fixture(scope="session")
def corpus_graphs(corpus):
    return [parse_smiles(s) for s in corpus]


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
