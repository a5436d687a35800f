import numpy as np
import pytest

from molpla.dataset import DatasetConfig, build_pretrain_dataset
from molpla.encoder import EncoderConfig, init_params
from molpla.retrieval import (NotAStubError, RGroupLibrary, RetrievalResult,
                              baseline_retrieve, build_library, load_library,
                              metrics_from_ranks, retrieve, save_library,
                              evaluate_retrieval, _top_k)
from molpla.smiles import parse_smiles


@pytest.fixture(scope="module")
def setup(corpus_mod):
    cfg = EncoderConfig(d=12, n_layers=2, seed=8)
    params = init_params(cfg)
    ds = build_pretrain_dataset(corpus_mod[:50], DatasetConfig())
    library = build_library(params, cfg, ds.rgroup_table)
    return cfg, params, ds, library


@pytest.fixture(scope="module")
def corpus_mod():
    from .conftest import corpus_lines
    return corpus_lines()


class TestTopK:
    def test_matches_full_sort_oracle(self, rng):
        for trial in range(50):
            n = int(rng.integers(5, 200))
            keys = [f"k{i:04d}" for i in range(n)]
            scores = rng.normal(size=n)
            if trial % 3 == 0:  # force ties
                scores = np.round(scores, 1)
            for k in (1, 10, 100):
                got = _top_k(scores, keys, k)
                oracle = sorted(zip(keys, scores),
                                key=lambda kv: (-kv[1], kv[0]))[:k]
                assert [g[0] for g in got] == [o[0] for o in oracle]

    def test_scores_non_increasing(self, rng):
        scores = rng.normal(size=40)
        got = _top_k(scores, [f"{i}" for i in range(40)], 15)
        vals = [s for _, s in got]
        assert all(a >= b for a, b in zip(vals, vals[1:]))


class TestLibrary:
    def test_row_count(self, setup):
        _, _, ds, library = setup
        assert library.size == len(ds.rgroup_table)

    def test_rebuild_bitwise_identical(self, setup):
        cfg, params, ds, library = setup
        again = build_library(params, cfg, ds.rgroup_table)
        assert np.array_equal(library.embeddings, again.embeddings)

    def test_file_round_trip(self, setup, tmp_path):
        _, _, _, library = setup
        save_library(tmp_path / "lib.bin", library)
        back = load_library(tmp_path / "lib.bin")
        assert back.keys == library.keys
        assert np.array_equal(back.embeddings, library.embeddings)
        assert np.array_equal(back.popularity, library.popularity)
        save_library(tmp_path / "lib2.bin", library)
        assert (tmp_path / "lib.bin").read_bytes() == \
            (tmp_path / "lib2.bin").read_bytes()


class TestRetrieve:
    def test_k1_single_library(self, setup):
        cfg, params, _, _ = setup
        lib = RGroupLibrary(keys=["only"], smiles=["*~C"],
                            embeddings=np.ones((1, cfg.d), dtype="<f4"),
                            popularity=np.array([3]))
        template = parse_smiles("*~c1ccccc1")
        res = retrieve(template, 0, np.zeros(64), lib, params, cfg, k=1)
        assert res.keys() == ["only"]

    def test_not_a_stub(self, setup):
        cfg, params, _, library = setup
        template = parse_smiles("*~c1ccccc1")
        with pytest.raises(NotAStubError):
            retrieve(template, 3, np.zeros(64), library, params, cfg)
        with pytest.raises(NotAStubError):
            retrieve(template, 99, np.zeros(64), library, params, cfg)

    def test_matches_oracle_on_real_queries(self, setup):
        cfg, params, ds, library = setup
        template = parse_smiles(ds.instances[0].obj["query"])
        stub = ds.instances[0].obj["linker_map"][0][1]
        cond = ds.instances[0].conditions[0]
        from molpla.retrieval import query_embedding
        z = query_embedding(template, stub, cond, params, cfg)
        scores = library.embeddings.astype(np.float64) @ z
        oracle = sorted(zip(library.keys, scores),
                        key=lambda kv: (-kv[1], kv[0]))
        for k in (1, 10, 100):
            res = retrieve(template, stub, cond, library, params, cfg, k=k)
            assert res.keys() == [o[0] for o in oracle[:k]]

    def test_default_window_is_1000(self):
        from molpla.retrieval import DEFAULT_TOP_K
        assert DEFAULT_TOP_K == 1000


class TestBaselines:
    def test_popularity_fixed_list(self, setup):
        _, _, _, library = setup
        a = baseline_retrieve("popularity", library, k=10)
        b = baseline_retrieve("popularity", library, k=10)
        assert a.keys() == b.keys()
        pops = [library.popularity[library.index_of(k)] for k in a.keys()]
        assert all(x >= y for x, y in zip(pops, pops[1:]))

    def test_random_seeded_reproducible(self, setup):
        _, _, _, library = setup
        a = baseline_retrieve("random", library, k=10,
                              rng=np.random.default_rng(5))
        b = baseline_retrieve("random", library, k=10,
                              rng=np.random.default_rng(5))
        assert a.keys() == b.keys()

    def test_cond_overrides(self, setup):
        cfg, params, ds, library = setup
        template = parse_smiles(ds.instances[0].obj["query"])
        stub = ds.instances[0].obj["linker_map"][0][1]
        res0 = baseline_retrieve("cond_none", library, k=5, template=template,
                                 stub_index=stub, params=params, config=cfg)
        res1 = baseline_retrieve("cond_all", library, k=5, template=template,
                                 stub_index=stub, params=params, config=cfg)
        assert res0.condition == "0" * 64
        assert res1.condition == "1" * 64


class TestMetrics:
    def test_perfect_ranks(self):
        m = metrics_from_ranks([1, 1, 1])
        assert m.mrr == 1.0 and all(v == 1.0 for v in m.recall_at.values())

    def test_absent_is_zero(self):
        m = metrics_from_ranks([0, 1])
        assert m.mrr == 0.5

    def test_recall_monotone_and_bounded(self, rng):
        ranks = [int(r) for r in rng.integers(0, 200, size=100)]
        m = metrics_from_ranks(ranks, k_list=(10, 50, 100))
        assert 0.0 <= m.mrr <= 1.0
        values = [m.recall_at[k] for k in (10, 50, 100)]
        assert values == sorted(values)
        assert all(0.0 <= v <= 1.0 for v in values)

    def test_random_closed_form(self, rng):
        """Uniform random ranking of N items: E[1/rank] = H_N / N."""
        n = 60
        h_n = float(np.sum(1.0 / np.arange(1, n + 1)))
        expected = h_n / n
        sims = []
        for _ in range(3000):
            rank = int(rng.integers(1, n + 1))
            sims.append(1.0 / rank)
        assert abs(np.mean(sims) - expected) < 0.01

    def test_evaluate_on_split(self, setup):
        cfg, params, ds, library = setup
        m = evaluate_retrieval(ds, "test", library, params, cfg, limit=20)
        assert 0.0 <= m.mrr <= 1.0 and m.n_queries > 0
        obj = m.to_obj("desk")
        assert set(obj) >= {"dataset", "MRR", "R@10", "R@50", "R@100",
                            "n_queries"}
