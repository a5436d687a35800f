"""molpla: molecular core/R-group decomposition, masked graph contrastive
pre-training, and R-group retrieval for lead optimization.

The public surface re-exports the main entry points of each stage; module
internals stay importable for finer control.
"""

__version__ = "0.1.0"

from .canon import canonical_key, canonical_smiles
from .dataset import (DatasetConfig, PretrainDataset, build_pretrain_dataset,
                      dedup_rgroups, load_dataset, save_dataset,
                      scaffold_split)
from .decompose import (DecompositionInstance, RuleSet, decompose,
                        enumerate_decompositions, enumerate_putative_cores,
                        identify_rgroups, murcko_scaffold, remerge)
from .encoder import (EncoderConfig, ParameterStore, encode, init_params,
                      load_checkpoint, readout, save_checkpoint)
from .graph import AtomAttrs, BondAttrs, MolGraph, masked_bond, stub_atom
from .learning import (FinetuneConfig, TrainConfig, auroc, finetune, info_nce,
                       pretrain, pretrain_step, rmse)
from .leadopt import (descriptor_report, node_pca_coloring, optimize_lead,
                      reattach)
from .match import Pattern, match_pattern
from .patterns import condition_vector, default_registry
from .retrieval import (RGroupLibrary, baseline_retrieve, build_library,
                        evaluate_retrieval, load_library, retrieve,
                        save_library)
from .rings import ring_info
from .smiles import parse_smiles, write_smiles
from .valence import valence_check

__all__ = [
    "AtomAttrs", "BondAttrs", "MolGraph", "masked_bond", "stub_atom",
    "parse_smiles", "write_smiles", "canonical_key", "canonical_smiles",
    "Pattern", "match_pattern", "ring_info", "valence_check",
    "murcko_scaffold", "enumerate_putative_cores", "identify_rgroups",
    "decompose", "enumerate_decompositions", "remerge", "RuleSet",
    "DecompositionInstance", "DatasetConfig", "PretrainDataset",
    "build_pretrain_dataset", "dedup_rgroups", "scaffold_split",
    "save_dataset", "load_dataset", "condition_vector", "default_registry",
    "EncoderConfig", "ParameterStore", "init_params", "encode", "readout",
    "save_checkpoint", "load_checkpoint", "TrainConfig", "FinetuneConfig",
    "info_nce", "pretrain", "pretrain_step", "finetune", "auroc", "rmse",
    "RGroupLibrary", "build_library", "retrieve", "baseline_retrieve",
    "evaluate_retrieval", "save_library", "load_library", "reattach",
    "node_pca_coloring", "descriptor_report", "optimize_lead",
]
