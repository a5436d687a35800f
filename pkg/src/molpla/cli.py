"""Command-line entry points for every pipeline stage.

Each subcommand reads an optional ``key = value`` config file plus flag
overrides. Artifact paths default into $MOLPLA_HOME (./molpla_home if
unset). Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class DataError(Exception):
    """Bad input data or missing artifact."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def molpla_home() -> Path:
    return Path(os.environ.get("MOLPLA_HOME", "molpla_home"))


def load_config_file(path: str | None) -> dict[str, str]:
    """Simple key = value format, # comments."""
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise DataError(f"config file not found: {path}")
    out: dict[str, str] = {}
    for raw in p.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"bad config line: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _merged(args: argparse.Namespace, config: dict[str, str], key: str,
            default, cast=str):
    """Flag > config file > default."""
    flag = getattr(args, key.replace("-", "_"), None)
    if flag is not None:
        return flag
    if key in config:
        raw = config[key]
        if cast is bool:
            return raw.lower() in ("1", "true", "yes")
        return cast(raw)
    return default


def _read_smiles_file(path: str) -> list[str]:
    p = Path(path)
    if not p.exists():
        raise DataError(f"input file not found: {path}")
    return [line.strip() for line in p.read_text().splitlines() if line.strip()]


def _read_task_csv(path: str) -> list[tuple[str, float]]:
    import csv as _csv
    p = Path(path)
    if not p.exists():
        raise DataError(f"task file not found: {path}")
    rows = []
    with open(p) as f:
        reader = _csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise DataError("empty task CSV")
        for row in reader:
            if len(row) < 2:
                raise DataError(f"bad CSV row: {row}")
            rows.append((row[0], float(row[1])))
    return rows


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_preprocess(args) -> int:
    from .dataset import DatasetConfig, build_pretrain_dataset, save_dataset
    cfg_file = load_config_file(args.config)
    corpus = _read_smiles_file(args.infile)
    config = DatasetConfig(
        max_cores=_merged(args, cfg_file, "max-cores", 10, int),
        min_core_atoms=_merged(args, cfg_file, "min-core-atoms", 4, int),
        common_percentile=_merged(args, cfg_file, "common-percentile", 99.99, float),
        seed=_merged(args, cfg_file, "seed", 7, int),
        core_mode=_merged(args, cfg_file, "core-mode", "putative"),
    )
    ds = build_pretrain_dataset(corpus, config)
    out = Path(args.out or molpla_home() / "data")
    save_dataset(ds, out)
    print(json.dumps({"out": str(out), **ds.stats["split_counts"],
                      "rgroups": len(ds.rgroup_table),
                      "skipped": len(ds.skipped)}))
    return EXIT_OK


def cmd_pretrain(args) -> int:
    from .dataset import load_dataset
    from .learning import TrainConfig, pretrain
    cfg_file = load_config_file(args.config)
    data_dir = Path(args.data or molpla_home() / "data")
    if not (data_dir / "manifest.json").exists():
        raise DataError(f"dataset not found in {data_dir}")
    ds = load_dataset(data_dir)
    config = TrainConfig(
        lr=_merged(args, cfg_file, "lr", 0.001, float),
        batch_size=_merged(args, cfg_file, "batch-size", 512, int),
        max_epochs=_merged(args, cfg_file, "epochs", 100, int),
        patience=_merged(args, cfg_file, "patience", 10, int),
        d=_merged(args, cfg_file, "d", 300, int),
        n_layers=_merged(args, cfg_file, "layers", 5, int),
        dropout=_merged(args, cfg_file, "dropout", 0.0, float),
        seed=_merged(args, cfg_file, "seed", 0, int),
        core_mode=ds.config.core_mode,
    )
    out = Path(args.out or molpla_home() / "run")
    _, history = pretrain(ds, config, out_dir=out)
    print(json.dumps({"out": str(out), "epochs_run": len(history),
                      "final_val": history[-1].val_total}))
    return EXIT_OK


def cmd_finetune(args) -> int:
    from .encoder import load_checkpoint
    from .learning import FinetuneConfig, finetune
    cfg_file = load_config_file(args.config)
    ck = Path(args.checkpoint or molpla_home() / "run" / "checkpoint.bin")
    if not ck.exists():
        raise DataError(f"checkpoint not found: {ck}")
    params, enc_cfg, _ = load_checkpoint(ck)
    rows = _read_task_csv(args.task)
    config = FinetuneConfig(
        lr=_merged(args, cfg_file, "lr", 0.0001, float),
        batch_size=_merged(args, cfg_file, "batch-size", 32, int),
        max_epochs=_merged(args, cfg_file, "epochs", 100, int),
        patience=_merged(args, cfg_file, "patience", 10, int),
        dropout=_merged(args, cfg_file, "dropout", 0.3, float),
        n_seeds=_merged(args, cfg_file, "n-seeds", 5, int),
        seed=_merged(args, cfg_file, "seed", 0, int),
        freeze_encoder=bool(args.freeze_encoder),
    )
    metrics = finetune(params, enc_cfg, rows, args.task_type, config)
    text = json.dumps(metrics, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return EXIT_OK


def cmd_build_library(args) -> int:
    from .dataset import dataset_hash, load_dataset
    from .encoder import checkpoint_hash, load_checkpoint
    from .retrieval import build_library, save_library
    ck = Path(args.checkpoint or molpla_home() / "run" / "checkpoint.bin")
    data_dir = Path(args.data or molpla_home() / "data")
    for p, what in ((ck, "checkpoint"), (data_dir / "manifest.json", "dataset")):
        if not p.exists():
            raise DataError(f"{what} not found: {p}")
    params, enc_cfg, _ = load_checkpoint(ck)
    ds = load_dataset(data_dir)
    library = build_library(params, enc_cfg, ds.rgroup_table, metadata={
        "checkpoint_hash": checkpoint_hash(ck),
        "dataset_hash": dataset_hash(data_dir),
    })
    out = Path(args.out or molpla_home() / "library.bin")
    save_library(out, library)
    print(json.dumps({"out": str(out), "n_rgroups": library.size}))
    return EXIT_OK


def cmd_eval_retrieval(args) -> int:
    from .dataset import load_dataset
    from .encoder import load_checkpoint
    from .retrieval import evaluate_retrieval, load_library
    ck = Path(args.checkpoint or molpla_home() / "run" / "checkpoint.bin")
    lib_path = Path(args.library or molpla_home() / "library.bin")
    data_dir = Path(args.data or molpla_home() / "data")
    for p in (ck, lib_path, data_dir / "manifest.json"):
        if not p.exists():
            raise DataError(f"artifact not found: {p}")
    params, enc_cfg, _ = load_checkpoint(ck)
    library = load_library(lib_path)
    ds = load_dataset(data_dir)
    k_list = tuple(int(x) for x in args.k_list.split(","))
    rng = np.random.default_rng(args.seed or 0)
    metrics = evaluate_retrieval(ds, args.split, library, params, enc_cfg,
                                 k_list=k_list, mode=args.mode, rng=rng)
    obj = metrics.to_obj(dataset=str(data_dir))
    obj["mode"] = args.mode
    text = json.dumps(obj, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return EXIT_OK


def _load_model_and_library(args):
    from .encoder import load_checkpoint
    from .retrieval import load_library
    ck = Path(args.checkpoint or molpla_home() / "run" / "checkpoint.bin")
    lib_path = Path(args.library or molpla_home() / "library.bin")
    for p in (ck, lib_path):
        if not p.exists():
            raise DataError(f"artifact not found: {p}")
    params, enc_cfg, _ = load_checkpoint(ck)
    return params, enc_cfg, load_library(lib_path), ck, lib_path


def _parse_or_data_error(smi: str):
    from .smiles import SmilesSyntaxError, ValenceError, parse_smiles
    try:
        return parse_smiles(smi)
    except (SmilesSyntaxError, ValenceError) as exc:
        raise DataError(f"bad SMILES {smi!r}: {exc}")


def cmd_retrieve(args) -> int:
    from .patterns import default_registry, string_to_bits
    from .retrieval import retrieve
    params, enc_cfg, library, _, _ = _load_model_and_library(args)
    template = _parse_or_data_error(args.template)
    stubs = template.stub_indices()
    stub = args.stub_index if args.stub_index is not None else (
        stubs[0] if stubs else -1)
    if stub < 0:
        raise DataError("template has no stub atom")
    registry = default_registry()
    if args.cond_bits:
        condition = string_to_bits(args.cond_bits)
    else:
        names = [n for n in (args.cond or "").split(",") if n]
        condition = registry.resolve(names)
    result = retrieve(template, stub, condition, library, params, enc_cfg,
                      k=args.k)
    smiles_of = dict(zip(library.keys, library.smiles))
    rows = [{"key": key, "smiles": smiles_of[key], "score": score}
            for key, score in result.ranked]
    print(json.dumps(rows, indent=1))
    return EXIT_OK


def cmd_reattach(args) -> int:
    from .leadopt import descriptor_report, reattach
    template = _parse_or_data_error(args.template)
    stubs = template.stub_indices()
    stub = args.stub_index if args.stub_index is not None else (
        stubs[0] if stubs else -1)
    if stub < 0:
        raise DataError("template has no stub atom")
    if args.rgroup:
        rgroup = _parse_or_data_error(args.rgroup)
        key = ""
    elif args.rgroup_key:
        from .retrieval import load_library
        lib_path = Path(args.library or molpla_home() / "library.bin")
        if not lib_path.exists():
            raise DataError(f"library not found: {lib_path}")
        library = load_library(lib_path)
        idx = library.index_of(args.rgroup_key)
        if idx is None:
            raise DataError(f"R-group key not in library: {args.rgroup_key}")
        rgroup = _parse_or_data_error(library.smiles[idx])
        key = args.rgroup_key
    else:
        raise DataError("need --rgroup or --rgroup-key")
    candidates = reattach(template, stub, rgroup, rgroup_key=key,
                          enumerate_linker_element=args.enumerate_linker_element)
    out = [{**c.to_obj(), "descriptors": descriptor_report(c.molecule)}
           for c in candidates]
    print(json.dumps(out, indent=1))
    return EXIT_OK


def cmd_color(args) -> int:
    from .encoder import load_checkpoint
    from .leadopt import node_pca_coloring
    ck = Path(args.checkpoint or molpla_home() / "run" / "checkpoint.bin")
    if not ck.exists():
        raise DataError(f"checkpoint not found: {ck}")
    params, enc_cfg, _ = load_checkpoint(ck)
    mol = _parse_or_data_error(args.smiles)
    coloring = node_pca_coloring(mol, params, enc_cfg)
    print(json.dumps({"smiles": args.smiles,
                      "scores": [float(s) for s in coloring.scores],
                      "converged": coloring.converged}, indent=1))
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import load_state, make_server
    ck = Path(args.checkpoint or molpla_home() / "run" / "checkpoint.bin")
    lib_path = Path(args.library or molpla_home() / "library.bin")
    for p in (ck, lib_path):
        if not p.exists():
            raise DataError(f"artifact not found: {p}")
    data_dir = args.data or (molpla_home() / "data")
    if not Path(data_dir, "manifest.json").exists():
        data_dir = None
    state = load_state(ck, lib_path, data_dir, args.ui_dir)
    server = make_server(state, args.host, args.port)
    print(f"serving on http://{args.host}:{server.server_address[1]}",
          flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="molpla",
                     description="Core/R-group decomposition, masked graph "
                                 "contrastive pre-training and R-group "
                                 "retrieval.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="corpus -> dataset")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-cores", type=int)
    p.add_argument("--min-core-atoms", type=int)
    p.add_argument("--common-percentile", type=float)
    p.add_argument("--core-mode", choices=["putative", "murcko"])
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("pretrain", help="train the encoder")
    p.add_argument("--data")
    p.add_argument("--out")
    p.add_argument("--config")
    for flag, typ in (("--lr", float), ("--batch-size", int), ("--epochs", int),
                      ("--patience", int), ("--d", int), ("--layers", int),
                      ("--dropout", float), ("--seed", int)):
        p.add_argument(flag, type=typ)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("finetune", help="property-prediction fine-tuning")
    p.add_argument("--checkpoint")
    p.add_argument("--task", required=True)
    p.add_argument("--task-type", choices=["classification", "regression"],
                   required=True)
    p.add_argument("--out")
    p.add_argument("--config")
    p.add_argument("--freeze-encoder", action="store_true")
    for flag, typ in (("--lr", float), ("--batch-size", int), ("--epochs", int),
                      ("--patience", int), ("--dropout", float),
                      ("--n-seeds", int), ("--seed", int)):
        p.add_argument(flag, type=typ)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("build-library", help="embed the R-group table")
    p.add_argument("--checkpoint")
    p.add_argument("--data")
    p.add_argument("--out")
    p.set_defaults(func=cmd_build_library)

    p = sub.add_parser("eval-retrieval", help="MRR / R@K over a split")
    p.add_argument("--checkpoint")
    p.add_argument("--library")
    p.add_argument("--data")
    p.add_argument("--out")
    p.add_argument("--split", default="test")
    p.add_argument("--mode", default="model",
                   choices=["model", "random", "popularity", "cond_none",
                            "cond_all"])
    p.add_argument("--k-list", default="10,50,100")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_eval_retrieval)

    p = sub.add_parser("retrieve", help="top-k R-groups for a template stub")
    p.add_argument("--checkpoint")
    p.add_argument("--library")
    p.add_argument("--template", required=True)
    p.add_argument("--stub-index", type=int)
    p.add_argument("--cond", help="comma-separated pattern names")
    p.add_argument("--cond-bits", help="64-char bit string")
    p.add_argument("--k", type=int, default=1000)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("reattach", help="fill a masked linker joint")
    p.add_argument("--template", required=True)
    p.add_argument("--stub-index", type=int)
    p.add_argument("--rgroup")
    p.add_argument("--rgroup-key")
    p.add_argument("--library")
    p.add_argument("--enumerate-linker-element", action="store_true")
    p.set_defaults(func=cmd_reattach)

    p = sub.add_parser("color", help="PCA node coloring as JSON")
    p.add_argument("--checkpoint")
    p.add_argument("--smiles", required=True)
    p.set_defaults(func=cmd_color)

    p = sub.add_parser("serve", help="HTTP JSON API")
    p.add_argument("--checkpoint")
    p.add_argument("--library")
    p.add_argument("--data")
    p.add_argument("--ui-dir")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8731)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("MOLPLA_LOG", "WARNING"))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # unexpected: treat as data error, no trace
        log.exception("unhandled error")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
