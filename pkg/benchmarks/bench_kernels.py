"""Benchmark: compiled extension kernels vs the pure-numpy fallback.

Times the raw hot kernels and one full training step on real data.
Run: python benchmarks/bench_kernels.py
"""

import importlib
import os
import sys
import time

import numpy as np


def time_fn(fn, repeats=20):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def bench_backend(force_pure: bool):
    os.environ["MOLPLA_PURE"] = "1" if force_pure else ""
    import molpla.kernels
    importlib.reload(molpla.kernels)
    import molpla.autodiff
    importlib.reload(molpla.autodiff)
    from molpla import kernels

    rng = np.random.default_rng(0)
    n_nodes, n_edges, d = 4000, 8400, 64
    h = rng.normal(size=(n_nodes, d))
    src = rng.integers(0, n_nodes, size=n_edges)
    dst = rng.integers(0, n_nodes, size=n_edges)
    ef = rng.normal(size=(n_edges, d))
    idx = rng.integers(0, 128, size=n_nodes)
    table = rng.normal(size=(128, d))

    results = {
        "backend": kernels.BACKEND,
        "scatter_add_rows": time_fn(
            lambda: kernels.scatter_add_rows(np.zeros((128, d)), idx, h)),
        "gather_rows": time_fn(lambda: kernels.gather_rows(table, idx)),
        "neighbor_aggregate": time_fn(
            lambda: kernels.neighbor_aggregate(h, src, dst, ef)),
    }

    # one full training step on real molecules
    import molpla.encoder
    importlib.reload(molpla.encoder)
    import molpla.learning
    importlib.reload(molpla.learning)
    from importlib import resources

    from molpla.dataset import DatasetConfig, build_pretrain_dataset
    from molpla.encoder import init_params
    from molpla.learning import TrainConfig, TrainInstance, pretrain_step

    corpus = (resources.files("molpla") / "data" / "corpus.smi") \
        .read_text().split()[:60]
    ds = build_pretrain_dataset(corpus, DatasetConfig())
    instances = [TrainInstance.from_record(r) for r in ds.instances[:64]]
    cfg = TrainConfig(d=64, n_layers=5, seed=0)
    params = init_params(cfg.encoder_config())

    def step():
        params.zero_grad()
        pretrain_step(instances, params, cfg)

    results["pretrain_step_b64_d64"] = time_fn(step, repeats=5)
    return results


def main():
    rows = [bench_backend(force_pure=True)]
    try:
        import molpla._fastkernels  # noqa: F401
        rows.append(bench_backend(force_pure=False))
    except ImportError:
        print("compiled extension not built; pure results only", file=sys.stderr)

    names = [k for k in rows[0] if k != "backend"]
    header = f"{'kernel':28}" + "".join(f"{r['backend']:>14}" for r in rows)
    if len(rows) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name in names:
        line = f"{name:28}" + "".join(f"{r[name]*1e3:>12.2f}ms" for r in rows)
        if len(rows) == 2:
            line += f"{rows[0][name] / rows[1][name]:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
