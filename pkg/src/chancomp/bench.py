"""Benchmark harness: datasets, per-compiler records, summaries, L_max sweep.

Datasets are regenerable bit-exactly from (seed, count, length range); every
record's distance is recomputed from the returned sequence rather than
trusted from the compiler, which catches convention drift between modules.
Artifacts are CSV files with the effective configuration echoed in comment
lines; the log-distance histogram uses fixed binning (log10, width 0.25,
range [-6, 0]) so outputs diff cleanly across runs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .gates import GateSequence, evaluate, random_sequence, sequence_from_tokens, \
    sequence_to_tokens, t_count
from .linalg import fidelity_distance

__all__ = [
    "Dataset",
    "BenchRecord",
    "SKCompilerAdapter",
    "PPOCompilerAdapter",
    "make_dataset",
    "save_dataset",
    "load_dataset",
    "run_benchmark",
    "summarize",
    "histogram",
    "lmax_sweep",
    "HIST_BIN_WIDTH",
    "HIST_RANGE",
]

HIST_BIN_WIDTH = 0.25
HIST_RANGE = (-6.0, 0.0)


@dataclass(frozen=True)
class Dataset:
    name: str
    seed: int
    length_range: tuple
    items: tuple  # of (GateSequence, np.ndarray) pairs

    def __len__(self):
        return len(self.items)


@dataclass(frozen=True)
class BenchRecord:
    target_index: int
    compiler: str
    achieved_distance: float
    sequence_length: int
    t_count: int
    wall_time_ms: float
    success: bool


def make_dataset(count: int, min_len: int, max_len: int, seed: int,
                 name: str = "dataset") -> Dataset:
    """Random-sequence targets with lengths uniform in [min_len, max_len]."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    if not 0 < min_len <= max_len:
        raise ValueError(f"invalid length range [{min_len}, {max_len}]")
    rng = np.random.default_rng(seed)
    items = []
    for _ in range(count):
        length = int(rng.integers(min_len, max_len + 1))
        seq = random_sequence(length, rng)
        items.append((seq, evaluate(seq)))
    return Dataset(name=name, seed=seed, length_range=(min_len, max_len),
                   items=tuple(items))


def save_dataset(dataset: Dataset, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"# chancomp-dataset v1 name={dataset.name} seed={dataset.seed} "
                 f"count={len(dataset)} min_len={dataset.length_range[0]} "
                 f"max_len={dataset.length_range[1]}\n")
        for seq, _ in dataset.items:
            fh.write(sequence_to_tokens(seq) + "\n")


def load_dataset(path) -> Dataset:
    with open(Path(path)) as fh:
        header = fh.readline().strip()
        if not header.startswith("# chancomp-dataset v1 "):
            raise ValueError("unrecognized dataset file header")
        fields = dict(part.split("=", 1) for part in header.split()[3:])
        items = []
        for line in fh:
            line = line.strip()
            seq = sequence_from_tokens(line) if line else GateSequence(())
            items.append((seq, evaluate(seq)))
    return Dataset(name=fields["name"], seed=int(fields["seed"]),
                   length_range=(int(fields["min_len"]), int(fields["max_len"])),
                   items=tuple(items))


class SKCompilerAdapter:
    """Solovay-Kitaev compiler with a fixed net and recursion level."""

    def __init__(self, net, level: int):
        from .sk import sk_compile

        self._sk_compile = sk_compile
        self.net = net
        self.level = level
        self.tag = f"sk/depth{net.depth}/level{level}"

    def compile(self, target: np.ndarray):
        result = self._sk_compile(self.net, target, self.level)
        return result.sequence, result.achieved_distance


class PPOCompilerAdapter:
    """Trained policy with depth-first inference and seeded retries."""

    def __init__(self, model, tolerance: float = None, max_steps: int = None,
                 retries: int = 0, retry_seed: int = 0, tag: str = None):
        from .ppo.agent import compile_target

        self._compile_target = compile_target
        self.model = model
        self.tolerance = tolerance
        self.max_steps = max_steps
        self.retries = retries
        self.retry_seed = retry_seed
        self.tag = tag or f"ppo/ct{model.settings.t_cost:g}"

    def compile(self, target: np.ndarray):
        seq, dist, _ = self._compile_target(
            self.model, target, tolerance=self.tolerance,
            max_steps=self.max_steps, retries=self.retries,
            rng=np.random.default_rng(self.retry_seed),
        )
        return seq, dist


def run_benchmark(dataset: Dataset, compilers, eps_t: float, workers: int = 1):
    """One BenchRecord per (item, compiler); distances recomputed, failures kept."""
    tasks = [
        (idx, comp, target)
        for idx, (_, target) in enumerate(dataset.items)
        for comp in compilers
    ]

    def run_one(task):
        idx, comp, target = task
        t0 = time.perf_counter()
        try:
            seq, _ = comp.compile(target)
            wall = (time.perf_counter() - t0) * 1e3
            recomputed = fidelity_distance(evaluate(GateSequence(seq.ids)), target)
            return BenchRecord(
                target_index=idx, compiler=comp.tag,
                achieved_distance=recomputed, sequence_length=len(seq),
                t_count=t_count(seq), wall_time_ms=wall,
                success=recomputed < eps_t,
            )
        except Exception:
            wall = (time.perf_counter() - t0) * 1e3
            return BenchRecord(
                target_index=idx, compiler=comp.tag, achieved_distance=float("inf"),
                sequence_length=0, t_count=0, wall_time_ms=wall, success=False,
            )

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_one, tasks))
    else:
        records = [run_one(t) for t in tasks]
    records.sort(key=lambda r: (r.target_index, r.compiler))
    return records


def summarize(records):
    """Per-compiler aggregates: success rate, distances, lengths, T statistics."""
    if not records:
        raise ValueError("no records to summarize")
    tags = sorted({r.compiler for r in records})
    rows = []
    for tag in tags:
        rs = [r for r in records if r.compiler == tag]
        finite = [r for r in rs if np.isfinite(r.achieved_distance)]
        dists = np.array([r.achieved_distance for r in finite])
        lengths = np.array([r.sequence_length for r in finite])
        tcounts = np.array([r.t_count for r in finite])
        nonempty = lengths > 0
        t_props = tcounts[nonempty] / lengths[nonempty]
        # least-squares slope of t_count against sequence length
        slope = float(np.polyfit(lengths, tcounts, 1)[0]) if len(set(lengths)) > 1 \
            else (float(tcounts[0] / lengths[0]) if nonempty.any() else 0.0)
        rows.append({
            "compiler": tag,
            "count": len(rs),
            "success_rate": float(np.mean([r.success for r in rs])),
            "mean_distance": float(dists.mean()) if len(dists) else float("inf"),
            "median_distance": float(np.median(dists)) if len(dists) else float("inf"),
            "mean_length": float(lengths.mean()) if len(lengths) else 0.0,
            "mean_t_proportion": float(t_props.mean()) if len(t_props) else 0.0,
            "t_vs_length_slope": slope,
        })
    return rows


def histogram(records):
    """Fixed-bin log10-distance histogram rows: (compiler, bin_left, count).

    Distances are clipped into [10^-6, 1); zero distances land in the lowest
    bin, distances >= 1 in the highest.
    """
    lo, hi = HIST_RANGE
    nbins = int(round((hi - lo) / HIST_BIN_WIDTH))
    edges = lo + HIST_BIN_WIDTH * np.arange(nbins + 1)
    rows = []
    for tag in sorted({r.compiler for r in records}):
        ds = np.array([r.achieved_distance for r in records if r.compiler == tag])
        ds = np.where(np.isfinite(ds), ds, 1.0)
        logs = np.log10(np.clip(ds, 10.0**lo, None))
        logs = np.clip(logs, lo, hi - 1e-9)
        counts, _ = np.histogram(logs, bins=edges)
        for left, count in zip(edges[:-1], counts):
            rows.append({"compiler": tag, "bin_left": float(left), "count": int(count)})
    return rows


def lmax_sweep(dataset: Dataset, model, lmax_values, eps_t: float = None,
               retries: int = 0):
    """Per-L_max means of distance, length, T count, plus wall time.

    Depth-first inference makes the cost of a failed episode linear in L_max,
    so on failure-dominated datasets total wall time grows linearly.
    """
    from .ppo.agent import compile_target

    eps_t = model.settings.tolerance if eps_t is None else eps_t
    rows = []
    for lmax in lmax_values:
        dists, lengths, tcounts, succ = [], [], [], []
        t0 = time.perf_counter()
        for idx, (_, target) in enumerate(dataset.items):
            seq, dist, ok = compile_target(
                model, target, tolerance=eps_t, max_steps=int(lmax),
                retries=retries, rng=np.random.default_rng(idx),
            )
            dists.append(dist)
            lengths.append(len(seq))
            tcounts.append(t_count(seq))
            succ.append(ok)
        wall = time.perf_counter() - t0
        lengths = np.array(lengths)
        tcounts = np.array(tcounts)
        nonempty = lengths > 0
        rows.append({
            "l_max": int(lmax),
            "mean_distance": float(np.mean(dists)),
            "mean_length": float(lengths.mean()),
            "mean_t_count": float(tcounts.mean()),
            "mean_t_proportion": float((tcounts[nonempty] / lengths[nonempty]).mean())
            if nonempty.any() else 0.0,
            "success_rate": float(np.mean(succ)),
            "wall_time_s": wall,
        })
    return rows
