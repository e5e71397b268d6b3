"""Malignant location sets: exact enumeration and Monte-Carlo sampling.

A set of locations is malignant when some choice of nontrivial fault actions
on exactly those locations makes the exRec fail.  ``alpha_k`` is the number
of malignant k-sets.

Exact enumeration walks k-subsets in colex order, split into fixed-size
chunks; finished chunk counts are checkpointed atomically so an interrupted
run can resume.  Monte-Carlo draws all samples up front from a seeded
generator, so the result does not depend on how the work is split.
"""

from __future__ import annotations

import itertools
import json
import math
import multiprocessing
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .code import ResourceGuardError
from .faultsim import exrec_correct, fault_actions
from .fastsim import CompiledExRec

EXACT = "exact"
MONTE_CARLO = "monte_carlo"
DEFAULT_CHUNK = 200_000
# exact runs estimated above this many assignment evaluations are refused
DEFAULT_BUDGET = 5 * 10**10


def is_malignant(exrec, locations: Iterable[int]) -> bool:
    """Reference check: try every assignment of nontrivial actions with the
    frame walker.  Slow; :class:`CompiledExRec` gives the same answer fast."""
    locs = sorted(set(locations))
    L = len(exrec.locations)
    for loc in locs:
        if not 0 <= loc < L:
            raise IndexError(f"no location {loc} (exRec has {L})")
    ops = [exrec.locations[loc][1] for loc in locs]
    # two-qubit actions of weight two first: they tend to fail soonest
    choices = [sorted(fault_actions(op), key=lambda a: -len(a.replace("I", ""))) for op in ops]
    for combo in itertools.product(*choices):
        if not exrec_correct(exrec, dict(zip(locs, combo))):
            return True
    return False


# colex ranking of k-subsets of range(L)


def colex_rank(subset: Sequence[int]) -> int:
    return sum(math.comb(c, i + 1) for i, c in enumerate(sorted(subset)))


def colex_unrank(rank: int, k: int) -> tuple[int, ...]:
    out = []
    for i in range(k, 0, -1):
        c = i - 1
        while math.comb(c + 1, i) <= rank:
            c += 1
        out.append(c)
        rank -= math.comb(c, i)
    return tuple(reversed(out))


def colex_range(k: int, start: int, stop: int) -> np.ndarray:
    """All k-subsets with colex rank in ``[start, stop)``, as rows."""
    if stop <= start:
        return np.zeros((0, k), dtype=np.int64)
    if k == 1:
        return np.arange(start, stop, dtype=np.int64)[:, None]
    top = colex_unrank(start, k)[-1]
    parts = []
    while start < stop:
        base = math.comb(top, k)
        end = min(stop, math.comb(top + 1, k))
        sub = colex_range(k - 1, start - base, end - base)
        parts.append(np.column_stack([sub, np.full(len(sub), top, dtype=np.int64)]))
        start = end
        top += 1
    return np.concatenate(parts)


# reports


@dataclass
class MalignancyReport:
    exrec: dict
    order: int
    total_sets: int
    method: str
    samples: int
    malignant_count: int
    seed: int | None = None
    chunk_size: int | None = None
    tool_version: str = __version__
    elapsed: float = field(default=0.0, compare=False)

    @property
    def locations(self) -> int:
        return self.exrec["locations"]

    @property
    def f_hat(self) -> float:
        return self.malignant_count / self.samples if self.samples else 0.0

    @property
    def sigma(self) -> float:
        """Standard error of ``f_hat``: zero for exact reports."""
        if self.method == EXACT:
            return 0.0
        f = self.f_hat
        return math.sqrt(f * (1 - f) / self.samples)

    @property
    def alpha(self) -> float:
        """Malignant k-set count (exact) or its estimate f_hat * C(L, k)."""
        if self.method == EXACT:
            return float(self.malignant_count)
        return self.f_hat * self.total_sets

    @property
    def upper_bound_only(self) -> bool:
        return self.method == MONTE_CARLO and self.malignant_count == 0

    def to_dict(self, *, with_elapsed: bool = False) -> dict:
        d = asdict(self)
        if not with_elapsed:
            d.pop("elapsed")
        d["f_hat"] = self.f_hat
        d["sigma"] = self.sigma
        d["alpha"] = self.alpha
        d["upper_bound_only"] = self.upper_bound_only
        return d

    def to_json(self) -> str:
        """Stable serialisation: sorted keys, wall time left out so equal runs
        give identical bytes."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> MalignancyReport:
        keep = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        return cls(**keep)

    def save(self, path: str | os.PathLike) -> None:
        atomic_write(Path(path), self.to_json())

    @classmethod
    def load(cls, path: str | os.PathLike) -> MalignancyReport:
        return cls.from_dict(json.loads(Path(path).read_text()))


def merge_reports(reports: Sequence[MalignancyReport]) -> MalignancyReport:
    """Pool Monte-Carlo shards of the same exRec and order."""
    if not reports:
        raise ValueError("nothing to merge")
    first = reports[0]
    for r in reports[1:]:
        if (r.exrec, r.order, r.method) != (first.exrec, first.order, first.method):
            raise ValueError("reports describe different analyses")
    if first.method != MONTE_CARLO:
        raise ValueError("only Monte-Carlo shards can be pooled")
    return MalignancyReport(
        exrec=first.exrec,
        order=first.order,
        total_sets=first.total_sets,
        method=MONTE_CARLO,
        samples=sum(r.samples for r in reports),
        malignant_count=sum(r.malignant_count for r in reports),
        seed=None,
        elapsed=sum(r.elapsed for r in reports),
    )


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


# workers

_WORKER: CompiledExRec | None = None


def _init_worker(exrec) -> None:
    global _WORKER
    _WORKER = CompiledExRec(exrec)


def _exact_chunk(args: tuple[int, int, int]) -> tuple[int, int]:
    k, start, stop = args
    return start, int(_WORKER.malignant(colex_range(k, start, stop)).sum())


def _pool(jobs: int, exrec):
    return multiprocessing.get_context("fork").Pool(jobs, initializer=_init_worker, initargs=(exrec,))


def estimate_cost(compiled: CompiledExRec, k: int) -> float:
    """Expected number of assignment evaluations for an exact order-k run."""
    L = compiled.num_locations
    mean = float(np.mean(compiled.counts))
    return math.comb(L, k) * mean**k


def enumerate_exact(
    exrec,
    k: int,
    *,
    jobs: int = 1,
    chunk_size: int = DEFAULT_CHUNK,
    checkpoint: str | os.PathLike | None = None,
    budget: float = DEFAULT_BUDGET,
    stop_after: int | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> MalignancyReport | None:
    """Count malignant k-sets exactly.

    ``checkpoint`` names a JSON file holding finished chunk counts; it is
    rewritten atomically after every chunk and picked up on the next call.
    ``stop_after`` ends the run after that many new chunks (used to test
    resumption); the returned report is then ``None``.
    """
    if k < 1:
        raise ValueError("order must be at least 1")
    t0 = time.perf_counter()
    compiled = CompiledExRec(exrec)
    L = compiled.num_locations
    total = math.comb(L, k)
    cost = estimate_cost(compiled, k)
    if cost > budget:
        raise ResourceGuardError(
            f"exact order-{k} analysis of {L} locations needs about {cost:.3g} evaluations "
            f"(budget {budget:.3g}); use Monte-Carlo or raise the budget"
        )
    descriptor = exrec.descriptor
    done: dict[int, int] = {}
    ckpt = Path(checkpoint) if checkpoint is not None else None
    key = {"exrec": descriptor, "order": k, "chunk_size": chunk_size}
    if ckpt is not None and ckpt.exists():
        state = json.loads(ckpt.read_text())
        if state["key"] != key:
            raise ValueError(f"checkpoint {ckpt} belongs to a different analysis")
        done = {int(s): c for s, c in state["done"].items()}
    pending = [(k, s, min(s + chunk_size, total)) for s in range(0, total, chunk_size) if s not in done]

    def record(start: int, count: int) -> None:
        done[start] = count
        if ckpt is not None:
            atomic_write(ckpt, json.dumps({"key": key, "done": {str(s): c for s, c in sorted(done.items())}}))
        if progress is not None:
            progress(len(done), -(-total // chunk_size))

    if stop_after is not None:
        pending = pending[:stop_after]
    if jobs > 1 and len(pending) > 1:
        with _pool(jobs, exrec) as pool:
            for start, count in pool.imap_unordered(_exact_chunk, pending):
                record(start, count)
    else:
        global _WORKER
        _WORKER = compiled
        for args in pending:
            record(*_exact_chunk(args))
    if len(done) < -(-total // chunk_size):
        return None
    return MalignancyReport(
        exrec=descriptor,
        order=k,
        total_sets=total,
        method=EXACT,
        samples=total,
        malignant_count=sum(done.values()),
        chunk_size=chunk_size,
        elapsed=time.perf_counter() - t0,
    )


def draw_subsets(L: int, k: int, N: int, seed: int) -> np.ndarray:
    """N independent uniform k-subsets of range(L), sorted rows of shape (N, k).

    Rows with a repeated location are redrawn, which leaves every k-subset
    equally likely.
    """
    if not 1 <= k <= L:
        raise ValueError(f"order {k} impossible with {L} locations")
    rng = np.random.default_rng(seed)
    out = np.sort(rng.integers(0, L, size=(N, k)), axis=1)
    while True:
        bad = np.nonzero((np.diff(out, axis=1) == 0).any(axis=1))[0]
        if len(bad) == 0:
            return out
        out[bad] = np.sort(rng.integers(0, L, size=(len(bad), k)), axis=1)


def _mc_block(args: tuple[np.ndarray]) -> int:
    (sets,) = args
    return int(_WORKER.malignant(sets).sum())


def sample_mc(
    exrec,
    k: int,
    N: int,
    seed: int,
    *,
    jobs: int = 1,
    block: int = 20_000,
) -> MalignancyReport:
    """Estimate the malignant fraction of k-sets from N uniform draws."""
    if N < 1:
        raise ValueError("need at least one sample")
    t0 = time.perf_counter()
    L = len(exrec.locations)
    sets = draw_subsets(L, k, N, seed)
    blocks = [(sets[s : s + block],) for s in range(0, N, block)]
    if jobs > 1 and len(blocks) > 1:
        with _pool(jobs, exrec) as pool:
            hits = sum(pool.map(_mc_block, blocks))
    else:
        global _WORKER
        _WORKER = CompiledExRec(exrec)
        hits = sum(_mc_block(b) for b in blocks)
    return MalignancyReport(
        exrec=exrec.descriptor,
        order=k,
        total_sets=math.comb(L, k),
        method=MONTE_CARLO,
        samples=N,
        malignant_count=hits,
        seed=seed,
        elapsed=time.perf_counter() - t0,
    )
