"""Certified extrema on finite nets.

If F has partial derivatives bounded by M_k on a domain K and every point of
K lies within half a step delta_k (per axis) of a net point reachable along
axis-parallel segments, then

    min_K F >= min_net F - sum_k M_k delta_k.

The engine evaluates F on the net, keeps the extremum with the lowest
lexicographic index, and adds or subtracts the Lipschitz budget.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

WORKERS_ENV = "GRUNBAUM_WORKERS"
BLOCK_SIZE = 8192


class EmptyNetError(ValueError):
    """The membership predicate rejected every net point."""


def resolve_workers(workers: Optional[int] = None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, int(workers))


@dataclass(frozen=True)
class Axis:
    lower: float
    upper: float
    steps: int
    right_open: bool = False

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("an axis needs at least one step")
        if self.upper < self.lower:
            raise ValueError("upper must not be below lower")

    @property
    def step(self) -> float:
        return (self.upper - self.lower) / self.steps

    @property
    def half_step(self) -> float:
        return 0.5 * self.step

    @property
    def npoints(self) -> int:
        return self.steps if self.right_open else self.steps + 1

    def points(self) -> np.ndarray:
        return self.lower + self.step * np.arange(self.npoints, dtype=np.float64)

    def point(self, i: int) -> float:
        return self.lower + self.step * i


@dataclass(frozen=True)
class GridSpec:
    axes: tuple
    derivative_bounds: tuple
    membership: Optional[Callable] = None
    path_rule: str = "convex"

    def __post_init__(self):
        if len(self.axes) != len(self.derivative_bounds):
            raise ValueError("one derivative bound per axis is required")
        if any(m < 0 for m in self.derivative_bounds):
            raise ValueError("derivative bounds must be nonnegative")
        if self.path_rule not in ("convex", "axis-path"):
            raise ValueError("path_rule is 'convex' or 'axis-path'")

    @property
    def shape(self):
        return tuple(ax.npoints for ax in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def uncertainty(self) -> float:
        return lipschitz_budget(self.derivative_bounds, [ax.half_step for ax in self.axes])


def lipschitz_budget(bounds: Sequence[float], half_steps: Sequence[float]) -> float:
    return float(math.fsum(m * d for m, d in zip(bounds, half_steps)))


@dataclass(frozen=True)
class CertifiedExtremum:
    kind: str
    net_value: float
    uncertainty: float
    certified_value: float
    evaluations: int
    argnet: tuple
    excluded: int = 0
    details: dict = field(default_factory=dict, compare=False)

    @classmethod
    def build(cls, kind, net_value, uncertainty, evaluations, argnet, excluded=0, details=None):
        cert = net_value - uncertainty if kind == "min" else net_value + uncertainty
        return cls(kind, float(net_value), float(uncertainty), float(cert), int(evaluations),
                   tuple(float(a) for a in argnet), int(excluded), dict(details or {}))

    def clears(self, threshold: float) -> bool:
        """min: certified value above threshold; max: certified value below it."""
        if self.kind == "min":
            return self.certified_value > threshold
        return self.certified_value < threshold


@dataclass(frozen=True)
class BlockResult:
    value: float
    index: int
    evaluations: int
    excluded: int = 0


def merge_blocks(results: Sequence[BlockResult], kind: str = "min") -> BlockResult:
    """Merge per-block results in block order; the earliest index wins ties."""
    best_v = math.inf if kind == "min" else -math.inf
    best_i = -1
    ev = ex = 0
    for r in results:
        ev += r.evaluations
        ex += r.excluded
        if r.index < 0:
            continue
        better = r.value < best_v if kind == "min" else r.value > best_v
        if better or (r.value == best_v and r.index < best_i):
            best_v, best_i = r.value, r.index
    return BlockResult(best_v, best_i, ev, ex)


def run_blocks(fn: Callable[[int], BlockResult], nblocks: int, workers: Optional[int] = None):
    """Evaluate fn over block ids; output order is block order whatever the pool size."""
    workers = resolve_workers(workers)
    if workers == 1 or nblocks <= 1:
        return [fn(b) for b in range(nblocks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(nblocks)))


def _coords(grid: GridSpec, flat: np.ndarray):
    idx = np.unravel_index(flat, grid.shape)
    return [ax.lower + ax.step * i.astype(np.float64) for ax, i in zip(grid.axes, idx)]


def _search(F, grid: GridSpec, kind: str, workers, vectorized: bool, block_size: int):
    total = grid.size
    nblocks = max(1, -(-total // block_size))

    def block(b: int) -> BlockResult:
        flat = np.arange(b * block_size, min(total, (b + 1) * block_size), dtype=np.int64)
        cols = _coords(grid, flat)
        if vectorized:
            vals = np.asarray(F(*cols), dtype=np.float64)
            keep = (np.asarray(grid.membership(*cols), dtype=bool)
                    if grid.membership is not None else np.ones(flat.size, bool))
        else:
            pts = list(zip(*(c.tolist() for c in cols)))
            keep = np.array([grid.membership(*p) if grid.membership else True for p in pts], bool)
            vals = np.array([F(*p) if k else np.nan for p, k in zip(pts, keep)], dtype=np.float64)
        keep &= np.isfinite(vals)
        nkeep = int(keep.sum())
        if nkeep == 0:
            return BlockResult(math.nan, -1, flat.size, flat.size)
        sel = np.flatnonzero(keep)
        j = sel[np.argmin(vals[sel]) if kind == "min" else np.argmax(vals[sel])]
        return BlockResult(float(vals[j]), int(flat[j]), flat.size, flat.size - nkeep)

    merged = merge_blocks(run_blocks(block, nblocks, workers), kind)
    if merged.index < 0:
        raise EmptyNetError("no net point satisfies the membership predicate")
    arg = [float(c[0]) for c in _coords(grid, np.array([merged.index]))]
    return CertifiedExtremum.build(kind, merged.value, grid.uncertainty, merged.evaluations,
                                   arg, merged.excluded, {"index": merged.index})


def certified_min(F, grid: GridSpec, workers=None, vectorized=False, block_size=BLOCK_SIZE):
    return _search(F, grid, "min", workers, vectorized, block_size)


def certified_max(F, grid: GridSpec, workers=None, vectorized=False, block_size=BLOCK_SIZE):
    return _search(F, grid, "max", workers, vectorized, block_size)
