"""Staged verification pipeline.

Each stage runs one certified computation and yields a VerificationReport.
Reports go out as JSON lines (reals with 17 significant digits) followed by
a summary table.  Exit status: 0 if every verdict passes, 1 otherwise, 2 on
an internal error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

from . import asymptotic, iteration, oracle
from .certgrid import EmptyNetError, resolve_workers
from .constants import CONSTANTS
from .domains import DomainError, FOUR_THIRDS

STAGES = ("base", "gamma-reduce", "kernel-maxima", "e-bounds", "mu",
          "iter-bounds", "iter-min", "oracle", "all")
ITER_STAGES = ("iter-bounds", "iter-min")
ORACLE_SIZES = (2, 3, 5)
REPORT_FIELDS = ("stage", "params", "net_value", "uncertainty", "threshold",
                 "verdict", "reason", "evaluations", "wall_time")
PARAM_FIELDS = ("s", "n", "delta", "seed", "workers")


class StageError(ValueError):
    """Unknown stage or invalid override."""


@dataclass
class VerificationReport:
    stage: str
    params: dict
    net_value: float
    uncertainty: float
    threshold: float
    verdict: str
    reason: Optional[str] = None
    evaluations: int = 0
    wall_time: float = 0.0

    def __post_init__(self):
        if self.verdict not in ("pass", "fail", "infeasible"):
            raise ValueError(f"bad verdict {self.verdict!r}")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in REPORT_FIELDS}

    def to_json(self) -> str:
        return _dump(self.to_dict())


def _dump(obj) -> str:
    if obj is None or isinstance(obj, bool):
        return {None: "null", True: "true", False: "false"}[obj]
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        text = format(obj, ".17g")
        return text if any(c in text for c in ".en") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{_dump(str(k))}: {_dump(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_dump(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


# ---------------------------------------------------------------- parameters

def parse_s(value):
    """'7' -> 7, '4-14' -> (4, 14); every s must lie in 2..14."""
    if value is None or isinstance(value, (int, tuple)):
        s = value
    else:
        text = str(value).strip()
        if "-" in text:
            lo, hi = text.split("-", 1)
            s = (int(lo), int(hi))
        else:
            s = int(text)
    if s is None:
        return None
    lo, hi = (s, s) if isinstance(s, int) else s
    if not (2 <= lo <= hi <= 14):
        raise StageError(f"s must lie in 2..14, got {value!r}")
    if lo == 2 and hi > 2:
        raise StageError("s = 2 uses its own bounds and cannot share a range")
    return s if isinstance(s, int) else (lo, hi)


def _s_text(s):
    if s is None:
        return None
    return str(s) if isinstance(s, int) else f"{s[0]}-{s[1]}"


def _scaled(n, quick):
    return max(1, math.ceil(n / 10)) if quick else n


@dataclass
class Config:
    s: object = None
    n: Optional[int] = None
    delta: float = CONSTANTS.delta
    seed: int = 0
    workers: Optional[int] = None
    quick: bool = False
    cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.s = parse_s(self.s)
        if self.n is not None and self.n < 1:
            raise StageError("n must be positive")
        self.workers = resolve_workers(self.workers)

    def params(self, s=None, n=None) -> dict:
        return {"s": _s_text(s), "n": n, "delta": float(self.delta),
                "seed": int(self.seed), "workers": int(self.workers)}


def _report(stage, cfg, s, n, net, unc, thr, passed, reason, evals, t0):
    return VerificationReport(stage, cfg.params(s, n), float(net), float(unc), float(thr),
                              "pass" if passed else "fail", None if passed else reason,
                              int(evals), time.perf_counter() - t0)


# ---------------------------------------------------------------- stages

def _base(cfg):
    t0 = time.perf_counter()
    value = oracle.lambda2_3()
    best = oracle.maximize_phi(3, restarts=20, seed=cfg.seed)
    ok = abs(value - FOUR_THIRDS) <= 1e-12 and abs(best.value - FOUR_THIRDS) <= 1e-6
    return _report("base", cfg, None, 3, value, abs(best.value - value), FOUR_THIRDS, ok,
                   "cubic_or_ascent_mismatch", best.sweeps, t0)


def _gamma_reduce(cfg):
    t0 = time.perf_counter()
    n = cfg.n or _scaled(CONSTANTS.n_gamma_reduce, cfg.quick)
    ext = asymptotic.gamma_range_reduction(n, cfg.workers)
    thr = CONSTANTS.gamma_reduce_target
    return _report("gamma-reduce", cfg, None, n, ext.net_value, ext.uncertainty, thr,
                   ext.clears(thr), "uncertainty_exceeds_margin", ext.evaluations, t0)


def _kernel_maxima(cfg):
    """The kernel maxima feed the gamma-gamma budget; that budget is the verdict."""
    t0 = time.perf_counter()
    n = cfg.n or _scaled(CONSTANTS.n_kernel, cfg.quick)
    suite = asymptotic.kernel_maxima(n, workers=cfg.workers)
    net = asymptotic.gamma_gamma_budget({k: e.net_value for k, e in suite.kernels.items()})
    cert = asymptotic.gamma_gamma_budget({k: e.certified_value for k, e in suite.kernels.items()})
    thr = CONSTANTS.gamma_gamma_budget
    return _report("kernel-maxima", cfg, None, n, net, cert - net, thr, cert <= thr,
                   "budget_exceeded", suite.evaluations, t0)


def _e_bounds(cfg):
    """net_value is the worst ratio of assembled bound to published bound."""
    t0 = time.perf_counter()
    n = cfg.n or _scaled(CONSTANTS.n_e_bounds, cfg.quick)
    suite = asymptotic.E_derivative_bounds(n, workers=cfg.workers)
    pub = CONSTANTS.E_derivative_bounds
    k = max(range(3), key=lambda i: suite.final_bounds[i] / pub[i])
    ratio = suite.final_bounds[k] / pub[k]
    return _report("e-bounds", cfg, None, n, ratio, suite.grid_budgets[k] / pub[k], 1.0,
                   ratio <= 1.0, "published_bound_exceeded", suite.evaluations, t0)


def _mu(cfg):
    t0 = time.perf_counter()
    n = cfg.n or _scaled(CONSTANTS.n_mu, cfg.quick)
    ext = asymptotic.mu_estimate(cfg.delta, n, cfg.workers)
    thr = CONSTANTS.mu_threshold
    return _report("mu", cfg, None, n, ext.net_value, ext.uncertainty, thr, ext.clears(thr),
                   "uncertainty_exceeds_margin", ext.evaluations, t0)


def _bounds(cfg, s, n=None):
    key = (s, n)
    if key not in cfg.cache:
        cfg.cache[key] = iteration.derivative_bounds(s, n, cfg.workers)
    return cfg.cache[key]


def _bounds_n(cfg, s):
    smin = s if isinstance(s, int) else s[0]
    base = CONSTANTS.n_iter_bounds_s2 if smin == 2 else CONSTANTS.n_iter_bounds
    return _scaled(base, cfg.quick)


def _published_padded(s):
    smin = s if isinstance(s, int) else s[0]
    if smin == 2:
        return CONSTANTS.m_s2
    if smin == 3:
        return CONSTANTS.mu_m_s3
    return (math.inf,) + CONSTANTS.mv_mt_padded


def _iter_bounds(cfg, s):
    """Padded derivative maxima (m_u, m_v, m_theta) against the published padded values."""
    t0 = time.perf_counter()
    n = cfg.n or _bounds_n(cfg, s)
    b = _bounds(cfg, s, n)
    pub = _published_padded(s)
    ok = all(x <= p for x, p in zip(b.rounded, pub))
    return _report("iter-bounds", cfg, s, n, b.m_theta_net, b.uncertainty[1], pub[2], ok,
                   "published_bound_exceeded", b.evaluations, t0)


def _iter_min(cfg, s):
    t0 = time.perf_counter()
    smin = s if isinstance(s, int) else s[0]
    base = CONSTANTS.n_iter_min_low if smin <= 3 else CONSTANTS.n_iter_min_high
    n = cfg.n or _scaled(base, cfg.quick)
    bounds = _bounds(cfg, s, _bounds_n(cfg, s))
    res = iteration.min_m(s, n, cfg.workers, bounds)
    ext = res.extremum
    return _report("iter-min", cfg, s, n, ext.net_value, res.delta_m, 0.0, res.passed,
                   "uncertainty_exceeds_margin", ext.evaluations, t0)


def _oracle(cfg, size):
    t0 = time.perf_counter()
    restarts = 200 if size >= 5 else 20
    best = oracle.maximize_phi(size, restarts=restarts, seed=cfg.seed)
    thr = FOUR_THIRDS + 1e-4
    return _report("oracle", cfg, None, size, best.value, 0.0, thr, best.value <= thr,
                   "exceeds_four_thirds", best.sweeps, t0)


def _infeasible(stage, cfg, s, exc, t0):
    return VerificationReport(stage, cfg.params(s, cfg.n), math.nan, math.nan, math.nan,
                              "infeasible", type(exc).__name__, 0, time.perf_counter() - t0)


def _run_one(stage, cfg):
    t0 = time.perf_counter()
    try:
        if stage == "base":
            return [_base(cfg)]
        if stage == "gamma-reduce":
            return [_gamma_reduce(cfg)]
        if stage == "kernel-maxima":
            return [_kernel_maxima(cfg)]
        if stage == "e-bounds":
            return [_e_bounds(cfg)]
        if stage == "mu":
            return [_mu(cfg)]
        if stage in ITER_STAGES:
            ss = [cfg.s] if cfg.s is not None else list(range(2, 15))
            fn = _iter_bounds if stage == "iter-bounds" else _iter_min
            return [fn(cfg, s) for s in ss]
        if stage == "oracle":
            sizes = [cfg.n] if cfg.n is not None else list(ORACLE_SIZES)
            return [_oracle(cfg, k) for k in sizes]
    except (EmptyNetError, DomainError) as exc:
        return [_infeasible(stage, cfg, cfg.s, exc, t0)]
    raise StageError(f"unknown stage {stage!r}")


def run_stage(stage: str, overrides: Optional[dict] = None):
    """Run one stage; returns a VerificationReport (a list for multi-report stages)."""
    if stage not in STAGES:
        raise StageError(f"unknown stage {stage!r}; choose from {', '.join(STAGES)}")
    overrides = dict(overrides or {})
    unknown = set(overrides) - {"s", "n", "delta", "seed", "workers", "quick"}
    if unknown:
        raise StageError(f"unknown overrides {sorted(unknown)}")
    cfg = Config(**overrides)
    if stage == "all":
        return run_all(cfg)[0]
    reports = _run_one(stage, cfg)
    return reports[0] if len(reports) == 1 else reports


def run_all(cfg: Optional[Config] = None, sink=None):
    """Every stage in pipeline order; returns (reports, exit status)."""
    cfg = cfg or Config()
    reports = []

    def emit(batch):
        for r in batch:
            reports.append(r)
            if sink is not None:
                sink(r)

    for stage in ("base", "gamma-reduce", "kernel-maxima", "e-bounds", "mu"):
        sub = Config(None, None, cfg.delta, cfg.seed, cfg.workers, cfg.quick, cfg.cache)
        emit(_run_one(stage, sub))
    svals = [cfg.s] if cfg.s is not None else list(range(2, 15))
    for s in svals:
        sub = Config(s, None, cfg.delta, cfg.seed, cfg.workers, cfg.quick, cfg.cache)
        emit(_run_one("iter-bounds", sub))
        emit(_run_one("iter-min", sub))
    for size in ORACLE_SIZES:
        sub = Config(None, size, cfg.delta, cfg.seed, cfg.workers, cfg.quick, cfg.cache)
        emit(_run_one("oracle", sub))
    return reports, exit_status(reports)


def exit_status(reports) -> int:
    return 0 if all(r.verdict == "pass" for r in reports) else 1


# ---------------------------------------------------------------- command line

def summary_table(reports) -> str:
    head = f"{'stage':<14}{'s':>6}{'n':>8}{'net':>14}{'uncert':>12}{'threshold':>12}  verdict"
    lines = [head, "-" * len(head)]
    for r in reports:
        p = r.params
        lines.append(f"{r.stage:<14}{p['s'] or '':>6}{p['n'] if p['n'] is not None else '':>8}"
                     f"{r.net_value:>14.6g}{r.uncertainty:>12.4g}{r.threshold:>12.6g}  {r.verdict}"
                     + (f" ({r.reason})" if r.reason else ""))
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grunbaum-verify",
                                description="Certified numerical checks for the 2-dimensional projection constant.")
    p.add_argument("--stage", default="all", choices=STAGES)
    p.add_argument("--s", default=None, help="iteration index s in 2..14, or a range such as 4-14")
    p.add_argument("--n", type=int, default=None, help="net resolution (stage default if omitted)")
    p.add_argument("--delta", type=float, default=CONSTANTS.delta)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None,
                   help="worker threads (falls back to $GRUNBAUM_WORKERS, then 1)")
    p.add_argument("--out", default=None, help="write the JSON-lines reports to this file")
    p.add_argument("--quick", action="store_true", help="scale every default resolution down tenfold")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    out = open(args.out, "w") if args.out else None

    def sink(r):
        line = r.to_json()
        print(line, flush=True)
        if out is not None:
            out.write(line + "\n")
            out.flush()

    try:
        cfg = Config(args.s, args.n, args.delta, args.seed, args.workers, args.quick)
        if args.stage == "all":
            reports, status = run_all(cfg, sink)
        else:
            reports = _run_one(args.stage, cfg)
            for r in reports:
                sink(r)
            status = exit_status(reports)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    finally:
        if out is not None:
            out.close()
    print()
    print(summary_table(reports))
    return status


if __name__ == "__main__":
    sys.exit(main())
