"""
Desk-scale comparison of CLOE against log-spaced (coarse) Loewner models.

Each record runs CLOE on one model, builds the coarse interpolant with the
same number of oracle evaluations, and compares both on a dense grid with
the relative L-infinity error ``max ||G - H|| / max ||G||``.
"""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .constructive import CloeConfig, ModelOracle, Oracle, run_cloe
from .errors import ZeroDenominator
from .loewner import DEFAULT_RANK_TOL, Interpolant, interpolate
from .lti import FrequencyGrid, FrequencySample, StateSpaceModel, generate_modal_model, log_grid, spectral_norms

EXACT_THRESHOLD = 1e-12
DEFAULT_EVAL_POINTS = 2000
DEFAULT_NF = (200, 300, 400, 500)
DEFAULT_EPS = (0.01, 0.05, 0.10, 0.30)

CSV_FIELDS = ["model", "n", "m", "p", "nf", "epsilon", "r_cloe", "e_cloe", "e_coarse", "ratio",
              "oracle_calls", "termination"]


def _g_response(G, omegas) -> np.ndarray:
    if isinstance(G, Oracle):
        return G.response(omegas)
    if isinstance(G, StateSpaceModel):
        return ModelOracle(G).response(omegas)
    return np.asarray(G(omegas))


def linf_relative_error(G, H: Interpolant, eval_grid) -> float:
    """
    ``max_w ||G(jw) - H(jw)||_2 / max_w ||G(jw)||_2`` over ``eval_grid``.

    ``G`` may be a model, an oracle (evaluated without counting calls) or a
    callable mapping a frequency array to an (N, m, p) stack.
    """
    pts = eval_grid.points if isinstance(eval_grid, FrequencyGrid) else np.asarray(eval_grid, dtype=float)
    if pts.size == 0:
        raise ValueError("empty evaluation grid")
    g = _g_response(G, pts)
    h = H.response(pts)
    denom = float(np.max(spectral_norms(g)))
    if denom == 0.0:
        raise ZeroDenominator("G vanishes on the evaluation grid")
    return float(np.max(spectral_norms(g - h))) / denom


def coarse_loewner(oracle: Oracle, r: int, omega_min: float, omega_max: float,
                   rank_tol: float = DEFAULT_RANK_TOL) -> Interpolant:
    """Loewner interpolant from ``r`` log-spaced samples over [omega_min, omega_max]."""
    if r < 2:
        raise ValueError(f"coarse model needs r >= 2, got {r}")
    pts = log_grid(omega_min, omega_max, r).points
    samples = [FrequencySample(w, oracle.evaluate(w)) for w in pts]
    return interpolate(samples, rank_tol)


@dataclass
class ComparisonRecord:
    model: str
    n: int
    m: int
    p: int
    nf: int
    epsilon: float
    r_cloe: int
    e_cloe: float
    e_coarse: float
    oracle_calls: int
    coarse_calls: int
    termination: str
    wall_time: float = 0.0

    @property
    def exact(self) -> bool:
        return self.e_cloe < EXACT_THRESHOLD

    @property
    def ratio(self) -> float | None:
        if not np.isfinite(self.e_cloe) or self.e_cloe <= 0:
            return None
        return self.e_coarse / self.e_cloe

    def row(self) -> dict:
        ratio = self.ratio
        return {
            "model": self.model,
            "n": self.n,
            "m": self.m,
            "p": self.p,
            "nf": self.nf,
            "epsilon": repr(self.epsilon),
            "r_cloe": self.r_cloe,
            "e_cloe": repr(self.e_cloe),
            "e_coarse": repr(self.e_coarse),
            "ratio": "" if ratio is None else repr(ratio),
            "oracle_calls": self.oracle_calls,
            "termination": self.termination,
        }


def run_comparison(model: StateSpaceModel, config: CloeConfig, eval_grid=None,
                   model_id: str = "model") -> ComparisonRecord:
    if eval_grid is None:
        eval_grid = log_grid(config.omega_min, config.omega_max, DEFAULT_EVAL_POINTS)
    t0 = time.perf_counter()
    try:
        oracle = ModelOracle(model)
        H, trace = run_cloe(oracle, config)
        r = len(trace.final_set)
        coarse_oracle = ModelOracle(model)
        Hc = coarse_loewner(coarse_oracle, r, config.omega_min, config.omega_max, config.rank_tol)
        e_cloe = linf_relative_error(model, H, eval_grid)
        e_coarse = linf_relative_error(model, Hc, eval_grid)
    except Exception as exc:
        raise type(exc)(f"{model_id}: {exc}") from exc
    return ComparisonRecord(
        model=model_id,
        n=model.n,
        m=model.m,
        p=model.p,
        nf=config.n_f,
        epsilon=config.epsilon,
        r_cloe=r,
        e_cloe=e_cloe,
        e_coarse=e_coarse,
        oracle_calls=oracle.call_count,
        coarse_calls=coarse_oracle.call_count,
        termination=trace.termination,
        wall_time=time.perf_counter() - t0,
    )


# 12 seeded modal models: orders 4..20, SISO and MIMO mixed.
SUITE_SPEC = [
    # (seed, n_modes, m, p)
    (101, 2, 1, 1),
    (102, 3, 1, 1),
    (103, 4, 2, 1),
    (104, 5, 1, 1),
    (105, 6, 1, 2),
    (106, 7, 2, 2),
    (107, 8, 1, 1),
    (108, 9, 3, 1),
    (109, 10, 1, 1),
    (110, 4, 2, 2),
    (111, 6, 1, 1),
    (112, 10, 2, 3),
]
SUITE_FREQ_RANGE = (1e-2, 1e2)
SUITE_DAMPING_RANGE = (0.005, 0.05)
SUITE_GAIN_RANGE = (-1.0, 1.0)


def benchmark_suite() -> list[tuple[str, StateSpaceModel]]:
    """The seeded stand-in test models, as (id, model) pairs."""
    out = []
    for seed, modes, m, p in SUITE_SPEC:
        model = generate_modal_model(seed, modes, SUITE_FREQ_RANGE, SUITE_DAMPING_RANGE,
                                     SUITE_GAIN_RANGE, m=m, p=p)
        out.append((f"modal{seed}_n{2 * modes}_{m}x{p}", model))
    return out


@dataclass
class SweepResult:
    records: list[ComparisonRecord]
    failures: list[tuple[str, int, float, str]]

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("CLOE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sweep(models, n_f_values: Sequence[int] = DEFAULT_NF, epsilon_values: Sequence[float] = DEFAULT_EPS,
          out_path=None, base_config: CloeConfig | None = None, eval_points: int = DEFAULT_EVAL_POINTS,
          workers: int | None = None, echo: bool = True) -> list[ComparisonRecord | dict]:
    """
    Run every (model, n_f, epsilon) combination in product order.

    ``models`` is a list of (id, model) pairs. A failing row is kept as a
    dict with the error in ``termination``; the sweep carries on.
    """
    if not models or not n_f_values or not epsilon_values:
        raise ValueError("models, n_f_values and epsilon_values must be nonempty")
    base = base_config or CloeConfig()
    eval_grid = log_grid(base.omega_min, base.omega_max, eval_points)
    jobs = [(mid, model, nf, eps) for mid, model in models for nf in n_f_values for eps in epsilon_values]

    def job(args):
        mid, model, nf, eps = args
        cfg = replace(base, n_f=int(nf), epsilon=float(eps))
        try:
            return run_comparison(model, cfg, eval_grid, mid)
        except Exception as exc:  # recorded per row
            return {
                "model": mid, "n": model.n, "m": model.m, "p": model.p, "nf": int(nf),
                "epsilon": repr(float(eps)), "r_cloe": "", "e_cloe": "", "e_coarse": "", "ratio": "",
                "oracle_calls": "", "termination": f"error: {type(exc).__name__}: {exc}",
            }

    nw = _worker_count(workers)
    if nw == 1:
        results = [job(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            results = list(pool.map(job, jobs))

    if out_path is not None:
        write_sweep_csv(results, out_path)
    if echo:
        print(format_summary(results))
    return results


def write_sweep_csv(results, path) -> None:
    Path(path).write_text(sweep_csv_text(results))


def sweep_csv_text(results) -> str:
    buf = io.StringIO()
    wr = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    wr.writeheader()
    for r in results:
        wr.writerow(r.row() if isinstance(r, ComparisonRecord) else r)
    return buf.getvalue()


def summarize(results) -> dict:
    """Median ratio and win fraction over non-exact records, plus per-epsilon medians of e_cloe."""
    recs = [r for r in results if isinstance(r, ComparisonRecord)]
    scored = [r for r in recs if not r.exact and r.ratio is not None]
    ratios = np.array([r.ratio for r in scored])
    wins = np.array([r.e_cloe <= r.e_coarse for r in scored])
    per_eps: dict[float, list[float]] = {}
    for r in recs:
        per_eps.setdefault(r.epsilon, []).append(r.e_cloe)
    return {
        "records": len(results),
        "failed": len(results) - len(recs),
        "exact": len(recs) - len(scored),
        "median_ratio": float(np.median(ratios)) if ratios.size else float("nan"),
        "win_fraction": float(np.mean(wins)) if wins.size else float("nan"),
        "median_e_cloe_by_eps": {eps: float(np.median(v)) for eps, v in sorted(per_eps.items())},
    }


def format_summary(results) -> str:
    s = summarize(results)
    lines = [
        f"records={s['records']} failed={s['failed']} exact={s['exact']}",
        f"median ratio e_coarse/e_cloe = {s['median_ratio']:.4g}",
        f"win fraction (e_cloe <= e_coarse) = {s['win_fraction']:.3f}",
    ]
    for eps, med in s["median_e_cloe_by_eps"].items():
        lines.append(f"  eps={100 * eps:g}%  median e_cloe = {med:.4g}")
    return "\n".join(lines)
