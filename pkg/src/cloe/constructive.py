"""
Constructive Loewner interpolation (CLOE).

Starting from the two ends of the band, the interpolation set is grown where
the current interpolant shows its strongest dynamics: peaks and valleys of
``f(omega) = ||H_k(j omega)||_2`` first, steepest log-log slopes otherwise.
The run stops when two consecutive interpolants agree on the fine grid to
within ``epsilon``, when the point budget is spent, or when no admissible
grid frequency is left.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BudgetTooSmall, GridExhausted, InvalidRange, ZeroDenominator
from .loewner import DEFAULT_RANK_TOL, Interpolant, interpolate
from .lti import FrequencyGrid, FrequencySample, StateSpaceModel, frequency_response, log_grid, spectral_norms

log = logging.getLogger(__name__)

LOG_FLOOR = 1e-300
# log10 steps below this are treated as flat when looking for sign changes
FLAT_STEP = 1e-12


@dataclass(frozen=True)
class CloeConfig:
    omega_min: float = 1e-3
    omega_max: float = 1e3
    max_points: int = 40
    epsilon: float = 0.05
    n_f: int = 400
    points_per_iteration: int = 2
    guard_cells: int = 2
    rank_tol: float = DEFAULT_RANK_TOL

    def __post_init__(self):
        if not (0 < self.omega_min < self.omega_max < np.inf):
            raise InvalidRange(f"need 0 < omega_min < omega_max, got [{self.omega_min}, {self.omega_max}]")
        if self.max_points < 3:
            raise BudgetTooSmall(f"max_points must exceed 2, got {self.max_points}")
        if not (0 < self.epsilon < 1):
            raise InvalidRange(f"epsilon must be a fraction in (0, 1), got {self.epsilon}")
        if self.n_f < 16:
            raise InvalidRange(f"n_f must be >= 16, got {self.n_f}")
        if self.points_per_iteration not in (1, 2):
            raise InvalidRange("points_per_iteration must be 1 or 2")
        if self.guard_cells < 0:
            raise InvalidRange("guard_cells must be >= 0")
        if not self.rank_tol >= 0:
            raise InvalidRange("rank_tol must be >= 0")

    def fine_grid(self) -> FrequencyGrid:
        return log_grid(self.omega_min, self.omega_max, self.n_f)


class Oracle:
    """
    Expensive system evaluated at j*omega, with a cache and a call counter.

    Subclasses implement :meth:`_evaluate`. Repeated frequencies are served
    from the cache and do not count as calls.
    """

    def __init__(self, m: int, p: int):
        self.m = m
        self.p = p
        self.call_count = 0
        self._cache: dict[float, np.ndarray] = {}

    def _evaluate(self, omega: float) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, omega: float) -> np.ndarray:
        omega = float(omega)
        if omega not in self._cache:
            self._cache[omega] = np.asarray(self._evaluate(omega), dtype=complex).reshape(self.m, self.p)
            self.call_count += 1
        return self._cache[omega]

    def snap(self, omega: float) -> float:
        """Frequency actually available closest to ``omega`` (identity for analytic oracles)."""
        return float(omega)

    def response(self, omegas) -> np.ndarray:
        """Uncounted bulk evaluation for error measurement; not part of the budget."""
        raise NotImplementedError


class ModelOracle(Oracle):
    def __init__(self, model: StateSpaceModel):
        super().__init__(model.m, model.p)
        self.model = model

    def _evaluate(self, omega):
        return frequency_response(self.model, [omega])[0]

    def response(self, omegas):
        return frequency_response(self.model, omegas)


class TabulatedOracle(Oracle):
    """Fixed dataset; requested frequencies snap to the nearest tabulated one (log distance)."""

    def __init__(self, samples: Sequence[FrequencySample]):
        if not samples:
            raise ValueError("empty sample table")
        m, p = samples[0].response.shape
        super().__init__(m, p)
        order = np.argsort([s.omega for s in samples])
        self.omegas = np.array([samples[i].omega for i in order])
        self.table = np.array([samples[i].response for i in order])

    def snap(self, omega):
        with np.errstate(divide="ignore"):
            d = np.abs(np.log10(np.maximum(self.omegas, LOG_FLOOR)) - np.log10(max(omega, LOG_FLOOR)))
        return float(self.omegas[int(np.argmin(d))])

    def _evaluate(self, omega):
        idx = np.flatnonzero(self.omegas == omega)
        if idx.size == 0:
            raise KeyError(f"frequency {omega} is not tabulated")
        return self.table[idx[0]]

    def response(self, omegas):
        return np.array([self.table[np.flatnonzero(self.omegas == self.snap(w))[0]] for w in omegas])


def init_set(config: CloeConfig) -> list[float]:
    return [float(config.omega_min), float(config.omega_max)]


@dataclass(frozen=True, eq=False)
class NormCurve:
    grid: FrequencyGrid
    f: np.ndarray
    slope: np.ndarray


def log_slope(omega: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Log-log finite differences: central inside, one-sided at both ends."""
    lw = np.log10(np.asarray(omega, dtype=float))
    lf = np.log10(np.maximum(np.asarray(f, dtype=float), LOG_FLOOR))
    n = lw.size
    s = np.zeros(n)
    if n < 2:
        return s
    s[1:-1] = (lf[2:] - lf[:-2]) / (lw[2:] - lw[:-2])
    s[0] = (lf[1] - lf[0]) / (lw[1] - lw[0])
    s[-1] = (lf[-1] - lf[-2]) / (lw[-1] - lw[-2])
    return s


def curve_from_responses(grid: FrequencyGrid, responses: np.ndarray) -> NormCurve:
    f = spectral_norms(responses)
    return NormCurve(grid, f, log_slope(grid.points, f))


def norm_curve(H: Interpolant, grid: FrequencyGrid) -> NormCurve:
    return curve_from_responses(grid, H.response(grid.points))


def _nearest_index(grid_points: np.ndarray, omega: float) -> int:
    lw = np.log10(grid_points)
    return int(np.argmin(np.abs(lw - np.log10(max(omega, LOG_FLOOR)))))


def detect_candidates(curve: NormCurve, I, g: int = 2, count: int = 2) -> list[tuple[float, str]]:
    """
    Up to ``count`` new grid frequencies where ``curve`` shows strong dynamics.

    Grid indices within ``g`` cells of a member of ``I`` are excluded. Phase
    one looks at sign changes of the finite-difference derivative of f: the
    highest admissible peak comes first, then the lowest admissible valley.
    Remaining slots go to the admissible index of largest slope, then of
    smallest slope. Ties resolve to the lower frequency.
    """
    pts = curve.grid.points
    n = pts.size
    admissible = np.ones(n, dtype=bool)
    for w in I:
        c = _nearest_index(pts, w)
        admissible[max(0, c - g) : c + g + 1] = False
    if not admissible.any():
        raise GridExhausted("every grid point is in or next to the interpolation set")

    lf = np.log10(np.maximum(curve.f, LOG_FLOOR))
    d = np.diff(lf)
    d[np.abs(d) <= FLAT_STEP] = 0.0
    interior = np.arange(1, n - 1)
    peaks = interior[(d[:-1] > 0) & (d[1:] < 0)]
    valleys = interior[(d[:-1] < 0) & (d[1:] > 0)]
    peaks = peaks[admissible[peaks]]
    valleys = valleys[admissible[valleys]]

    chosen: list[tuple[int, str]] = []
    if peaks.size:
        chosen.append((int(peaks[np.argmax(curve.f[peaks])]), "peak"))
    if valleys.size and len(chosen) < count:
        chosen.append((int(valleys[np.argmin(curve.f[valleys])]), "valley"))

    slope_kinds = ("max_slope", "min_slope")
    turn = 0
    while len(chosen) < count:
        free = admissible.copy()
        for i, _ in chosen:
            free[i] = False
        idx = np.flatnonzero(free)
        if idx.size == 0:
            break
        kind = slope_kinds[turn % 2]
        pick = idx[np.argmax(curve.slope[idx])] if kind == "max_slope" else idx[np.argmin(curve.slope[idx])]
        chosen.append((int(pick), kind))
        turn += 1
    return [(float(pts[i]), kind) for i, kind in chosen[:count]]


def stopping_metric(resp_prev, resp_curr) -> float:
    """max ||H_prev - H_curr||_2 over the grid divided by max ||H_curr||_2."""
    prev = np.asarray(resp_prev)
    curr = np.asarray(resp_curr)
    if prev.shape != curr.shape:
        raise ValueError(f"response stacks differ in shape: {prev.shape} vs {curr.shape}")
    denom = float(np.max(spectral_norms(curr)))
    if denom == 0.0:
        raise ZeroDenominator("current interpolant vanishes on the whole grid")
    return float(np.max(spectral_norms(prev - curr))) / denom


@dataclass
class IterationRecord:
    k: int
    I: list[float]
    nr: int
    e_tilde: float | None
    sv_row: list[float]
    sv_col: list[float]
    oracle_calls: int
    candidates: list[tuple[float, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "I": sorted(self.I),
            "candidates": [{"omega": w, "kind": kind} for w, kind in self.candidates],
            "e_tilde": self.e_tilde,
            "sv_row": self.sv_row,
            "sv_col": self.sv_col,
            "nr": self.nr,
            "oracle_calls": self.oracle_calls,
        }


@dataclass
class CloeTrace:
    records: list[IterationRecord] = field(default_factory=list)
    termination: str = ""

    @property
    def final_set(self) -> list[float]:
        return sorted(self.records[-1].I) if self.records else []

    @property
    def final_e_tilde(self) -> float | None:
        for rec in reversed(self.records):
            if rec.e_tilde is not None:
                return rec.e_tilde
        return None

    def to_dict(self) -> dict:
        return {"termination": self.termination, "iterations": [r.to_dict() for r in self.records]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _metric_or_degenerate(prev, curr) -> float:
    try:
        return stopping_metric(prev, curr)
    except ZeroDenominator:
        # both identically zero counts as unchanged
        return 0.0 if not np.any(prev) else float("inf")


def run_cloe(oracle: Oracle, config: CloeConfig) -> tuple[Interpolant, CloeTrace]:
    """
    Grow the interpolation set until the interpolant settles.

    Returns the last interpolant and the per-iteration trace. If the loop
    leaves on the point budget, the points gathered in the last iteration
    are folded into one final interpolant so no oracle call is wasted.
    """
    if config.max_points < 2:
        raise BudgetTooSmall(f"max_points must be at least 2, got {config.max_points}")
    grid = config.fine_grid()
    I: list[float] = []
    for w in init_set(config):
        w = oracle.snap(w)
        if w not in I:
            I.append(w)
    samples = {w: oracle.evaluate(w) for w in I}
    trace = CloeTrace()

    def build():
        data = [FrequencySample(w, samples[w]) for w in sorted(samples)]
        H = interpolate(data, config.rank_tol)
        return H, H.response(grid.points)

    k = 0
    prev_resp = None
    H = None
    while len(I) <= config.max_points:
        k += 1
        H, resp = build()
        e = None if prev_resp is None else _metric_or_degenerate(prev_resp, resp)
        rec = IterationRecord(
            k=k,
            I=sorted(I),
            nr=H.order,
            e_tilde=e,
            sv_row=[float(x) for x in H.sv_row],
            sv_col=[float(x) for x in H.sv_col],
            oracle_calls=oracle.call_count,
        )
        trace.records.append(rec)
        log.debug("k=%d |I|=%d nr=%d e=%s", k, len(I), H.order, e)
        if e is not None and e <= config.epsilon:
            trace.termination = "converged"
            return H, trace

        curve = curve_from_responses(grid, resp)
        try:
            cands = detect_candidates(curve, I, config.guard_cells, config.points_per_iteration)
        except GridExhausted:
            trace.termination = "grid_exhausted"
            return H, trace
        new = []
        for w, kind in cands:
            ws = oracle.snap(w)
            if ws in I or ws in new:
                continue
            new.append(ws)
        if not new:
            trace.termination = "grid_exhausted"
            return H, trace
        for w in new:
            samples[w] = oracle.evaluate(w)
        I.extend(new)
        rec.candidates = list(cands)
        rec.oracle_calls = oracle.call_count
        prev_resp = resp

    # budget spent: use every evaluated point for the returned model
    k += 1
    H, resp = build()
    trace.records.append(
        IterationRecord(
            k=k,
            I=sorted(I),
            nr=H.order,
            e_tilde=_metric_or_degenerate(prev_resp, resp),
            sv_row=[float(x) for x in H.sv_row],
            sv_col=[float(x) for x in H.sv_col],
            oracle_calls=oracle.call_count,
        )
    )
    trace.termination = "budget"
    return H, trace
