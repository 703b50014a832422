"""
LTI systems in descriptor form and their frequency responses.

A model is the real realization ``G(s) = C (sE - A)^{-1} B + D``. It plays the
role of the expensive ground-truth system; everything downstream only ever
sees it through sampled responses ``G(j*omega)``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidRange, ParseError, SingularPencil


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """
    Real descriptor realization (E, A, B, C, D).

    ``E`` defaults to the identity and ``D`` to zero. A model of order 0 is a
    pure feedthrough ``G(s) = D``; pass ``A=None`` together with ``D`` and
    the input/output sizes are taken from ``D``.
    """

    A: np.ndarray | None
    B: np.ndarray | None
    C: np.ndarray | None
    D: np.ndarray | None = None
    E: np.ndarray | None = None
    check_regular: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.A is None or np.size(self.A) == 0:
            if self.D is None:
                raise DimensionMismatch("an order-0 model needs D")
            D = np.atleast_2d(np.asarray(self.D, dtype=float))
            m, p = D.shape
            A = np.zeros((0, 0))
            B = np.zeros((0, p)) if self.B is None else np.asarray(self.B, float).reshape(0, p)
            C = np.zeros((m, 0)) if self.C is None else np.asarray(self.C, float).reshape(m, 0)
            E = np.zeros((0, 0))
        else:
            A = np.atleast_2d(np.asarray(self.A, dtype=float))
            if A.ndim != 2 or A.shape[0] != A.shape[1]:
                raise DimensionMismatch(f"A must be square, got shape {A.shape}")
            n = A.shape[0]
            if self.B is None or self.C is None:
                raise DimensionMismatch("B and C are required when A is given")
            B = np.asarray(self.B, dtype=float)
            C = np.asarray(self.C, dtype=float)
            if B.ndim == 1:
                B = B.reshape(n, -1)
            if C.ndim == 1:
                C = C.reshape(-1, n)
            if B.shape[0] != n:
                raise DimensionMismatch(f"B has {B.shape[0]} rows, expected {n}")
            if C.shape[1] != n:
                raise DimensionMismatch(f"C has {C.shape[1]} columns, expected {n}")
            m, p = C.shape[0], B.shape[1]
            E = np.eye(n) if self.E is None else np.atleast_2d(np.asarray(self.E, dtype=float))
            if E.shape != (n, n):
                raise DimensionMismatch(f"E has shape {E.shape}, expected {(n, n)}")
            D = np.zeros((m, p)) if self.D is None else np.atleast_2d(np.asarray(self.D, dtype=float))
        if D.shape != (m, p):
            raise DimensionMismatch(f"D has shape {D.shape}, expected {(m, p)}")
        for name, arr in (("A", A), ("B", B), ("C", C), ("D", D), ("E", E)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
            object.__setattr__(self, name, _frozen(arr))
        if self.check_regular and A.shape[0] > 0:
            self._check_regular()

    def _check_regular(self) -> None:
        probes = (0.7071 + 1.3j, -0.37 + 2.9j, 1.9 - 0.61j)
        for s in probes:
            M = s * self.E - self.A
            try:
                np.linalg.solve(M, np.eye(self.n))
            except np.linalg.LinAlgError:
                continue
            if np.linalg.cond(M) < 1e14:
                return
        raise SingularPencil(float("nan"))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.D.shape[0]

    @property
    def p(self) -> int:
        return self.D.shape[1]

    def poles(self) -> np.ndarray:
        """Finite generalized eigenvalues of (A, E)."""
        if self.n == 0:
            return np.zeros(0, dtype=complex)
        import scipy.linalg

        w = scipy.linalg.eigvals(self.A, self.E)
        return w[np.isfinite(w)]

    def __eq__(self, other):
        if not isinstance(other, StateSpaceModel):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in ("A", "B", "C", "D", "E")
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class FrequencySample:
    omega: float
    response: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.omega) or self.omega < 0:
            raise InvalidRange(f"omega must be finite and >= 0, got {self.omega}")
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "response", _frozen(np.atleast_2d(self.response), complex))


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Strictly increasing frequencies (rad/s); ``spacing`` is 'logarithmic' or 'explicit'."""

    points: np.ndarray
    spacing: str = "explicit"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        if pts.size == 0:
            raise InvalidRange("empty frequency grid")
        if not np.all(np.isfinite(pts)):
            raise InvalidRange("grid points must be finite")
        if np.any(np.diff(pts) <= 0):
            raise InvalidRange("grid points must be strictly increasing")
        if self.spacing not in ("logarithmic", "explicit"):
            raise ValueError(f"unknown spacing {self.spacing!r}")
        if self.spacing == "logarithmic" and pts.size > 2:
            steps = np.diff(np.log10(pts))
            if np.max(np.abs(steps - steps[0])) > 1e-12:
                raise InvalidRange("logarithmic grid does not have a constant log10 step")
        object.__setattr__(self, "points", _frozen(pts))

    def __len__(self) -> int:
        return self.points.size

    def __iter__(self):
        return iter(self.points.tolist())

    def __getitem__(self, i):
        return self.points[i]

    @property
    def omega_min(self) -> float:
        return float(self.points[0])

    @property
    def omega_max(self) -> float:
        return float(self.points[-1])


def log_grid(omega_min: float, omega_max: float, n: int) -> FrequencyGrid:
    """``n`` log10-equispaced frequencies with both endpoints reproduced exactly."""
    if not (omega_min > 0 and np.isfinite(omega_max) and omega_min < omega_max):
        raise InvalidRange(f"need 0 < omega_min < omega_max, got [{omega_min}, {omega_max}]")
    if n < 2:
        raise InvalidRange(f"need at least 2 grid points, got {n}")
    pts = np.logspace(np.log10(omega_min), np.log10(omega_max), int(n))
    pts[0] = omega_min
    pts[-1] = omega_max
    return FrequencyGrid(pts, "logarithmic")


def descriptor_response(E, A, B, C, D, s_values) -> np.ndarray:
    """
    ``C (sE - A)^{-1} B + D`` at each complex ``s``, stacked as (N, m, p).

    Works for complex realizations too. Raises :class:`SingularPencil` with
    the offending ``s / j`` when a solve breaks down.
    """
    s = np.asarray(s_values, dtype=complex).ravel()
    m, p = D.shape
    out = np.empty((s.size, m, p), dtype=complex)
    out[:] = D
    n = A.shape[0]
    if n == 0 or s.size == 0:
        return out
    pencils = s[:, None, None] * E[None] - A[None]
    rhs = np.broadcast_to(np.asarray(B, dtype=complex), (s.size,) + B.shape)
    try:
        X = np.linalg.solve(pencils, rhs)
    except np.linalg.LinAlgError:
        for z, P in zip(s, pencils):
            try:
                np.linalg.solve(P, B)
            except np.linalg.LinAlgError:
                raise SingularPencil(_omega_of(z)) from None
        raise
    out += C @ X
    bad = ~np.all(np.isfinite(out), axis=(1, 2))
    if np.any(bad):
        raise SingularPencil(_omega_of(s[np.argmax(bad)]))
    return out


def _omega_of(s: complex):
    s = complex(s)
    return s.imag if s.real == 0 else s / 1j


def frequency_response(model: StateSpaceModel, omegas: Iterable[float]) -> np.ndarray:
    """
    Responses ``G(j*omega)`` stacked along the first axis, shape (N, m, p).

    Each frequency gets its own dense LU solve of ``(j*omega*E - A) X = B``.
    """
    w = np.asarray(omegas if isinstance(omegas, np.ndarray) else list(omegas), dtype=float).ravel()
    return descriptor_response(model.E, model.A, model.B, model.C, model.D, 1j * w)


def evaluate_transfer(model: StateSpaceModel, omega: float) -> np.ndarray:
    """``G(j*omega)`` as an m x p complex matrix."""
    return frequency_response(model, [omega])[0]


def spectral_norm(M) -> float:
    """Largest singular value; 0 for an empty or zero matrix."""
    M = np.atleast_2d(np.asarray(M))
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[0])


def spectral_norms(stack: np.ndarray) -> np.ndarray:
    """Vectorized :func:`spectral_norm` over the leading axis of an (N, m, p) stack."""
    stack = np.asarray(stack)
    if stack.shape[1] == 0 or stack.shape[2] == 0:
        return np.zeros(stack.shape[0])
    return np.linalg.svd(stack, compute_uv=False)[:, 0]


def sample_response(model: StateSpaceModel, grid) -> list[FrequencySample]:
    pts = grid.points if isinstance(grid, FrequencyGrid) else np.asarray(list(grid), dtype=float)
    if len(pts) == 0:
        raise InvalidRange("cannot sample an empty grid")
    resp = frequency_response(model, pts)
    return [FrequencySample(float(w), r) for w, r in zip(pts, resp)]


class LCG:
    """
    64-bit linear congruential generator (Knuth's MMIX constants).

    ``state <- (a * state + c) mod 2**64``; :meth:`uniform` keeps the top 53
    bits so the stream of doubles is reproducible on any platform.
    """

    A = 6364136223846793005
    C = 1442695040888963407
    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = (int(seed) ^ 0x9E3779B97F4A7C15) & self.MASK
        for _ in range(4):
            self.next_u64()

    def next_u64(self) -> int:
        self.state = (self.A * self.state + self.C) & self.MASK
        return self.state

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        u = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return lo + (hi - lo) * u


def _check_range(name: str, rng: Sequence[float], lo_open: float | None = None, hi_open: float | None = None):
    if len(rng) != 2:
        raise InvalidRange(f"{name} must have two bounds")
    lo, hi = float(rng[0]), float(rng[1])
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
        raise InvalidRange(f"{name} [{lo}, {hi}] is empty or inverted")
    if lo_open is not None and lo <= lo_open:
        raise InvalidRange(f"{name} must lie above {lo_open}")
    if hi_open is not None and hi >= hi_open:
        raise InvalidRange(f"{name} must lie below {hi_open}")
    return lo, hi


def generate_modal_model(
    seed: int,
    n_modes: int,
    freq_range=(1e-2, 1e2),
    damping_range=(0.01, 0.1),
    gain_range=(-1.0, 1.0),
    m: int = 1,
    p: int = 1,
) -> StateSpaceModel:
    """
    Lightly damped flexible-structure surrogate with ``n_modes`` resonances.

    Mode i contributes the block ``[[0, w_i], [-w_i, -2 z_i w_i]]`` to a
    block-diagonal ``A``; ``w_i`` is log-uniform in ``freq_range`` and
    ``z_i`` uniform in ``damping_range``. Entries of B and C are uniform in
    ``gain_range``. All draws come from :class:`LCG` in this order: all
    frequencies, all dampings, B row-major, C row-major.
    """
    if int(n_modes) < 1:
        raise InvalidRange(f"n_modes must be >= 1, got {n_modes}")
    if int(m) < 1 or int(p) < 1:
        raise InvalidRange("m and p must be positive")
    f_lo, f_hi = _check_range("freq_range", freq_range, lo_open=0.0)
    z_lo, z_hi = _check_range("damping_range", damping_range, lo_open=0.0, hi_open=1.0)
    g_lo, g_hi = _check_range("gain_range", gain_range)

    rng = LCG(seed)
    lf_lo, lf_hi = np.log10(f_lo), np.log10(f_hi)
    freqs = [10.0 ** rng.uniform(lf_lo, lf_hi) for _ in range(n_modes)]
    damps = [rng.uniform(z_lo, z_hi) for _ in range(n_modes)]
    n = 2 * n_modes
    A = np.zeros((n, n))
    for i, (w, z) in enumerate(zip(freqs, damps)):
        A[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = [[0.0, w], [-w, -2.0 * z * w]]
    B = np.array([[rng.uniform(g_lo, g_hi) for _ in range(p)] for _ in range(n)])
    C = np.array([[rng.uniform(g_lo, g_hi) for _ in range(n)] for _ in range(m)])
    return StateSpaceModel(A, B, C)


# -- model files ------------------------------------------------------------


def model_to_dict(model: StateSpaceModel) -> dict:
    d = {
        "n": model.n,
        "m": model.m,
        "p": model.p,
        "E": model.E.tolist(),
        "A": model.A.tolist(),
        "B": model.B.tolist(),
        "C": model.C.tolist(),
        "D": model.D.tolist(),
    }
    return d


def _matrix_field(obj: dict, key: str, shape: tuple[int, int], required: bool):
    if key not in obj or obj[key] is None:
        if required and shape[0] * shape[1] > 0:
            raise ParseError("missing required matrix", field=key)
        return None
    raw = obj[key]
    if not isinstance(raw, list) or any(not isinstance(r, list) for r in raw):
        raise ParseError("matrix must be a list of rows", field=key)
    rows = len(raw)
    if rows != shape[0] and not (shape[0] == 0 and rows == 0):
        raise DimensionMismatch(f"{key} has {rows} rows, expected {shape[0]}")
    for i, r in enumerate(raw):
        if len(r) != shape[1]:
            raise DimensionMismatch(f"{key} row {i} has {len(r)} entries, expected {shape[1]}")
    try:
        arr = np.array(raw, dtype=float).reshape(shape)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"non-numeric entry ({exc})", field=key) from None
    return arr


def model_from_dict(obj: dict) -> StateSpaceModel:
    if not isinstance(obj, dict):
        raise ParseError("model file must hold a JSON object")
    dims = {}
    for key in ("n", "m", "p"):
        if key not in obj:
            raise ParseError("missing dimension", field=key)
        val = obj[key]
        if not isinstance(val, int) or isinstance(val, bool) or val < 0:
            raise ParseError(f"dimension must be a nonnegative integer, got {val!r}", field=key)
        dims[key] = val
    n, m, p = dims["n"], dims["m"], dims["p"]
    if m < 1 or p < 1:
        raise ParseError("m and p must be positive", field="m" if m < 1 else "p")
    A = _matrix_field(obj, "A", (n, n), True)
    B = _matrix_field(obj, "B", (n, p), True)
    C = _matrix_field(obj, "C", (m, n), True)
    D = _matrix_field(obj, "D", (m, p), False)
    E = _matrix_field(obj, "E", (n, n), False)
    if n == 0:
        return StateSpaceModel(None, None, None, D=np.zeros((m, p)) if D is None else D)
    return StateSpaceModel(A, B, C, D=D, E=E)


def write_model(model: StateSpaceModel, path, meta: dict | None = None) -> None:
    d = model_to_dict(model)
    if meta is not None:
        d["meta"] = meta
    Path(path).write_text(json.dumps(d, indent=1) + "\n")


def read_model(path) -> StateSpaceModel:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    return model_from_dict(obj)


# -- sample files -----------------------------------------------------------


def sample_header(m: int, p: int) -> list[str]:
    cols = ["omega"]
    for i in range(1, m + 1):
        for j in range(1, p + 1):
            cols += [f"re_{i}_{j}", f"im_{i}_{j}"]
    return cols


def write_samples(samples: Sequence[FrequencySample], path, extra: dict[str, Sequence[float]] | None = None) -> None:
    """Write samples as CSV; ``extra`` appends named columns (one value per sample)."""
    if not samples:
        raise ValueError("no samples to write")
    m, p = samples[0].response.shape
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(sample_header(m, p) + list(extra))
        for k, s in enumerate(samples):
            if s.response.shape != (m, p):
                raise DimensionMismatch(f"sample {k} has shape {s.response.shape}, expected {(m, p)}")
            row = [repr(s.omega)]
            for z in s.response.ravel():
                row += [repr(float(z.real)), repr(float(z.imag))]
            row += [repr(float(v[k])) for v in extra.values()]
            wr.writerow(row)


def read_samples(path) -> list[FrequencySample]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty sample file", line=1)
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "omega":
        raise ParseError("first column must be 'omega'", line=1)
    pairs = [h for h in header[1:] if h.startswith("re_")]
    m = max((int(h.split("_")[1]) for h in pairs), default=0)
    p = max((int(h.split("_")[2]) for h in pairs), default=0)
    expected = sample_header(m, p)
    if m < 1 or p < 1 or header[: len(expected)] != expected:
        raise ParseError("header does not follow omega,re_1_1,im_1_1,... layout", line=1)
    out = []
    seen = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(expected):
            raise ParseError(f"expected {len(expected)} columns, got {len(row)}", line=lineno)
        try:
            vals = [float(c) for c in row[: len(expected)]]
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        omega = vals[0]
        if omega in seen:
            raise ParseError(f"duplicate frequency {omega}", line=lineno, field="omega")
        seen.add(omega)
        z = np.array(vals[1::2]) + 1j * np.array(vals[2::2])
        try:
            out.append(FrequencySample(omega, z.reshape(m, p)))
        except InvalidRange as exc:
            raise ParseError(str(exc), line=lineno, field="omega") from None
    if not out:
        raise ParseError("no data rows", line=2)
    return out
