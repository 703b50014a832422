"""
Loewner-pencil interpolation of tangential frequency data.

Pipeline: ``conjugate_augment -> partition_tangential -> build_pencil ->
realify -> realize``. :func:`interpolate` runs all of it on raw samples.

Right data are triples (lambda_i, r_i, w_i) with ``w_i = G(lambda_i) r_i``;
left data are (mu_j, l_j, v_j) with ``v_j = l_j G(mu_j)``. The realized
interpolant is ``H(s) = W X (Y^*(Ls - s L) X)^{-1} Y^* V``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    CoincidentPoints,
    DimensionMismatch,
    DuplicateFrequency,
    InsufficientData,
    NotConjugateClosed,
    RankZero,
)
from .lti import FrequencySample, StateSpaceModel, descriptor_response, model_to_dict

DEFAULT_RANK_TOL = 1e-10
REAL_TOL = 1e-10
COINCIDENT_TOL = 1e-14


def conjugate_augment(samples: Sequence[FrequencySample]) -> list[tuple[complex, np.ndarray]]:
    """Expand each sample at omega > 0 into the pair (j*omega, Phi), (-j*omega, conj Phi)."""
    seen = set()
    points = []
    for s in samples:
        if s.omega < 0:
            raise ValueError(f"negative frequency {s.omega}")
        if s.omega in seen:
            raise DuplicateFrequency(f"frequency {s.omega} appears twice")
        seen.add(s.omega)
        if s.omega == 0.0:
            points.append((0j, s.response.real.astype(complex)))
        else:
            points.append((1j * s.omega, np.array(s.response)))
            points.append((-1j * s.omega, np.conj(s.response)))
    return points


@dataclass(frozen=True, eq=False)
class TangentialDataset:
    """
    Right data (lam, Rdir, W) and left data (mu, Ldir, V).

    ``Rdir`` is p x k with the directions as columns, ``W`` is m x k;
    ``Ldir`` is q x m with directions as rows, ``V`` is q x p. ``right_blocks``
    and ``left_blocks`` give the unit sizes (2 for a conjugate pair, 1 for a
    real point) in storage order. ``right_omega``/``left_omega`` hold the
    source frequency of each unit.
    """

    lam: np.ndarray
    Rdir: np.ndarray
    W: np.ndarray
    mu: np.ndarray
    Ldir: np.ndarray
    V: np.ndarray
    right_blocks: tuple
    left_blocks: tuple
    right_omega: tuple = ()
    left_omega: tuple = ()
    right_phi: np.ndarray | None = field(default=None, repr=False)
    left_phi: np.ndarray | None = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return self.W.shape[0]

    @property
    def p(self) -> int:
        return self.V.shape[1]

    def check(self, tol: float = 1e-12) -> None:
        """Validate the invariants; raises ValueError on violation."""
        if set(np.round(self.lam, 15).tolist()) & set(np.round(self.mu, 15).tolist()):
            raise CoincidentPoints("left and right point sets intersect")
        norms = np.concatenate(
            [np.linalg.norm(self.Rdir, axis=0), np.linalg.norm(self.Ldir, axis=1)]
        )
        if norms.size and np.max(np.abs(norms - 1)) > tol:
            raise ValueError("direction vectors must have unit norm")
        if self.right_phi is not None:
            w = np.einsum("kmp,pk->mk", self.right_phi, self.Rdir)
            if not np.allclose(w, self.W, rtol=tol, atol=tol * max(1.0, np.abs(self.W).max())):
                raise ValueError("W is inconsistent with the stored responses")
        if self.left_phi is not None:
            v = np.einsum("qm,qmp->qp", self.Ldir, self.left_phi)
            if not np.allclose(v, self.V, rtol=tol, atol=tol * max(1.0, np.abs(self.V).max())):
                raise ValueError("V is inconsistent with the stored responses")


def _group_units(points):
    """Split an augmented point list into conjugate units (pairs or single real points)."""
    units = []
    i = 0
    while i < len(points):
        z, phi = points[i]
        if z.imag == 0:
            units.append([(z, phi)])
            i += 1
            continue
        if i + 1 >= len(points) or points[i + 1][0] != np.conj(z):
            raise NotConjugateClosed(f"point {z} is not followed by its conjugate")
        units.append([points[i], points[i + 1]])
        i += 2
    return units


def partition_tangential(points, m: int, p: int) -> TangentialDataset:
    """
    Alternate conjugate units between right and left data.

    Units are sorted by ascending |frequency|; the first goes right. The i-th
    right unit uses direction ``e_{(i mod p)+1}`` and the j-th left unit
    ``e_{(j mod m)+1}``, shared by both members of a pair.
    """
    units = _group_units(points)
    for u in units:
        for _, phi in u:
            if np.shape(phi) != (m, p):
                raise DimensionMismatch(f"response shape {np.shape(phi)} != {(m, p)}")
    units.sort(key=lambda u: abs(u[0][0]))
    right_units = units[0::2]
    left_units = units[1::2]
    if not right_units or not left_units:
        raise InsufficientData(f"need at least 2 conjugate units, got {len(units)}")

    lam, rcols, wcols, rphi, rblocks = [], [], [], [], []
    for i, u in enumerate(right_units):
        r = np.zeros(p)
        r[i % p] = 1.0
        for z, phi in u:
            lam.append(z)
            rcols.append(r)
            wcols.append(phi @ r)
            rphi.append(phi)
        rblocks.append(len(u))
    mu, lrows, vrows, lphi, lblocks = [], [], [], [], []
    for j, u in enumerate(left_units):
        ell = np.zeros(m)
        ell[j % m] = 1.0
        for z, phi in u:
            mu.append(z)
            lrows.append(ell)
            vrows.append(ell @ phi)
            lphi.append(phi)
        lblocks.append(len(u))

    return TangentialDataset(
        lam=np.array(lam, dtype=complex),
        Rdir=np.array(rcols, dtype=complex).T.reshape(p, -1),
        W=np.array(wcols, dtype=complex).T.reshape(m, -1),
        mu=np.array(mu, dtype=complex),
        Ldir=np.array(lrows, dtype=complex).reshape(-1, m),
        V=np.array(vrows, dtype=complex).reshape(-1, p),
        right_blocks=tuple(rblocks),
        left_blocks=tuple(lblocks),
        right_omega=tuple(abs(u[0][0]) for u in right_units),
        left_omega=tuple(abs(u[0][0]) for u in left_units),
        right_phi=np.array(rphi),
        left_phi=np.array(lphi),
    )


@dataclass(frozen=True, eq=False)
class LoewnerPencil:
    """
    Loewner matrix ``L`` and shifted Loewner matrix ``Ls`` with their generators.

    ``Lam`` and ``M`` start out diagonal; after :func:`realify` they hold the
    transformed (block-diagonal, real) point matrices so that the Sylvester
    identities ``Ls = L Lam + V Rdir`` and ``Ls = M L + Ldir W`` still hold.
    """

    L: np.ndarray
    Ls: np.ndarray
    V: np.ndarray
    W: np.ndarray
    M: np.ndarray
    Lam: np.ndarray
    Ldir: np.ndarray
    Rdir: np.ndarray
    right_blocks: tuple = ()
    left_blocks: tuple = ()
    is_real: bool = False
    omegas: tuple = ()

    def sylvester_residuals(self) -> tuple[float, float]:
        """Relative Frobenius residuals of the two Sylvester identities."""
        scale = max(np.linalg.norm(self.Ls), np.finfo(float).tiny)
        r1 = np.linalg.norm(self.Ls - self.L @ self.Lam - self.V @ self.Rdir) / scale
        r2 = np.linalg.norm(self.Ls - self.M @ self.L - self.Ldir @ self.W) / scale
        return float(r1), float(r2)


def build_pencil(data: TangentialDataset) -> LoewnerPencil:
    lam, mu = data.lam, data.mu
    diff = mu[:, None] - lam[None, :]
    scale = max(np.max(np.abs(lam)), np.max(np.abs(mu)), np.finfo(float).tiny)
    if np.min(np.abs(diff)) < COINCIDENT_TOL * scale:
        j, i = np.unravel_index(np.argmin(np.abs(diff)), diff.shape)
        raise CoincidentPoints(f"mu[{j}]={mu[j]} and lam[{i}]={lam[i]} coincide")
    VR = data.V @ data.Rdir
    LW = data.Ldir @ data.W
    L = (VR - LW) / diff
    Ls = (mu[:, None] * VR - lam[None, :] * LW) / diff
    omegas = tuple(sorted(set(data.right_omega) | set(data.left_omega)))
    return LoewnerPencil(
        L=L,
        Ls=Ls,
        V=data.V.copy(),
        W=data.W.copy(),
        M=np.diag(mu),
        Lam=np.diag(lam),
        Ldir=data.Ldir.copy(),
        Rdir=data.Rdir.copy(),
        right_blocks=data.right_blocks,
        left_blocks=data.left_blocks,
        omegas=omegas,
    )


_PAIR_BLOCK = np.array([[1.0, -1j], [1.0, 1j]]) / np.sqrt(2.0)


def realification_block(blocks: Sequence[int]) -> np.ndarray:
    """Block-diagonal unitary J; a 2x2 block per conjugate pair, 1 per real point."""
    n = int(sum(blocks))
    J = np.zeros((n, n), dtype=complex)
    i = 0
    for b in blocks:
        if b == 2:
            J[i : i + 2, i : i + 2] = _PAIR_BLOCK
        elif b == 1:
            J[i, i] = 1.0
        else:
            raise ValueError(f"invalid block size {b}")
        i += b
    return J


def _strip_imag(name: str, X: np.ndarray, tol: float) -> np.ndarray:
    scale = np.linalg.norm(X)
    if X.size and np.max(np.abs(X.imag)) > tol * max(scale, np.finfo(float).tiny):
        raise NotConjugateClosed(
            f"{name} keeps an imaginary part of {np.max(np.abs(X.imag)):.3e} after realification"
        )
    return np.ascontiguousarray(X.real)


def realify(pencil: LoewnerPencil, tol: float = REAL_TOL) -> LoewnerPencil:
    """Transform a conjugate-closed pencil to an equivalent real one."""
    if pencil.is_real:
        return pencil
    Jk = realification_block(pencil.right_blocks)
    Jq = realification_block(pencil.left_blocks)
    if Jk.shape[0] != pencil.L.shape[1] or Jq.shape[0] != pencil.L.shape[0]:
        raise NotConjugateClosed("block structure does not match the pencil size")
    # point lists must actually be conjugate-adjacent
    for blocks, pts in ((pencil.right_blocks, np.diag(pencil.Lam)), (pencil.left_blocks, np.diag(pencil.M))):
        i = 0
        for b in blocks:
            if b == 2 and pts[i + 1] != np.conj(pts[i]):
                raise NotConjugateClosed(f"points {pts[i]} and {pts[i + 1]} are not conjugate")
            if b == 1 and pts[i].imag != 0:
                raise NotConjugateClosed(f"point {pts[i]} is not real")
            i += b
    JqH = Jq.conj().T
    parts = {
        "L": JqH @ pencil.L @ Jk,
        "Ls": JqH @ pencil.Ls @ Jk,
        "V": JqH @ pencil.V,
        "W": pencil.W @ Jk,
        "M": JqH @ pencil.M @ Jq,
        "Lam": Jk.conj().T @ pencil.Lam @ Jk,
        "Ldir": JqH @ pencil.Ldir,
        "Rdir": pencil.Rdir @ Jk,
    }
    real = {k: _strip_imag(k, v, tol) for k, v in parts.items()}
    return LoewnerPencil(
        **real,
        right_blocks=pencil.right_blocks,
        left_blocks=pencil.left_blocks,
        is_real=True,
        omegas=pencil.omegas,
    )


def numerical_rank(pencil: LoewnerPencil, rank_tol: float = DEFAULT_RANK_TOL):
    """
    Numerical order of the data: ``(nu, sv_row, sv_col)``.

    ``sv_row`` are the singular values of ``[L, Ls]`` and ``sv_col`` those of
    ``[L; Ls]``. Each count keeps values above ``rank_tol * sigma_1`` and
    ``nu`` is the smaller count. Data whose Loewner matrix vanishes (no
    dynamics, e.g. a constant response) get ``nu = 0``.
    """
    row = np.hstack([pencil.L, pencil.Ls])
    col = np.vstack([pencil.L, pencil.Ls])
    sv_row = np.linalg.svd(row, compute_uv=False)
    sv_col = np.linalg.svd(col, compute_uv=False)
    if sv_row.size == 0 or sv_row[0] == 0:
        return 0, sv_row, sv_col
    nu_row = int(np.sum(sv_row > rank_tol * sv_row[0]))
    nu_col = int(np.sum(sv_col > rank_tol * sv_col[0]))
    l_max = np.linalg.norm(pencil.L, 2) if pencil.L.size else 0.0
    if l_max <= rank_tol * sv_row[0] or l_max == 0.0:
        return 0, sv_row, sv_col
    return min(nu_row, nu_col), sv_row, sv_col


@dataclass(frozen=True, eq=False)
class Interpolant:
    """
    Reduced descriptor model ``H(s) = Cr (s Er - Ar)^{-1} Br + D``.

    ``D`` is zero for every projected interpolant; it only carries the value
    of an order-0 (constant) interpolant.
    """

    Er: np.ndarray
    Ar: np.ndarray
    Br: np.ndarray
    Cr: np.ndarray
    D: np.ndarray
    interpolation_set: tuple = ()
    sv_row: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sv_col: np.ndarray = field(default_factory=lambda: np.zeros(0))
    rank_tol: float = DEFAULT_RANK_TOL

    @property
    def order(self) -> int:
        return self.Ar.shape[0]

    nr = order

    @property
    def m(self) -> int:
        return self.D.shape[0]

    @property
    def p(self) -> int:
        return self.D.shape[1]

    @property
    def is_real(self) -> bool:
        return not any(np.iscomplexobj(x) for x in (self.Er, self.Ar, self.Br, self.Cr, self.D))

    def transfer(self, s) -> np.ndarray:
        """H at complex points ``s``; returns (N, m, p)."""
        return descriptor_response(self.Er, self.Ar, self.Br, self.Cr, self.D, s)

    def response(self, omegas) -> np.ndarray:
        """H(j*omega) stacked over ``omegas``."""
        return self.transfer(1j * np.asarray(omegas, dtype=float).ravel())

    def to_model(self) -> StateSpaceModel:
        if not self.is_real:
            raise TypeError("only real interpolants convert to StateSpaceModel")
        if self.order == 0:
            return StateSpaceModel(None, None, None, D=self.D)
        return StateSpaceModel(self.Ar, self.Br, self.Cr, D=self.D, E=self.Er, check_regular=False)

    def meta(self) -> dict:
        return {
            "interpolation_set": [float(w) for w in self.interpolation_set],
            "sv_row": [float(x) for x in self.sv_row],
            "sv_col": [float(x) for x in self.sv_col],
            "rank_tol": float(self.rank_tol),
            "order": self.order,
        }

    def to_dict(self) -> dict:
        d = model_to_dict(self.to_model())
        d["meta"] = self.meta()
        return d


def realize(pencil: LoewnerPencil, rank_tol: float = DEFAULT_RANK_TOL, nu: int | None = None) -> Interpolant:
    """
    Project the pencil onto its leading ``nu`` singular directions.

    With Y from ``[L, Ls]`` and X from ``[L; Ls]``: ``Er = -Y*LX``,
    ``Ar = -Y*LsX``, ``Br = Y*V``, ``Cr = WX``. ``nu`` defaults to
    :func:`numerical_rank`.
    """
    rank, sv_row, sv_col = numerical_rank(pencil, rank_tol)
    if nu is None:
        nu = rank
    if nu < 1:
        raise RankZero("Loewner pencil has numerical rank 0")
    U, _, _ = np.linalg.svd(np.hstack([pencil.L, pencil.Ls]), full_matrices=False)
    _, _, Vh = np.linalg.svd(np.vstack([pencil.L, pencil.Ls]), full_matrices=False)
    Y = U[:, :nu]
    X = Vh[:nu].conj().T
    YH = Y.conj().T
    Er = -YH @ pencil.L @ X
    Ar = -YH @ pencil.Ls @ X
    Br = YH @ pencil.V
    Cr = pencil.W @ X
    m, p = pencil.W.shape[0], pencil.V.shape[1]
    D = np.zeros((m, p))
    if not pencil.is_real:
        D = D.astype(complex)
    return Interpolant(
        Er=Er,
        Ar=Ar,
        Br=Br,
        Cr=Cr,
        D=D,
        interpolation_set=pencil.omegas,
        sv_row=sv_row,
        sv_col=sv_col,
        rank_tol=rank_tol,
    )


def evaluate_interpolant(H: Interpolant, omega: float) -> np.ndarray:
    return H.response([omega])[0]


def constant_interpolant(samples: Sequence[FrequencySample], sv_row=None, sv_col=None,
                         rank_tol: float = DEFAULT_RANK_TOL) -> Interpolant:
    """Order-0 interpolant holding the mean (real part) of the sampled responses."""
    D = np.mean([s.response.real for s in samples], axis=0)
    m, p = D.shape
    return Interpolant(
        Er=np.zeros((0, 0)),
        Ar=np.zeros((0, 0)),
        Br=np.zeros((0, p)),
        Cr=np.zeros((m, 0)),
        D=D,
        interpolation_set=tuple(sorted(s.omega for s in samples)),
        sv_row=np.zeros(0) if sv_row is None else np.asarray(sv_row),
        sv_col=np.zeros(0) if sv_col is None else np.asarray(sv_col),
        rank_tol=rank_tol,
    )


def interpolate(samples: Sequence[FrequencySample], rank_tol: float = DEFAULT_RANK_TOL,
                real: bool = True) -> Interpolant:
    """
    Full pipeline from raw samples to a (real, by default) interpolant.

    Data without dynamics short-circuit to :func:`constant_interpolant`.
    """
    if not samples:
        raise InsufficientData("no samples")
    m, p = samples[0].response.shape
    points = conjugate_augment(samples)
    data = partition_tangential(points, m, p)
    pencil = build_pencil(data)
    if real:
        pencil = realify(pencil)
    try:
        return realize(pencil, rank_tol)
    except RankZero:
        _, sv_row, sv_col = numerical_rank(pencil, rank_tol)
        return constant_interpolant(samples, sv_row, sv_col, rank_tol)
