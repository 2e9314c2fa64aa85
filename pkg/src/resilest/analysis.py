"""Detectability, correctability, and security-index analysis of coding matrices.

The central objects are an LTI plant ``x(k+1) = A x(k) + B u(k) + d(k)``,
``y(k) = C x(k) + noise + attack`` and the stacked observability matrix built
from the per-sensor observability blocks.  A coding matrix tolerates q
corrupted sensor blocks exactly when every selection of ``p - q`` blocks
retains full column rank; the security index is the smallest number of
blocks an undetectable input can be confined to.  Both views are computed
here by exhaustive subset enumeration (the intended envelope is small p,
not large sensor networks).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._linalg import matrix_rank, pinv, sigma_min
from .stacked import CodingMatrix, IndexSet

__all__ = [
    "AnalysisReport",
    "CorrectabilityError",
    "RobustnessConstants",
    "SystemModel",
    "UnsupportedInputError",
    "analyze",
    "is_q_error_correctable",
    "is_q_error_detectable",
    "is_q_redundant_observable",
    "observability_matrix",
    "robustness_constants",
    "security_index",
    "security_index_eigenvector",
    "sensor_observability_matrix",
    "stacked_cospark",
]


class CorrectabilityError(ValueError):
    """Raised when a computation requires more error correctability than the
    coding matrix provides."""


class UnsupportedInputError(ValueError):
    """Raised for inputs outside a routine's supported class (for example a
    repeated-eigenvalue state matrix given to the eigenvector security-index
    route)."""


@dataclass(frozen=True)
class SystemModel:
    """Discrete-time LTI plant with disturbance and per-sensor noise bounds."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    d_max: float = 0.0
    n_max: float = 0.0

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise ValueError(f"B must have {n} rows, got {B.shape}")
        if C.shape[1] != n:
            raise ValueError(f"C must have {n} columns, got {C.shape}")
        if self.d_max < 0 or self.n_max < 0:
            raise ValueError("d_max and n_max must be nonnegative")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class RobustnessConstants:
    """Worst-case gains used by the detection and decoding error bounds.

    ``rho`` is the smallest minimum singular value over all (p-q)-block
    selections; ``rho_2q`` the same over (p-2q)-block selections.  ``eta``
    and ``eta_prime`` bound how strongly an excluded block can react to a
    selection's least-squares solve.  ``theta`` scales the measurement noise
    bound into the decoder's per-block violation threshold, and ``kappa_d``,
    ``kappa_e``, ``kappa_c``, ``kappa_c_prime`` convert noise bounds into
    state/error-magnitude bounds.
    """

    q: int
    r: int
    rho: float
    eta: float
    kappa_d: float
    kappa_e: float
    eta_prime: float
    theta: float
    kappa_c: float
    kappa_c_prime: float
    rho_2q: float


@dataclass(frozen=True)
class AnalysisReport:
    """Summary of a model's resilience against sparse sensor corruption."""

    security_index: int
    max_detectable_q: int
    max_correctable_q: int
    redundancy_degree: int
    per_q_constants: dict[int, RobustnessConstants] = field(default_factory=dict)


def sensor_observability_matrix(A: np.ndarray, c: np.ndarray) -> np.ndarray:
    """n x n observability matrix of a single sensor row ``c``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    c = np.asarray(c, dtype=float).reshape(-1)
    rows = [c]
    for _ in range(A.shape[0] - 1):
        rows.append(rows[-1] @ A)
    return np.vstack(rows)


def observability_matrix(model: SystemModel) -> CodingMatrix:
    """Stacked observability matrix: one n x n sensor block per row slab."""
    blocks = [sensor_observability_matrix(model.A, model.C[i]) for i in range(model.p)]
    return CodingMatrix.from_blocks(blocks)


def _selections(p: int, size: int):
    """All 1-based sensor subsets of the given size, lexicographic."""
    return itertools.combinations(range(1, p + 1), size)


def is_q_error_detectable(phi: CodingMatrix, q: int, eps_rel: float | None = None) -> bool:
    """True when every selection of ``p - q`` blocks has full column rank.

    Checking only selections of exactly ``p - q`` blocks suffices: adding
    blocks never lowers rank.
    """
    p, n = phi.block_count, phi.block_len
    if not 0 <= q <= p:
        raise ValueError(f"q must lie in 0..{p}, got {q}")
    for lam in _selections(p, p - q):
        sub = phi.compacted(IndexSet(lam, p))
        if matrix_rank(sub, eps_rel) < n:
            return False
    return True


def is_q_error_correctable(phi: CodingMatrix, q: int, eps_rel: float | None = None) -> bool:
    """True when any two q-block corruptions remain distinguishable.

    Equivalent to 2q-error detectability; for ``2q > p`` this is never
    satisfiable (an empty selection cannot have full column rank).
    """
    if q < 0:
        raise ValueError(f"q must be nonnegative, got {q}")
    if 2 * q > phi.block_count:
        return False
    return is_q_error_detectable(phi, 2 * q, eps_rel)


def stacked_cospark(phi: CodingMatrix, eps_rel: float | None = None) -> int:
    """Minimum number of nonzero blocks of ``phi @ x`` over nonzero ``x``.

    Computed as ``p`` minus the largest selection whose compacted matrix is
    column-rank deficient; the empty selection (rank 0 < n) guarantees the
    maximum exists.  Deficient selection sizes form a down-set, so the scan
    can stop at the first size that contains a deficient selection.
    """
    p, n = phi.block_count, phi.block_len
    for size in range(p, -1, -1):
        for lam in _selections(p, size):
            sub = phi.compacted(IndexSet(lam, p))
            if matrix_rank(sub, eps_rel) < n:
                return p - size
    raise AssertionError("unreachable: empty selection is always rank deficient")


def security_index(model: SystemModel, eps_rel: float | None = None) -> int:
    """Minimum number of corrupted sensors that can stay undetectable."""
    return stacked_cospark(observability_matrix(model), eps_rel)


def security_index_eigenvector(
    model: SystemModel,
    tol: float | None = None,
    gap_tol: float = 1e-8,
) -> int:
    """Security index via the eigenvector route: min over normalized
    eigenvectors v of the number of nonzero entries of ``C v``.

    Only supports state matrices with n distinct eigenvalues; repeated
    spectra make the minimization over an eigenspace itself combinatorial,
    and callers should use :func:`security_index` instead.  Entry moduli at
    or below ``tol`` count as zero (default: scaled by ``norm(C v)``).
    """
    eigvals, eigvecs = np.linalg.eig(model.A)
    scale = max(1.0, float(np.max(np.abs(eigvals))))
    for a, b in itertools.combinations(eigvals, 2):
        if abs(a - b) <= gap_tol * scale:
            raise UnsupportedInputError(
                "repeated eigenvalues: the eigenvector security-index route "
                "requires a distinct spectrum; use security_index() instead"
            )
    best = model.p
    for j in range(model.n):
        v = eigvecs[:, j]
        v = v / np.linalg.norm(v)
        cv = model.C @ v
        cut = tol if tol is not None else 1e-9 * max(1.0, float(np.linalg.norm(cv)))
        best = min(best, int(np.count_nonzero(np.abs(cv) > cut)))
    return best


def is_q_redundant_observable(model: SystemModel, q: int, eps_rel: float | None = None) -> bool:
    """True when (A, C) stays observable after removing any q sensor rows."""
    return is_q_error_detectable(observability_matrix(model), q, eps_rel)


def robustness_constants(
    phi: CodingMatrix,
    q: int,
    r: int,
    eps_rel: float | None = None,
) -> RobustnessConstants:
    """Evaluate every worst-case constant by exhaustive subset enumeration.

    Requires ``q <= r <= 2q`` and ``p >= 2q + 1``.  Pseudoinverses are taken
    on compacted selections; a maximum over an empty index collection is 0.

    Raises :class:`CorrectabilityError` when the (p-2q)-selections are not
    all full rank (the constants are undefined without q-error
    correctability).
    """
    p, n = phi.block_count, phi.block_len
    if not q <= r <= 2 * q:
        raise ValueError(f"need q <= r <= 2q, got q={q}, r={r}")
    if p < 2 * q + 1:
        raise ValueError(f"need p >= 2q+1 for the correction constants, got p={p}, q={q}")
    if not is_q_error_detectable(phi, 2 * q, eps_rel):
        raise CorrectabilityError(
            "constants undefined: correctability violated "
            f"(a {p - 2 * q}-block selection is rank deficient)"
        )

    def rho_of(size: int) -> float:
        return min(
            sigma_min(phi.compacted(IndexSet(lam, p))) for lam in _selections(p, size)
        )

    rho = rho_of(p - q)
    rho_2q = rho_of(p - 2 * q)

    blocks = [phi.block(i) for i in range(1, p + 1)]

    eta = 0.0
    for lam in _selections(p, p - q):
        member = set(lam)
        pin = pinv(phi.compacted(IndexSet(lam, p)), eps_rel)
        for i in range(1, p + 1):
            if i not in member:
                eta = max(eta, float(np.linalg.norm(blocks[i - 1] @ pin, 2)))

    eta_prime = 0.0
    for lam in _selections(p, p - q):
        best_inner = math.inf
        for lam_bar in itertools.combinations(lam, p - r):
            bar_set = set(lam_bar)
            pin = pinv(phi.compacted(IndexSet(lam_bar, p)), eps_rel)
            worst = 0.0
            for i in lam:
                if i not in bar_set:
                    worst = max(worst, float(np.linalg.norm(blocks[i - 1] @ pin, 2)))
            best_inner = min(best_inner, worst)
        eta_prime = max(eta_prime, best_inner)

    sqrt_p = math.sqrt(p)
    kappa_d = (sqrt_p + 1.0) * math.sqrt(p - q) / rho
    kappa_e = (eta * math.sqrt(p - q) + 1.0) * (sqrt_p + 1.0)
    theta = max(eta_prime * math.sqrt(p - r) + 1.0, math.sqrt(p - r))
    kappa_c = (theta + 1.0) * math.sqrt(p - 2 * q) / rho_2q
    block_norm_max = max(float(np.linalg.norm(b, 2)) for b in blocks)
    kappa_c_prime = (theta - 1.0) / block_norm_max

    return RobustnessConstants(
        q=q,
        r=r,
        rho=rho,
        eta=eta,
        kappa_d=kappa_d,
        kappa_e=kappa_e,
        eta_prime=eta_prime,
        theta=theta,
        kappa_c=kappa_c,
        kappa_c_prime=kappa_c_prime,
        rho_2q=rho_2q,
    )


def analyze(
    model: SystemModel,
    constants_q: int | None = None,
    r: int | None = None,
    eps_rel: float | None = None,
) -> AnalysisReport:
    """Full resilience report for a model.

    ``max_detectable_q`` is ``security_index - 1`` (a value of -1 marks an
    unobservable pair), ``max_correctable_q`` is its floor half, and the
    redundancy degree coincides with ``max_detectable_q``.  Robustness
    constants are attached for ``constants_q`` (default: every feasible q up
    to the correctable maximum) with search size ``r`` (default ``q``).
    """
    g = observability_matrix(model)
    alpha = stacked_cospark(g, eps_rel)
    max_detectable = alpha - 1
    max_correctable = max_detectable // 2 if max_detectable >= 0 else -1

    qs: list[int]
    if constants_q is not None:
        qs = [constants_q]
    else:
        qs = [q for q in range(1, max_correctable + 1)]

    per_q: dict[int, RobustnessConstants] = {}
    for q in qs:
        if q < 1 or model.p < 2 * q + 1:
            continue
        rr = r if r is not None else q
        per_q[q] = robustness_constants(g, q, rr, eps_rel)

    return AnalysisReport(
        security_index=alpha,
        max_detectable_q=max_detectable,
        max_correctable_q=max_correctable,
        redundancy_degree=max_detectable,
        per_q_constants=per_q,
    )
