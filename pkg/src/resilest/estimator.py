"""Switching decoder over a bank of partial observers.

The padded observer states satisfy a static coding relation against the
full plant state, so each time step reduces to the block-sparse decoding
problem.  During normal operation a single least-squares solve on the
currently trusted sensor set (the calculator) suffices; only when more than
q sensors disagree does the decoder fall back to the combinatorial search
(the minimizer) and re-select the trusted set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._linalg import pinv
from .analysis import RobustnessConstants, robustness_constants
from .decoding import decode_noisy
from .observers import ErrorBoundParams, PartialObserver, observer_step, v_max_at
from .stacked import CodingMatrix, IndexSet, StackedVector

BRANCH_CALCULATOR = "calculator"
BRANCH_MINIMIZER = "minimizer"


def build_phi(bank: list[PartialObserver]) -> CodingMatrix:
    """Stack each sensor's quotient basis, zero-padded to n rows per block.

    The block row space equals the sensor's observability row space, so
    selection ranks (and hence correctability) carry over from the stacked
    observability matrix.  Total observer state is asserted not to exceed
    the padded size n*p.
    """
    if not bank:
        raise ValueError("observer bank is empty")
    n = bank[0].Z.shape[0]
    total_nu = sum(obs.nu for obs in bank)
    assert total_nu <= n * len(bank), "observer bank exceeds padded memory budget"
    blocks = []
    for obs in bank:
        blocks.append(np.vstack([obs.Z.T, np.zeros((n - obs.nu, n))]))
    return CodingMatrix.from_blocks(blocks)


def pad_observer_outputs(bank: list[PartialObserver]) -> StackedVector:
    """Current observer states, each padded with zeros to length n."""
    n = bank[0].Z.shape[0]
    parts = []
    for obs in bank:
        if obs.state is None:
            raise ValueError(f"sensor {obs.sensor_index}: observer state unset")
        parts.append(np.concatenate([obs.state, np.zeros(n - obs.nu)]))
    return StackedVector.from_blocks(parts)


@dataclass
class DecoderState:
    """Mutable single-owner state of the switching decoder."""

    lam: IndexSet
    q: int
    r: int
    phi: CodingMatrix
    constants: RobustnessConstants
    f: int = 0
    v_prime_max: float = 0.0
    pinv_solves: int = 0
    minimizer_calls: int = 0
    recert_every: int | None = None

    @classmethod
    def fresh(
        cls,
        phi: CodingMatrix,
        q: int,
        r: int | None = None,
        constants: RobustnessConstants | None = None,
        recert_every: int | None = None,
    ) -> "DecoderState":
        """Start trusting every sensor; constants are computed once here."""
        r = q if r is None else r
        if constants is None:
            constants = robustness_constants(phi, q, r)
        return cls(
            lam=IndexSet.full(phi.block_count),
            q=q,
            r=r,
            phi=phi,
            constants=constants,
            recert_every=recert_every,
        )


@dataclass(frozen=True)
class EstimateRecord:
    """One decoder output row."""

    k: int
    x_hat: np.ndarray
    f: int
    lam: IndexSet
    branch: str
    bound: float
    solves: int = 1


def _block_misfits(state: DecoderState, z: StackedVector, x: np.ndarray) -> np.ndarray:
    resid = z.data - state.phi.entries @ x
    p, n = state.phi.block_count, state.phi.block_len
    return np.linalg.norm(resid.reshape(p, n), axis=1)


def decoder_step(
    state: DecoderState,
    z: StackedVector,
    k: int,
    bounds: ErrorBoundParams,
) -> tuple[EstimateRecord, DecoderState]:
    """One monitor-then-decode pass on the padded observer vector.

    The calculator solves least squares on the trusted set and counts
    sensors whose block misfit strictly exceeds ``theta * v_max(k)``; at
    most q violations keep its estimate.  Otherwise the minimizer searches
    the candidate set and the trusted set is rebuilt from the sensors
    consistent with its estimate (non-strict threshold, lexicographic
    tie-break inherited from the search).
    """
    p = state.phi.block_count
    v_max_k = v_max_at(bounds, k)
    state.v_prime_max = state.constants.theta * v_max_k
    solves = 1

    x_prime = pinv(state.phi.compacted(state.lam)) @ z.compacted(state.lam)
    state.pinv_solves += 1
    misfits = _block_misfits(state, z, x_prime)
    f = int(np.count_nonzero(misfits > state.v_prime_max))
    state.f = f

    if f <= state.q:
        branch = BRANCH_CALCULATOR
        x_hat = x_prime
    else:
        branch = BRANCH_MINIMIZER
        result = decode_noisy(
            state.phi, z, state.q, state.r, v_max_k, constants=state.constants
        )
        x_hat = result.estimate
        n_candidates = math.comb(p, p - state.r)
        state.pinv_solves += n_candidates
        solves += n_candidates
        state.minimizer_calls += 1
        misfits = _block_misfits(state, z, x_hat)
        trusted = tuple(
            i + 1 for i in range(p) if misfits[i] <= state.v_prime_max
        )
        state.lam = IndexSet(trusted, p)
        assert len(state.lam) >= p - state.q, (
            "trusted sensor set shrank below p - q; model assumptions violated"
        )

    if state.recert_every and k > 0 and k % state.recert_every == 0:
        state.lam = IndexSet.full(p)

    record = EstimateRecord(
        k=k,
        x_hat=x_hat,
        f=f,
        lam=state.lam,
        branch=branch,
        bound=state.constants.kappa_c * v_max_k,
        solves=solves,
    )
    return record, state


def estimator_step(
    bank: list[PartialObserver],
    state: DecoderState,
    u: np.ndarray,
    y_bar: np.ndarray,
    k: int,
    bounds: ErrorBoundParams,
) -> EstimateRecord:
    """Advance every observer with (u(k), y(k)), then decode.

    The returned record carries index ``k + 1``: observer states after
    absorbing the step-k measurement estimate the step-k+1 plant state.
    """
    y_bar = np.asarray(y_bar, dtype=float).reshape(-1)
    if y_bar.size != len(bank):
        raise ValueError(f"measurement width {y_bar.size} != bank size {len(bank)}")
    for idx, obs in enumerate(bank):
        observer_step(obs, u, y_bar[idx])
    record, _ = decoder_step(state, pad_observer_outputs(bank), k + 1, bounds)
    return record
