import itertools
import math

import numpy as np
import pytest

from resilest.analysis import (
    CorrectabilityError,
    SystemModel,
    UnsupportedInputError,
    analyze,
    is_q_error_correctable,
    is_q_error_detectable,
    is_q_redundant_observable,
    observability_matrix,
    robustness_constants,
    security_index,
    security_index_eigenvector,
    stacked_cospark,
)
from resilest.stacked import CodingMatrix, IndexSet, StackedVector, stacked_l0

ONES3 = CodingMatrix(np.array([[1.0], [1.0], [1.0]]), 1, 3)


# ---------------------------------------------------------------------------
# observability matrix


def test_observability_matrix_n1():
    m = SystemModel(A=[[1.0]], B=[[0.0]], C=[[1.0], [1.0], [1.0]])
    g = observability_matrix(m)
    assert np.array_equal(g.entries, [[1.0], [1.0], [1.0]])


def test_observability_matrix_diag():
    m = SystemModel(A=np.diag([1.0, 2.0]), B=np.zeros((2, 1)), C=[[1.0, 0.0]])
    g = observability_matrix(m)
    assert np.array_equal(g.block(1), [[1.0, 0.0], [1.0, 0.0]])


def test_observability_matrix_nilpotent():
    m = SystemModel(A=np.zeros((2, 2)), B=np.zeros((2, 1)), C=[[1.0, 1.0]])
    g = observability_matrix(m)
    assert np.array_equal(g.block(1), [[1.0, 1.0], [0.0, 0.0]])


# ---------------------------------------------------------------------------
# detectability / correctability / cospark


def test_detectable_examples():
    assert is_q_error_detectable(ONES3, 2)
    assert not is_q_error_detectable(ONES3, 3)  # empty selection has rank 0
    phi = CodingMatrix(np.array([[1.0], [1.0], [0.0]]), 1, 3)
    assert not is_q_error_detectable(phi, 2)


def test_detectable_rejects_bad_q():
    with pytest.raises(ValueError):
        is_q_error_detectable(ONES3, 4)
    with pytest.raises(ValueError):
        is_q_error_detectable(ONES3, -1)


def test_correctable_examples():
    assert is_q_error_correctable(ONES3, 1)
    assert not is_q_error_correctable(ONES3, 2)  # 2q = 4 > p
    assert is_q_error_correctable(ONES3, 0)


def test_cospark_examples():
    assert stacked_cospark(ONES3) == 3
    rank_deficient = CodingMatrix(np.array([[1.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]), 2, 2)
    assert stacked_cospark(rank_deficient) == 0


def cospark_null_vector_oracle(phi, tol=1e-8):
    """Independent route: try a null vector of every selection and measure the
    stacked support of phi @ x directly; also sample generic vectors."""
    p, n = phi.block_count, phi.block_len
    best = p
    rng = np.random.default_rng(0)
    candidates = [rng.normal(size=n) for _ in range(5)]
    for size in range(p + 1):
        for lam in itertools.combinations(range(1, p + 1), size):
            sub = phi.compacted(IndexSet(lam, p))
            if sub.size == 0:
                continue
            _, s, vt = np.linalg.svd(sub)
            if s.size < n or s[-1] < tol * max(1.0, s[0]):
                candidates.append(vt[-1])
    for x in candidates:
        if np.linalg.norm(x) < 1e-12:
            continue
        x = x / np.linalg.norm(x)
        prod = StackedVector(phi.entries @ x, n, p)
        best = min(best, stacked_l0(prod, tol=tol))
    return best


def test_cospark_structured_example_against_oracle():
    m = SystemModel(A=np.diag([1.0, 2.0]), B=np.zeros((2, 1)),
                    C=[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    g = observability_matrix(m)
    assert stacked_cospark(g) == 2
    assert cospark_null_vector_oracle(g) == 2


def test_cospark_matches_null_vector_oracle_randomized():
    rng = np.random.default_rng(42)
    for _ in range(40):
        n = int(rng.integers(1, 4))
        p = int(rng.integers(max(2, n), 6))
        entries = rng.normal(size=(n * p, n))
        # plant structure: zero out some whole blocks, occasionally repeat one
        for i in range(p):
            if rng.random() < 0.25:
                entries[i * n:(i + 1) * n] = 0.0
        phi = CodingMatrix(entries, n, p)
        assert stacked_cospark(phi) == cospark_null_vector_oracle(phi)


# ---------------------------------------------------------------------------
# security index


def test_security_index_three_inertia(three_inertia):
    assert security_index(three_inertia) == 3


def test_security_index_structured():
    m = SystemModel(A=np.diag([1.0, 2.0]), B=np.zeros((2, 1)),
                    C=[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    assert security_index(m) == 2
    assert security_index_eigenvector(m) == 2


def test_security_index_unobservable():
    m = SystemModel(A=np.diag([1.0, 2.0]), B=np.zeros((2, 1)),
                    C=[[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
    assert security_index(m) == 0


def test_eigenvector_route_rejects_repeated_spectrum():
    m = SystemModel(A=np.eye(2), B=np.zeros((2, 1)), C=[[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(UnsupportedInputError):
        security_index_eigenvector(m)


def test_eigenvector_route_three_inertia(three_inertia):
    assert security_index_eigenvector(three_inertia) == 3


# ---------------------------------------------------------------------------
# redundant observability


def test_redundant_observability_three_inertia(three_inertia):
    assert is_q_redundant_observable(three_inertia, 2)
    assert not is_q_redundant_observable(three_inertia, 3)


def test_redundant_observability_q0():
    m = SystemModel(A=[[0.5]], B=[[1.0]], C=[[2.0]])
    assert is_q_redundant_observable(m, 0)


# ---------------------------------------------------------------------------
# robustness constants


def constants_oracle(phi, q, r):
    """Direct transcription of the defining formulas, written independently
    of the implementation (plain loops over numpy lstsq/svd calls)."""
    p, n = phi.block_count, phi.block_len
    E = phi.entries

    def comp(idx):
        rows = [j for i in idx for j in range(n * (i - 1), n * i)]
        return E[rows, :]

    def blk(i):
        return E[n * (i - 1): n * i, :]

    rho = min(np.linalg.svd(comp(c), compute_uv=False)[-1]
              for c in itertools.combinations(range(1, p + 1), p - q))
    rho2 = min(np.linalg.svd(comp(c), compute_uv=False)[-1]
               for c in itertools.combinations(range(1, p + 1), p - 2 * q))
    eta = 0.0
    for lam in itertools.combinations(range(1, p + 1), p - q):
        pin = np.linalg.pinv(comp(lam))
        for i in set(range(1, p + 1)) - set(lam):
            eta = max(eta, np.linalg.norm(blk(i) @ pin, 2))
    etap = 0.0
    for lam in itertools.combinations(range(1, p + 1), p - q):
        inner = math.inf
        for bar in itertools.combinations(lam, p - r):
            pin = np.linalg.pinv(comp(bar))
            worst = max((np.linalg.norm(blk(i) @ pin, 2)
                         for i in set(lam) - set(bar)), default=0.0)
            inner = min(inner, worst)
        etap = max(etap, inner)
    theta = max(etap * math.sqrt(p - r) + 1, math.sqrt(p - r))
    return {
        "rho": rho,
        "eta": eta,
        "kappa_d": (math.sqrt(p) + 1) * math.sqrt(p - q) / rho,
        "kappa_e": (eta * math.sqrt(p - q) + 1) * (math.sqrt(p) + 1),
        "eta_prime": etap,
        "theta": theta,
        "kappa_c": (theta + 1) * math.sqrt(p - 2 * q) / rho2,
        "kappa_c_prime": (theta - 1) / max(np.linalg.norm(blk(i), 2) for i in range(1, p + 1)),
    }


def test_constants_ones3_hand_values():
    c = robustness_constants(ONES3, q=1, r=2)
    assert c.rho == pytest.approx(math.sqrt(2), abs=1e-12)
    assert c.eta == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert c.kappa_d == pytest.approx(math.sqrt(3) + 1, abs=1e-12)
    assert c.kappa_e == pytest.approx(2 * (math.sqrt(3) + 1), abs=1e-12)
    assert c.eta_prime == pytest.approx(1.0, abs=1e-12)
    assert c.theta == pytest.approx(2.0, abs=1e-12)
    assert c.kappa_c == pytest.approx(3.0, abs=1e-12)
    assert c.kappa_c_prime == pytest.approx(1.0, abs=1e-12)


def test_constants_ones3_q0():
    c = robustness_constants(ONES3, q=0, r=0)
    assert c.rho == pytest.approx(math.sqrt(3), abs=1e-12)
    assert c.eta == 0.0  # empty outer index set
    assert c.eta_prime == 0.0
    # theta = max(eta' * sqrt(p-r) + 1, sqrt(p-r)) with p-r = 3
    assert c.theta == pytest.approx(math.sqrt(3), abs=1e-12)


def test_constants_match_direct_formula_oracle():
    rng = np.random.default_rng(99)
    for _ in range(12):
        n = int(rng.integers(1, 3))
        p = int(rng.integers(3, 6))
        phi = CodingMatrix(rng.normal(size=(n * p, n)), n, p)
        q_max = (stacked_cospark(phi) - 1) // 2
        if q_max < 1 or p < 3:
            continue
        q = 1
        for r in range(q, 2 * q + 1):
            got = robustness_constants(phi, q, r)
            want = constants_oracle(phi, q, r)
            for name, val in want.items():
                assert getattr(got, name) == pytest.approx(val, rel=1e-9), (name, q, r)


def test_constants_three_inertia_phi_regression(three_inertia):
    # frozen values for the padded observer-bank coding matrix, q = r = 1
    from resilest.estimator import build_phi
    from resilest.plant import ObserverConfig, build_observer_bank

    bank = build_observer_bank(three_inertia, ObserverConfig(mode="contract", factor=0.98))
    phi = build_phi(bank)
    c = robustness_constants(phi, 1, 1)
    assert c.theta == pytest.approx(2.0, rel=1e-9)
    assert c.rho == pytest.approx(1.414213562373095, rel=1e-9)
    assert c.eta == pytest.approx(0.707106781186548, rel=1e-9)
    assert c.rho_2q == pytest.approx(1.0, rel=1e-9)
    assert c.kappa_c == pytest.approx(5.196152422706633, rel=1e-9)
    assert c.eta_prime == 0.0
    assert c.kappa_c_prime == pytest.approx(1.0, rel=1e-9)
    assert c.kappa_d == pytest.approx(4.576491222541475, rel=1e-9)
    assert c.kappa_e == pytest.approx(7.8125592000412665, rel=1e-9)


def test_constants_undefined_when_not_correctable():
    phi = CodingMatrix(np.array([[1.0], [1.0], [0.0]]), 1, 3)
    with pytest.raises(CorrectabilityError):
        robustness_constants(phi, 1, 1)


def test_constants_parameter_validation():
    with pytest.raises(ValueError):
        robustness_constants(ONES3, q=1, r=3)
    with pytest.raises(ValueError):
        robustness_constants(ONES3, q=2, r=2)  # p < 2q+1


# ---------------------------------------------------------------------------
# proposition-style equivalences on random matrices


def random_phi(rng):
    n = int(rng.integers(1, 4))
    p = int(rng.integers(max(2, n), 7))
    style = rng.integers(0, 3)
    entries = rng.normal(size=(n * p, n))
    if style == 1:
        for i in range(p):
            if rng.random() < 0.35:
                entries[i * n:(i + 1) * n] = 0.0
    elif style == 2 and n > 1:
        entries = rng.normal(size=(n * p, n - 1)) @ rng.normal(size=(n - 1, n))
    return CodingMatrix(entries, n, p)


def test_detectability_iff_cospark_exceeds_q():
    rng = np.random.default_rng(7)
    for _ in range(100):
        phi = random_phi(rng)
        cs = stacked_cospark(phi)
        for q in range(phi.block_count + 1):
            assert is_q_error_detectable(phi, q) == (cs > q)


def test_correctability_iff_cospark_exceeds_2q():
    rng = np.random.default_rng(8)
    for _ in range(60):
        phi = random_phi(rng)
        cs = stacked_cospark(phi)
        for q in range(phi.block_count // 2 + 1):
            assert is_q_error_correctable(phi, q) == (cs > 2 * q)


def test_detectability_monotone_in_q():
    rng = np.random.default_rng(9)
    for _ in range(30):
        phi = random_phi(rng)
        flags = [is_q_error_detectable(phi, q) for q in range(phi.block_count + 1)]
        for lo, hi in zip(flags, flags[1:]):
            assert lo or not hi  # detectable at q+1 implies detectable at q


def test_exact_size_selection_equivalent_to_all_larger():
    # deciding on |lam| = p-q alone agrees with checking every |lam| >= p-q
    def rank_of(mat):
        return 0 if mat.size == 0 else np.linalg.matrix_rank(mat)

    rng = np.random.default_rng(10)
    for _ in range(20):
        phi = random_phi(rng)
        p, n = phi.block_count, phi.block_len
        for q in range(p + 1):
            full_scan = all(
                rank_of(phi.compacted(IndexSet(lam, p))) == n
                for size in range(p - q, p + 1)
                for lam in itertools.combinations(range(1, p + 1), size)
            )
            assert is_q_error_detectable(phi, q, eps_rel=1e-10) == full_scan


def test_rho_nonincreasing_in_q():
    rng = np.random.default_rng(12)
    phi = CodingMatrix(rng.normal(size=(10, 2)), 2, 5)
    rhos = []
    for q in (0, 1, 2):
        c = robustness_constants(phi, q, q) if q else None
        if c:
            rhos.append(c.rho)
    assert rhos == sorted(rhos, reverse=True)


def planted_spectrum_system(rng, n, p):
    """Distinct-eigenvalue A with known eigenvectors and a C whose action on
    the j-th eigenvector is the j-th column of a sparsity-planted matrix."""
    eigvals = np.sort(rng.uniform(0.2, 0.95, size=n))
    while np.min(np.diff(eigvals)) < 0.05:
        eigvals = np.sort(rng.uniform(0.2, 0.95, size=n))
    basis = np.linalg.qr(rng.normal(size=(n, n)))[0] + 0.1 * rng.normal(size=(n, n))
    A = basis @ np.diag(eigvals) @ np.linalg.inv(basis)
    M = rng.normal(size=(p, n))
    M[np.abs(M) < 0.3] = 0.3 * np.sign(M[np.abs(M) < 0.3] + 0.5)
    for j in range(n):
        kill = rng.choice(p, size=rng.integers(0, p - 1), replace=False)
        M[kill, j] = 0.0
    C = M @ np.linalg.inv(basis)
    planted = min(int(np.count_nonzero(np.abs(M[:, j]) > 1e-9)) for j in range(n))
    return SystemModel(A=A, B=np.zeros((n, 1)), C=C), planted


def test_security_index_routes_agree_on_planted_systems():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        n = int(rng.integers(2, 4))
        p = int(rng.integers(n + 1, 7))
        model, planted = planted_spectrum_system(rng, n, p)
        by_cospark = security_index(model, eps_rel=1e-8)
        by_eigvec = security_index_eigenvector(model, tol=1e-6)
        assert by_cospark == by_eigvec == planted


# ---------------------------------------------------------------------------
# analyze report


def test_analyze_three_inertia(three_inertia):
    rep = analyze(three_inertia)
    assert rep.security_index == 3
    assert rep.max_detectable_q == 2
    assert rep.max_correctable_q == 1
    assert rep.redundancy_degree == 2
    assert set(rep.per_q_constants) == {1}


def test_analyze_unobservable_pair():
    m = SystemModel(A=np.diag([1.0, 2.0]), B=np.zeros((2, 1)),
                    C=[[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
    rep = analyze(m)
    assert rep.security_index == 0
    assert rep.max_detectable_q == -1
    assert rep.max_correctable_q == -1
