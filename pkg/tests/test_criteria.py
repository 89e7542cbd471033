import numpy as np
import pytest
from scipy.optimize import minimize

from varsep.criteria import (
    ANALYTIC,
    ENTANGLED,
    INCONCLUSIVE,
    OPTIMIZER,
    OPTIMIZER_UNCONFIRMED,
    DetectionReport,
    VarianceCriterion,
    check_variance_criterion,
    local_sum_observables,
    lur_evaluate,
    optimizer_criterion,
    schmidt_basis_bound,
    schmidt_basis_criterion,
    schmidt_basis_projectors,
    schmidt_basis_vectors,
    schmidt_basis_werner_threshold,
    variance_sum,
)
from varsep.optimize import OptimizerConfig
from varsep.sampling import random_ket, random_separable_state
from varsep.states import (
    PAULIS,
    DensityMatrix,
    DimensionError,
    Ket,
    ObservableSet,
    bell_state,
    isotropic_state,
    ppt_min_eigenvalue,
    singlet,
    werner_state,
)

PAULI_SET = ObservableSet(list(PAULIS), (2,))


def _schmidt_state(a, b):
    return Ket([a, 0, 0, b], (2, 2))


def _bloch_ket(theta, phi):
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def _scipy_product_floor(Ms, starts=40, seed=0):
    # independent oracle: Nelder-Mead over Bloch angles of both qubits
    S = Ms.stack
    rng = np.random.default_rng(seed)

    def f(x):
        psi = np.kron(_bloch_ket(x[0], x[1]), _bloch_ket(x[2], x[3]))
        m = np.einsum("i,nij,j->n", psi.conj(), S, psi).real
        m2 = np.einsum("i,nij,njk,k->n", psi.conj(), S, S, psi).real
        return float(np.sum(m2 - m**2))

    best = min(minimize(f, rng.uniform(0, np.pi, 4), method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000}).fun for _ in range(starts))
    return best


def test_report_invariant():
    with pytest.raises(ValueError):
        DetectionReport("x", 1.0, 1.0, ENTANGLED)
    with pytest.raises(ValueError):
        DetectionReport("x", 0.0, 1.0, "maybe")
    with pytest.raises(ValueError):
        DetectionReport("x", 0.0, 1.0, ENTANGLED, "guess")
    assert DetectionReport.below("x", 1 - 5e-10, 1.0).verdict == INCONCLUSIVE
    assert DetectionReport.below("x", 1 - 2e-9, 1.0).verdict == ENTANGLED


def test_variance_criterion_validation():
    with pytest.raises(ValueError):
        VarianceCriterion(PAULI_SET, -0.1)


def test_variance_sum_examples():
    s = 1 / np.sqrt(2)
    Ms = schmidt_basis_projectors(s, s)
    assert variance_sum(bell_state(), Ms) == pytest.approx(0, abs=1e-12)
    assert variance_sum(DensityMatrix.maximally_mixed((2, 2)), Ms) == pytest.approx(0.75)
    total_spin = local_sum_observables(PAULI_SET, PAULI_SET)
    assert variance_sum(singlet(), total_spin) == pytest.approx(0, abs=1e-12)
    with pytest.raises(DimensionError):
        variance_sum(DensityMatrix.maximally_mixed((2, 3)), Ms)


def test_lur_examples():
    r = lur_evaluate(singlet().density(), PAULI_SET, PAULI_SET, 2, 2)
    assert r.value == pytest.approx(0, abs=1e-12) and r.verdict == ENTANGLED
    r = lur_evaluate(Ket.basis((0, 0), (2, 2)).density(), PAULI_SET, PAULI_SET, 2, 2)
    assert r.value == pytest.approx(4) and r.verdict == INCONCLUSIVE
    for p in np.linspace(0, 1, 21):
        r = lur_evaluate(werner_state(p), PAULI_SET, PAULI_SET, 2, 2)
        assert r.value == pytest.approx(6 - 6 * p, abs=1e-12)
        assert r.detected == (p > 1 / 3 + 1e-9)
    with pytest.raises(ValueError):
        lur_evaluate(werner_state(0.5), PAULI_SET, ObservableSet([PAULIS[0]], (2,)), 2, 2)
    with pytest.raises(ValueError):
        lur_evaluate(werner_state(0.5), PAULI_SET, PAULI_SET, -1, 2)


def test_schmidt_basis_examples():
    Ms = schmidt_basis_projectors(1, 0)
    assert np.allclose(Ms.stack, [np.diag(e) for e in np.eye(4)])
    s = 1 / np.sqrt(2)
    bells = [bell_state(k).amplitudes for k in ("phi+", "psi+", "psi-", "phi-")]
    for M, v in zip(schmidt_basis_projectors(s, s), bells):
        assert np.allclose(np.asarray(M), np.outer(v, v.conj()))
    with pytest.raises(ValueError):
        schmidt_basis_projectors(0.6, 0.6)
    with pytest.raises(ValueError):
        schmidt_basis_projectors(0.6, 0.8)


def test_schmidt_basis_projectors_orthonormal():
    rng = np.random.default_rng(11)
    for _ in range(20):
        t = rng.uniform(0, np.pi / 4)
        a, b = np.cos(t), np.sin(t)
        V = schmidt_basis_vectors(a, b)
        assert np.allclose(V @ V.conj().T, np.eye(4), atol=1e-12)
        S = schmidt_basis_projectors(a, b).stack
        prods = np.einsum("iab,jbc->ijac", S, S)
        expect = np.einsum("ij,iac->ijac", np.eye(4), S)
        assert np.abs(prods - expect).max() < 1e-10
        assert np.allclose(S.sum(0), np.eye(4))


def test_schmidt_basis_bound_and_threshold():
    s = 1 / np.sqrt(2)
    assert schmidt_basis_bound(s, s) == pytest.approx(0.5)
    assert schmidt_basis_bound(1, 0) == 0
    assert schmidt_basis_bound(np.sqrt(0.8), np.sqrt(0.2)) == pytest.approx(0.32)
    assert schmidt_basis_werner_threshold(s, s) == pytest.approx(1 / np.sqrt(3))
    assert schmidt_basis_werner_threshold(1, 0) == 1


def test_threshold_consistency_by_bisection():
    rng = np.random.default_rng(12)
    for _ in range(5):
        t = rng.uniform(0.1, np.pi / 4)
        a, b = np.cos(t), np.sin(t)
        Ms, bound = schmidt_basis_projectors(a, b), schmidt_basis_bound(a, b)
        psi = _schmidt_state(a, b)
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = (lo + hi) / 2
            if variance_sum(isotropic_state(psi, mid), Ms) < bound:
                hi = mid
            else:
                lo = mid
        p_star = schmidt_basis_werner_threshold(a, b)
        assert hi == pytest.approx(p_star, abs=1e-9)
        assert variance_sum(isotropic_state(psi, p_star), Ms) == pytest.approx(bound, abs=1e-9)


def test_bound_matches_independent_minimizer():
    for a2 in (0.5, 0.8, 0.95):
        a, b = np.sqrt(a2), np.sqrt(1 - a2)
        assert _scipy_product_floor(schmidt_basis_projectors(a, b)) == pytest.approx(2 * a2 * (1 - a2), abs=1e-7)


def test_check_variance_criterion_examples():
    s = 1 / np.sqrt(2)
    crit = VarianceCriterion(schmidt_basis_projectors(s, s), 0.5)
    assert check_variance_criterion(bell_state().density(), crit).verdict == ENTANGLED
    r = check_variance_criterion(DensityMatrix.maximally_mixed((2, 2)), crit)
    assert r.value == pytest.approx(0.75) and r.verdict == INCONCLUSIVE
    phi = isotropic_state(bell_state(), 0.7)
    assert check_variance_criterion(phi, crit).verdict == ENTANGLED
    assert check_variance_criterion(phi, crit).bound_provenance == ANALYTIC


def test_boundary_state_is_inconclusive():
    s = 1 / np.sqrt(2)
    crit = VarianceCriterion(schmidt_basis_projectors(s, s), 0.5)
    assert check_variance_criterion(isotropic_state(bell_state(), 1 / np.sqrt(3)), crit).verdict == INCONCLUSIVE


def test_schmidt_basis_criterion_local_unitary_invariant():
    rng = np.random.default_rng(13)
    for _ in range(10):
        psi = random_ket((2, 2), rng)
        crit = schmidt_basis_criterion(psi)
        assert variance_sum(psi, crit.observables) < 1e-12
        s = np.linalg.svd(psi.amplitudes.reshape(2, 2), compute_uv=False)
        assert crit.separable_bound == pytest.approx(2 * s[0] ** 2 * s[1] ** 2)


def test_no_false_positives_on_separable_states():
    rng = np.random.default_rng(14)
    for _ in range(500):
        rho = random_separable_state((2, 2), int(rng.integers(1, 6)), rng).state()
        t = rng.uniform(0, np.pi / 4)
        a, b = np.cos(t), np.sin(t)
        assert variance_sum(rho, schmidt_basis_projectors(a, b)) >= 2 * a * a * b * b - 1e-9
        assert not lur_evaluate(rho, PAULI_SET, PAULI_SET, 2, 2).detected


def test_flagged_states_fail_ppt():
    rng = np.random.default_rng(15)
    flagged = 0
    for _ in range(300):
        p = rng.uniform()
        rho = isotropic_state(random_ket((2, 2), rng), p)
        for report in (
            check_variance_criterion(rho, schmidt_basis_criterion(random_ket((2, 2), rng))),
            check_variance_criterion(rho, schmidt_basis_criterion(Ket.normalized(np.linalg.eigh(np.asarray(rho))[1][:, -1], (2, 2)))),
            lur_evaluate(rho, PAULI_SET, PAULI_SET, 2, 2),
        ):
            if report.detected:
                flagged += 1
                assert ppt_min_eigenvalue(rho) < 1e-9
    assert flagged > 50


def test_optimizer_criterion_provenance(caplog):
    s = 1 / np.sqrt(2)
    Ms = schmidt_basis_projectors(s, s)
    crit = optimizer_criterion(Ms, OptimizerConfig(restarts=20, seed=1))
    assert crit.bound_provenance == OPTIMIZER
    assert crit.separable_bound == pytest.approx(0.5, abs=1e-6)
    with caplog.at_level("WARNING"):
        weak = optimizer_criterion(Ms, OptimizerConfig(restarts=3, seed=1))
    assert weak.bound_provenance == OPTIMIZER_UNCONFIRMED
    assert "unconfirmed" in caplog.text
