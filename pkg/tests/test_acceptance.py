"""End-to-end acceptance criteria; each test prints one PASS/FAIL line."""

import numpy as np

from varsep.cli import Context, evaluate
from varsep.covariance import (
    covariance_matrix,
    gamma_finite_difference,
    gamma_quadratic_form,
    local_pauli_observables,
    witness_to_observables,
)
from varsep.criteria import ENTANGLED, GHZ_CLASS, schmidt_basis_projectors, variance_sum
from varsep.kernel import kernel_observables, second_schmidt, tiles_upb, upb_observables, upb_state
from varsep.multipartite import (
    family_state,
    ghz4_report,
    ghz_e_report,
    ghz_projectors,
    ghz_variance_from_pauli,
    ghz_variance_sum,
    ghz_witness_report,
    noise_threshold,
    pauli_means,
)
from varsep.optimize import MIN_AGREEING, OptimizerConfig, min_variance_sum_biseparable, min_variance_sum_product
from varsep.sampling import random_density_matrix, random_hermitian, random_ket, random_mixture, random_separable_state
from varsep.states import Ket, ObservableSet, expectation, ghz_state, isotropic_state, ppt_min_eigenvalue, tensor, variance

TWO_QUBIT_CRITERIA = ("prop2", "lur-pauli", "cm-pauli", "ppt", "prop3")


def _fires(name, ctx=None, level=ENTANGLED):
    ctx = ctx or Context()
    if level == GHZ_CLASS:
        return lambda rho: evaluate(name, rho, ctx).verdict == GHZ_CLASS
    return lambda rho: evaluate(name, rho, ctx).detected


def test_1_schmidt_basis_floor(record):
    rng = np.random.default_rng(101)
    worst, least_agreeing = 0.0, None
    for _ in range(20):
        a = np.sqrt(rng.uniform(0.5, 1))
        b = np.sqrt(1 - a * a)
        opt = min_variance_sum_product(schmidt_basis_projectors(a, b), config=OptimizerConfig(restarts=50))
        worst = max(worst, abs(opt.value - 2 * a * a * b * b))
        least_agreeing = opt.restarts_agreeing if least_agreeing is None else min(least_agreeing, opt.restarts_agreeing)
    record(1, worst < 1e-6, f"20 random (a,b): max |floor - 2a^2b^2| = {worst:.2e} (tol 1e-6), min restarts agreeing {least_agreeing}/50")


def test_2_werner_thresholds(record):
    expected = {"prop2": 1 / np.sqrt(3), "cm-pauli": 1 / np.sqrt(3), "lur-pauli": 1 / 3, "ppt": 1 / 3}
    found = {name: noise_threshold(_fires(name), "werner2") for name in expected}
    err = max(abs(found[k] - v) for k, v in expected.items())
    parts = ", ".join(f"{k} {found[k]:.7f}" for k in expected)
    record(2, err < 1e-6, f"werner2 thresholds {parts}; max error {err:.1e} (tol 1e-6)")


def test_3_ghz_family(record):
    E0 = ghz_variance_sum(ghz_state(3))
    t = {
        "E tripartite": (noise_threshold(_fires("ghz-e"), "ghz3"), np.sqrt(3 / 7)),
        "E ghz-class": (noise_threshold(_fires("ghz-e", level=GHZ_CLASS), "ghz3"), np.sqrt(4 / 7)),
        "witness tripartite": (noise_threshold(_fires("ghz-witness"), "ghz3"), 3 / 7),
        "witness ghz-class": (noise_threshold(_fires("ghz-witness", level=GHZ_CLASS), "ghz3"), 5 / 7),
    }
    err = max(abs(a - b) for a, b in t.values())
    parts = ", ".join(f"{k} {a:.7f}" for k, (a, _) in t.items())
    record(3, abs(E0) < 1e-12 and err < 1e-6, f"E(GHZ) = {E0:.1e}; {parts}; max error {err:.1e}")


def test_4_e_routes_agree(record):
    rng = np.random.default_rng(104)
    worst = 0.0
    for _ in range(100):
        rho = random_density_matrix((2, 2, 2), rng, rank=int(rng.integers(1, 9)))
        worst = max(worst, abs(ghz_variance_from_pauli(pauli_means(rho)) - ghz_variance_sum(rho)))
    record(4, worst < 1e-12, f"100 random three-qubit states: max |E_pauli - E_projector| = {worst:.1e} (tol 1e-12)")


def test_5_upb_headline(record):
    upb = tiles_upb()
    rho = upb_state(upb)
    Ms = upb_observables(upb, seed=42)
    ppt = ppt_min_eigenvalue(rho)
    value = variance_sum(rho, Ms)
    opt = min_variance_sum_product(Ms, config=OptimizerConfig(restarts=500, seed=42))
    ok = ppt >= -1e-9 and value < 1e-10 and opt.value > 1e-3 and opt.restarts_agreeing >= MIN_AGREEING
    record(
        5,
        ok,
        f"Tiles rho_UPB: min PT eigenvalue {ppt:.1e}, variance sum {value:.1e}, "
        f"product floor {opt.value:.6f} with {opt.restarts_agreeing}/{opt.restarts} restarts agreeing",
    )


def test_6_pure_state_universality(record):
    rng = np.random.default_rng(106)
    config = OptimizerConfig(restarts=200)
    summary, ok = [], True
    for dims in [(2, 2), (2, 3), (3, 3)]:
        detected, worst_zero, least_floor, least_agree = 0, 0.0, np.inf, config.restarts
        for _ in range(50):
            psi = random_ket(dims, rng)
            assert second_schmidt(psi.amplitudes, dims)[0] > 1e-7
            Ms = kernel_observables(psi, seed=rng)
            at_state = variance_sum(psi, Ms)
            opt = min_variance_sum_product(Ms, config=config)
            worst_zero = max(worst_zero, at_state)
            least_floor = min(least_floor, opt.value)
            least_agree = min(least_agree, opt.restarts_agreeing)
            detected += at_state < 1e-10 and at_state < opt.value - 1e-9
        ok &= detected == 50
        summary.append(f"{dims[0]}x{dims[1]} {detected}/50 detected, max value {worst_zero:.0e}, min floor {least_floor:.4f}, min agreeing {least_agree}")
    record(6, ok, "; ".join(summary))


def test_7_covariance_layer(record):
    rng = np.random.default_rng(107)
    fd_err = tr_err = q_err = w_err = 0.0
    for _ in range(50):
        dims = [(2, 2), (3,), (2, 3)][rng.integers(3)]
        D = int(np.prod(dims))
        rho = random_density_matrix(dims, rng)
        Ms = ObservableSet([random_hermitian(D, rng) / 2 for _ in range(int(rng.integers(2, 6)))], dims)
        g = covariance_matrix(rho, Ms)
        fd_err = max(fd_err, np.abs(gamma_finite_difference(rho, Ms, 1e-3) - np.asarray(g)).max())
        tr_err = max(tr_err, abs(np.trace(np.asarray(g)) - variance_sum(rho, Ms)))
        x = rng.normal(size=len(Ms))
        q_err = max(q_err, abs(gamma_quadratic_form(g, x) - variance(rho, np.tensordot(x, Ms.stack, axes=1))))
        A = rng.normal(size=(len(Ms), len(Ms)))
        W = A @ A.T
        w_err = max(w_err, abs(np.trace(W @ np.asarray(g)) - variance_sum(rho, witness_to_observables(W, Ms))))
    ok = fd_err < 1e-5 and tr_err < 1e-12 and q_err < 1e-10 and w_err < 1e-9
    record(7, ok, f"50 instances: finite difference {fd_err:.1e}, trace {tr_err:.1e}, quadratic form {q_err:.1e}, witness {w_err:.1e}")


def test_8_no_false_positives(record):
    rng = np.random.default_rng(108)
    ctx = Context(restarts=50)
    false_pos = 0
    for _ in range(500):
        rho = random_separable_state((2, 2), int(rng.integers(1, 6)), rng).state()
        false_pos += sum(evaluate(c, rho, ctx).detected for c in TWO_QUBIT_CRITERIA)

    # flagged states across noisy families and random mixed states must be NPT
    flagged = npt_violations = 0
    samples = [family_state("werner2", p) for p in np.linspace(0, 1, 41)]
    samples += [isotropic_state(random_ket((2, 2), rng), rng.uniform()) for _ in range(100)]
    samples += [random_density_matrix((2, 2), rng, rank=int(rng.integers(1, 5))) for _ in range(100)]
    for rho in samples:
        for c in ("prop2", "lur-pauli", "cm-pauli", "prop3"):
            if evaluate(c, rho, ctx).detected:
                flagged += 1
                npt_violations += ppt_min_eigenvalue(rho) >= 1e-9

    # scalar mixing identity and matrix-level monotonicity
    Ms = local_pauli_observables()
    id_err, psd_min = 0.0, np.inf
    for _ in range(500):
        mix = random_mixture([random_density_matrix((2, 2), rng, rank=1) for _ in range(int(rng.integers(2, 5)))], rng)
        rho = mix.state()
        M = random_hermitian(4, rng)
        mean = expectation(rho, M)
        rhs = sum(w * (variance(c, M) + (expectation(c, M) - mean) ** 2) for w, c in zip(mix.weights, mix.components))
        id_err = max(id_err, abs(variance(rho, M) - rhs))
        diff = np.asarray(covariance_matrix(rho, Ms)) - sum(w * np.asarray(covariance_matrix(c, Ms)) for w, c in zip(mix.weights, mix.components))
        psd_min = min(psd_min, np.linalg.eigvalsh(diff)[0])
    ok = false_pos == 0 and npt_violations == 0 and id_err < 1e-10 and psd_min >= -1e-9
    record(
        8,
        ok,
        f"500 separable states: {false_pos} detections; {flagged} flagged states, {npt_violations} with PPT; "
        f"mixing identity {id_err:.1e}, min eigenvalue of gamma gap {psd_min:.1e}",
    )


def test_9_four_qubit(record):
    opt = min_variance_sum_biseparable(ghz_projectors(4), config=OptimizerConfig(restarts=50))
    ghz4 = ghz4_report(ghz_state(4))
    product = ghz4_report(tensor(ghz_state(3), Ket.basis(0, (2,))))
    ok = abs(opt.value - 0.5) < 1e-4 and abs(ghz4.value) < 1e-12 and ghz4.detected and not product.detected
    record(
        9,
        ok,
        f"biseparable floor {opt.value:.8f} (cut {opt.groups[0]}|{opt.groups[1]}, {opt.restarts_agreeing}/50 agreeing); "
        f"GHZ4 value {ghz4.value:.1e} {ghz4.verdict}; GHZ3 x |0> value {product.value:.4f} {product.verdict}",
    )
