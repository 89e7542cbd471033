"""Covariance matrices of observable sets and the separability tests built on them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .criteria import ANALYTIC, DetectionReport
from .states import (
    PAULIS,
    DimensionError,
    Ket,
    ObservableSet,
    embed,
    expm_hermitian,
    variances,
)

PINV_RCOND = 1e-10
# cross-block entries scale like sqrt of the discarded eigenvalues
KERNEL_TOL = np.sqrt(PINV_RCOND)
PSD_TOL = 1e-9
PAULI_TRACE_BOUND = 2.0


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Real symmetric covariance matrix of ``observables`` in some state.

    ``block`` optionally records an (n_A, n_B) split into local observable
    groups, giving the blocks ``A``, ``B`` and cross block ``C``.
    """

    entries: np.ndarray
    observables: ObservableSet | None = None
    block: tuple[int, int] | None = None

    def __post_init__(self):
        g = np.array(self.entries, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("covariance matrix must be square")
        if np.max(np.abs(g - g.T), initial=0.0) > 1e-10:
            raise ValueError("covariance matrix must be symmetric")
        if g.size and np.linalg.eigvalsh(g)[0] < -PSD_TOL:
            raise ValueError("covariance matrix must be positive semidefinite")
        if self.block is not None and sum(self.block) != g.shape[0]:
            raise ValueError(f"block partition {self.block} does not match size {g.shape[0]}")
        g.setflags(write=False)
        object.__setattr__(self, "entries", g)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    @property
    def A(self) -> np.ndarray:
        n = self._n_a()
        return self.entries[:n, :n]

    @property
    def B(self) -> np.ndarray:
        n = self._n_a()
        return self.entries[n:, n:]

    @property
    def C(self) -> np.ndarray:
        n = self._n_a()
        return self.entries[:n, n:]

    def _n_a(self) -> int:
        if self.block is None:
            raise ValueError("covariance matrix has no block partition")
        return self.block[0]


def covariance_matrix(rho, Ms: ObservableSet, block: tuple[int, int] | None = None) -> CovarianceMatrix:
    """gamma_kl = (<M_k M_l> + <M_l M_k>)/2 - <M_k><M_l>."""
    if isinstance(rho, Ket):
        rho = rho.density()
    if getattr(rho, "dims", None) is not None and rho.dims != Ms.dims:
        raise DimensionError(f"state dims {rho.dims.dims} differ from observable dims {Ms.dims.dims}")
    r = np.asarray(rho)
    S = Ms.stack
    means = np.einsum("ij,nji->n", r, S).real
    rM = np.einsum("ij,kjl->kil", r, S)
    second = np.einsum("kij,lji->kl", rM, S)
    g = ((second + second.T) / 2).real - np.outer(means, means)
    g = (g + g.T) / 2
    # the diagonal is exactly the variance
    np.fill_diagonal(g, variances(r, S))
    return CovarianceMatrix(g, Ms, block)


def cumulant_generating_function(rho, Ms: ObservableSet, x) -> float:
    """ln Tr(rho exp(sum_i x_i M_i))."""
    H = np.tensordot(np.asarray(x, dtype=float), Ms.stack, axes=1)
    Z = np.real(np.trace(np.asarray(rho) @ expm_hermitian(H)))
    if not Z > 0:
        raise ArithmeticError(f"non-positive moment generating value {Z}; corrupt state")
    return float(np.log(Z))


def gamma_finite_difference(rho, Ms: ObservableSet, h: float = 1e-3) -> np.ndarray:
    """Hessian at zero of the cumulant generating function, by central differences."""
    if not 1e-5 <= h <= 1e-2:
        raise ValueError(f"step {h} outside [1e-5, 1e-2]")
    n = len(Ms)
    e = np.eye(n) * h

    def W(x):
        return cumulant_generating_function(rho, Ms, x)

    w0 = W(np.zeros(n))
    H = np.empty((n, n))
    for k in range(n):
        H[k, k] = (W(e[k]) - 2 * w0 + W(-e[k])) / h**2
        for l in range(k):
            H[k, l] = H[l, k] = (W(e[k] + e[l]) - W(e[k] - e[l]) - W(-e[k] + e[l]) + W(-e[k] - e[l])) / (4 * h * h)
    return H


def gamma_quadratic_form(gamma: CovarianceMatrix, x) -> float:
    x = np.asarray(x, dtype=float)
    g = np.asarray(gamma)
    if x.shape != (g.shape[0],):
        raise ValueError(f"vector of length {x.shape} does not match covariance size {g.shape[0]}")
    return float(x @ g @ x)


def _pinv(M: np.ndarray) -> np.ndarray:
    return np.linalg.pinv(M, rcond=PINV_RCOND, hermitian=True)


def schur_complements(gamma: CovarianceMatrix) -> tuple[np.ndarray, np.ndarray]:
    """``A - C B^+ C^T`` and ``B - C^T A^+ C`` of a blocked covariance matrix.

    The kernel conditions ker B in ker C and ker A in ker C^T are checked
    first; they hold for every genuine covariance matrix.
    """
    A, B, C = gamma.A, gamma.B, gamma.C
    Ap, Bp = _pinv(A), _pinv(B)
    scale = max(1.0, np.abs(gamma.entries).max())
    if np.abs(C - C @ Bp @ B).max(initial=0.0) > KERNEL_TOL * scale:
        raise ValueError("kernel condition ker(B) in ker(C) violated")
    if np.abs(C.T - C.T @ Ap @ A).max(initial=0.0) > KERNEL_TOL * scale:
        raise ValueError("kernel condition ker(A) in ker(C^T) violated")
    SA = A - C @ Bp @ C.T
    SB = B - C.T @ Ap @ C
    return (SA + SA.T) / 2, (SB + SB.T) / 2


def local_pauli_observables() -> ObservableSet:
    """sx(x)1, sy(x)1, sz(x)1, 1(x)sx, 1(x)sy, 1(x)sz."""
    ms = [embed(s, 0, (2, 2)) for s in PAULIS] + [embed(s, 1, (2, 2)) for s in PAULIS]
    return ObservableSet(ms, (2, 2))


def pauli_cm_check(rho) -> DetectionReport:
    """Two-qubit test: a separable state has Tr(A - C B^+ C^T) >= 2 for local Paulis."""
    if isinstance(rho, Ket):
        rho = rho.density()
    if rho.dims.dims != (2, 2):
        raise DimensionError("the Pauli covariance test needs a two-qubit state")
    gamma = covariance_matrix(rho, local_pauli_observables(), block=(3, 3))
    SA, SB = schur_complements(gamma)
    return DetectionReport.below(
        "cm-pauli",
        float(np.trace(SA)),
        PAULI_TRACE_BOUND,
        ANALYTIC,
        trace_schur_B=float(np.trace(SB)),
    )


@dataclass(frozen=True, eq=False)
class CandidateKappa:
    """A proposed local covariance block together with its known trace floor."""

    matrix: np.ndarray
    trace_bound: float = 0.0

    def __post_init__(self):
        k = np.array(self.matrix, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1] or np.abs(k - k.T).max(initial=0.0) > 1e-10:
            raise ValueError("kappa must be a real symmetric matrix")
        if k.size and np.linalg.eigvalsh(k)[0] < -PSD_TOL:
            raise ValueError("kappa must be positive semidefinite")
        if self.trace_bound < 0:
            raise ValueError("trace bound must be non-negative")
        k.setflags(write=False)
        object.__setattr__(self, "matrix", k)


def admits_local_blocks(gamma: CovarianceMatrix, kappa: tuple[CandidateKappa, CandidateKappa]) -> bool:
    """Whether ``gamma >= kappa_A (+) kappa_B``; False rules out this candidate only."""
    kA, kB = (k.matrix if isinstance(k, CandidateKappa) else np.asarray(k, dtype=float) for k in kappa)
    if gamma.block is None or kA.shape[0] != gamma.block[0] or kB.shape[0] != gamma.block[1]:
        raise ValueError("kappa blocks do not match the covariance partition")
    nA = kA.shape[0]
    direct = np.zeros_like(gamma.entries)
    direct[:nA, :nA] = kA
    direct[nA:, nA:] = kB
    return bool(np.linalg.eigvalsh(gamma.entries - direct)[0] >= -PSD_TOL)


def witness_to_observables(W, Ms: ObservableSet) -> ObservableSet:
    """Observables N_l = sqrt(lambda_l) sum_i a^l_i M_i from the spectrum of a PSD ``W``.

    For every state, Tr(W gamma) equals the variance sum of the returned set.
    """
    W = np.asarray(W, dtype=float)
    if W.shape != (len(Ms), len(Ms)) or np.abs(W - W.T).max(initial=0.0) > 1e-10:
        raise ValueError("W must be a symmetric matrix matching the observable count")
    lam, vec = np.linalg.eigh((W + W.T) / 2)
    if lam[0] < -1e-10:
        raise ValueError(f"W is not positive semidefinite (eigenvalue {lam[0]:.3g})")
    keep = lam > 1e-12
    coeffs = vec[:, keep] * np.sqrt(lam[keep])
    Ns = np.tensordot(coeffs.T, Ms.stack, axes=1)
    return ObservableSet(list(Ns), Ms.dims)
