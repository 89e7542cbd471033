"""Projector sets built from entangled bases of subspaces.

Given a subspace that contains at least one entangled vector, any basis of
it can be perturbed into a basis made only of entangled vectors. Projectors
onto such bases have no product common eigenstate, which turns them into
variance criteria for pure entangled states and for the bound entangled
states living on the complement of an unextendible product basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space
from scipy.stats import unitary_group

from .optimize import OptimizerConfig, Optimum, min_projector_weight_product
from .states import (
    DensityMatrix,
    DimensionError,
    Ket,
    ObservableSet,
    as_dims,
    schmidt_coefficients,
)

ENTANGLED_BASIS_TOL = 1e-6
SEARCH_TOL = 1e-4
INDEPENDENCE_TOL = 1e-8
EPSILON_CAP = 0.5


class ConstructionError(RuntimeError):
    pass


def _split(dims, cut: int = 1) -> tuple[int, int]:
    dims = as_dims(dims)
    if len(dims) < 2:
        raise DimensionError("entanglement needs at least two subsystems")
    dl = int(np.prod(dims.dims[:cut]))
    return dl, dims.total // dl


def second_schmidt(vectors: np.ndarray, dims, cut: int = 1) -> np.ndarray:
    """Second Schmidt coefficient of each row (zero for product vectors)."""
    dl, dr = _split(dims, cut)
    v = np.atleast_2d(vectors)
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    return schmidt_coefficients(v, dl, dr)[..., 1]


@dataclass(frozen=True, eq=False)
class Subspace:
    """Span of ``basis`` rows; ``orthonormal`` records whether they are orthonormal."""

    basis: np.ndarray
    dims: object
    orthonormal: bool = True

    def __post_init__(self):
        dims = as_dims(self.dims)
        B = np.array(self.basis, dtype=complex)
        if B.ndim == 1:
            B = B[None, :]
        if B.shape[1] != dims.total:
            raise DimensionError(f"basis vectors of length {B.shape[1]} do not fit dims {dims.dims}")
        sv = np.linalg.svd(B, compute_uv=False)
        if sv[-1] <= INDEPENDENCE_TOL:
            raise ValueError("subspace basis vectors are linearly dependent")
        if self.orthonormal and np.max(np.abs(B.conj() @ B.T - np.eye(len(B)))) > 1e-10:
            raise ValueError("basis flagged orthonormal but Gram matrix is not the identity")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_kets(cls, kets, orthonormal: bool | None = None) -> "Subspace":
        kets = list(kets)
        B = np.array([k.amplitudes for k in kets])
        if orthonormal is None:
            orthonormal = bool(np.max(np.abs(B.conj() @ B.T - np.eye(len(B)))) <= 1e-10)
        return cls(B, kets[0].dims, orthonormal)

    def __len__(self) -> int:
        return self.basis.shape[0]

    def orthonormal_basis(self) -> np.ndarray:
        if self.orthonormal:
            return self.basis
        u, _, _ = np.linalg.svd(self.basis.T, full_matrices=False)
        return u.T

    def projector(self) -> np.ndarray:
        Q = self.orthonormal_basis()
        return Q.T @ Q.conj()

    def kets(self) -> list[Ket]:
        return [Ket.normalized(v, self.dims) for v in self.basis]


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v) > np.abs(v).max() - 1e-12))
    return v * np.exp(-1j * np.angle(v[k]))


def find_entangled_vector(subspace: Subspace, seed=None, attempts: int = 1000) -> Ket:
    """Most entangled of ``attempts`` random combinations of the basis.

    Entanglement is scored by the second Schmidt coefficient across the first
    cut. Raises :class:`ConstructionError` if every candidate looks product.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    k = len(subspace)
    coeffs = rng.normal(size=(attempts, k)) + 1j * rng.normal(size=(attempts, k))
    cands = coeffs @ subspace.basis
    cands /= np.linalg.norm(cands, axis=1, keepdims=True)
    score = second_schmidt(cands, subspace.dims)
    best = int(np.argmax(score))
    if score[best] <= SEARCH_TOL:
        raise ConstructionError(
            f"no entangled vector found in {attempts} samples (best second Schmidt coefficient "
            f"{score[best]:.3g}); the subspace may contain only product vectors"
        )
    return Ket.normalized(_fix_phase(cands[best]), subspace.dims)


def entangled_basis(subspace: Subspace, epsilon: float = 0.1, seed=None, retries: int = 50) -> list[Ket]:
    """A basis of ``subspace`` made only of entangled (generally non-orthogonal) vectors.

    Product-like elements of an orthonormal basis are replaced by
    ``normalize(v + epsilon * psi_e)`` with ``psi_e`` an entangled vector of the
    subspace. On failure a fresh ``psi_e`` is drawn and ``epsilon`` doubled,
    up to 0.5.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    Q = subspace.orthonormal_basis()
    score = second_schmidt(Q, subspace.dims)
    weak = score <= ENTANGLED_BASIS_TOL
    if not weak.any():
        return [Ket.normalized(v, subspace.dims) for v in Q]

    eps = float(epsilon)
    for _ in range(retries):
        psi_e = find_entangled_vector(subspace, rng).amplitudes
        out = Q.copy()
        out[weak] = Q[weak] + eps * psi_e
        out /= np.linalg.norm(out, axis=1, keepdims=True)
        independent = np.linalg.svd(out, compute_uv=False)[-1] > INDEPENDENCE_TOL
        if independent and np.all(second_schmidt(out, subspace.dims) > ENTANGLED_BASIS_TOL):
            return [Ket.normalized(v, subspace.dims) for v in out]
        eps = min(2 * eps, EPSILON_CAP)
    raise ConstructionError(f"could not build an independent entangled basis after {retries} retries")


def _well_spread_basis(Q: np.ndarray, dims, rng, tries: int = 32) -> np.ndarray:
    """Orthonormal basis of span(Q) whose least entangled vector is as entangled as possible.

    Tries ``Q`` and random unitary rotations of it. Nearly-product basis
    vectors are legal but make the separable floor tiny.
    """
    best_score, best = second_schmidt(Q, dims).min(), Q
    if len(Q) < 2:
        return Q
    for _ in range(tries - 1):
        B = unitary_group.rvs(len(Q), random_state=rng) @ Q
        score = second_schmidt(B, dims).min()
        if score > best_score:
            best_score, best = score, B
    return best


def kernel_observables(psi1: Ket, epsilon: float = 0.1, seed=None) -> ObservableSet:
    """Projector onto ``psi1`` plus projectors onto an entangled basis of its complement.

    ``psi1`` has zero variance sum for this set, while no product state does,
    so the separable minimum is strictly positive.
    """
    if second_schmidt(psi1.amplitudes, psi1.dims)[0] <= 1e-7:
        raise ValueError("kernel construction needs an entangled vector; got a product state")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    comp = null_space(psi1.amplitudes.conj()[None, :]).T
    comp = _well_spread_basis(comp, psi1.dims, rng)
    basis = entangled_basis(Subspace(comp, psi1.dims), epsilon, rng)
    vs = [psi1.amplitudes] + [k.amplitudes for k in basis]
    return ObservableSet([np.outer(v, v.conj()) for v in vs], psi1.dims)


# ---------------------------------------------------------------------------
# unextendible product bases


@dataclass(frozen=True, eq=False)
class UPB:
    """Pairwise orthogonal product vectors (rows of ``vectors``) not spanning the space.

    Construction checks orthogonality, product form and count; unextendibility
    is certified numerically with :func:`upb_extendibility_value`.
    """

    vectors: np.ndarray
    dims: object

    def __post_init__(self):
        dims = as_dims(self.dims)
        V = np.array(self.vectors, dtype=complex)
        if V.ndim != 2 or V.shape[1] != dims.total:
            raise DimensionError(f"UPB vectors must be rows of length {dims.total}")
        if len(dims) != 2:
            raise DimensionError("only bipartite UPBs are supported")
        if V.shape[0] >= dims.total:
            raise ValueError("a UPB must have fewer vectors than the space dimension")
        if np.max(np.abs(V.conj() @ V.T - np.eye(len(V)))) > 1e-10:
            raise ValueError("UPB vectors are not orthonormal")
        if np.any(second_schmidt(V, dims) > 1e-10):
            raise ValueError("UPB vectors must be product vectors")
        V.setflags(write=False)
        object.__setattr__(self, "vectors", V)
        object.__setattr__(self, "dims", dims)

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def projector(self) -> np.ndarray:
        return self.vectors.T @ self.vectors.conj()

    def span(self) -> Subspace:
        return Subspace(self.vectors, self.dims, orthonormal=True)


def tiles_upb() -> UPB:
    """The five-vector "Tiles" UPB on two qutrits."""
    e = np.eye(3)
    s = 1 / np.sqrt(2)
    u = np.ones(3) / np.sqrt(3)
    vs = [
        np.kron(e[0], s * (e[0] - e[1])),
        np.kron(e[2], s * (e[1] - e[2])),
        np.kron(s * (e[0] - e[1]), e[2]),
        np.kron(s * (e[1] - e[2]), e[0]),
        np.kron(u, u),
    ]
    return UPB(np.array(vs), (3, 3))


def upb_extendibility_value(upb: UPB, config: OptimizerConfig | None = None) -> Optimum:
    """Least total weight of a product state on the UPB; > 0 means unextendible."""
    return min_projector_weight_product(upb.vectors, upb.dims, config)


def upb_state(upb: UPB) -> DensityMatrix:
    """Normalized projector onto the orthogonal complement of the UPB."""
    D = upb.dims.total
    rho = (np.eye(D) - upb.projector()) / (D - len(upb))
    return DensityMatrix((rho + rho.conj().T) / 2, upb.dims)


def upb_observables(upb: UPB, epsilon: float = 0.1, seed=None) -> ObservableSet:
    """Projectors onto an entangled basis of the UPB span, plus the complement projector."""
    basis = entangled_basis(upb.span(), epsilon, seed)
    ms = [k.projector() for k in basis]
    ms.append(np.eye(upb.dims.total) - upb.projector())
    return ObservableSet(ms, upb.dims)
