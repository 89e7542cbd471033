"""Random states and observables for property tests and optimizer restarts."""

from __future__ import annotations

import numpy as np

from .states import DensityMatrix, Ket, MixtureDecomposition, as_dims, permute_subsystems


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_vector(d: int, rng=None) -> np.ndarray:
    rng = _rng(rng)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_ket(dims, rng=None) -> Ket:
    """Haar-random pure state."""
    dims = as_dims(dims)
    return Ket(random_vector(dims.total, rng), dims)


def random_product_ket(dims, rng=None) -> Ket:
    rng = _rng(rng)
    dims = as_dims(dims)
    amp = np.ones(1, dtype=complex)
    for d in dims:
        amp = np.kron(amp, random_vector(d, rng))
    return Ket.normalized(amp, dims)


def random_density_matrix(dims, rng=None, rank: int | None = None) -> DensityMatrix:
    """Ginibre-ensemble mixed state of the given rank (full rank by default)."""
    rng = _rng(rng)
    dims = as_dims(dims)
    D = dims.total
    k = rank or D
    G = rng.normal(size=(D, k)) + 1j * rng.normal(size=(D, k))
    rho = G @ G.conj().T
    rho /= np.trace(rho).real
    return DensityMatrix((rho + rho.conj().T) / 2, dims)


def random_hermitian(D: int, rng=None) -> np.ndarray:
    rng = _rng(rng)
    A = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
    return (A + A.conj().T) / 2


def random_mixture(components, rng=None) -> MixtureDecomposition:
    rng = _rng(rng)
    w = rng.dirichlet(np.ones(len(components)))
    return MixtureDecomposition(w, tuple(components))


def random_separable_state(dims, n_terms: int = 4, rng=None) -> MixtureDecomposition:
    """Random convex mixture of random pure product states."""
    rng = _rng(rng)
    comps = [random_product_ket(dims, rng).density() for _ in range(n_terms)]
    return random_mixture(comps, rng)


def random_biseparable_ket(dims, left, rng=None) -> Ket:
    """Pure state that factorizes across ``left | rest`` (both sides unrestricted)."""
    rng = _rng(rng)
    dims = as_dims(dims)
    left = sorted(left)
    right = [k for k in range(len(dims)) if k not in left]
    dl = int(np.prod([dims[k] for k in left]))
    dr = int(np.prod([dims[k] for k in right]))
    amp = np.kron(random_vector(dl, rng), random_vector(dr, rng))
    # amp is ordered as left+right; move subsystems back into place
    ordered_dims = tuple(dims[k] for k in left + right)
    inverse = np.argsort(left + right)
    amp, _ = permute_subsystems(amp, inverse, ordered_dims)
    return Ket.normalized(amp, dims)
