"""Dense states, observables and tensor structure on multi-qudit spaces.

Everything here is small dense linear algebra (side <= 16). Value types are
frozen dataclasses around numpy arrays; they validate on construction and
support ``np.asarray``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Iterator, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
NORM_TOL = 1e-10
PSD_TOL = 1e-9
VARIANCE_CLAMP = 1e-12

# Pauli matrices
I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SX, SY, SZ)


class DimensionError(ValueError):
    """Raised when dimensions of states/observables do not match."""


class InvalidStateError(ValueError):
    """Raised when an array violates the invariants of its value type."""


@dataclass(frozen=True)
class DimensionSpec:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 1:
            raise DimensionError("dimension list must be non-empty")
        if any(d < 2 for d in dims):
            raise DimensionError(f"local dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self) -> int:
        return len(self.dims)

    def __iter__(self) -> Iterator[int]:
        return iter(self.dims)

    def __getitem__(self, i):
        return self.dims[i]


def as_dims(dims) -> DimensionSpec:
    if isinstance(dims, DimensionSpec):
        return dims
    if isinstance(dims, (int, np.integer)):
        return DimensionSpec((int(dims),))
    return DimensionSpec(tuple(dims))


def _check_side(arr: np.ndarray, dims: DimensionSpec, what: str):
    if arr.shape != (dims.total, dims.total):
        raise DimensionError(f"{what} has shape {arr.shape}, dims {dims.dims} need side {dims.total}")


def _hermitian_defect(arr: np.ndarray) -> float:
    return float(np.max(np.abs(arr - arr.conj().T))) if arr.size else 0.0


@dataclass(frozen=True, eq=False)
class Ket:
    amplitudes: np.ndarray
    dims: DimensionSpec

    def __post_init__(self):
        dims = as_dims(self.dims)
        amp = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amp.shape[0] != dims.total:
            raise DimensionError(f"ket length {amp.shape[0]} does not match dims {dims.dims}")
        norm = np.linalg.norm(amp)
        if abs(norm - 1) > NORM_TOL:
            raise InvalidStateError(f"ket is not normalized (norm {norm:.3g})")
        amp.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def normalized(cls, amplitudes, dims) -> "Ket":
        amp = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amp)
        if norm == 0:
            raise InvalidStateError("cannot normalize the zero vector")
        return cls(amp / norm, dims)

    @classmethod
    def basis(cls, index: int | Sequence[int], dims) -> "Ket":
        """Computational basis ket; ``index`` is a flat index or per-subsystem digits."""
        dims = as_dims(dims)
        if not isinstance(index, (int, np.integer)):
            index = int(np.ravel_multi_index(tuple(index), dims.dims))
        amp = np.zeros(dims.total, dtype=complex)
        amp[index] = 1
        return cls(amp, dims)

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.projector(), self.dims)

    def __array__(self, dtype=None, copy=None):
        return self.amplitudes if dtype is None else self.amplitudes.astype(dtype)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray
    dims: DimensionSpec

    def __post_init__(self):
        dims = as_dims(self.dims)
        rho = np.array(self.entries, dtype=complex)
        _check_side(rho, dims, "density matrix")
        herm = _hermitian_defect(rho)
        if herm > HERMITIAN_TOL:
            raise InvalidStateError(f"density matrix not Hermitian (defect {herm:.3g})")
        tr = np.trace(rho)
        if abs(tr - 1) > TRACE_TOL:
            raise InvalidStateError(f"density matrix trace is {tr.real:.12g}, expected 1")
        lam = np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0]
        if lam < -PSD_TOL:
            raise InvalidStateError(f"density matrix has negative eigenvalue {lam:.3g}")
        rho.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "entries", rho)

    @classmethod
    def from_ket(cls, psi: Ket) -> "DensityMatrix":
        return psi.density()

    @classmethod
    def maximally_mixed(cls, dims) -> "DensityMatrix":
        dims = as_dims(dims)
        return cls(np.eye(dims.total, dtype=complex) / dims.total, dims)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True, eq=False)
class Observable:
    entries: np.ndarray
    dims: DimensionSpec

    def __post_init__(self):
        dims = as_dims(self.dims)
        m = np.array(self.entries, dtype=complex)
        _check_side(m, dims, "observable")
        herm = _hermitian_defect(m)
        if herm > HERMITIAN_TOL:
            raise InvalidStateError(f"observable not Hermitian (defect {herm:.3g})")
        m.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "entries", m)

    @classmethod
    def projector(cls, psi: Ket) -> "Observable":
        return cls(psi.projector(), psi.dims)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


class ObservableSet:
    """Ordered, immutable collection of observables over one dimension spec.

    Stored as a stacked ``(n, D, D)`` array so that variance sums and
    covariance matrices vectorize.
    """

    __slots__ = ("_stack", "dims")

    def __init__(self, observables, dims=None):
        items = list(observables)
        if not items:
            raise ValueError("observable set must be non-empty")
        if dims is None:
            if not isinstance(items[0], Observable):
                raise ValueError("dims are required when passing raw arrays")
            dims = items[0].dims
        dims = as_dims(dims)
        obs = []
        for m in items:
            if isinstance(m, Observable):
                if m.dims != dims:
                    raise DimensionError(f"observable dims {m.dims.dims} differ from set dims {dims.dims}")
            else:
                m = Observable(m, dims)
            obs.append(m.entries)
        stack = np.stack(obs)
        stack.setflags(write=False)
        self._stack = stack
        self.dims = dims

    @property
    def stack(self) -> np.ndarray:
        return self._stack

    def __len__(self) -> int:
        return self._stack.shape[0]

    def __getitem__(self, i) -> Observable:
        return Observable(self._stack[i], self.dims)

    def __iter__(self) -> Iterator[Observable]:
        for i in range(len(self)):
            yield self[i]

    def fingerprint(self) -> str:
        import hashlib

        rounded = np.round(self._stack, 12) + 0.0  # drop negative zeros
        h = hashlib.sha1(repr(self.dims.dims).encode())
        h.update(np.ascontiguousarray(rounded).tobytes())
        return h.hexdigest()

    def __repr__(self) -> str:
        return f"ObservableSet(n={len(self)}, dims={self.dims.dims})"


@dataclass(frozen=True, eq=False)
class MixtureDecomposition:
    weights: np.ndarray
    components: tuple[DensityMatrix, ...] = field(default_factory=tuple)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        comps = tuple(self.components)
        if len(w) != len(comps) or not comps:
            raise ValueError("need one weight per component and at least one component")
        if np.any(w < 0):
            raise ValueError("mixture weights must be non-negative")
        if abs(w.sum() - 1) > 1e-10:
            raise ValueError(f"mixture weights sum to {w.sum():.12g}, expected 1")
        if any(c.dims != comps[0].dims for c in comps):
            raise DimensionError("mixture components have different dims")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)

    @property
    def dims(self) -> DimensionSpec:
        return self.components[0].dims

    def state(self) -> DensityMatrix:
        rho = sum(p * c.entries for p, c in zip(self.weights, self.components))
        # renormalize away rounding in the weights
        rho = rho / np.trace(rho).real
        return DensityMatrix((rho + rho.conj().T) / 2, self.dims)


# ---------------------------------------------------------------------------
# tensor structure


def tensor(*factors):
    """Kronecker product of kets or square matrices, left to right.

    Accepts either several positional factors or a single list. Kets (and
    1-d arrays) give a :class:`Ket`-compatible vector; matrices give a matrix.
    Typed inputs produce typed outputs with concatenated dims.
    """
    if len(factors) == 1 and isinstance(factors[0], (list, tuple)):
        factors = tuple(factors[0])
    if not factors:
        raise ValueError("tensor of an empty list")
    arrays = [np.asarray(f, dtype=complex) for f in factors]
    is_vec = [a.ndim == 1 for a in arrays]
    if any(is_vec) and not all(is_vec):
        raise ValueError("cannot mix kets and matrices in a tensor product")
    if not all(is_vec) and any(a.ndim != 2 or a.shape[0] != a.shape[1] for a in arrays):
        raise ValueError("matrix factors must be square")
    out = reduce(np.kron, arrays)

    typed = [f for f in factors if isinstance(f, (Ket, DensityMatrix, Observable))]
    if len(typed) == len(factors):
        dims = DimensionSpec(sum((f.dims.dims for f in factors), ()))
        if all(isinstance(f, Ket) for f in factors):
            return Ket(out, dims)
        if all(isinstance(f, DensityMatrix) for f in factors):
            return DensityMatrix(out, dims)
        return out
    return out


def embed(op: np.ndarray, site: int, dims) -> np.ndarray:
    """``op`` acting on subsystem ``site``, identity elsewhere."""
    dims = as_dims(dims)
    mats = [np.eye(d, dtype=complex) for d in dims.dims]
    mats[site] = np.asarray(op, dtype=complex)
    return reduce(np.kron, mats)


def permute_subsystems(x, perm: Sequence[int], dims):
    """Reorder subsystems of a ket or operator.

    ``perm[k]`` names the old subsystem that ends up in position ``k``.
    Returns ``(array, new_dims)``.
    """
    dims = as_dims(dims)
    perm = list(perm)
    if sorted(perm) != list(range(len(dims))):
        raise DimensionError(f"{perm} is not a permutation of {len(dims)} subsystems")
    arr = np.asarray(x, dtype=complex)
    n = len(dims)
    new_dims = tuple(dims.dims[p] for p in perm)
    if arr.ndim == 1:
        out = arr.reshape(dims.dims).transpose(perm).reshape(-1)
    else:
        lead = arr.shape[:-2]
        t = arr.reshape(lead + dims.dims + dims.dims)
        k = len(lead)
        axes = list(range(k)) + [k + p for p in perm] + [k + n + p for p in perm]
        out = t.transpose(axes).reshape(lead + (dims.total, dims.total))
    return out, DimensionSpec(new_dims)


def _bipartition(cut, dims: DimensionSpec) -> tuple[list[int], list[int]]:
    if isinstance(cut, (int, np.integer)):
        left = list(range(int(cut)))
    else:
        left = sorted(int(c) for c in cut)
    right = [k for k in range(len(dims)) if k not in left]
    if not left or not right or any(k < 0 or k >= len(dims) for k in left):
        raise DimensionError(f"invalid bipartition {cut!r} for {len(dims)} subsystems")
    return left, right


# ---------------------------------------------------------------------------
# moments


def _mat(x) -> np.ndarray:
    return np.asarray(x, dtype=complex)


def _dims_of(x):
    return getattr(x, "dims", None)


def _check_match(rho, M):
    dr, dm = _dims_of(rho), _dims_of(M)
    if dr is not None and dm is not None and dr != dm:
        raise DimensionError(f"state dims {dr.dims} differ from observable dims {dm.dims}")
    if _mat(rho).shape[-1] != _mat(M).shape[-1]:
        raise DimensionError(f"shape mismatch {_mat(rho).shape} vs {_mat(M).shape}")


def expectation(rho, M) -> float:
    """``Tr(rho M)`` for a Hermitian ``M``."""
    _check_match(rho, M)
    val = np.einsum("ij,ji->", _mat(rho), _mat(M))
    if abs(val.imag) > 1e-10:
        raise ValueError(f"expectation has imaginary part {val.imag:.3g}; observable not Hermitian?")
    return float(val.real)


def variance(rho, M) -> float:
    """``<M^2> - <M>^2``, clamped at zero for tiny negative rounding."""
    _check_match(rho, M)
    r, m = _mat(rho), _mat(M)
    mean = expectation(r, m)
    second = expectation(r, m @ m)
    v = second - mean**2
    if v < 0:
        if v < -VARIANCE_CLAMP:
            raise ArithmeticError(f"negative variance {v:.3g}; state or observable invalid")
        v = 0.0
    return v


def variances(rho, Ms) -> np.ndarray:
    """Vector of variances of every observable in ``Ms`` (stacked evaluation)."""
    stack = Ms.stack if isinstance(Ms, ObservableSet) else np.asarray(Ms, dtype=complex)
    _check_match(rho, stack[0])
    if isinstance(Ms, ObservableSet) and _dims_of(rho) is not None and rho.dims != Ms.dims:
        raise DimensionError(f"state dims {rho.dims.dims} differ from observable dims {Ms.dims.dims}")
    r = _mat(rho)
    means = np.einsum("ij,nji->n", r, stack).real
    rm = np.einsum("ij,njk->nik", r, stack)
    second = np.einsum("nij,nji->n", rm, stack).real
    v = second - means**2
    if np.any(v < -VARIANCE_CLAMP):
        raise ArithmeticError(f"negative variance {v.min():.3g}; state or observable invalid")
    return np.maximum(v, 0.0)


# ---------------------------------------------------------------------------
# Schmidt decomposition


def schmidt_decompose(psi: Ket, cut=1):
    """Schmidt coefficients and bases of ``psi`` across a bipartition.

    ``cut`` is either the number of leading subsystems on the left, or an
    explicit collection of subsystem indices forming the left part (which is
    moved to the front by a subsystem permutation first).

    Returns ``(coefficients, left, right)`` where ``left[:, k]`` and
    ``right[:, k]`` are the k-th Schmidt vectors, coefficients descending.
    """
    dims = psi.dims
    left, right = _bipartition(cut, dims)
    amp = psi.amplitudes
    if left != list(range(len(left))):
        amp, _ = permute_subsystems(amp, left + right, dims)
    dl = int(np.prod([dims[k] for k in left]))
    dr = int(np.prod([dims[k] for k in right]))
    u, s, vh = np.linalg.svd(amp.reshape(dl, dr))
    return s, u[:, : len(s)], vh[: len(s)].T


def schmidt_coefficients(amplitudes, dl: int, dr: int) -> np.ndarray:
    """Singular values of one or many reshaped amplitude vectors (batched)."""
    a = np.asarray(amplitudes, dtype=complex)
    return np.linalg.svd(a.reshape(a.shape[:-1] + (dl, dr)), compute_uv=False)


def max_product_overlap_bipartite(psi: Ket, cut=1) -> float:
    """Largest ``|<a,b|psi>|`` over product vectors, i.e. the top Schmidt coefficient."""
    return float(schmidt_decompose(psi, cut)[0][0])


# ---------------------------------------------------------------------------
# partial transpose


def partial_transpose(rho, subsystem: int = 1, dims=None) -> np.ndarray:
    dims = as_dims(dims if dims is not None else rho.dims)
    n = len(dims)
    if not 0 <= subsystem < n:
        raise DimensionError(f"subsystem {subsystem} out of range for {n} subsystems")
    t = _mat(rho).reshape(dims.dims + dims.dims)
    axes = list(range(2 * n))
    axes[subsystem], axes[n + subsystem] = axes[n + subsystem], axes[subsystem]
    return t.transpose(axes).reshape(dims.total, dims.total)


def ppt_min_eigenvalue(rho, subsystem: int = 1, dims=None) -> float:
    pt = partial_transpose(rho, subsystem, dims)
    return float(np.linalg.eigvalsh((pt + pt.conj().T) / 2)[0])


# ---------------------------------------------------------------------------
# functions of Hermitian matrices


def matrix_function(M, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply ``f`` to the spectrum of a Hermitian matrix."""
    m = _mat(M)
    if _hermitian_defect(m) > HERMITIAN_TOL:
        raise ValueError("matrix_function needs a Hermitian matrix")
    lam, vec = np.linalg.eigh((m + m.conj().T) / 2)
    with np.errstate(all="ignore"):
        flam = np.asarray(f(lam))
    if not np.all(np.isfinite(flam)):
        raise ValueError(f"function undefined on spectrum {lam}")
    return (vec * flam) @ vec.conj().T


def expm_hermitian(M) -> np.ndarray:
    return matrix_function(M, np.exp)


def logm_hermitian(M) -> np.ndarray:
    def _log(lam):
        if np.any(lam <= 0):
            raise ValueError(f"log undefined on non-positive eigenvalue {lam.min():.3g}")
        return np.log(lam)

    return matrix_function(M, _log)


# ---------------------------------------------------------------------------
# standard states


def bell_state(kind: str = "phi+") -> Ket:
    s = 1 / np.sqrt(2)
    amps = {
        "phi+": [s, 0, 0, s],
        "phi-": [s, 0, 0, -s],
        "psi+": [0, s, s, 0],
        "psi-": [0, s, -s, 0],
    }[kind]
    return Ket(amps, (2, 2))


def singlet() -> Ket:
    return bell_state("psi-")


def ghz_state(n: int = 3) -> Ket:
    amp = np.zeros(2**n, dtype=complex)
    amp[0] = amp[-1] = 1 / np.sqrt(2)
    return Ket(amp, (2,) * n)


def isotropic_state(psi: Ket, p: float) -> DensityMatrix:
    """``p |psi><psi| + (1 - p) * identity / D``."""
    if not 0 <= p <= 1:
        raise ValueError(f"mixing parameter {p} outside [0, 1]")
    D = psi.dims.total
    rho = p * psi.projector() + (1 - p) * np.eye(D) / D
    return DensityMatrix(rho, psi.dims)


def werner_state(p: float) -> DensityMatrix:
    """Two-qubit Werner state built on the singlet."""
    return isotropic_state(singlet(), p)
