"""Numerical extrema over pure product (and biseparable) states.

All routines run their restarts as one batch: local vectors are stored as
``(restarts, d_k)`` arrays and every update is vectorized over the batch.
Restart ``r`` is initialised from ``default_rng([seed, r])`` so results do
not depend on batching.
"""

from __future__ import annotations

import itertools
import string
from dataclasses import dataclass

import numpy as np

from .states import DimensionSpec, Ket, ObservableSet, as_dims, permute_subsystems

AGREEMENT_TOL = 1e-6
MIN_AGREEING = 10


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 50
    max_iterations: int = 500
    convergence_tol: float = 1e-10
    seed: int = 42

    def __post_init__(self):
        if self.restarts < 1 or self.max_iterations < 1 or self.convergence_tol <= 0:
            raise ValueError(f"invalid optimizer config {self}")


@dataclass(frozen=True)
class Optimum:
    """Best value over restarts together with the local factors attaining it.

    ``groups`` lists, per factor in ``arg``, the original subsystems it covers
    (a factor covering several subsystems is unrestricted on them).
    """

    value: float
    arg: tuple[Ket, ...]
    converged: bool
    restarts_agreeing: int
    restarts: int
    groups: tuple[tuple[int, ...], ...]
    dims: DimensionSpec

    @property
    def reliable(self) -> bool:
        return self.restarts_agreeing >= MIN_AGREEING

    def state(self) -> Ket:
        """The optimal pure state in the original subsystem order."""
        amp = np.ones(1, dtype=complex)
        for k in self.arg:
            amp = np.kron(amp, k.amplitudes)
        order = [s for g in self.groups for s in g]
        amp, _ = permute_subsystems(amp, np.argsort(order), tuple(self.dims[s] for s in order))
        return Ket.normalized(amp, self.dims)


def _init_factors(dims, config: OptimizerConfig) -> list[np.ndarray]:
    R = config.restarts
    out = [np.empty((R, d), dtype=complex) for d in dims]
    for r in range(R):
        rng = np.random.default_rng([config.seed, r])
        for k, d in enumerate(dims):
            v = rng.normal(size=d) + 1j * rng.normal(size=d)
            out[k][r] = v / np.linalg.norm(v)
    return out


def _kron_batch(factors: list[np.ndarray]) -> np.ndarray:
    psi = factors[0]
    R = psi.shape[0]
    for f in factors[1:]:
        psi = (psi[:, :, None] * f[:, None, :]).reshape(R, -1)
    return psi


def _contract_except(T: np.ndarray, factors: list[np.ndarray], k: int) -> np.ndarray:
    """Contract batched tensor ``T[r, i1, ..., iK]`` with conj(factor_j), j != k."""
    K = len(factors)
    letters = string.ascii_lowercase[:K]
    operands = [T]
    subs = ["z" + letters]
    for j in range(K):
        if j != k:
            operands.append(factors[j].conj())
            subs.append("z" + letters[j])
    return np.einsum(",".join(subs) + "->z" + letters[k], *operands)


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _finish(values, factors, converged, groups, dims, direct) -> Optimum:
    """Pick the best restart and re-evaluate it directly."""
    best = int(np.argmin(values))
    arg = tuple(Ket.normalized(f[best], (f.shape[1],)) for f in factors)
    value = float(direct(arg))
    agreeing = int(np.sum(values <= values[best] + AGREEMENT_TOL))
    return Optimum(value, arg, bool(converged[best]), agreeing, len(values), groups, as_dims(dims))


# ---------------------------------------------------------------------------
# variance sums


def _variance_sum_batch(stack, psi):
    Mpsi = np.einsum("nij,rj->rni", stack, psi)
    means = np.einsum("ri,rni->rn", psi.conj(), Mpsi).real
    second = np.sum(np.abs(Mpsi) ** 2, axis=-1)
    return np.sum(second - means**2, axis=-1), Mpsi, means


def _minimize_variance_sum(stack: np.ndarray, dims: tuple[int, ...], config: OptimizerConfig):
    """Projected gradient descent with Armijo backtracking on the product manifold."""
    R = config.restarts
    factors = _init_factors(dims, config)
    step = np.full(R, 0.1)
    active = np.ones(R, dtype=bool)
    converged = np.zeros(R, dtype=bool)
    psi = _kron_batch(factors)
    f, Mpsi, means = _variance_sum_batch(stack, psi)

    for _ in range(config.max_iterations):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        loc = [fa[idx] for fa in factors]
        ps = psi[idx]
        g = np.einsum("nij,rnj->ri", stack, Mpsi[idx] - 2 * means[idx][..., None] * ps[:, None, :])
        G = g.reshape((idx.size,) + dims)
        grads = []
        for k in range(len(dims)):
            gk = _contract_except(G, loc, k)
            gk = gk - loc[k] * np.einsum("ri,ri->r", loc[k].conj(), gk)[:, None]
            grads.append(gk)
        gnorm2 = sum(np.sum(np.abs(gk) ** 2, axis=1) for gk in grads)

        small = gnorm2 < config.convergence_tol**2
        f_old = f[idx]
        t = np.minimum(2 * step[idx], 1.0)
        accepted = small.copy()
        new_loc = [x.copy() for x in loc]
        new_f = f_old.copy()
        pending = ~accepted
        for _ in range(50):
            if not pending.any():
                break
            p = np.flatnonzero(pending)
            trial = [_normalize_rows(loc[k][p] - t[p, None] * grads[k][p]) for k in range(len(dims))]
            ft, _, _ = _variance_sum_batch(stack, _kron_batch(trial))
            ok = ft <= f_old[p] - 1e-4 * t[p] * gnorm2[p]
            okp = p[ok]
            if okp.size:
                # an accepted long step can overshoot across the valley; keep the half step if lower
                half = [_normalize_rows(loc[k][okp] - 0.5 * t[okp, None] * grads[k][okp]) for k in range(len(dims))]
                fh, _, _ = _variance_sum_batch(stack, _kron_batch(half))
                better = fh < ft[ok]
                sel = np.flatnonzero(ok)[better]
                for k in range(len(dims)):
                    trial[k][sel] = half[k][better]
                ft[sel] = fh[better]
                t[p[sel]] *= 0.5
            for k in range(len(dims)):
                new_loc[k][okp] = trial[k][ok]
            new_f[okp] = ft[ok]
            accepted[okp] = True
            pending[okp] = False
            t[p[~ok]] *= 0.5
        stalled = ~accepted
        for k in range(len(dims)):
            factors[k][idx] = new_loc[k]
        step[idx] = np.where(accepted, t, step[idx])
        done = small | stalled | (f_old - new_f <= config.convergence_tol)
        converged[idx[done]] = True
        active[idx[done]] = False
        psi = _kron_batch(factors)
        f, Mpsi, means = _variance_sum_batch(stack, psi)

    if not converged.any():
        raise OptimizationError("variance-sum minimization did not converge in any restart")
    return f, factors, converged


def _direct_variance_sum(stack):
    def evaluate(arg):
        amp = np.ones(1, dtype=complex)
        for k in arg:
            amp = np.kron(amp, k.amplitudes)
        return _variance_sum_batch(stack, amp[None, :])[0][0]

    return evaluate


def min_variance_sum_product(Ms: ObservableSet, dims=None, config: OptimizerConfig | None = None) -> Optimum:
    """Minimum of the variance sum over pure fully-product states."""
    config = config or OptimizerConfig()
    dims = as_dims(dims if dims is not None else Ms.dims)
    if dims.total != Ms.stack.shape[-1]:
        raise ValueError(f"dims {dims.dims} do not match observables of side {Ms.stack.shape[-1]}")
    f, factors, conv = _minimize_variance_sum(Ms.stack, dims.dims, config)
    groups = tuple((k,) for k in range(len(dims)))
    return _finish(f, factors, conv, groups, dims, _direct_variance_sum(Ms.stack))


def min_variance_sum_single_system(As: ObservableSet, dim=None, config: OptimizerConfig | None = None) -> float:
    """Lower bound C with sum_i var(A_i) >= C over all states of one system.

    Minimizing over pure states suffices because the variance sum is concave
    in the state.
    """
    config = config or OptimizerConfig()
    d = int(dim) if dim is not None else As.stack.shape[-1]
    return min_variance_sum_product(As, DimensionSpec((d,)), config).value


def bipartitions(n: int):
    """Each unordered bipartition once, as the part containing subsystem 0."""
    rest = range(1, n)
    for size in range(0, n - 1):
        for extra in itertools.combinations(rest, size):
            yield (0,) + extra


def min_variance_sum_biseparable(Ms: ObservableSet, dims=None, config: OptimizerConfig | None = None) -> Optimum:
    """Minimum of the variance sum over pure states that are product across some cut.

    Each side of a cut is one unrestricted factor; the least value over all
    cuts is returned, with ``groups`` recording the winning cut.
    """
    config = config or OptimizerConfig()
    dims = as_dims(dims if dims is not None else Ms.dims)
    if len(dims) < 2:
        raise ValueError("biseparability needs at least two subsystems")
    best = None
    for left in bipartitions(len(dims)):
        right = tuple(k for k in range(len(dims)) if k not in left)
        stack, _ = permute_subsystems(Ms.stack, left + right, dims)
        dl = int(np.prod([dims[k] for k in left]))
        dr = int(np.prod([dims[k] for k in right]))
        f, factors, conv = _minimize_variance_sum(stack, (dl, dr), config)
        opt = _finish(f, factors, conv, (left, right), dims, _direct_variance_sum(stack))
        if best is None or opt.value < best.value - AGREEMENT_TOL:
            best = opt
        elif abs(opt.value - best.value) <= AGREEMENT_TOL and opt.restarts_agreeing > best.restarts_agreeing:
            best = opt
    return best


# ---------------------------------------------------------------------------
# overlaps


def max_overlap_product_multipartite(psi: Ket, dims=None, config: OptimizerConfig | None = None) -> Optimum:
    """Maximum of ``|<a_1,...,a_K|psi>|`` over product vectors, by alternating updates.

    With all factors but one fixed, the best remaining factor is the
    normalized partial contraction of ``psi``; the overlap never decreases.
    """
    config = config or OptimizerConfig()
    dims = as_dims(dims if dims is not None else psi.dims)
    R = config.restarts
    factors = _init_factors(dims.dims, config)
    T = np.broadcast_to(np.asarray(psi.amplitudes).reshape(dims.dims), (R,) + dims.dims)
    value = np.abs(np.einsum("ri,i->r", _kron_batch(factors).conj(), psi.amplitudes))
    converged = np.zeros(R, dtype=bool)
    for _ in range(config.max_iterations):
        for k in range(len(dims)):
            v = _contract_except(T, factors, k)
            norm = np.linalg.norm(v, axis=1)
            safe = norm > 0
            factors[k][safe] = v[safe] / norm[safe, None]
        new = np.abs(np.einsum("ri,i->r", _kron_batch(factors).conj(), psi.amplitudes))
        if np.any(new < value - 1e-12):
            raise AssertionError("alternating overlap update decreased the objective")
        converged |= new - value <= config.convergence_tol
        value = new
        if converged.all():
            break
    if not converged.any():
        raise OptimizationError("overlap optimization did not converge in any restart")

    def direct(arg):
        amp = np.ones(1, dtype=complex)
        for k in arg:
            amp = np.kron(amp, k.amplitudes)
        return abs(np.vdot(amp, psi.amplitudes))

    opt = _finish(-value, factors, converged, tuple((k,) for k in range(len(dims))), dims, lambda a: -direct(a))
    return Optimum(-opt.value, opt.arg, opt.converged, opt.restarts_agreeing, opt.restarts, opt.groups, dims)


def min_projector_weight_product(vectors: np.ndarray, dims, config: OptimizerConfig | None = None) -> Optimum:
    """Minimum over product states of ``sum_i |<v_i|a_1,...,a_K>|^2``.

    Alternating updates: fixing all factors but one leaves a Hermitian form on
    that factor, minimized by its lowest eigenvector.
    """
    config = config or OptimizerConfig()
    dims = as_dims(dims)
    V = np.asarray(vectors, dtype=complex).reshape(-1, dims.total)
    P = V.T @ V.conj()  # sum_i |v_i><v_i|
    K = len(dims)
    Pt = P.reshape(dims.dims + dims.dims)
    R = config.restarts
    factors = _init_factors(dims.dims, config)
    bra = string.ascii_lowercase[:K]
    ket = string.ascii_uppercase[:K]

    def weight(fs):
        psi = _kron_batch(fs)
        return np.einsum("ri,ij,rj->r", psi.conj(), P, psi).real

    value = weight(factors)
    converged = np.zeros(R, dtype=bool)
    for _ in range(config.max_iterations):
        for k in range(K):
            ops = [Pt]
            subs = [bra + ket]
            for j in range(K):
                if j != k:
                    ops += [factors[j].conj(), factors[j]]
                    subs += ["z" + bra[j], "z" + ket[j]]
            Pk = np.einsum(",".join(subs) + "->z" + bra[k] + ket[k], *ops)
            Pk = (Pk + np.conj(np.swapaxes(Pk, 1, 2))) / 2
            _, vecs = np.linalg.eigh(Pk)
            factors[k] = vecs[:, :, 0].copy()
        new = weight(factors)
        if np.any(new > value + 1e-12):
            raise AssertionError("alternating eigenvector update increased the objective")
        converged |= value - new <= config.convergence_tol
        value = new
        if converged.all():
            break
    if not converged.any():
        raise OptimizationError("product-weight minimization did not converge in any restart")

    def direct(arg):
        amp = np.ones(1, dtype=complex)
        for k in arg:
            amp = np.kron(amp, k.amplitudes)
        return float(np.real(np.vdot(amp, P @ amp)))

    return _finish(value, factors, converged, tuple((k,) for k in range(K)), dims, direct)
