"""Variance-sum separability criteria.

A state whose variance sum for a set of observables falls below the least
value reachable by separable states is entangled. Separable bounds come
either from closed forms (``analytic``) or from the product-state optimizer
(``optimizer``; downgraded to ``optimizer-unconfirmed`` when too few restarts
agree on the minimum).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .optimize import OptimizerConfig, min_variance_sum_product
from .states import (
    DensityMatrix,
    DimensionError,
    Ket,
    ObservableSet,
    as_dims,
    schmidt_decompose,
    variances,
)

log = logging.getLogger(__name__)

DETECTION_MARGIN = 1e-9

ENTANGLED = "entangled"
GHZ_CLASS = "ghz_class"
INCONCLUSIVE = "inconclusive"
VERDICTS = (ENTANGLED, GHZ_CLASS, INCONCLUSIVE)

ANALYTIC = "analytic"
OPTIMIZER = "optimizer"
OPTIMIZER_UNCONFIRMED = "optimizer-unconfirmed"
PROVENANCES = (ANALYTIC, OPTIMIZER, OPTIMIZER_UNCONFIRMED)


@dataclass(frozen=True)
class DetectionReport:
    criterion: str
    value: float
    bound: float
    verdict: str
    bound_provenance: str = ANALYTIC
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.bound_provenance not in PROVENANCES:
            raise ValueError(f"unknown bound provenance {self.bound_provenance!r}")
        if self.verdict != INCONCLUSIVE and not self.value < self.bound - DETECTION_MARGIN:
            raise ValueError(f"verdict {self.verdict} requires value {self.value} below bound {self.bound}")

    @classmethod
    def below(cls, criterion, value, bound, provenance=ANALYTIC, **details) -> "DetectionReport":
        """Report ``entangled`` iff ``value`` undercuts ``bound`` by more than the margin."""
        verdict = ENTANGLED if value < bound - DETECTION_MARGIN else INCONCLUSIVE
        return cls(criterion, float(value), float(bound), verdict, provenance, details)

    @property
    def detected(self) -> bool:
        return self.verdict != INCONCLUSIVE

    def lines(self) -> list[str]:
        out = [
            f"criterion: {self.criterion}",
            f"value: {self.value:.12g}",
            f"bound: {self.bound:.12g}",
            f"bound_provenance: {self.bound_provenance}",
            f"verdict: {self.verdict}",
        ]
        out += [f"{k}: {_fmt(v)}" for k, v in self.details.items()]
        return out


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


@dataclass(frozen=True, eq=False)
class VarianceCriterion:
    observables: ObservableSet
    separable_bound: float
    bound_provenance: str = ANALYTIC
    name: str = "variance-sum"

    def __post_init__(self):
        if self.separable_bound < 0:
            raise ValueError("separable bound must be non-negative")
        if self.bound_provenance not in PROVENANCES:
            raise ValueError(f"unknown bound provenance {self.bound_provenance!r}")


def variance_sum(rho, Ms: ObservableSet) -> float:
    if isinstance(rho, Ket):
        rho = rho.density()
    if getattr(rho, "dims", None) is not None and rho.dims != Ms.dims:
        raise DimensionError(f"state dims {rho.dims.dims} differ from observable dims {Ms.dims.dims}")
    return float(np.sum(variances(rho, Ms)))


def check_variance_criterion(rho, criterion: VarianceCriterion) -> DetectionReport:
    value = variance_sum(rho, criterion.observables)
    return DetectionReport.below(criterion.name, value, criterion.separable_bound, criterion.bound_provenance)


def optimizer_criterion(Ms: ObservableSet, config: OptimizerConfig | None = None, name: str = "variance-sum") -> VarianceCriterion:
    """Criterion whose separable bound is the seesaw minimum over pure product states."""
    opt = min_variance_sum_product(Ms, Ms.dims, config)
    provenance = OPTIMIZER if opt.reliable else OPTIMIZER_UNCONFIRMED
    if not opt.reliable:
        log.warning(
            "separable floor for %s: only %d of %d restarts agree; bound is unconfirmed",
            name,
            opt.restarts_agreeing,
            opt.restarts,
        )
    return VarianceCriterion(Ms, max(opt.value, 0.0), provenance, name)


# ---------------------------------------------------------------------------
# local uncertainty relations


def local_sum_observables(As: ObservableSet, Bs: ObservableSet) -> ObservableSet:
    """``A_i (x) 1 + 1 (x) B_i`` for paired local observables."""
    if len(As) != len(Bs):
        raise ValueError(f"need as many B's as A's ({len(As)} vs {len(Bs)})")
    dA, dB = As.stack.shape[-1], Bs.stack.shape[-1]
    eA, eB = np.eye(dA), np.eye(dB)
    ms = [np.kron(a, eB) + np.kron(eA, b) for a, b in zip(As.stack, Bs.stack)]
    return ObservableSet(ms, As.dims.dims + Bs.dims.dims)


def lur_evaluate(rho, As: ObservableSet, Bs: ObservableSet, C_A: float, C_B: float) -> DetectionReport:
    """Local uncertainty relation: separable states obey sum var(A_i + B_i) >= C_A + C_B."""
    if C_A < 0 or C_B < 0:
        raise ValueError("local bounds must be non-negative")
    Ms = local_sum_observables(As, Bs)
    return DetectionReport.below("lur", variance_sum(rho, Ms), C_A + C_B, ANALYTIC, C_A=C_A, C_B=C_B)


# ---------------------------------------------------------------------------
# two-qubit Schmidt-basis construction


def _check_schmidt_pair(a: float, b: float):
    if a < b or b < 0:
        raise ValueError(f"need a >= b >= 0, got a={a}, b={b}")
    if abs(a * a + b * b - 1) > 1e-10:
        raise ValueError(f"a^2 + b^2 = {a * a + b * b:.12g}, expected 1")


def schmidt_basis_vectors(a: float, b: float) -> np.ndarray:
    """Rows: a|00>+b|11>, a|01>+b|10>, b|01>-a|10>, b|00>-a|11>."""
    _check_schmidt_pair(a, b)
    return np.array(
        [
            [a, 0, 0, b],
            [0, a, b, 0],
            [0, b, -a, 0],
            [b, 0, 0, -a],
        ],
        dtype=complex,
    )


def schmidt_basis_projectors(a: float, b: float) -> ObservableSet:
    """Projectors onto the orthonormal basis built around ``a|00> + b|11>``.

    The state ``a|00> + b|11>`` has zero variance sum; every separable state
    has at least ``2 a^2 b^2``.
    """
    vs = schmidt_basis_vectors(a, b)
    return ObservableSet([np.outer(v, v.conj()) for v in vs], (2, 2))


def schmidt_basis_bound(a: float, b: float) -> float:
    _check_schmidt_pair(a, b)
    return 2 * a * a * b * b


def schmidt_basis_werner_threshold(a: float, b: float) -> float:
    """Smallest ``p`` at which ``p|psi><psi| + (1-p) 1/4`` reaches the separable bound."""
    _check_schmidt_pair(a, b)
    return float(np.sqrt(1 - 8 * a * a * b * b / 3))


def schmidt_basis_criterion(psi: Ket) -> VarianceCriterion:
    """The Schmidt-basis projector criterion for an arbitrary two-qubit ket.

    The construction is carried over to ``psi``'s own local Schmidt bases; the
    separable bound is unchanged by local unitaries.
    """
    if psi.dims.dims != (2, 2):
        raise DimensionError("Schmidt-basis criterion is defined for two qubits")
    s, U, V = schmidt_decompose(psi, 1)
    a, b = float(s[0]), float(s[1])
    norm = np.hypot(a, b)
    a, b = a / norm, b / norm
    local = np.kron(U, V)
    vs = schmidt_basis_vectors(a, b) @ local.T
    Ms = ObservableSet([np.outer(v, v.conj()) for v in vs], (2, 2))
    return VarianceCriterion(Ms, schmidt_basis_bound(a, b), ANALYTIC, "schmidt-basis")


def leading_eigenvector(rho: DensityMatrix) -> Ket:
    lam, vec = np.linalg.eigh(np.asarray(rho))
    return Ket.normalized(vec[:, -1], as_dims(rho.dims))
