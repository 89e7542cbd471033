"""GHZ-basis variance sums for three and four qubits.

For three qubits the variance sum E over the eight GHZ-basis projectors
separates biseparable states (E >= 1/2) from W-class states (E >= 3/8). It
can be computed either from the projectors or from eight Pauli
correlations.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Callable

import numpy as np

from .criteria import (
    ANALYTIC,
    DETECTION_MARGIN,
    ENTANGLED,
    GHZ_CLASS,
    INCONCLUSIVE,
    DetectionReport,
    variance_sum,
)
from .states import I2, SX, SY, SZ, DimensionError, Ket, ObservableSet, expectation, ghz_state, isotropic_state, singlet

BISEPARABLE_FLOOR = 0.5
W_CLASS_FLOOR = 3 / 8
# Maximal squared GHZ overlaps: biseparable states 1/2, W-class states 3/4
WITNESS_BISEPARABLE = 0.5
WITNESS_GHZ_CLASS = -0.25

GENUINE = "genuinely_tripartite_entangled"
TRIPARTITE_CLASSES = (INCONCLUSIVE, GENUINE, GHZ_CLASS)

# Correlation operators whose squared means make up E, in this order.
PAULI_TERMS = ("III", "IZZ", "ZIZ", "ZZI", "XXX", "XYY", "YYX", "YXY")
_PAULI = {"I": I2, "X": SX, "Y": SY, "Z": SZ}


def pauli_string(word: str) -> np.ndarray:
    return reduce(np.kron, [_PAULI[c] for c in word])


@dataclass(frozen=True)
class TripartiteVerdict:
    E: float
    cls: str

    def __post_init__(self):
        if self.cls not in TRIPARTITE_CLASSES:
            raise ValueError(f"unknown class {self.cls!r}")
        if self.cls == GHZ_CLASS and not self.E < W_CLASS_FLOOR - DETECTION_MARGIN:
            raise ValueError("ghz_class requires E < 3/8")
        if self.cls == GENUINE and not self.E < BISEPARABLE_FLOOR - DETECTION_MARGIN:
            raise ValueError("genuine tripartite entanglement requires E < 1/2")


def _ghz_pair(n: int, x: int, sign: int) -> np.ndarray:
    v = np.zeros(2**n, dtype=complex)
    v[x] = 1
    v[(2**n - 1) ^ x] = sign
    return v / np.sqrt(2)


def ghz_basis_3() -> list[Ket]:
    """(|000>+-|111>), (|100>+-|011>), (|010>+-|101>), (|001>+-|110>), all '+' first."""
    lows = [0b000, 0b100, 0b010, 0b001]
    return [Ket(_ghz_pair(3, x, s), (2, 2, 2)) for s in (1, -1) for x in lows]


def ghz_basis_4() -> list[Ket]:
    """The 16 four-qubit GHZ-type states; pairs ordered by their lower bit string, '+' block first."""
    return [Ket(_ghz_pair(4, x, s), (2,) * 4) for s in (1, -1) for x in range(8)]


def ghz_projectors(n: int = 3) -> ObservableSet:
    basis = {3: ghz_basis_3, 4: ghz_basis_4}[n]()
    return ObservableSet([k.projector() for k in basis], (2,) * n)


def _check_qubits(rho, n):
    if rho.dims.dims != (2,) * n:
        raise DimensionError(f"expected a {n}-qubit state, got dims {rho.dims.dims}")


def ghz_variance_sum(rho) -> float:
    """E: sum of variances of the eight GHZ-basis projectors."""
    if isinstance(rho, Ket):
        rho = rho.density()
    _check_qubits(rho, 3)
    return variance_sum(rho, ghz_projectors(3))


def pauli_means(rho) -> np.ndarray:
    """Means of the eight correlation operators in :data:`PAULI_TERMS`."""
    if isinstance(rho, Ket):
        rho = rho.density()
    _check_qubits(rho, 3)
    return np.array([expectation(rho, pauli_string(w)) for w in PAULI_TERMS])


def ghz_variance_from_pauli(means) -> float:
    """E from the eight correlation means; the identity term is used as measured."""
    m = np.asarray(means, dtype=float)
    if m.shape != (8,):
        raise ValueError("need exactly eight correlation means")
    if np.any(np.abs(m) > 1 + 1e-12):
        raise ValueError(f"correlation means must lie in [-1, 1], got {m}")
    return float(1 - np.sum(m**2) / 8)


def classify_tripartite(E: float) -> TripartiteVerdict:
    if E < W_CLASS_FLOOR - DETECTION_MARGIN:
        return TripartiteVerdict(E, GHZ_CLASS)
    if E < BISEPARABLE_FLOOR - DETECTION_MARGIN:
        return TripartiteVerdict(E, GENUINE)
    return TripartiteVerdict(E, INCONCLUSIVE)


def ghz_e_report(rho) -> DetectionReport:
    E = ghz_variance_sum(rho)
    cls = classify_tripartite(E).cls
    verdict = {GHZ_CLASS: GHZ_CLASS, GENUINE: ENTANGLED, INCONCLUSIVE: INCONCLUSIVE}[cls]
    return DetectionReport("ghz-e", E, BISEPARABLE_FLOOR, verdict, ANALYTIC, {"class": cls, "ghz_class_bound": W_CLASS_FLOOR})


def ghz_witness(rho) -> tuple[float, str]:
    """Value of Tr(W rho) for W = 1/2 - |GHZ><GHZ| and the resulting class name."""
    if isinstance(rho, Ket):
        rho = rho.density()
    _check_qubits(rho, 3)
    g = ghz_state(3).amplitudes
    value = WITNESS_BISEPARABLE - float(np.real(g.conj() @ np.asarray(rho) @ g))
    if value < WITNESS_GHZ_CLASS - DETECTION_MARGIN:
        cls = GHZ_CLASS
    elif value < -DETECTION_MARGIN:
        cls = GENUINE
    else:
        cls = INCONCLUSIVE
    return value, cls


def ghz_witness_report(rho) -> DetectionReport:
    value, cls = ghz_witness(rho)
    verdict = {GHZ_CLASS: GHZ_CLASS, GENUINE: ENTANGLED, INCONCLUSIVE: INCONCLUSIVE}[cls]
    return DetectionReport("ghz-witness", value, 0.0, verdict, ANALYTIC, {"class": cls, "ghz_class_bound": WITNESS_GHZ_CLASS})


def ghz4_report(rho) -> DetectionReport:
    """Sixteen-projector variance sum; below 1/2 rules out biseparability."""
    if isinstance(rho, Ket):
        rho = rho.density()
    _check_qubits(rho, 4)
    return DetectionReport.below("ghz4", variance_sum(rho, ghz_projectors(4)), BISEPARABLE_FLOOR, ANALYTIC)


# ---------------------------------------------------------------------------
# noise thresholds

FAMILIES = {
    "werner2": lambda p: isotropic_state(singlet(), p),
    "ghz3": lambda p: isotropic_state(ghz_state(3), p),
    "ghz4": lambda p: isotropic_state(ghz_state(4), p),
}
FAMILY_ALIASES = {"ghz3_isotropic": "ghz3", "ghz4_isotropic": "ghz4"}


def family_state(family: str, p: float):
    family = FAMILY_ALIASES.get(family, family)
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}")
    return FAMILIES[family](p)


def noise_threshold(
    criterion: Callable[[object], bool],
    family: str,
    tol: float = 1e-6,
    max_iter: int = 60,
    lo: float = 0.0,
    hi: float = 1.0,
) -> float:
    """Smallest mixing parameter in [lo, hi] at which ``criterion`` fires, by bisection.

    ``criterion`` maps a state to True (detected) or False and must be
    monotone along the family.
    """
    if not criterion(family_state(family, hi)):
        raise ValueError(f"criterion never fires on family {family!r} within [{lo}, {hi}]")
    if criterion(family_state(family, lo)):
        return lo
    for _ in range(max_iter):
        if hi - lo <= tol * 1e-3:
            break
        mid = (lo + hi) / 2
        if criterion(family_state(family, mid)):
            hi = mid
        else:
            lo = mid
    return hi
