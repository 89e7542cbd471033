"""Command line front end.

Exit codes: 0 inconclusive, 10 entangled, 11 GHZ class, 2 input error,
1 internal failure (e.g. a non-monotone scan).
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .covariance import covariance_matrix, local_pauli_observables, pauli_cm_check, schur_complements
from .criteria import (
    ANALYTIC,
    ENTANGLED,
    GHZ_CLASS,
    INCONCLUSIVE,
    DetectionReport,
    VarianceCriterion,
    check_variance_criterion,
    leading_eigenvector,
    lur_evaluate,
    optimizer_criterion,
    schmidt_basis_criterion,
)
from .kernel import _fix_phase, kernel_observables, tiles_upb, upb_observables, upb_state
from .multipartite import (
    FAMILIES,
    family_state,
    ghz4_report,
    ghz_e_report,
    ghz_witness,
    ghz_witness_report,
    noise_threshold,
)
from .optimize import OptimizerConfig
from .states import PAULIS, DensityMatrix, DimensionError, Ket, ObservableSet, ppt_min_eigenvalue
from .statefile import StateFileError, read_state, write_state

EXIT_INCONCLUSIVE = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2
EXIT_ENTANGLED = 10
EXIT_GHZ = 11
EXIT_CODES = {INCONCLUSIVE: EXIT_INCONCLUSIVE, ENTANGLED: EXIT_ENTANGLED, GHZ_CLASS: EXIT_GHZ}

DEFAULT_SEED = 42
DEFAULT_RESTARTS = 500
LEVEL_ORDER = {INCONCLUSIVE: 0, ENTANGLED: 1, GHZ_CLASS: 2}

log = logging.getLogger("varsep")


class UsageError(ValueError):
    pass


@dataclass
class Context:
    """Per-run settings plus the in-memory cache of optimizer-derived criteria."""

    seed: int = DEFAULT_SEED
    restarts: int = DEFAULT_RESTARTS
    tolerance: float = 1e-10
    _cache: dict = field(default_factory=dict)

    @property
    def config(self) -> OptimizerConfig:
        return OptimizerConfig(restarts=self.restarts, convergence_tol=self.tolerance, seed=self.seed)

    def floor_criterion(self, Ms: ObservableSet, name: str) -> VarianceCriterion:
        key = Ms.fingerprint()
        if key not in self._cache:
            self._cache[key] = optimizer_criterion(Ms, self.config, name)
        return self._cache[key]

    def cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]


# ---------------------------------------------------------------------------
# criteria


def _require(rho: DensityMatrix, dims: tuple[int, ...] | None, name: str, bipartite: bool = False):
    if dims is not None and rho.dims.dims != dims:
        raise DimensionError(f"criterion {name} needs dims {list(dims)}, state has {list(rho.dims.dims)}")
    if bipartite and len(rho.dims) != 2:
        raise DimensionError(f"criterion {name} needs a bipartite state, state has dims {list(rho.dims.dims)}")


def _leading_ket(rho: DensityMatrix) -> Ket:
    psi = leading_eigenvector(rho)
    return Ket.normalized(_fix_phase(psi.amplitudes), psi.dims)


def _prop2(rho, ctx):
    _require(rho, (2, 2), "prop2")
    crit = schmidt_basis_criterion(_leading_ket(rho))
    r = check_variance_criterion(rho, crit)
    return DetectionReport(
        "prop2", r.value, r.bound, r.verdict, r.bound_provenance, {"schmidt_bound_source": "leading eigenvector"}
    )


def _lur_pauli(rho, ctx):
    _require(rho, (2, 2), "lur-pauli")
    paulis = ObservableSet(list(PAULIS), (2,))
    r = lur_evaluate(rho, paulis, paulis, 2.0, 2.0)
    return DetectionReport("lur-pauli", r.value, r.bound, r.verdict, r.bound_provenance, r.details)


def _prop3(rho, ctx):
    _require(rho, None, "prop3", bipartite=True)
    psi = _leading_ket(rho)
    key = ("prop3", rho.dims.dims, np.round(psi.amplitudes, 10).tobytes())
    try:
        Ms = ctx.cached(key, lambda: kernel_observables(psi, seed=ctx.seed))
    except ValueError:
        return DetectionReport(
            "prop3", float("nan"), 0.0, INCONCLUSIVE, ANALYTIC, {"note": "leading eigenvector is a product vector"}
        )
    crit = ctx.floor_criterion(Ms, "prop3")
    r = check_variance_criterion(rho, crit)
    return DetectionReport("prop3", r.value, r.bound, r.verdict, r.bound_provenance, {"restarts": ctx.restarts})


def _prop4_tiles(rho, ctx):
    _require(rho, (3, 3), "prop4-tiles")
    Ms = ctx.cached("prop4-tiles", lambda: upb_observables(tiles_upb(), seed=ctx.seed))
    crit = ctx.floor_criterion(Ms, "prop4-tiles")
    r = check_variance_criterion(rho, crit)
    return DetectionReport("prop4-tiles", r.value, r.bound, r.verdict, r.bound_provenance, {"restarts": ctx.restarts})


def _ghz_e(rho, ctx):
    _require(rho, (2, 2, 2), "ghz-e")
    return ghz_e_report(rho)


def _ghz_witness(rho, ctx):
    _require(rho, (2, 2, 2), "ghz-witness")
    return ghz_witness_report(rho)


def _ghz4(rho, ctx):
    _require(rho, (2, 2, 2, 2), "ghz4")
    return ghz4_report(rho)


def _cm_pauli(rho, ctx):
    _require(rho, (2, 2), "cm-pauli")
    return pauli_cm_check(rho)


def _ppt(rho, ctx):
    if len(rho.dims) < 2:
        raise DimensionError("ppt needs at least two subsystems")
    value = min(ppt_min_eigenvalue(rho, k) for k in range(1, len(rho.dims)))
    return DetectionReport.below("ppt", value, 0.0, ANALYTIC)


CRITERIA: dict[str, Callable[[DensityMatrix, Context], DetectionReport]] = {
    "prop2": _prop2,
    "lur-pauli": _lur_pauli,
    "prop3": _prop3,
    "prop4-tiles": _prop4_tiles,
    "ghz-e": _ghz_e,
    "ghz-witness": _ghz_witness,
    "ghz4": _ghz4,
    "cm-pauli": _cm_pauli,
    "ppt": _ppt,
}
# detection levels reported per criterion in scans
LEVELS = {"ghz-e": (ENTANGLED, GHZ_CLASS), "ghz-witness": (ENTANGLED, GHZ_CLASS)}


def evaluate(name: str, rho: DensityMatrix, ctx: Context | None = None) -> DetectionReport:
    if name not in CRITERIA:
        raise UsageError(f"unknown criterion {name!r}; choose from {', '.join(CRITERIA)}")
    return CRITERIA[name](rho, ctx or Context())


def exit_code(report: DetectionReport) -> int:
    return EXIT_CODES[report.verdict]


# ---------------------------------------------------------------------------
# fixtures


def fixture_state(name: str) -> tuple[DensityMatrix, str]:
    """Named test states: bell, singlet, ghz3, ghz4, tiles-upb, mixed:2x2, and
    noisy families such as ``werner2:p=0.5`` or ``ghz3:p=0.7``."""
    base, _, arg = name.partition(":")
    if base == "bell":
        from .states import bell_state

        return bell_state("phi+").density(), "Bell state (|00>+|11>)/sqrt2"
    if base == "tiles-upb":
        return upb_state(tiles_upb()), "Tiles UPB bound entangled state"
    if base == "mixed":
        dims = tuple(int(d) for d in (arg or "2x2").split("x"))
        return DensityMatrix.maximally_mixed(dims), f"maximally mixed {arg or '2x2'}"
    if base == "singlet":
        base, arg = "werner2", arg or "p=1"
    if base in FAMILIES:
        p = 1.0
        if arg:
            key, _, val = arg.partition("=")
            if key != "p":
                raise UsageError(f"fixture parameter must be p=..., got {arg!r}")
            p = float(val)
        return family_state(base, p), f"{base} p={p:g}"
    raise UsageError(f"unknown fixture {name!r}")


# ---------------------------------------------------------------------------
# scans


def parse_grid(text: str) -> np.ndarray:
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"grid must be start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start or start < 0 or stop > 1:
        raise UsageError(f"invalid grid {text!r}")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 12)


@dataclass
class ScanResult:
    family: str
    grid: np.ndarray
    criteria: list[str]
    values: dict[str, list[float]]
    verdicts: dict[str, list[str]]
    thresholds: dict[tuple[str, str], float | None]


def _fires(name, level, ctx):
    def test(rho):
        v = evaluate(name, rho, ctx).verdict
        return LEVEL_ORDER[v] >= LEVEL_ORDER[level]

    return test


def run_scan(family: str, criteria: list[str], grid: np.ndarray, ctx: Context) -> ScanResult:
    if family not in FAMILIES:
        raise UsageError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    if not criteria:
        raise UsageError("at least one criterion is required")
    for c in criteria:
        if c not in CRITERIA:
            raise UsageError(f"unknown criterion {c!r}; choose from {', '.join(CRITERIA)}")
    values = {c: [] for c in criteria}
    verdicts = {c: [] for c in criteria}
    for p in grid:
        rho = family_state(family, float(p))
        for c in criteria:
            r = evaluate(c, rho, ctx)
            values[c].append(r.value)
            verdicts[c].append(r.verdict)
    for c in criteria:
        levels = [LEVEL_ORDER[v] for v in verdicts[c]]
        if any(b < a for a, b in zip(levels, levels[1:])):
            raise ArithmeticError(f"verdicts of {c} are not monotone in p on {family}: {verdicts[c]}")
    thresholds = {}
    lo, hi = float(grid[0]), float(grid[-1])
    for c in criteria:
        for level in LEVELS.get(c, (ENTANGLED,)):
            try:
                thresholds[(c, level)] = noise_threshold(_fires(c, level, ctx), family, lo=lo, hi=hi)
            except ValueError:
                thresholds[(c, level)] = None
    return ScanResult(family, grid, list(criteria), values, verdicts, thresholds)


def scan_csv(result: ScanResult, ctx: Context) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p"] + [f"{c}_value" for c in result.criteria] + [f"{c}_verdict" for c in result.criteria])
    for i, p in enumerate(result.grid):
        w.writerow(
            [f"{p:.12g}"]
            + [f"{result.values[c][i]:.12g}" for c in result.criteria]
            + [result.verdicts[c][i] for c in result.criteria]
        )
    for (c, level), t in result.thresholds.items():
        buf.write(f"# threshold,{c},{level},{'none' if t is None else f'{t:.9f}'}\n")
    buf.write(f"# family,{result.family}\n# seed,{ctx.seed}\n# restarts,{ctx.restarts}\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def _load(path) -> DensityMatrix:
    return read_state(path).state


def cmd_detect(args, ctx: Context) -> int:
    rho = _load(args.state)
    report = evaluate(args.criterion, rho, ctx)
    for line in report.lines():
        print(line)
    print(f"seed: {ctx.seed}")
    return exit_code(report)


def cmd_scan(args, ctx: Context) -> int:
    criteria = [c for c in (args.criterion or []) for c in c.split(",") if c]
    grid = parse_grid(args.grid)
    try:
        result = run_scan(args.family, criteria, grid, ctx)
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    text = scan_csv(result, ctx)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    print(f"family: {result.family}")
    for (c, level), t in result.thresholds.items():
        print(f"threshold {c} [{level}]: {'none' if t is None else f'{t:.9f}'}")
    print(f"seed: {ctx.seed}")
    return 0


def cmd_fixtures(args, ctx: Context) -> int:
    rho, label = fixture_state(args.name)
    try:
        write_state(args.output, rho, label)
    except OSError as exc:
        raise UsageError(f"cannot write {args.output}: {exc.strerror}") from None
    read_state(args.output)  # round trip must succeed
    print(f"wrote {args.name} to {args.output}")
    return 0


def cmd_ghz_report(args, ctx: Context) -> int:
    rows = []
    code = 0
    if args.state:
        rho = _load(args.state)
        e = ghz_e_report(rho)
        wv, wcls = ghz_witness(rho)
        rows += [
            ("E", f"{e.value:.12g}"),
            ("E_class", e.details["class"]),
            ("witness", f"{wv:.12g}"),
            ("witness_class", wcls),
        ]
        code = exit_code(e)
    for name, level in (("ghz-e", ENTANGLED), ("ghz-e", GHZ_CLASS), ("ghz-witness", ENTANGLED), ("ghz-witness", GHZ_CLASS)):
        t = noise_threshold(_fires(name, level, ctx), "ghz3")
        rows.append((f"threshold_{name}_{level}", f"{t:.9f}"))
    for k, v in rows:
        print(f"{k}: {v}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["quantity", "value"])
            w.writerows(rows)
    return code


def _fmt_matrix(m: np.ndarray) -> str:
    return "\n".join("  " + " ".join(f"{x: .6f}" for x in row) for row in m)


def cmd_cm_check(args, ctx: Context) -> int:
    rho = _load(args.state)
    _require(rho, (2, 2), "cm-check")
    gamma = covariance_matrix(rho, local_pauli_observables(), block=(3, 3))
    SA, SB = schur_complements(gamma)
    report = pauli_cm_check(rho)
    print("gamma:\n" + _fmt_matrix(gamma.entries))
    for name, m in (("A", gamma.A), ("B", gamma.B), ("C", gamma.C), ("A - C B^+ C^T", SA), ("B - C^T A^+ C", SB)):
        print(f"{name}:\n{_fmt_matrix(m)}")
    print(f"trace(A - C B^+ C^T): {np.trace(SA):.12g}")
    print(f"trace(B - C^T A^+ C): {np.trace(SB):.12g}")
    print(f"verdict: {report.verdict}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for row in gamma.entries:
                w.writerow([f"{x:.12g}" for x in row])
    return exit_code(report)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for optimizer restarts and constructions")
    common.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS, help="optimizer restarts for numerical floors")
    common.add_argument("--tolerance", type=float, default=1e-10, help="optimizer convergence tolerance")

    parser = argparse.ArgumentParser(prog="varsep", description="Entanglement detection with variance criteria.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", parents=[common], help="evaluate one criterion on a state file")
    p.add_argument("state", help="JSON state file")
    p.add_argument("--criterion", required=True, help=f"one of {', '.join(CRITERIA)}")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("scan", parents=[common], help="sweep a noisy family and bisect thresholds")
    p.add_argument("--family", required=True, help=f"one of {', '.join(FAMILIES)}")
    p.add_argument("--criterion", action="append", help="criterion name; repeat or comma-separate")
    p.add_argument("--grid", default="0:1:0.01", help="start:stop:step over the mixing parameter")
    p.add_argument("--csv", help="also write results to this CSV file")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("fixtures", parents=[common], help="write a named state file")
    p.add_argument("name", help="bell, singlet, tiles-upb, mixed[:DxD], or a family such as werner2:p=0.5")
    p.add_argument("output", help="path of the JSON state file to write")
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("ghz-report", parents=[common], help="three-qubit GHZ variance and witness report")
    p.add_argument("state", nargs="?", help="optional three-qubit JSON state file; thresholds are always reported")
    p.add_argument("--csv", help="also write results to this CSV file")
    p.set_defaults(func=cmd_ghz_report)

    p = sub.add_parser("cm-check", parents=[common], help="two-qubit Pauli covariance-matrix report")
    p.add_argument("state", help="two-qubit JSON state file")
    p.add_argument("--csv", help="also write results to this CSV file")
    p.set_defaults(func=cmd_cm_check)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="warning: %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else 0
    try:
        if args.restarts < 1:
            raise UsageError("--restarts must be positive")
        ctx = Context(seed=args.seed, restarts=args.restarts, tolerance=args.tolerance)
        return args.func(args, ctx)
    except (StateFileError, UsageError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
