"""Command-line surface: predictions, the moment oracle, simulations, comparisons.

Exit codes: 0 success, 1 validation failure (bad expressions, unknown
generators, out-of-domain words, malformed scenarios), 2 numerical or
tolerance failure (Hermiticity gate, refused predictions, comparison beyond
tolerance), 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .cmcalc import (
    ExplicitSpectrum,
    GeometricSpectrum,
    MomentTable,
    SpectrumFamily,
    poly_moment,
)
from .errors import (
    ComplexEigenvaluesError,
    DegreeExceededError,
    DimensionMismatchError,
    InsufficientEntriesError,
    NotInDomainError,
    NotPositiveError,
    NotSelfadjointError,
)
from .linred import (
    ev_anticommutator,
    ev_commutator,
    ev_sum_bab,
    ev_sum_bac,
)
from .ncalg import (
    EmptyInputError,
    ExpressionSyntaxError,
    UnknownSymbolError,
    auto_symbols,
    parse_expression,
)
from .rmtlab import DEMO_SEED, Report, Scenario, build_prediction, builtin_scenario, run_scenario
from .spectra import EVMultiset, match_distance, multiset_moment

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

_VALIDATION_ERRORS = (
    ValueError,
    KeyError,
    EmptyInputError,
    ExpressionSyntaxError,
    UnknownSymbolError,
    NotInDomainError,
    DegreeExceededError,
    DimensionMismatchError,
)
_NUMERICAL_ERRORS = (
    NotSelfadjointError,
    NotPositiveError,
    ComplexEigenvaluesError,
    InsufficientEntriesError,
)

DEMO_NAMES = (
    "example1",
    "example2",
    "example2-correlated",
    "example3",
    "anticommutator",
    "commutator",
)

# Acceptance-style gates used by `demo`; example1 gates on trace moments.
DEMO_MOMENT_GATES = {"example1": (0.08, 0.08, 0.12)}
DEMO_MATCH_GATES = {"example2": 0.15, "example2-correlated": 0.15, "example3": 0.10}


class _ToleranceExceeded(Exception):
    pass


def _parse_spectrum(text: str):
    """``geometric:scale,ratio,count`` (count int or ``analytic``) or ``explicit:v1;v2``."""
    kind, _, rest = text.partition(":")
    if kind == "geometric":
        parts = rest.split(",")
        if len(parts) not in (2, 3):
            raise ValueError("geometric spectrum needs scale,ratio[,count]")
        scale, ratio = float(parts[0]), float(parts[1])
        count: int | None = 64
        if len(parts) == 3:
            count = None if parts[2] == "analytic" else int(parts[2])
        return GeometricSpectrum(scale, ratio, count=count)
    if kind == "explicit":
        return ExplicitSpectrum([float(v) for v in rest.split(";") if v])
    raise ValueError(f"unknown spectrum kind {kind!r}")


def _load_json_matrix(text: str) -> np.ndarray:
    return np.asarray(json.loads(text), dtype=complex)


def _write_prediction(pred, out: str) -> list[str]:
    out_path = Path(out)
    json_path = out_path if out_path.suffix == ".json" else out_path.with_suffix(".json")
    csv_path = json_path.with_suffix(".csv")
    json_path.parent.mkdir(parents=True, exist_ok=True)
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(pred.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    pred.multiset.to_csv(csv_path)
    return [str(json_path), str(csv_path)]


def _cmd_predict(args) -> int:
    if args.scenario:
        scenario = Scenario.from_json(args.scenario)
        pred, _ = build_prediction(scenario)
    else:
        if not args.recipe:
            raise ValueError("predict needs --scenario or --recipe")
        truncation = args.truncation
        spectrum = _parse_spectrum(args.spectrum) if args.spectrum else None
        if args.recipe == "anticommutator":
            pred = ev_anticommutator(spectrum, args.tau_b, args.tau_b2, truncation)
        elif args.recipe == "commutator":
            pred = ev_commutator(spectrum, args.tau_b, args.tau_b2, truncation)
        elif args.recipe == "sum_bac":
            if not args.bprime:
                raise ValueError("sum_bac needs --bprime")
            pred = ev_sum_bac(spectrum, _load_json_matrix(args.bprime), truncation)
        elif args.recipe == "sum_bab":
            if not args.gram:
                raise ValueError("sum_bab needs --gram")
            base = spectrum.eigenvalues(truncation)
            diag = []
            for piece in args.diag.split(","):
                power, _, coeff = piece.partition(":")
                diag.append(float(coeff or 1.0) * np.diag(base ** int(power)))
            pred = ev_sum_bab(diag, _load_json_matrix(args.gram), truncation)
        else:
            raise ValueError(f"unknown recipe {args.recipe!r}")
    paths = _write_prediction(pred, args.out)
    print(json.dumps({"written": paths, "recipe": pred.recipe,
                      "provenance": pred.to_json_dict()["provenance"]}, sort_keys=True))
    return EXIT_OK


def _cmd_oracle(args) -> int:
    symbols = auto_symbols(args.expr)
    poly = parse_expression(args.expr, symbols)
    spectrum = _parse_spectrum(args.a_model)
    a_indices = sorted({letter.index for word in poly.terms for letter in word
                        if letter.family == "a"})
    a_model = SpectrumFamily({i: spectrum for i in a_indices} or {1: spectrum})
    if args.b_state:
        b_state = MomentTable.from_json(args.b_state)
    else:
        powers = {}
        if args.tau_b is not None:
            powers[1] = args.tau_b
        if args.tau_b2 is not None:
            powers[2] = args.tau_b2
        if not powers:
            raise ValueError("oracle needs --b-state or --tau-b/--tau-b2")
        b_state = MomentTable.from_b_powers(powers)
    values = []
    for m in range(1, args.moments + 1):
        value = poly_moment(poly, m, a_model, b_state)
        values.append([value.real, value.imag])
    print(json.dumps({"expression": args.expr, "moments": values}, sort_keys=True))
    return EXIT_OK


def _write_simulation(report: Report, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    report.save(out_dir / "report.json")
    predicted = report.prediction["eigenvalues"]
    EVMultiset(predicted, source="predicted").to_csv(out_dir / "prediction.csv")
    for rec in report.trials:
        EVMultiset(rec["eigenvalues"]).to_csv(
            out_dir / f"trial_{rec['trial']:02d}_eigenvalues.csv"
        )
    top = max(int(report.scenario.get("compare_top", 10)), 15)
    first = report.trials[0]
    reference = first.get("prediction_eigenvalues", predicted)
    rows = min(top, len(first["eigenvalues"]), len(reference))
    with open(out_dir / "plot_data.csv", "w", encoding="utf-8") as fh:
        fh.write("rank,empirical,predicted\n")
        for r in range(rows):
            fh.write(f"{r + 1},{first['eigenvalues'][r]!r},{reference[r]!r}\n")


def _cmd_simulate(args) -> int:
    scenario = Scenario.from_json(args.scenario)
    if args.trials is not None or args.seed is not None:
        doc = scenario.to_dict()
        if args.trials is not None:
            doc["trials"] = args.trials
        if args.seed is not None:
            doc["seed"] = args.seed
        scenario = Scenario.from_dict(doc)
    report = run_scenario(scenario)
    _write_simulation(report, Path(args.out))
    print(json.dumps({"out": args.out, "summary": report.summary}, sort_keys=True))
    return EXIT_OK


def _compare_report(report: Report, top: int, tol_rel: float) -> tuple[float, list[dict]]:
    predicted = EVMultiset(report.prediction["eigenvalues"], source="predicted")
    rows = []
    for rec in report.trials:
        reference = (
            EVMultiset(rec["prediction_eigenvalues"], source="predicted")
            if "prediction_eigenvalues" in rec
            else predicted
        )
        metric = match_distance(EVMultiset(rec["eigenvalues"]), reference, top)
        rows.append({"trial": rec["trial"], **metric})
    mean_rel = float(np.mean([row["max_rel"] for row in rows])) if rows else 0.0
    return mean_rel, rows


def _cmd_compare(args) -> int:
    report = Report.from_json(args.report)
    mean_rel, rows = _compare_report(report, args.top, args.tol_rel)
    print(f"{'trial':>5}  {'max_abs':>12}  {'max_rel':>12}")
    for row in rows:
        print(f"{row['trial']:>5}  {row['max_abs']:>12.6g}  {row['max_rel']:>12.6g}")
    verdict = "PASS" if mean_rel <= args.tol_rel else "FAIL"
    print(f"mean max_rel over trials: {mean_rel:.6g}  (tolerance {args.tol_rel:g})  {verdict}")
    if mean_rel > args.tol_rel:
        raise _ToleranceExceeded()
    return EXIT_OK


def _formula_demo(name: str) -> int:
    """Oracle-vs-formula equivalence table for the degree-2 closed forms."""
    tau_b, tau_b2 = 1.0, 2.0
    spectrum = GeometricSpectrum(1.0, 0.5, count=64)
    family = SpectrumFamily({1: spectrum})
    table = MomentTable.from_b_powers({1: tau_b, 2: tau_b2})
    symbols = auto_symbols("a1 b1")
    if name == "anticommutator":
        poly = parse_expression("a1*b1 + b1*a1", symbols)
        pred = ev_anticommutator(spectrum, tau_b, tau_b2, 64)
    else:
        poly = parse_expression("i*(a1*b1 - b1*a1)", symbols)
        pred = ev_commutator(spectrum, tau_b, tau_b2, 64)
    print(f"demo {name}: tau(b) = {tau_b}, tau(b^2) = {tau_b2}, "
          f"provenance {pred.to_json_dict()['provenance']}")
    print(f"{'m':>2}  {'oracle':>20}  {'formula':>20}  {'rel diff':>10}")
    worst = 0.0
    for m in range(1, 7):
        oracle = poly_moment(poly, m, family, table).real
        formula = multiset_moment(pred.multiset, m)
        rel = abs(oracle - formula) / max(abs(oracle), 1e-12)
        worst = max(worst, rel)
        print(f"{m:>2}  {oracle:>20.12g}  {formula:>20.12g}  {rel:>10.3g}")
    print(f"worst relative difference: {worst:.3g} (tolerance 1e-09)")
    if worst > 1e-9:
        raise _ToleranceExceeded()
    return EXIT_OK


def _cmd_demo(args) -> int:
    name = args.name
    if name in ("anticommutator", "commutator"):
        return _formula_demo(name)
    scenario = builtin_scenario(name, n=args.n, trials=args.trials, seed=args.seed)
    report = run_scenario(scenario)
    out_dir = Path(args.out or f"demo_{name}")
    _write_simulation(report, out_dir)
    print(f"demo {name}: n={scenario.n}, trials={scenario.trials}, seed={scenario.seed}")
    print(f"report written to {out_dir}")
    if name in DEMO_MOMENT_GATES:
        gates = DEMO_MOMENT_GATES[name]
        errs = report.summary["moment_rel_err_vs_prediction"]
        print(f"{'k':>2}  {'empirical mean':>16}  {'predicted':>16}  {'rel err':>9}  gate")
        ok = True
        for k in range(3):
            passed = errs[k] <= gates[k]
            ok = ok and passed
            print(f"{k + 1:>2}  {report.summary['moments_mean'][k]:>16.6g}  "
                  f"{report.prediction['moments'][k]:>16.6g}  {errs[k]:>9.3g}  "
                  f"<= {gates[k]:g} {'PASS' if passed else 'FAIL'}")
        if not ok:
            raise _ToleranceExceeded()
        return EXIT_OK
    tol = DEMO_MATCH_GATES[name]
    mean_rel, rows = _compare_report(report, int(scenario.compare_top), tol)
    for row in rows:
        print(f"trial {row['trial']}: top-{scenario.compare_top} max_rel = {row['max_rel']:.4g}")
    verdict = "PASS" if mean_rel <= tol else "FAIL"
    print(f"mean max_rel = {mean_rel:.4g}  (tolerance {tol:g})  {verdict}")
    if mean_rel > tol:
        raise _ToleranceExceeded()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyclospec",
        description="Eigenvalue-multiset predictions, the moment oracle, and "
        "random-matrix experiments for cyclically monotone families.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="compute an eigenvalue-multiset prediction")
    p.add_argument("--scenario", help="scenario JSON file supplying the recipe")
    p.add_argument("--recipe", choices=["anticommutator", "commutator", "sum_bab", "sum_bac"])
    p.add_argument("--tau-b", type=float, default=0.0, dest="tau_b")
    p.add_argument("--tau-b2", type=float, default=0.0, dest="tau_b2")
    p.add_argument("--bprime", help="JSON matrix of state values tau(c_i b_j)")
    p.add_argument("--gram", help="JSON Gram matrix tau(b_i* b_j)")
    p.add_argument("--diag", default="1:1", help="diagonal spec power:coeff[,power:coeff...]")
    p.add_argument("--spectrum", help="geometric:scale,ratio[,count|analytic] or explicit:v1;v2")
    p.add_argument("--truncation", type=int, default=None)
    p.add_argument("--out", required=True, help="output path (JSON; CSV written alongside)")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("oracle", help="brute-force moments of an expression")
    p.add_argument("--expr", required=True)
    p.add_argument("--moments", type=int, default=3)
    p.add_argument("--a-model", required=True, dest="a_model",
                   help="spectrum spec, e.g. geometric:1,0.5,64")
    p.add_argument("--b-state", dest="b_state", help="moment-table JSON file")
    p.add_argument("--tau-b", type=float, default=None, dest="tau_b")
    p.add_argument("--tau-b2", type=float, default=None, dest="tau_b2")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("simulate", help="run a scenario and write its report")
    p.add_argument("--scenario", required=True)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("compare", help="gate a report on its top-M relative match")
    p.add_argument("--report", required=True)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--tol-rel", type=float, required=True, dest="tol_rel")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("demo", help="run a built-in experiment with pinned defaults")
    p.add_argument("name", choices=DEMO_NAMES)
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=DEMO_SEED)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _ToleranceExceeded:
        return EXIT_NUMERICAL
    except (OSError, json.JSONDecodeError) as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except _VALIDATION_ERRORS as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
