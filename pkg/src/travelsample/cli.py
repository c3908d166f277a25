"""Command-line interface.

Each subcommand builds a JSON report carrying ``schema_version`` and the
resolved run configuration, plus CSV tables where they make sense. Reports go
to ``--out`` (or ``$TRAVELSAMPLE_OUTPUT_DIR``) as files, else to stdout.

Exit codes: 0 success, 1 internal failure, 2 configuration error, 3 data
error. Failures print a JSON error object on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__, kernels
from .errors import ConfigError, DataError, TravelSampleError
from .fixtures import write_fixtures
from .io import fixture_path, ingest_households, ingest_trips, ingest_zones, load_fixture
from .montecarlo import (
    PRESET_SELECTORS,
    PRESETS,
    SMALL_CITY,
    CellSelector,
    SynthConfig,
    audit_sample,
    coverage_curve,
    resolve_cells,
    simulate_sampling,
    synth_population,
)
from .od import (
    GTHA_CORE,
    ODSlice,
    build_od_matrix,
    cell_required_rates,
    disaggregation_sweep,
    figure1_csv_text,
    load_figure1,
    matrix_cv,
)
from .planner import (
    DEFAULT_CORE_RATE,
    OVERLAP_POLICIES,
    AugmentTarget,
    RegionProfile,
    plan_study_area,
)
from .records import MODES, PERIODS, PURPOSES, attach_trip_counts, household_audit_rows
from .representativeness import audit, read_marginals_csv
from .smith import StratificationScheme, smith_plan
from .stats import SizeSpec, curve_to_csv, interchange_rate, rate_curve

log = logging.getLogger("travelsample")

SCHEMA_VERSION = 1
OUTPUT_ENV = "TRAVELSAMPLE_OUTPUT_DIR"
EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3
DEFAULT_CVS = "0.5,0.75,1.0,1.25,1.5"


def pct(rate: float | None) -> float | None:
    """A rate as a percentage rounded to 4 significant digits."""
    if rate is None or math.isnan(rate):
        return None
    return float(f"{rate * 100:.4g}")


def _clean(obj: Any) -> Any:
    """JSON-safe copy: NaN/inf become None, numpy scalars become Python numbers."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors become config errors (exit 2)
        raise ConfigError(f"{self.prog}: {message}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


# --- output ---------------------------------------------------------------

class Emitter:
    def __init__(self, out: str | None, fmt: str, stdout=None):
        out = out or os.environ.get(OUTPUT_ENV) or None
        self.out = Path(out) if out else None
        self.fmt = fmt
        self.stdout = stdout or sys.stdout
        self.written: list[Path] = []

    def _write(self, name: str, text: str) -> None:
        if self.out is None:
            self.stdout.write(text)
            return
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        path.write_text(text)
        self.written.append(path)
        print(path, file=self.stdout)

    def emit(self, name: str, report: dict, tables: dict[str, str] | None = None) -> None:
        if self.fmt in ("json", "both"):
            text = json.dumps(_clean(report), indent=2, allow_nan=False) + "\n"
            self._write(f"{name}.json", text)
        if self.fmt in ("csv", "both"):
            for suffix, text in (tables or {}).items():
                self._write(f"{name}{suffix}.csv", text)

    def raw(self, filename: str, text: str) -> None:
        self._write(filename, text)


# execution-only options: they never change a result, so reports omit them
# and stay byte-identical across output locations and worker counts
_NOT_ECHOED = ("func", "out", "verbose", "workers")


def _report(command: str, args: argparse.Namespace, body: dict) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_ECHOED}
    return {"schema_version": SCHEMA_VERSION, "command": command, "config": config, **body}


# --- shared inputs --------------------------------------------------------

def _spec(args) -> SizeSpec:
    return SizeSpec(args.confidence, args.e)


def _survey(args, *, need_zones: bool = False):
    """Households (with trip counts), trips, zones and warnings from files or the fixture."""
    if args.households is None and args.trips is None:
        households, trips, zones = load_fixture()
        return households, trips, zones, []
    if args.households is None or args.trips is None:
        raise ConfigError("--households and --trips must be given together")
    households = ingest_households(args.households)
    orphans: list[str] = []
    trips = ingest_trips(args.trips, [h.household_id for h in households], orphans)
    zones = None
    if getattr(args, "zones", None):
        zones = ingest_zones(args.zones)
    elif need_zones:
        raise ConfigError("--zones is required with custom --households/--trips")
    return attach_trip_counts(households, trips), trips, zones, orphans


def _add_survey_args(p: argparse.ArgumentParser, zones: bool = False) -> None:
    p.add_argument("--households", help="household CSV (default: bundled fixture)")
    p.add_argument("--trips", help="trip CSV (default: bundled fixture)")
    if zones:
        p.add_argument("--zones", help="zone,region CSV (default: bundled fixture)")


def _add_spec_args(p: argparse.ArgumentParser, confidence: float, e: float) -> None:
    p.add_argument("--confidence", type=float, default=confidence, help=f"two-sided level (default {confidence})")
    p.add_argument("--e", type=float, default=e, help=f"relative margin of error (default {e})")


# --- commands ------------------------------------------------------------

def cmd_rates(args, out: Emitter) -> int:
    if args.trip_totals:
        totals = [int(round(x)) for x in _float_list(args.trip_totals)]
    else:
        if not (1 <= args.grid_min < args.grid_max) or args.per_decade < 1:
            raise ConfigError("need 1 <= --grid-min < --grid-max and --per-decade >= 1")
        decades = math.log10(args.grid_max / args.grid_min)
        n = int(round(decades * args.per_decade)) + 1
        totals = sorted({int(round(x)) for x in np.geomspace(args.grid_min, args.grid_max, n)})
    points = rate_curve(totals, _float_list(args.cv), _float_list(args.confidence), args.e)
    rows = [dict(p.to_dict(), required_rate_pct=pct(p.required_rate)) for p in points]
    curves = sorted({(p.confidence, p.cv) for p in points})
    out.emit("rates", _report("rates", args, {"n_curves": len(curves), "points": rows}),
             {"": curve_to_csv(points)})
    return EXIT_OK


def cmd_smith(args, out: Emitter) -> int:
    households, _, _, warnings = _survey(args)
    plan = smith_plan(households, StratificationScheme.parse(args.scheme), _spec(args),
                      population=args.population, cv_denominator=args.cv_denominator,
                      merge_thin=args.merge_thin)
    body = {"plan": plan.to_dict(), "sampling_rate_pct": pct(plan.sampling_rate),
            "input_warnings": warnings}
    out.emit("smith", _report("smith", args, body), {"": plan.to_csv()})
    return EXIT_OK


def _report_rows(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["geography", "variable", "category", "reference", "sample", "relative_error", "status"])
    for rep in reports:
        for e in rep.per_category:
            w.writerow([rep.geography or "", e.variable, e.category, repr(e.reference), repr(e.sample),
                        "" if e.relative_error is None else repr(e.relative_error), e.status])
    return buf.getvalue()


def cmd_rmse(args, out: Emitter) -> int:
    reference_path = args.reference or str(fixture_path("reference"))
    if args.synthetic_rate is not None:
        if args.households or args.trips:
            raise ConfigError("--synthetic-rate replaces --households/--trips")
        population = synth_population(SMALL_CITY)
        sample = audit_sample(population, args.synthetic_rate, args.seed, stratified=not args.srs)
        rows = sample.household_rows()
        source = {"synthetic_population": SMALL_CITY.to_dict(), "sample_households": sample.n_households,
                  "design": "simple random" if args.srs else "proportional stratified (size x vehicles)"}
        warnings: list[str] = []
    else:
        households, trips, _, warnings = _survey(args)
        rows = household_audit_rows(households, trips)
        source = {"households": len(households)}
    if args.geography == "each":
        geographies = sorted({str(r["region"]) for r in rows})
    elif args.geography:
        geographies = [args.geography]
    else:
        geographies = [None]
    reports = [
        audit(rows, read_marginals_csv(reference_path, geography=g), geography=g, pooled=args.pooled)
        for g in geographies
    ]
    body = {"source": source, "reports": [r.to_dict() for r in reports], "input_warnings": warnings}
    out.emit("rmse", _report("rmse", args, body), {"": _report_rows(reports)})
    return EXIT_OK


def _rates_csv(matrix, rates) -> str:
    lines = ["origin,destination,trips,required_rate"]
    for i, o in enumerate(matrix.origins):
        for j, d in enumerate(matrix.destinations):
            trips = "suppressed" if matrix.suppressed[i, j] else repr(float(matrix.cells[i, j]))
            rate = "" if math.isnan(rates[i, j]) else repr(float(rates[i, j]))
            lines.append(f'"{o}","{d}",{trips},{rate}')
    return "\n".join(lines) + "\n"


def cmd_od(args, out: Emitter) -> int:
    spec = _spec(args)
    body: dict[str, Any] = {}
    if args.figure1:
        published = load_figure1()
        matrix = published.matrix
        body["integrity_issues"] = published.integrity()
        core = matrix.submatrix(list(GTHA_CORE))
        body["gtha_core_cv"] = matrix_cv(core)
    else:
        _, trips, zones, warnings = _survey(args, need_zones=True)
        slice_ = ODSlice(args.period, args.mode, args.purpose)
        matrix = build_od_matrix(trips, zones if args.level == "region" else None, slice_)
        body["input_warnings"] = warnings
        body["trip_group_cv"] = matrix_cv(trips)
    values = matrix.available_values()
    body["cell_cv"] = matrix_cv(matrix) if np.count_nonzero(values) >= 2 else None
    rates = cell_required_rates(matrix, args.cv, spec)
    body["matrix"] = matrix.to_dict()
    body["required_rates"] = rates
    body["required_rates_pct"] = [[pct(x) for x in row] for row in rates]
    out.emit("od", _report("od", args, body), {"": matrix.to_csv(), "_rates": _rates_csv(matrix, rates)})
    return EXIT_OK


def cmd_sweep(args, out: Emitter) -> int:
    households, trips, _, warnings = _survey(args)
    result = disaggregation_sweep(households, trips, _spec(args), population=args.population,
                                  cv_denominator=args.cv_denominator)
    d = result.to_dict()
    for row in d["rows"]:
        row["sampling_rate_pct"] = pct(row["sampling_rate"])
    d["input_warnings"] = warnings
    out.emit("sweep", _report("sweep", args, d), {"": result.to_csv()})
    return EXIT_OK


def _plan_regions(config: dict) -> list[RegionProfile]:
    fixture = None
    regions = []
    for r in config.get("regions", []):
        try:
            name = r["name"]
        except KeyError:
            raise ConfigError("every region needs a name") from None
        if "households" in r:
            hh = ingest_households(r["households"])
            trips = ingest_trips(r["trips"], [h.household_id for h in hh]) if "trips" in r else []
            hh = attach_trip_counts(hh, trips)
        else:
            if fixture is None:
                fixture = load_fixture()
            key = r.get("microdata_region", name)
            hh = [h for h in fixture[0] if h.region == key]
            ids = {h.household_id for h in hh}
            trips = [t for t in fixture[1] if t.household_id in ids]
        pop = r.get("household_population")
        if pop is None:
            if not hh:
                raise ConfigError(f"region {name}: no microdata to infer household_population")
            pop = int(round(math.fsum(h.weight for h in hh)))
        targets = [AugmentTarget(**t) for t in r.get("augment_targets", [])]
        regions.append(RegionProfile(name, int(pop), hh, trips, targets))
    if not regions:
        raise ConfigError("plan config lists no regions")
    return regions


def _default_plan_config() -> dict:
    households, _, _ = load_fixture()
    names = sorted({h.region for h in households})
    return {"regions": [{"name": n, "augment_targets": [{"name": "all households"}]} for n in names]}


def cmd_plan(args, out: Emitter) -> int:
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
    else:
        config = _default_plan_config()
    spec_cfg = config.get("spec", {})
    confidence = args.confidence if args.confidence is not None else spec_cfg.get("confidence", 0.95)
    e = args.e if args.e is not None else spec_cfg.get("margin_of_error", 0.05)
    core_rate = args.core_rate if args.core_rate is not None else config.get("core_rate", DEFAULT_CORE_RATE)
    policy = args.overlap_policy or config.get("overlap_policy", "additive")
    try:
        regions = _plan_regions(config)
    except TypeError as exc:
        raise ConfigError(f"bad plan config: {exc}") from None
    plan = plan_study_area(regions, SizeSpec(confidence, e), core_rate=core_rate,
                           overlap_policy=policy,
                           cv_denominator=config.get("cv_denominator", "overall"))
    body = {"plan_config": config, "plan": plan.to_dict()}
    out.emit("plan", _report("plan", args, body), {"": plan.to_csv()})
    return EXIT_OK


def _selector(args, base: CellSelector) -> CellSelector:
    cells = base.cells
    if args.cell:
        cells = tuple(tuple(c.split(":", 1)) for c in args.cell)
        if any(len(c) != 2 for c in cells):
            raise ConfigError("--cell takes ORIGIN:DESTINATION")
    return CellSelector(
        period=args.period if args.period is not None else base.period,
        mode=args.mode if args.mode is not None else base.mode,
        purpose=args.purpose if args.purpose is not None else base.purpose,
        level=args.level or base.level,
        cells=cells,
        closest_to=args.closest_to if args.closest_to is not None else base.closest_to,
    )


def _sim_inputs(args) -> tuple[SynthConfig, CellSelector]:
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
            config = SynthConfig.from_dict(raw["population"])
            sel = raw.get("selector", {})
            if sel.get("cells") is not None:
                sel = dict(sel, cells=tuple(tuple(c) for c in sel["cells"]))
            selector = CellSelector(**sel)
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"bad simulate config {args.config}: {exc}") from None
    else:
        if args.preset not in PRESETS:
            raise ConfigError(f"unknown preset {args.preset!r}; known: {sorted(PRESETS)}")
        config = PRESETS[args.preset]
        selector = PRESET_SELECTORS.get(args.preset, CellSelector())
    if args.population_seed is not None:
        config = SynthConfig.from_dict(dict(config.to_dict(), seed=args.population_seed))
    return config, _selector(args, selector)


def cmd_simulate(args, out: Emitter) -> int:
    config, selector = _sim_inputs(args)
    spec = _spec(args)
    population = synth_population(config)
    seed = config.seed if args.seed is None else args.seed
    target = resolve_cells(population, selector)
    body: dict[str, Any] = {"seed": seed}
    if args.rates:
        rates = _float_list(args.rates)
        points = coverage_curve(population, spec, rates, replications=args.replications,
                                selector=selector, seed=seed, workers=args.workers)
        body["population"] = {"n_households": population.n_households, "n_trips": population.n_trips,
                              "realized_cv": population.realized_cv(), "config": config.to_dict()}
        body["selector"] = selector.to_dict()
        body["curve"] = [dict(vars(p), rate_pct=pct(p.rate)) for p in points]
        csv_text = "rate,coverage,mape,n_sampled\n" + "".join(
            f"{p.rate!r},{p.coverage!r},{p.mape!r},{p.n_sampled}\n" for p in points)
        out.emit("simulate", _report("simulate", args, body), {"": csv_text})
        return EXIT_OK
    if args.rate == "analytic":
        if len(target.labels) != 1:
            raise ConfigError("--rate analytic needs a selector that resolves to exactly one cell")
        trip_total = float(target.true_totals[0])
        rate = interchange_rate(trip_total, args.cv, spec)
        body["analytic"] = {"trip_total": trip_total, "cv": args.cv, "rate": rate, "rate_pct": pct(rate)}
    else:
        try:
            rate = float(args.rate)
        except ValueError:
            raise ConfigError(f"--rate must be a number or 'analytic', got {args.rate!r}") from None
    result = simulate_sampling(population, rate, args.replications, spec, selector,
                               seed=seed, workers=args.workers, target=target)
    body.update(result.to_dict())
    body["rate_pct"] = pct(rate)
    out.emit("simulate", _report("simulate", args, body), {"": result.to_csv()})
    return EXIT_OK


def cmd_fixture(args, out: Emitter) -> int:
    if args.which == "figure1":
        out.raw("figure1.csv", figure1_csv_text())
        return EXIT_OK
    if out.out is None:
        raise ConfigError(f"fixture synthetic writes several files; pass --out or set {OUTPUT_ENV}")
    for path in write_fixtures(out.out):
        print(path, file=out.stdout)
    return EXIT_OK


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV}, else stdout)")
    common.add_argument("--format", choices=("json", "csv", "both"), default="json")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = _Parser(prog="travelsample", description="Travel survey sample-size planning and audit tools.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({kernels.BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rates", parents=[common], help="required sampling rate curves by trip total and CV")
    p.add_argument("--cv", default=DEFAULT_CVS, help=f"comma-separated CVs (default {DEFAULT_CVS})")
    p.add_argument("--confidence", default="0.90,0.95", help="comma-separated confidence levels")
    p.add_argument("--e", type=float, default=0.25, help="relative margin of error (default 0.25)")
    p.add_argument("--trip-totals", help="comma-separated trip totals (overrides the grid)")
    p.add_argument("--grid-min", type=float, default=100.0)
    p.add_argument("--grid-max", type=float, default=1e6)
    p.add_argument("--per-decade", type=int, default=4)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("smith", parents=[common], help="stratified augment sample size")
    _add_survey_args(p)
    p.add_argument("--scheme", default="size,income,vehicles")
    _add_spec_args(p, 0.95, 0.05)
    p.add_argument("--population", type=float, help="household population (default: sum of weights)")
    p.add_argument("--cv-denominator", choices=("overall", "stratum"), default="overall")
    p.add_argument("--merge-thin", action="store_true", help="pool single-household strata")
    p.set_defaults(func=cmd_smith)

    p = sub.add_parser("rmse", parents=[common], help="percent RMSE against reference marginals")
    _add_survey_args(p)
    p.add_argument("--reference", help="variable,category,value CSV (default: bundled reference)")
    p.add_argument("--geography", help="region to audit, or 'each' for every region")
    p.add_argument("--pooled", action="store_true", help="pool categories across variables")
    p.add_argument("--synthetic-rate", type=float,
                   help="audit a sample of the synthetic fixture population drawn at this rate")
    p.add_argument("--srs", action="store_true", help="simple random instead of stratified synthetic sample")
    p.add_argument("--seed", type=int, default=SMALL_CITY.seed + 2, help="seed of the synthetic sample")
    p.set_defaults(func=cmd_rmse)

    p = sub.add_parser("od", parents=[common], help="O-D matrix with per-cell required rates")
    _add_survey_args(p, zones=True)
    p.add_argument("--figure1", action="store_true", help="use the bundled published peak matrix")
    p.add_argument("--period", choices=PERIODS)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--purpose", choices=PURPOSES)
    p.add_argument("--level", choices=("region", "zone"), default="region")
    p.add_argument("--cv", type=float, default=0.5, help="CV for the per-cell rates (default 0.5)")
    _add_spec_args(p, 0.90, 0.25)
    p.set_defaults(func=cmd_od)

    p = sub.add_parser("sweep", parents=[common], help="rates at the seven time/mode/purpose levels")
    _add_survey_args(p)
    _add_spec_args(p, 0.95, 0.05)
    p.add_argument("--population", type=float)
    p.add_argument("--cv-denominator", choices=("overall", "stratum"), default="overall")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plan", parents=[common], help="core-augment plan across regions")
    p.add_argument("--config", help="plan JSON (default: the fixture's regions, all-household augments)")
    p.add_argument("--core-rate", type=float)
    p.add_argument("--overlap-policy", choices=OVERLAP_POLICIES)
    p.add_argument("--confidence", type=float)
    p.add_argument("--e", type=float)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo coverage and MAPE")
    p.add_argument("--preset", default="coverage", help=f"population preset: {', '.join(sorted(PRESETS))}")
    p.add_argument("--config", help="JSON with 'population' (generator settings) and 'selector'")
    p.add_argument("--rate", default="analytic", help="sampling rate, or 'analytic' (default)")
    p.add_argument("--rates", help="comma-separated rates for a coverage curve")
    p.add_argument("--replications", type=int, default=2000)
    p.add_argument("--cv", type=float, default=1.0, help="CV used for the analytic rate (default 1.0)")
    _add_spec_args(p, 0.90, 0.25)
    p.add_argument("--seed", type=int, help="master sampling seed (default: population seed)")
    p.add_argument("--population-seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--period", choices=PERIODS)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--purpose", choices=PURPOSES)
    p.add_argument("--level", choices=("region", "zone"))
    p.add_argument("--cell", action="append", help="ORIGIN:DESTINATION (repeatable)")
    p.add_argument("--closest-to", type=float)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fixture", parents=[common], help="emit bundled data")
    p.add_argument("which", choices=("figure1", "synthetic"))
    p.set_defaults(func=cmd_fixture)
    return parser


def _fail(exc: BaseException, code: int, stream) -> int:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "error": {
            "type": type(exc).__name__,
            "kind": getattr(exc, "kind", "io" if isinstance(exc, OSError) else "internal"),
            "message": str(exc),
        },
        "exit_code": code,
    }
    print(json.dumps(payload), file=stream)
    return code


def main(argv: Sequence[str] | None = None, *, stdout=None, stderr=None) -> int:
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=stderr)
        handler: Callable[[argparse.Namespace, Emitter], int] = args.func
        return handler(args, Emitter(args.out, args.format, stdout))
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG, stderr)
    except (DataError, OSError, UnicodeDecodeError) as exc:
        return _fail(exc, EXIT_DATA, stderr)
    except TravelSampleError as exc:
        return _fail(exc, EXIT_INTERNAL, stderr)


if __name__ == "__main__":
    sys.exit(main())
