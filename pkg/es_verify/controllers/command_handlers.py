# controllers/command_handlers.py
import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, List, Optional

from es_verify.config import AppConfig
from es_verify.domain import (
    EsParams,
    EventType,
    IEventBus,
    SigmaGrid,
    StoppingRule,
    SuccessMode,
    UsageError,
)
from es_verify.services.core import publish
from es_verify.services.error_handler import EXIT_FAILURE, EXIT_OK, ErrorHandler
from es_verify.services.es_core import es_run
from es_verify.services.estimators import (
    estimate_cumulative_success,
    estimate_eta,
    estimate_success_curve,
    estimate_success_exponent,
    estimate_suboptimality,
    estimate_xi,
)
from es_verify.services.experiments import (
    REPLICATE_COLUMNS,
    preset_names,
    replicate_rows,
    report_to_dict,
    run_experiment,
    run_preset,
    write_experiment_outputs,
)
from es_verify.services.objectives import list_objectives, make_objective
from es_verify.services.theory_checks import CHECK_IDS, build_check_suite, run_check, run_check_job
from es_verify.utils.parallel import ordered_map
from es_verify.utils.rng import derive_seed
from es_verify.utils.serialization import (
    dumps,
    parse_assignments,
    parse_vector,
    rows_to_csv_text,
    to_plain,
    trace_csv_header,
    trace_csv_row,
    trace_jsonl_lines,
    write_json,
    write_jsonl,
    write_rows_csv,
    write_trace_csv,
    write_trace_jsonl,
)
from .interfaces import ICommandHandler

OUTPUT_FORMATS = ("json", "jsonl", "csv")


@dataclass
class CliContext:
    """State shared by the handlers; filled in once arguments are parsed."""
    event_bus: IEventBus
    error_handler: ErrorHandler
    config: Optional[AppConfig] = None
    output_format: str = "json"
    out: Optional[str] = None
    jobs: int = 0
    seed: int = 0


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    if isinstance(value, float):
        return repr(value)
    return value


def tabulate(items: Iterable[Any]) -> tuple:
    """Header and rows for a list of records; nested values become JSON cells."""
    plain = [to_plain(item) for item in items]
    header: List[str] = []
    for item in plain:
        for key in item:
            if key not in header:
                header.append(key)
    rows = [[_cell(item.get(key)) for key in header] for item in plain]
    return header, rows


class BaseCommandHandler(ICommandHandler):
    def __init__(self, context: CliContext):
        self.context = context
        self.logger = logging.getLogger(__name__)

    @property
    def config(self) -> AppConfig:
        return self.context.config

    def emit(self, value: Any) -> None:
        """Write one result, or a list of results, in the selected format."""
        fmt, out = self.context.output_format, self.context.out
        items = value if isinstance(value, list) else [value]
        if fmt == "json":
            if out:
                write_json(value, out)
            else:
                sys.stdout.write(json.dumps(to_plain(value), sort_keys=True, indent=2) + "\n")
        elif fmt == "jsonl":
            if out:
                write_jsonl(items, out)
            else:
                sys.stdout.write("".join(dumps(item) + "\n" for item in items))
        else:
            header, rows = tabulate(items)
            if out:
                write_rows_csv(header, rows, out)
            else:
                sys.stdout.write(rows_to_csv_text(header, rows))
        if out:
            self.logger.info(f"Wrote {len(items)} record(s) to {out}")

    @staticmethod
    def vector(text: Optional[str], flag: str):
        if text is None:
            raise UsageError(f"{flag} is required")
        return parse_vector(text)


class RunHandler(BaseCommandHandler):
    name = "run"
    help = "run the (1+1)-ES once and write its trace"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--objective", required=True, help="objective spec, e.g. sphere:d=2")
        parser.add_argument("--m0", required=True, help="initial mean, comma-separated")
        parser.add_argument("--sigma0", type=float, required=True)
        parser.add_argument("--max-iters", type=int, default=10000)
        parser.add_argument("--f-target", type=float)
        parser.add_argument("--sigma-floor", type=float)
        parser.add_argument("--stall-window", type=int)
        parser.add_argument("--divergence-radius", type=float)
        parser.add_argument("--divergence-level", type=float)
        parser.add_argument("--c-plus", type=float)
        parser.add_argument("--c-minus", type=float)
        parser.add_argument("--tau", type=float, help="target success rate; solves c_minus from c_plus")
        parser.add_argument("--record-stride", type=int, default=1)

    def params(self, args: argparse.Namespace) -> EsParams:
        c_plus = args.c_plus if args.c_plus is not None else self.config.es.c_plus
        if args.tau is not None:
            if args.c_minus is not None:
                raise UsageError("--tau and --c-minus are mutually exclusive")
            return EsParams.with_tau(args.tau, c_plus)
        c_minus = args.c_minus if args.c_minus is not None else self.config.es.c_minus
        return EsParams(c_plus, c_minus)

    def execute(self, args: argparse.Namespace) -> int:
        objective = make_objective(args.objective)
        params = self.params(args)
        stopping = StoppingRule(
            max_iterations=args.max_iters,
            f_target=args.f_target,
            sigma_floor=args.sigma_floor,
            stall_window=args.stall_window if args.stall_window is not None else self.config.experiments.stall_window,
            divergence_radius=args.divergence_radius,
            divergence_level=args.divergence_level,
        )
        trace = es_run(params, objective, (self.vector(args.m0, "--m0"), args.sigma0), stopping,
                       self.context.seed, args.record_stride, self.context.event_bus)
        final = trace.final_state
        summary = {
            "objective": trace.objective_id,
            "seed": trace.seed,
            "params": params.to_dict(),
            "tau": params.tau,
            "stopping": stopping.to_dict(),
            "outcome": trace.outcome.value,
            "stop_reason": trace.stop_reason.value,
            "iterations": final.t,
            "accepted": trace.accepted_count,
            "final_m": final.m,
            "final_f": final.f,
            "final_sigma": final.sigma,
        }
        self.write_trace(trace, summary)
        return EXIT_OK

    def write_trace(self, trace, summary: Dict[str, Any]) -> None:
        fmt, out = self.context.output_format, self.context.out
        if out is None:
            if fmt == "json":
                sys.stdout.write(json.dumps(to_plain(summary), sort_keys=True, indent=2) + "\n")
            elif fmt == "jsonl":
                sys.stdout.write("".join(line + "\n" for line in trace_jsonl_lines(trace)))
            else:
                rows = (trace_csv_row(r) for r in trace.records)
                sys.stdout.write(rows_to_csv_text(trace_csv_header(trace.initial_state.dimension), rows))
            return
        if fmt == "json":
            write_json({"summary": summary, "records": [r.to_dict() for r in trace.records]}, out)
        elif fmt == "jsonl":
            write_trace_jsonl(trace, out)
        else:
            write_trace_csv(trace, out)
        sys.stdout.write(json.dumps(to_plain(summary), sort_keys=True, indent=2) + "\n")
        self.logger.info(f"Wrote trace of {len(trace.records)} records to {out}")


class EstimateHandler(BaseCommandHandler):
    name = "estimate"
    help = "Monte Carlo estimates of success probabilities, suboptimality and step-size ranges"
    QUANTITIES = ("success", "suboptimality", "xi", "eta", "exponent", "cumulative")

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--what", choices=self.QUANTITIES, required=True)
        parser.add_argument("--objective", required=True)
        parser.add_argument("--m", help="point, comma-separated")
        parser.add_argument("--sigma", help="step size; a comma-separated list gives a success curve")
        parser.add_argument("--n", type=int)
        parser.add_argument("--mode", choices=[m.value for m in SuccessMode])
        parser.add_argument("--p", type=float, help="success-probability level for xi and eta")
        parser.add_argument("--sigma-min", type=float, default=1e-6)
        parser.add_argument("--sigma-max", type=float, default=1e-2)
        parser.add_argument("--points", type=int, default=13)
        parser.add_argument("--sigma0", type=float, help="start of the rejection ladder")
        parser.add_argument("--horizon", type=int)

    def execute(self, args: argparse.Namespace) -> int:
        objective = make_objective(args.objective)
        settings = self.config.estimators
        seed = self.context.seed
        m = self.vector(args.m, "--m")
        what = args.what

        if what == "success":
            sigmas = self.vector(args.sigma, "--sigma")
            mode = SuccessMode(args.mode or "strict")
            results = estimate_success_curve(m, sigmas, objective, args.n or settings.success_samples, mode,
                                             seed, settings.confidence, settings.chunk_size)
            result: Any = results[0] if len(results) == 1 else results
        elif what == "suboptimality":
            result = estimate_suboptimality(m, objective, n=args.n or settings.suboptimality_samples, seed=seed,
                                            mode=SuccessMode(args.mode or "strict"),
                                            confidence=settings.confidence, chunk_size=settings.chunk_size,
                                            boundary_margin=settings.boundary_margin)
        elif what in ("xi", "eta"):
            if args.p is None:
                raise UsageError(f"--p is required for {what}")
            grid = SigmaGrid.around(m, settings.grid_floor_factor, settings.grid_ceiling_factor,
                                    settings.grid_points)
            estimator = estimate_xi if what == "xi" else estimate_eta
            result = estimator(m, args.p, objective, grid, args.n or settings.per_point_budget, seed,
                               settings.confidence, settings.bisection_steps)
        elif what == "exponent":
            result = estimate_success_exponent(m, objective, args.sigma_min, args.sigma_max, args.points,
                                               args.n or settings.success_samples, seed,
                                               SuccessMode(args.mode or "weak"), settings.confidence)
        else:
            if args.sigma0 is None:
                raise UsageError("--sigma0 is required for cumulative")
            result = estimate_cumulative_success(m, objective, args.sigma0, self.config.es.c_minus,
                                                 args.horizon, args.n or 20000, seed,
                                                 self.config.experiments.sigma_floor)

        publish(self.context.event_bus, EventType.ESTIMATE_COMPLETED, what=what, objective=objective.id)
        self.emit(result)
        return EXIT_OK


class VerifyHandler(BaseCommandHandler):
    name = "verify"
    help = "run one bound check, or the configured verification suite"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--check", help=f"one of: {', '.join(CHECK_IDS)}; omit to run the suite")
        parser.add_argument("--objective")
        parser.add_argument("--m")
        parser.add_argument("--sigma", type=float)
        parser.add_argument("--p", type=float)
        parser.add_argument("--a", type=float)
        parser.add_argument("--p-t", type=float)
        parser.add_argument("--p-h", type=float)
        parser.add_argument("--kind")
        parser.add_argument("--n", type=int)
        parser.add_argument("--param", action="append", metavar="KEY=VALUE",
                            help="extra check parameter, JSON-decoded when possible")

    def _first_probe(self, objective_id: str) -> Dict[str, Any]:
        for spec, probes in self.config.checks.probes.items():
            if probes and make_objective(spec).id == objective_id:
                return dict(probes[0])
        return {}

    def _params(self, args: argparse.Namespace, objective) -> Dict[str, Any]:
        params = self._first_probe(objective.id) if objective is not None else {}
        if args.m is not None:
            params["m"] = self.vector(args.m, "--m").tolist()
        flags = {"sigma": args.sigma, "p": args.p, "a": args.a, "p_t": args.p_t, "p_h": args.p_h,
                 "kind": args.kind, "n": args.n}
        params.update({key: value for key, value in flags.items() if value is not None})
        params.update(parse_assignments(args.param))
        return params

    def execute(self, args: argparse.Namespace) -> int:
        if args.check is not None:
            if args.check not in CHECK_IDS:
                raise UsageError(f"unknown check {args.check!r}; valid checks: {', '.join(CHECK_IDS)}")
            objective = make_objective(args.objective) if args.objective else None
            report = run_check(args.check, objective, self._params(args, objective), self.context.seed,
                               self.config.checks, self.config.estimators)
            reports = [report]
            self.emit(report)
        else:
            reports = self.run_suite(args.objective)
            self.emit(reports)

        for report in reports:
            publish(self.context.event_bus, EventType.CHECK_COMPLETED, check=report.check_id,
                    passed=report.passed, slack=report.slack)
        failed = [r.check_id for r in reports if not r.passed]
        if failed:
            self.logger.warning(f"{len(failed)} of {len(reports)} checks failed: {failed}")
            return EXIT_FAILURE
        return EXIT_OK

    def run_suite(self, objective_spec: Optional[str]) -> List[Any]:
        jobs = build_check_suite(self.config.checks)
        if objective_spec:
            wanted = make_objective(objective_spec).id
            jobs = [job for job in jobs if job.get("objective") and make_objective(job["objective"]).id == wanted]
        checks, estimators = asdict(self.config.checks), asdict(self.config.estimators)
        for index, job in enumerate(jobs):
            job.update(seed=derive_seed(self.context.seed, index), checks=checks, estimators=estimators)
        self.logger.info(f"Running {len(jobs)} checks")
        return ordered_map(run_check_job, jobs, self.context.jobs)


class ExperimentHandler(BaseCommandHandler):
    name = "experiment"
    help = "run a replicated experiment from a preset or a JSON definition"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument("--preset", help="name of a preset from the defaults file")
        source.add_argument("--file", help="JSON experiment definition or bare ExperimentConfig")
        source.add_argument("--list-presets", action="store_true")

    def _load(self, path: str) -> Dict[str, Any]:
        try:
            with open(path, encoding="utf-8") as handle:
                return json.load(handle)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read experiment file {path}: {e}") from e

    def execute(self, args: argparse.Namespace) -> int:
        if args.list_presets:
            self.emit([{"preset": name, "suite": self.config.experiments.presets[name].get("suite")}
                       for name in preset_names(self.config)])
            return EXIT_OK
        bus, jobs = self.context.event_bus, self.context.jobs
        if args.preset:
            report = run_preset(args.preset, self.config, jobs, bus)
        else:
            report = run_experiment(self._load(args.file), self.config, jobs, bus)

        fmt, out = self.context.output_format, self.context.out
        if out:
            written = write_experiment_outputs(report, out)
            sys.stdout.write(json.dumps(to_plain({"name": report.name, "passed": report.passed,
                                                  "assertions": report.assertions,
                                                  "files": {k: str(v) for k, v in written.items()}}),
                                        sort_keys=True, indent=2) + "\n")
        elif fmt == "json":
            sys.stdout.write(json.dumps(report_to_dict(report), sort_keys=True, indent=2) + "\n")
        elif fmt == "jsonl":
            sys.stdout.write("".join(dumps(r) + "\n" for r in report.replicates))
        else:
            sys.stdout.write(rows_to_csv_text(REPLICATE_COLUMNS, replicate_rows(report)))
        return EXIT_OK if report.passed else EXIT_FAILURE


class ListObjectivesHandler(BaseCommandHandler):
    name = "list-objectives"
    help = "list registered objectives with their parameters and analytic hooks"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        pass

    def execute(self, args: argparse.Namespace) -> int:
        self.emit(list_objectives())
        return EXIT_OK


HANDLERS = (RunHandler, EstimateHandler, VerifyHandler, ExperimentHandler, ListObjectivesHandler)
