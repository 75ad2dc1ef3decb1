"""
Command-line front end.

    python -m whipchain <command> [--config PATH] [--state PATH] [--study PATH] [--out DIR] [--seed INT]
                                  [--format csv|csv+svg] [--threshold FLOAT] [--random K]

Every run writes its CSV (and optional SVG) artifacts to --out together with manifest.json,
which echoes the resolved configuration and the sha256 of every artifact.
Exit codes: 0 ok, 1 invalid input, 2 numerical failure, 3 acceptance threshold missed.
"""
import argparse
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from whipchain.chain.classes import ChainState, TangentVector
from whipchain.chain.core import random_state
from whipchain.chain.curvature import evaluate_section, random_section
from whipchain.chain.dynamics import simulate, suggested_dt
from whipchain.chain.tension import tension, tension_sign_probe
from whipchain.constants import DEFAULT_SEED, MANIFEST_FILENAME, ExitCode, NeumannScheme, OutputFormat, \
    StudyReference
from whipchain.convergence import AnalyticProfile, RefinementReport, comparison_study, refinement_study, \
    truncation_study
from whipchain.datatypes import AcceptanceFailure, DegeneratePlaneError, NumericalFailure, Serializable, \
    ValidationError, WhipChainError, require_fields
from whipchain.plotting import Series, emit_svg
from whipchain.utils import configure_logging, file_checksum, write_csv
from whipchain.whip.classes import ContinuumCurve, unit_grid
from whipchain.whip.continuum import constant_kappa, continuum_energy, evolve, green_table
from whipchain.whip.kink import discrete_green_limit, gravity_negative_tension_probe, kink_green_trend, \
    pivot_residuals, riccati_solve
from whipchain.whip.profiles import ProfileSpec, chain_from_profile, curve_from_profile, kappa_on_grid

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "tension", "curvature", "green", "evolve", "riccati", "kink-green", "converge", "probe")


class _Parser(argparse.ArgumentParser):
    """ argparse that reports bad usage as a ValidationError instead of exiting with status 2 """

    def error(self, message):
        raise ValidationError(f"{message}\n{self.format_usage()}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON document for the command")
    common.add_argument("--state", help="ChainState JSON, overrides the document's 'state'")
    common.add_argument("--out", dest="output_dir", help="output directory")
    common.add_argument("--seed", type=int, help="seed of the single random generator")
    common.add_argument("--format", choices=[f.value for f in OutputFormat], help="artifact format")
    common.add_argument("--study", help="study JSON, merged over the --config document (converge)")
    common.add_argument("--threshold", type=float, help="observed-order acceptance threshold (converge)")
    common.add_argument("--random", type=int, help="number of random sections (curvature)")
    common.add_argument("--probe", action="store_true", help="also write the tension sign-probe report (tension)")
    common.add_argument("--log-level", default="INFO", help="logging level")
    parser = _Parser(prog="whipchain", description="Discrete chain and continuum whip numerics")
    commands = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    commands.required = True
    for name in COMMANDS:
        commands.add_parser(name, parents=[common])
    return parser


@dataclass
class RunConfig(Serializable):
    command: str
    document: Dict[str, Any] = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    output_dir: str = "."
    format: OutputFormat = OutputFormat.CSV
    threshold: Optional[float] = None
    random: Optional[int] = None
    probe: bool = False

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        document: Dict[str, Any] = {}
        if args.config:
            document = _load_json(args.config)
        if args.study:
            document.update(_load_json(args.study))
        if args.state:
            document["state"] = ChainState.from_file(args.state).to_dict()
        try:
            output_format = OutputFormat(args.format or document.get("format", OutputFormat.CSV.value))
        except ValueError:
            raise ValidationError(f"Unknown format '{document.get('format')}'")
        threshold = args.threshold if args.threshold is not None else document.get("threshold")
        return cls(command=args.command,
                   document=document,
                   seed=int(args.seed if args.seed is not None else document.get("seed", DEFAULT_SEED)),
                   output_dir=args.output_dir or document.get("output_dir", document.get("output", ".")),
                   format=output_format,
                   threshold=None if threshold is None else float(threshold),
                   random=args.random if args.random is not None else document.get("random"),
                   probe=bool(args.probe or document.get("probe", False)))

    def to_dict(self) -> Dict[str, Any]:
        result = super().to_dict()
        result["format"] = self.format.value
        return result

    @property
    def svg(self) -> bool:
        return self.format == OutputFormat.CSV_SVG


def _load_json(file_path: str) -> Dict[str, Any]:
    try:
        with open(file_path, "r") as infile:
            data = json.loads(infile.read())
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"Cannot read {file_path}: {e}") from e
    if not isinstance(data, dict):
        raise ValidationError(f"{file_path} must contain a JSON object")
    return data


class Run:
    """ Artifact bookkeeping for one command invocation """

    def __init__(self, config: RunConfig):
        self.logger = logging.getLogger(self.__class__.__name__)
        self.config = config
        self.doc = config.document
        self.rng = np.random.default_rng(config.seed)
        self.artifacts: List[str] = []
        os.makedirs(config.output_dir, exist_ok=True)

    def path(self, name: str) -> str:
        self.artifacts.append(name)
        return os.path.join(self.config.output_dir, name)

    def csv(self, name: str, header: Sequence[str], columns: Sequence[np.ndarray]):
        write_csv(self.path(name), header, columns)

    def svg(self, name: str, series: Sequence[Series], **kwargs):
        if self.config.svg:
            emit_svg(self.path(name), series, **kwargs)

    def resolve(self, key: str, value: Any):
        """ Record a default that was filled in, so the manifest shows what actually ran """
        self.doc.setdefault(key, value)
        return self.doc[key]

    def write_manifest(self):
        checksums = {name: file_checksum(os.path.join(self.config.output_dir, name)) for name in self.artifacts}
        manifest = {"config": self.config.to_dict(), "artifacts": checksums}
        with open(os.path.join(self.config.output_dir, MANIFEST_FILENAME), "w") as outfile:
            outfile.write(json.dumps(manifest, indent=2, sort_keys=True))
        self.logger.info(f"Wrote {len(self.artifacts)} artifacts and {MANIFEST_FILENAME} to {self.config.output_dir}")

    # input helpers

    def profile(self) -> ProfileSpec:
        return ProfileSpec.from_dict(self.doc.get("profile", {}))

    def state(self) -> ChainState:
        if "state" in self.doc:
            return ChainState.from_dict(self.doc["state"])
        if "profile" in self.doc:
            require_fields(self.doc, "chain document", "n")
            return chain_from_profile(self.profile(), int(self.doc["n"]))
        raise ValidationError("Provide a chain 'state' (or --state) or a 'profile' with 'n'")

    def curve(self) -> ContinuumCurve:
        if "curve" in self.doc:
            return ContinuumCurve.from_dict(self.doc["curve"])
        return curve_from_profile(self.profile(), int(self.resolve("m", 200)))

    def kappa(self, m: int) -> np.ndarray:
        if "kappa" in self.doc:
            return constant_kappa(float(self.doc["kappa"]), m)
        if "curve" in self.doc:
            return ContinuumCurve.from_dict(self.doc["curve"]).kappa
        return kappa_on_grid(self.profile(), m)

    def scheme(self) -> NeumannScheme:
        try:
            return NeumannScheme(self.resolve("scheme", NeumannScheme.GHOST_POINT.value))
        except ValueError:
            raise ValidationError(f"Unknown Neumann scheme '{self.doc['scheme']}'")


def run_simulate(run: Run):
    state = run.state()
    dt = float(run.resolve("dt", suggested_dt(state.n)))
    trajectory = simulate(state, dt, float(run.resolve("T", 1.0)), int(run.resolve("sample_every", 1)))
    trajectory.to_csv(run.path("trajectory.csv"))
    run.svg("energy.svg", [Series("K + U", trajectory.times, trajectory.total_energy),
                           Series("min λ", trajectory.times, trajectory.min_tension)],
            title=f"Chain n={state.n}", xlabel="t")


def run_tension(run: Run):
    state = run.state()
    result = tension(state)
    result.to_csv(run.path("tension.csv"))
    if run.config.probe:
        tension_sign_probe(state).save(run.path("probe.json"))
    s = np.arange(1, state.n + 1) / state.n
    run.svg("tension.svg", [Series("σ_k = λ_k / n²", s, result.sigma)], title=f"Tension n={state.n}", xlabel="k/n")


def run_curvature(run: Run):
    fixed = "state" in run.doc or "profile" in run.doc
    samples = []
    if run.config.random:
        n = run.state().n if fixed else int(run.resolve("n", 10))
        for _ in range(run.config.random):
            state = run.state() if fixed else random_state(n, run.rng, omega_scale=0.0)
            u, v = random_section(n, run.rng)
            try:
                samples.append(evaluate_section(state, u, v))
            except DegeneratePlaneError:
                run.logger.warning("Skipping a degenerate random section")
    else:
        require_fields(run.doc, "curvature document", "eta", "xi")
        samples.append(evaluate_section(run.state(), TangentVector(run.doc["eta"]), TangentVector(run.doc["xi"])))
    if not samples:
        raise NumericalFailure("Every sampled section was degenerate")
    run.csv("curvature.csv", ["numerator", "denominator", "K"],
            [[c.numerator for c in samples], [c.denominator for c in samples], [c.K for c in samples]])


def run_green(run: Run):
    m = int(run.resolve("m", 200))
    table = green_table(run.kappa(m), run.scheme())
    table.to_csv(run.path("green.csv"))
    s = table.s
    run.svg("green.svg", [Series(f"G(s, {s[k]:.2f})", s, table.matrix[:, k]) for k in range(0, m, max(1, m // 4))],
            title=f"Green function m={m}", xlabel="s")


def run_evolve(run: Run):
    curve = run.curve()
    dt = float(run.resolve("dt", 1e-4))
    samples = evolve(curve, dt, float(run.resolve("T", 1.0)), int(run.resolve("sample_every", 100)), run.scheme())
    every = int(run.doc["sample_every"])
    steps = max(1, int(round(float(run.doc["T"]) / dt)))
    times = np.array([min(i * every, steps) * dt for i in range(len(samples))])
    energies = np.array([continuum_energy(c) for c in samples])
    run.csv("evolve.csv", ["t", "kinetic", "potential", "theta_free_end"],
            [times, energies[:, 0], energies[:, 1], [c.theta[-1] for c in samples]])
    samples[-1].to_csv(run.path("final_curve.csv"))
    run.svg("energy.svg", [Series("energy", times, energies.sum(axis=1))], title=f"Whip m={curve.m}", xlabel="t")


def run_riccati(run: Run):
    profile = run.profile()
    m = int(run.resolve("m", 1000))
    kappa = kappa_on_grid(profile, m)
    f = riccati_solve(kappa, profile.kinks)
    run.csv("riccati.csv", ["s", "kappa", "f"], [unit_grid(m), kappa, f])
    if "n" in run.doc:
        state = chain_from_profile(profile, int(run.doc["n"]))
        residual = pivot_residuals(state, profile.kinks)
        run.csv("pivot_residual.csv", ["i", "residual"], [np.arange(1, state.n + 1), residual])
    finite = np.isfinite(f)
    run.svg("riccati.svg", [Series("f", unit_grid(m)[finite], f[finite])], title="Riccati profile", xlabel="s")


def run_kink_green(run: Run):
    profile = run.profile()
    require_fields(run.doc, "kink-green document", "x", "y")
    x, y = float(run.doc["x"]), float(run.doc["y"])
    trend = kink_green_trend(x, y, profile.smooth_kappa(), profile.kinks, run.resolve("m_list", [250, 500, 1000, 2000]))
    run.csv("kink_green.csv", ["m", "epsilon", "value", "truncated"],
            [[t.m for t in trend], [t.epsilon for t in trend], [t.value for t in trend],
             [float(t.truncated) for t in trend]])
    n_list = run.resolve("n_list", [50, 100, 200, 400, 800])
    limits = discrete_green_limit(profile, x, y, n_list)
    run.csv("green_limit.csv", ["n", "value"], [n_list, limits])
    run.svg("green_limit.svg", [Series("(1/n) M^ij", n_list, limits)], title=f"Green limit at ({x}, {y})", xlabel="n")


def _green_limit_report(run: Run) -> List[RefinementReport]:
    profile = run.profile()
    x, y = float(run.resolve("x", 0.3)), float(run.resolve("y", 0.6))
    n_list = run.resolve("n_list", [50, 100, 200, 400, 800])
    m = int(run.resolve("m", 1600))
    reference = green_table(kappa_on_grid(profile, m)).at(x, y)
    limits = discrete_green_limit(profile, x, y, n_list)
    return [RefinementReport.from_levels(n_list, [abs(v - reference) for v in limits], label="green limit")]


def _study_reports(run: Run) -> List[RefinementReport]:
    study = run.resolve("study", "truncation")
    if study == "truncation":
        theta = AnalyticProfile.from_dict(run.resolve("theta", {"type": "sine"}))
        sigma = AnalyticProfile.from_dict(run.resolve("sigma", {"type": "polynomial", "coefficients": [1, -2, 1]}))
        return list(truncation_study(theta, sigma, run.resolve("n_list", [100, 200, 400, 800])))
    if study == "refinement":
        try:
            reference = StudyReference(run.resolve("reference", StudyReference.FINEST.value))
        except ValueError:
            raise ValidationError(f"Unknown study reference '{run.doc['reference']}'")
        return [refinement_study(run.profile(), run.resolve("n_list", [8, 16, 32, 64]), float(run.resolve("T", 0.5)),
                                 reference=reference, m=run.doc.get("m"))]
    if study == "comparison":
        return list(comparison_study(run.profile(), run.resolve("n_list", [25, 50, 100, 200]),
                                     int(run.resolve("m", 800)), float(run.resolve("interior", 0.1))))
    if study == "green-limit":
        return _green_limit_report(run)
    raise ValidationError(f"Unknown study '{study}'")


def run_converge(run: Run):
    reports = _study_reports(run)
    threshold = run.config.threshold
    for report in reports:
        name = report.label.replace(" ", "_")
        report.to_csv(run.path(f"{name}.csv"))
        run.svg(f"{name}.svg", [Series(report.label, report.resolutions, report.errors)], loglog=True,
                title=report.label, xlabel="resolution", ylabel="error",
                annotation=f"observed order {report.observed_order:.3f}")
    if threshold is not None:
        failed = [r for r in reports if not r.meets(threshold)]
        if failed:
            run.write_manifest()
            raise AcceptanceFailure("; ".join(f"{r.label}: order {r.observed_order:.3f} < {threshold}"
                                              for r in failed))


def run_probe(run: Run):
    if "theta1" in run.doc:
        n = int(run.resolve("n", 10))
        lam_1 = gravity_negative_tension_probe(float(run.doc["theta1"]), n)
        run.csv("gravity_probe.csv", ["theta1", "n", "lambda_1"], [[float(run.doc["theta1"])], [n], [lam_1]])
        return
    report = tension_sign_probe(run.state())
    pairs = np.array(report.negative_pairs, dtype=float).reshape(-1, 3)
    run.csv("probe.csv", ["i", "j", "lambda_i"], list(pairs.T))
    report.save(run.path("probe.json"))


HANDLERS: Dict[str, Callable[[Run], None]] = {
    "simulate": run_simulate,
    "tension": run_tension,
    "curvature": run_curvature,
    "green": run_green,
    "evolve": run_evolve,
    "riccati": run_riccati,
    "kink-green": run_kink_green,
    "converge": run_converge,
    "probe": run_probe,
}


def dispatch(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except ValidationError as e:
        print(str(e))
        return ExitCode.VALIDATION_ERROR
    try:
        configure_logging(args.log_level.upper())
    except ValueError:
        print(f"Unknown log level '{args.log_level}'")
        return ExitCode.VALIDATION_ERROR
    try:
        config = RunConfig.from_args(args)
        run = Run(config)
        HANDLERS[config.command](run)
        run.write_manifest()
    except ValidationError as e:
        logger.error(f"Invalid input: {e}")
        return ExitCode.VALIDATION_ERROR
    except AcceptanceFailure as e:
        logger.error(f"Acceptance threshold missed: {e}")
        return ExitCode.ACCEPTANCE_FAILURE
    except NumericalFailure as e:
        logger.error(f"Numerical failure: {e}")
        return ExitCode.NUMERICAL_FAILURE
    except WhipChainError as e:
        logger.error(f"{e}")
        return ExitCode.NUMERICAL_FAILURE
    return ExitCode.OK
