"""
Command-line front end: JSON in, deterministic JSON report out.

Usage:
    python -m src.cli [flags] oscillate --in target.json
    python -m src.cli --horizon 4 degrees --in sigma.json
    python -m src.cli stabilize --in map.json
    python -m src.cli lattice degree --in isometry.json
    python -m src.cli family henon

Exit codes: 0 success, 1 bad input, 2 verification failed, 3 sampling
exhausted, 4 coefficient budget exceeded.
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Literal, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import __version__
from .codec import digest, dumps, fraction_from_json, load_json, save_json
from .config import (
    DEFAULT_BUDGET_DIGITS,
    DEFAULT_HORIZON,
    DEFAULT_MAX_TRIES,
    DEFAULT_PRIME,
    DEFAULT_SAMPLE_BOX,
    DEFAULT_STABILITY_TRIALS,
    RunConfig,
)
from .cremona import BudgetExceededError, PlaneBirationalMap, degree_sequence, standard_involution
from .halphen import (
    HalphenModel,
    NSIsometry,
    NSVector,
    XI,
    conjugacy_search,
    enumerate_irr_candidates,
    horosphere_point,
    intersection,
    is_parabolic_isometry,
    isometry_degree,
    root_classes_mod_xi,
    verify_degree_identity,
)
from .oscillate import OscillationTarget, SamplingExhaustedError, synthesize_oscillation
from .stability import (
    family_fa_is_elliptic,
    linear_part_at_origin,
    make_family_fa,
    make_family_falpha,
    make_henon_map,
    make_renormalization_jonquieres,
    make_renormalization_loxodromic,
    make_renormalization_quadratic,
    renormalize_at_fixed_point,
    stabilize_by_postcomposition,
    verify_falpha_conjugacy,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_VERIFICATION_FAILED = 2
EXIT_SAMPLING_EXHAUSTED = 3
EXIT_BUDGET_EXCEEDED = 4

Rational = Union[int, str]

LATTICE_QUERIES = ("degree", "horosphere", "roots", "conjugacy")
FAMILIES = ("fa", "falpha", "henon", "sigma", "renormalize")


# input schemas

class _Schema(BaseModel):
    model_config = ConfigDict(extra="forbid")


class OscillateInput(_Schema):
    support: Dict[int, int]
    seed: Optional[int] = None
    max_tries: int = Field(default=DEFAULT_MAX_TRIES, ge=1)
    verify: Literal["both", "iterate"] = "both"


class MapInput(_Schema):
    """A map as three polynomial strings or as the JSON written by reports."""
    map: Union[List[str], Dict[str, Any]]
    trials: int = Field(default=DEFAULT_STABILITY_TRIALS, ge=1)

    def to_map(self) -> PlaneBirationalMap:
        if isinstance(self.map, list):
            return PlaneBirationalMap.parse(self.map)
        return PlaneBirationalMap.from_dict(self.map)


class IsometryInput(_Schema):
    isometry: List[List[int]]


class HorosphereInput(_Schema):
    w: List[Rational]


class RootsInput(_Schema):
    index: int = Field(default=1, ge=1)
    degree_bound: Optional[int] = Field(default=None, ge=0)


class ConjugacyInput(_Schema):
    f: List[List[int]]
    g: List[List[int]]
    model: Optional[Dict[str, Any]] = None
    linear_parts: Optional[List[List[int]]] = None


class FaInput(_Schema):
    a: Rational


class FalphaInput(_Schema):
    alpha: Rational
    q_num: List[Rational]
    q_den: List[Rational] = [1]
    m: Optional[int] = Field(default=None, ge=1)


class RenormalizeInput(_Schema):
    kind: Literal["quadratic", "loxodromic", "jonquieres"] = "quadratic"
    a: Rational
    b: Rational
    t: Rational


class CommandFailed(Exception):
    """A command produced its report but the check it ran came out false."""

    def __init__(self, result: Dict[str, Any]):
        super().__init__("verification failed")
        self.result = result


# commands

def _run_oscillate(config: RunConfig, payload: Dict[str, Any],
                   horizon: Optional[int]) -> Dict[str, Any]:
    request = OscillateInput.model_validate(payload)
    target = OscillationTarget(dict(request.support))
    result = synthesize_oscillation(
        target,
        seed=config.seed,
        box=config.sample_box,
        max_tries=request.max_tries,
        horizon=horizon,
        verify=request.verify,
        modp=config.modp_prime,
    )
    report = result.to_dict()
    if not result.verified:
        raise CommandFailed(report)
    return report


def _run_degrees(config: RunConfig, payload: Dict[str, Any]) -> Dict[str, Any]:
    f = MapInput.model_validate(payload).to_map()
    report = degree_sequence(f, config.horizon, config.modp_prime, config.coefficient_budget)
    return {"map": f.to_dict(), "report": report.to_dict()}


def _run_stabilize(config: RunConfig, payload: Dict[str, Any]) -> Dict[str, Any]:
    request = MapInput.model_validate(payload)
    f = request.to_map()
    found = stabilize_by_postcomposition(
        f,
        seed=config.seed,
        trials=request.trials,
        N=config.horizon,
        modp=config.modp_prime,
        budget=config.coefficient_budget,
    )
    if found is None:
        raise CommandFailed({"map": f.to_dict(), "found": False, "trials": request.trials})
    _, certificate = found
    return dict(certificate.to_dict(), found=True, input_map=f.to_dict())


def _isometry(rows: Sequence[Sequence[int]]) -> NSIsometry:
    return NSIsometry.from_rows(rows)


def _run_lattice(query: str, payload: Dict[str, Any]) -> Dict[str, Any]:
    if query == "degree":
        M = _isometry(IsometryInput.model_validate(payload).isometry)
        parabolic = is_parabolic_isometry(M)
        return {
            "degree": isometry_degree(M),
            "parabolic": parabolic,
            "degree_identity": verify_degree_identity(M) if parabolic else None,
        }
    if query == "horosphere":
        w = NSVector(tuple(fraction_from_json(c) for c in HorosphereInput.model_validate(payload).w))
        u = horosphere_point(w)
        return {"point": u.to_list(), "square": u.square, "xi_product": intersection(u, XI)}
    if query == "roots":
        request = RootsInput.model_validate(payload)
        if request.degree_bound is None:
            roots = root_classes_mod_xi()
        else:
            roots = enumerate_irr_candidates(request.index, request.degree_bound)
        return {"count": len(roots), "classes": [r.to_list() for r in roots]}
    request = ConjugacyInput.model_validate(payload)
    model = HalphenModel.from_dict(request.model) if request.model else None
    result = conjugacy_search(
        _isometry(request.f),
        _isometry(request.g),
        model,
        [tuple(p) for p in request.linear_parts] if request.linear_parts is not None else None,
    )
    return {"found": result is not None, "conjugacy": result.to_dict() if result else None}


def _run_family(name: str, config: RunConfig, payload: Dict[str, Any]) -> Dict[str, Any]:
    extra: Dict[str, Any] = {}
    if name == "fa":
        request = FaInput.model_validate(payload)
        f = make_family_fa(request.a)
        extra["elliptic"] = family_fa_is_elliptic(request.a)
    elif name == "falpha":
        request = FalphaInput.model_validate(payload)
        f = make_family_falpha(request.alpha, request.q_num, request.q_den)
        if request.m is not None:
            ok = verify_falpha_conjugacy(request.alpha, request.q_num, request.q_den, request.m)
            extra["conjugacy_verified"] = ok
    elif name == "henon":
        f = make_henon_map()
    elif name == "sigma":
        f = standard_involution()
    else:
        request = RenormalizeInput.model_validate(payload)
        maker = {
            "quadratic": make_renormalization_quadratic,
            "loxodromic": make_renormalization_loxodromic,
            "jonquieres": make_renormalization_jonquieres,
        }[request.kind]
        base = maker(request.a, request.b)
        f = renormalize_at_fixed_point(base, request.t)
        extra["base"] = base.to_dict()
        extra["linear_part"] = [list(row) for row in linear_part_at_origin(base).entries]
    report = degree_sequence(f, config.horizon, config.modp_prime, config.coefficient_budget)
    return dict(extra, name=name, map=f.to_dict(), report=report.to_dict())


def run(command: str, config: RunConfig, payload: Dict[str, Any],
        query: Optional[str] = None, horizon: Optional[int] = None) -> Dict[str, Any]:
    """
    Execute one command and wrap its result in a report.

    Args:
        command: oscillate, degrees, stabilize, lattice or family
        config: Shared options
        payload: Parsed JSON input
        query: Lattice query or family name
        horizon: Explicit oscillation horizon; None picks 2 * max gap + 5

    Returns:
        Dict[str, Any]: {version, command, config, result, digest}

    Raises:
        CommandFailed: When the command's own check is false
    """
    if command == "oscillate":
        seed = payload.get("seed")
        if seed is not None:
            config = config.model_copy(update={"seed": int(seed)})
        result = _run_oscillate(config, payload, horizon)
    elif command == "degrees":
        result = _run_degrees(config, payload)
    elif command == "stabilize":
        result = _run_stabilize(config, payload)
    elif command == "lattice":
        result = _run_lattice(query or "degree", payload)
    elif command == "family":
        result = _run_family(query or "sigma", config, payload)
    else:
        raise ValueError(f"unknown command {command!r}")
    return make_report(command if query is None else f"{command} {query}", config, result)


def make_report(command: str, config: RunConfig, result: Dict[str, Any]) -> Dict[str, Any]:
    body = {
        "version": __version__,
        "command": command,
        "config": config.model_dump(),
        "result": result,
    }
    # digest covers everything but itself
    return dict(body, digest=digest(body))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cremona-degrees",
        description="Degree growth of plane birational maps: synthesis, certification and lattice tools.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=0, help="Run seed for every sampling site")
    parser.add_argument("--horizon", type=int, default=None,
                        help=f"Iterates to compute (default {DEFAULT_HORIZON}; oscillate: 2*max gap+5)")
    parser.add_argument("--box", type=int, default=DEFAULT_SAMPLE_BOX,
                        help="Coordinate bound for sampled points")
    parser.add_argument("--modp", type=int, default=DEFAULT_PRIME,
                        help="Prime for the modular filter, 0 to disable")
    parser.add_argument("--budget", type=int, default=DEFAULT_BUDGET_DIGITS,
                        help="Coefficient digit budget per iterate")
    parser.add_argument("--out", default=None, help="Write the report here instead of stdout")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for progress, -vv for per-iterate detail")

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--in", dest="input_path", default=None,
                        help="Read the JSON input here instead of stdin")

    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("oscillate", parents=[source], help="Synthesize a map with prescribed degree dips")
    commands.add_parser("degrees", parents=[source], help="Degree sequence and growth class of a map")
    commands.add_parser("stabilize", parents=[source], help="Search a linear post-composition making a map stable")
    lattice = commands.add_parser("lattice", parents=[source], help="Queries on the lattice Z^{1,9}")
    lattice.add_argument("query", choices=LATTICE_QUERIES)
    family = commands.add_parser("family", parents=[source], help="Degree report of a named example map")
    family.add_argument("name", choices=FAMILIES)
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _read_input(path: Optional[str]) -> Dict[str, Any]:
    if path is not None:
        payload = load_json(path)
    else:
        text = sys.stdin.read() if sys.stdin is not None and not sys.stdin.isatty() else ""
        payload = json.loads(text) if text.strip() else {}
    if not isinstance(payload, dict):
        raise ValueError("input must be a JSON object")
    return payload


def _emit(report: Dict[str, Any], path: Optional[str]) -> None:
    if path:
        save_json(path, report)
    else:
        sys.stdout.write(dumps(report) + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    query = getattr(args, "query", None) or getattr(args, "name", None)
    try:
        config = RunConfig(
            seed=args.seed,
            horizon=args.horizon if args.horizon is not None else DEFAULT_HORIZON,
            sample_box=args.box,
            modp_prime=args.modp or None,
            coefficient_budget=args.budget,
            output_path=args.out,
        )
        payload = _read_input(args.input_path)
        report = run(args.command, config, payload, query, args.horizon)
    except CommandFailed as failed:
        logger.error("%s: verification failed", args.command)
        _emit(make_report(args.command, config, dict(failed.result, failed=True)), args.out)
        return EXIT_VERIFICATION_FAILED
    except SamplingExhaustedError as exc:
        logger.error("%s (most common failure: %s)", exc, exc.failures.most_common(1))
        return EXIT_SAMPLING_EXHAUSTED
    except BudgetExceededError as exc:
        logger.error("%s after n = %d, degrees so far %s", exc, exc.last_n, exc.degrees)
        return EXIT_BUDGET_EXCEEDED
    except (ValidationError, json.JSONDecodeError, ValueError, OSError) as exc:
        logger.error("bad input: %s", exc)
        return EXIT_BAD_INPUT
    _emit(report, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
