"""Command-line front end.

Every subcommand reads a problem file (``--arena``) or a bundled example
(``--fixture``), computes, and writes JSON, CSV or model text to stdout or
``--out``.  Output is deterministic; wall-clock timing is added only with
``--timing``.

Exit codes: 0 success, 1 bad input, 2 no convergence, 3 invariant or
constraint violation found by ``check``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import __version__
from .buchi import buchi_levels, buchi_threshold, bounded_buchi_threshold, cobuchi_threshold
from .core import Configuration, Objective, ObjectiveKind
from .errors import BidChargeError, NotConverged
from .export import (
    ident,
    check_model_residual,
    emit,
    export_buchi_bilevel,
    export_reach_etr,
    export_reach_milp,
    parse,
)
from .fixpoint import ThresholdVector, limit_threshold, limit_trace, threshold_levels
from .io import Problem, fixture_path, load_problem, loads_json, parse_mechanism, parse_objective, parse_objective_spec, problem_to_dict
from .numeric import as_fraction, format_number, to_json_number
from .reduction import TurnBasedArena, reduce_turn_based, solve_turn_based
from .repair import RepairInstance, repair_search
from .strategy import ADVERSARIES, ThresholdStrategy, certify_invariant, simulate

EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_VIOLATION = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


class _Violation(Exception):
    """Raised after writing output when ``check`` found violations."""


@dataclass
class RunReport:
    command: str
    input_digest: str | None
    mode: str
    eps: float
    result: object
    timing: float | None = field(default=None)

    def to_json(self) -> str:
        out = {
            "command": self.command,
            "input_digest": self.input_digest,
            "mode": self.mode,
            "eps": self.eps,
            "result": self.result,
        }
        if self.timing is not None:
            out["timing_seconds"] = round(self.timing, 6)
        return json.dumps(out, indent=2) + "\n"


# --- argument parsing ---------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run options")
    g.add_argument("--mode", choices=("exact", "approx"), default="exact")
    g.add_argument("--eps", type=float, default=1e-9, help="convergence tolerance in approx mode")
    g.add_argument("--max-iter", type=int, default=10**6, dest="max_iter")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, help="write the result here instead of stdout")
    g.add_argument("--timing", action="store_true", help="include wall-clock time in JSON output")
    return p


def _problem_args() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("problem")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--arena", type=Path, help="problem file (JSON)")
    src.add_argument("--fixture", help="name of a bundled example arena")
    g.add_argument("--objective", help="override the file's objective, e.g. reach:d or buchi:t")
    g.add_argument("--mechanism", help="richman, poorman or taxman:<rate>")
    g.add_argument("--player", type=int, choices=(1, 2), default=1)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bidcharge", description="Threshold budgets of bidding games with charging.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common, problem = _common(), _problem_args()

    p = sub.add_parser("solve", parents=[common, problem], help="compute a threshold vector")
    p.add_argument("--horizon", type=int, help="bounded horizon (reach) or visit bound (Büchi)")
    p.add_argument("--max-k", type=int, default=10**4, dest="max_k", help="level cap for Büchi objectives")
    p.add_argument("--decide", action="store_true", help="print ACCEPT iff Player 1's threshold at --vertex is <= 1/2")
    p.add_argument("--vertex")

    p = sub.add_parser("table", parents=[common, problem], help="per-level thresholds or convergence series")
    p.add_argument("--horizon", type=int, default=6)
    p.add_argument("--format", choices=("csv", "plotdata"), default="csv")

    p = sub.add_parser("simulate", parents=[common, problem], help="play a threshold strategy against adversaries")
    p.add_argument("--vertex", required=True)
    p.add_argument("--b1", help="Player 1's initial budget; default: protagonist threshold + --margin")
    p.add_argument("--margin", default="0.01")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--adversary", default="all", help=f"one of {', '.join(ADVERSARIES)} or 'all'")
    p.add_argument("--horizon", type=int, help="use the level-indexed reachability strategy with this horizon")

    p = sub.add_parser("repair", parents=[common, problem], help="search Player 1 charge additions")
    p.add_argument("--vertex", required=True)
    p.add_argument("--budget", required=True, help="repair budget C")
    p.add_argument("--target", default="1/2")
    p.add_argument("--grid", default="1/4")
    p.add_argument("--support", type=int, default=3)
    p.add_argument("--cap", type=int, default=10**6)

    p = sub.add_parser("reduce", parents=[common], help="turn-based game to bidding game with charging")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--solve", action="store_true", help="also report turn-based winners and reduced thresholds")

    p = sub.add_parser("export", parents=[common, problem], help="write MILP, ETR or Büchi model text")
    p.add_argument("--kind", choices=("milp", "etr", "buchi"), required=True)
    p.add_argument("--query", help="vertex whose threshold the formula asks about")

    p = sub.add_parser("check", parents=[common], help="certify the strategy invariant or a model assignment")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--arena", type=Path)
    src.add_argument("--fixture")
    src.add_argument("--model", type=Path, help="LP or SMT-LIB file; the assignment must name every variable")
    p.add_argument("--assignment", type=Path, help="JSON object of values to check against a model")
    p.add_argument("--kind", choices=("milp", "etr", "buchi"), help="rebuild this model from the arena")
    p.add_argument("--objective")
    p.add_argument("--mechanism")
    p.add_argument("--player", type=int, choices=(1, 2), default=1)
    p.add_argument("--vector", type=Path, help="JSON threshold values to certify instead of the computed ones")
    p.add_argument("--margin", default="0.01")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--steps", type=int)
    return parser


# --- helpers --------------------------------------------------------------------------


def _load(args) -> Problem:
    path = args.arena if args.arena is not None else fixture_path(args.fixture)
    prob = load_problem(path)
    objective = parse_objective_spec(args.objective).validate(prob.arena) if args.objective else prob.objective
    if objective is None:
        raise BidChargeError("no objective: give --objective or put one in the problem file")
    mech = parse_mechanism(args.mechanism) if args.mechanism else prob.mechanism
    return Problem(prob.arena, objective, mech, prob.raw, prob.digest)


def _kw(args) -> dict:
    return {"exact": args.mode == "exact", "eps": args.eps, "max_iterations": args.max_iter}


def _vector_json(f: ThresholdVector) -> dict:
    return {
        "player": f.player,
        "horizon": f.horizon,
        "iterations": f.iterations,
        "residual": to_json_number(f.residual),
        "exact": f.exact,
        "values": {v: to_json_number(x) for v, x in zip(f.vertices, f.values)},
    }


def _threshold(prob: Problem, args, player: int) -> ThresholdVector:
    arena, mech, obj = prob.arena, prob.mechanism, prob.objective
    kw = _kw(args)
    horizon = getattr(args, "horizon", None)
    kind = obj.kind
    if kind in (ObjectiveKind.BUCHI, ObjectiveKind.BOUNDED_BUCHI):
        k = obj.bound if kind is ObjectiveKind.BOUNDED_BUCHI else horizon
        if k is not None:
            return bounded_buchi_threshold(arena, mech, obj.vertices, k, player, exact=kw["exact"], eps=args.eps)
        return buchi_threshold(arena, mech, obj.vertices, player, max_k=getattr(args, "max_k", 10**4), **kw)
    if kind is ObjectiveKind.COBUCHI:
        return cobuchi_threshold(arena, mech, obj.vertices, player, max_k=getattr(args, "max_k", 10**4), **kw)
    if kind is ObjectiveKind.BOUNDED_REACH or horizon is not None:
        return threshold_levels(arena, mech, obj, player, horizon, kw["exact"])[-1]
    return limit_threshold(arena, mech, obj, player, **kw)


def _write(args, text: str) -> None:
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)


def _report(args, digest, result, started) -> str:
    timing = time.perf_counter() - started if args.timing else None
    return RunReport(args.command, digest, args.mode, args.eps, result, timing).to_json()


# --- subcommands ------------------------------------------------------------------------


def cmd_solve(args, started) -> None:
    prob = _load(args)
    if args.decide:
        if not args.vertex:
            raise BidChargeError("--decide needs --vertex")
        f = _threshold(prob, args, 1)
        value = f[args.vertex]
        verdict = "ACCEPT" if value <= Fraction(1, 2) else "REJECT"
        _write(args, f"{verdict} {args.vertex} {format_number(value)}\n")
        return
    f = _threshold(prob, args, args.player)
    result = {
        "objective": prob.objective.to_dict(prob.arena),
        "mechanism": prob.mechanism.to_dict(),
        "threshold": _vector_json(f),
    }
    _write(args, _report(args, prob.digest, result, started))


def cmd_table(args, started) -> None:
    prob = _load(args)
    arena, mech, obj = prob.arena, prob.mechanism, prob.objective
    exact = args.mode == "exact"
    buchi = obj.kind in (ObjectiveKind.BUCHI, ObjectiveKind.BOUNDED_BUCHI)
    if args.format == "csv":
        if buchi:
            rows = []
            for level in buchi_levels(arena, mech, obj.vertices, exact=exact, eps=args.eps):
                rows.append(level.vector(args.player))
                if level.k >= args.horizon:
                    break
        else:
            rows = threshold_levels(arena, mech, obj, args.player, args.horizon, exact)
        lines = ["t," + ",".join(arena.vertices)]
        lines += [f"{f.horizon}," + ",".join(format_number(x) for x in f.values) for f in rows]
        _write(args, "\n".join(lines) + "\n")
        return
    if buchi:
        f = buchi_threshold(arena, mech, obj.vertices, args.player, **_kw(args))
        series = f.history
    elif obj.kind in (ObjectiveKind.REACH, ObjectiveKind.FRUGAL_REACH):
        f, _ = limit_trace(arena, mech, obj, args.player, **_kw(args))
        series = f.history
    else:
        f = limit_threshold(arena, mech, obj, args.player, **_kw(args))
        series = f.history
    lines = ["iteration,sup_step"] + [f"{i},{x!r}" for i, x in enumerate(series)]
    _write(args, "\n".join(lines) + "\n")


def _strategy(prob: Problem, args, f: ThresholdVector):
    if args.horizon is not None and args.player == 1:
        return ThresholdStrategy.reach_levels(prob.arena, prob.mechanism, prob.objective, args.horizon, exact=False)
    if prob.objective.kind is ObjectiveKind.BUCHI and args.player == 1:
        return ThresholdStrategy.buchi_two_phase(prob.arena, prob.mechanism, f, prob.objective.vertices)
    return ThresholdStrategy.from_limit(f, prob.arena, prob.mechanism)


def cmd_simulate(args, started) -> None:
    import random

    prob = _load(args)
    f = _threshold(prob, argparse.Namespace(**{**vars(args), "horizon": None}), args.player).to_float()
    me = _strategy(prob, args, f)
    if args.b1 is not None:
        b1 = float(as_fraction(args.b1))
    else:
        mine = min(1.0, f[args.vertex] + float(as_fraction(args.margin)))
        b1 = mine if args.player == 1 else 1 - mine
    names = list(ADVERSARIES) if args.adversary == "all" else [args.adversary]
    unknown = [n for n in names if n not in ADVERSARIES]
    if unknown:
        raise BidChargeError(f"unknown adversary {unknown[0]!r}")
    lines = []
    for name in names:
        adv = ADVERSARIES[name](3 - args.player, f, prob.arena, float(as_fraction(args.margin)))
        for trial in range(args.trials):
            s1, s2 = (me, adv) if args.player == 1 else (adv, me)
            rec = simulate(
                prob.arena,
                prob.mechanism,
                prob.objective,
                s1,
                s2,
                Configuration(args.vertex, b1),
                args.steps,
                rng=random.Random(f"{args.seed}:{name}:{trial}"),
            )
            lines.append(json.dumps({"adversary": name, "trial": trial, **rec.to_dict()}))
    _write(args, "\n".join(lines) + "\n")


def cmd_repair(args, started) -> None:
    prob = _load(args)
    inst = RepairInstance(prob.arena, args.vertex, prob.objective, prob.mechanism, args.budget, args.target)
    res = repair_search(inst, as_fraction(args.grid), args.support, args.cap, exact=args.mode == "exact")
    result = {
        "found": res.found,
        "delta": {v: format_number(x) for v, x in res.delta.items()},
        "achieved": to_json_number(res.achieved),
        "target": format_number(inst.target),
        "verified": res.verified,
        "candidates_evaluated": res.candidates,
        "search_space": res.search_space,
        "grid": format_number(res.grid),
    }
    _write(args, _report(args, prob.digest, result, started))


def cmd_reduce(args, started) -> None:
    raw = loads_json(args.input.read_text())
    tb = TurnBasedArena.from_dict(raw)
    if not raw.get("objective"):
        raise BidChargeError("turn-based input needs an objective")
    objective = parse_objective(raw["objective"])
    arena, phi = reduce_turn_based(tb, objective)
    doc = problem_to_dict(arena, phi, parse_mechanism(raw.get("mechanism")))
    if args.solve:
        from .reduction import reduced_thresholds

        doc["turn_based_winner"] = solve_turn_based(tb, objective)
        doc["reduced_thresholds"] = {
            v: to_json_number(x)
            for v, x in reduced_thresholds(tb, objective, parse_mechanism(raw.get("mechanism")), **_kw(args)).items()
        }
    _write(args, json.dumps(doc, indent=2) + "\n")


def _build_model(prob: Problem, kind: str, query: str | None = None):
    obj = prob.objective
    if kind == "milp":
        if obj.kind is not ObjectiveKind.REACH:
            raise BidChargeError("the MILP export encodes reachability objectives")
        return export_reach_milp(prob.arena, obj.vertices, prob.mechanism)
    if kind == "etr":
        if obj.kind is not ObjectiveKind.REACH:
            raise BidChargeError("the ETR export encodes reachability objectives")
        return export_reach_etr(prob.arena, obj.vertices, prob.mechanism, query)
    if obj.kind is not ObjectiveKind.BUCHI:
        raise BidChargeError("the Büchi export needs a Büchi objective")
    return export_buchi_bilevel(prob.arena, obj.vertices, prob.mechanism, query)


def cmd_export(args, started) -> None:
    _write(args, emit(_build_model(_load(args), args.kind, args.query)))


def _check_assignment(args, started) -> None:
    values = loads_json(args.assignment.read_text())
    if not isinstance(values, dict):
        raise BidChargeError("the assignment must be a JSON object")
    if args.model is not None:
        model, digest = parse(args.model.read_text()), None
    else:
        if args.kind is None:
            raise BidChargeError("--assignment with an arena needs --kind")
        prob = _load(args)
        model, digest = _build_model(prob, args.kind), prob.digest
        # plain vertex ids stand for the threshold variables h_<id>
        values = {(f"h_{ident(k)}" if k in prob.arena.vertices else k): x for k, x in values.items()}
    rep = check_model_residual(model, {k: as_fraction(x) for k, x in values.items()})
    result = {
        "satisfied": len(rep.satisfied),
        "violated": [{"constraint": n, "slack": format_number(s)} for n, s in rep.violated],
        "unchecked": rep.unchecked,
    }
    _write(args, _report(args, digest, result, started))
    if rep.violated:
        raise _Violation


def cmd_check(args, started) -> None:
    if args.assignment is not None:
        _check_assignment(args, started)
        return
    if args.model is not None:
        raise BidChargeError("--model needs --assignment")
    prob = _load(args)
    f = _threshold(prob, argparse.Namespace(**{**vars(args), "horizon": None, "max_k": 10**4}), args.player)
    if args.vector is not None:
        given = loads_json(args.vector.read_text())
        f = f.replace(values=tuple(as_fraction(given.get(v, x)) for v, x in zip(f.vertices, f.values)))
    strategy = None
    if prob.objective.kind is ObjectiveKind.BUCHI and args.player == 1:
        strategy = ThresholdStrategy.buchi_two_phase(prob.arena, prob.mechanism, f.to_float(), prob.objective.vertices)
    rep = certify_invariant(
        prob.arena,
        prob.mechanism,
        f,
        args.player,
        eps=float(as_fraction(args.margin)),
        trials=args.trials,
        step_limit=args.steps,
        seed=args.seed,
        strategy=strategy,
    )
    result = {
        "player": rep.player,
        "trials_per_adversary": rep.runs,
        "violations": len(rep.violations),
        "first_violation": rep.violations[0].to_dict() if rep.violations else None,
    }
    _write(args, _report(args, prob.digest, result, started))
    if rep.violations:
        raise _Violation


COMMANDS = {
    "solve": cmd_solve,
    "table": cmd_table,
    "simulate": cmd_simulate,
    "repair": cmd_repair,
    "reduce": cmd_reduce,
    "export": cmd_export,
    "check": cmd_check,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            COMMANDS[args.command](args, started)
    except _Violation:
        return EXIT_VIOLATION
    except NotConverged as exc:
        print(f"bidcharge: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (BidChargeError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"bidcharge: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
