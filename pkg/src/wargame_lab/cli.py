"""``wargame-lab`` command line: validate, solve, simulate, score, montecarlo, compare.

Stages talk only through files. Exit codes: 0 ok, 1 bad input or usage, 2 runtime
failure. Failures print one ``error: ...`` line on stderr.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Sequence

from . import analysis, scoring
from .config import ConfigError, load_config
from .engine import affordable_defenses, build_matrices
from .equilibria import ConvergenceError, EquilibriumResult, InfeasibleError, mixed_minimax, stackelberg, zero_sum_view
from .scenario import UNBOUNDED, ScenarioError, has_errors, load_scenario, validate_scenario
from .simulator import run_game
from .trace import TraceError, read_trace, write_trace

MODES = {
    "anticipatory-strong": "anticipatory_strong",
    "anticipatory-weak": "anticipatory_weak",
    "literal": "literal_joint_argmax",
}
TIE_BREAKS = {
    "lowest-index": "lowest_index",
    "favor-leader": "follower_favors_leader",
    "harm-leader": "follower_harms_leader",
}


@dataclass
class CommandResult:
    exit_code: int
    stdout_summary: str = ""
    artifacts_written: list[str] = field(default_factory=list)
    error: str = ""


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{message}\n{self.format_usage().strip()}")


def _budget(text: str) -> float | str:
    if text == UNBOUNDED:
        return UNBOUNDED
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"budget must be a number or {UNBOUNDED!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("budget must be >= 0")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wargame-lab", description="Attacker-defender war-game toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("--scenario", required=True)

    s = sub.add_parser("solve", help="Stackelberg equilibrium, optionally a zero-sum mixed solution")
    s.add_argument("--scenario", required=True)
    s.add_argument("--leader", choices=["defender", "attacker"], default="defender")
    s.add_argument("--mode", choices=list(MODES), default="anticipatory-strong")
    s.add_argument("--tie-break", choices=list(TIE_BREAKS), default="lowest-index")
    s.add_argument("--budget", type=_budget, default=None, help="number or 'unbounded' (default: scenario budget)")
    s.add_argument("--zero-sum", action="store_true", help="also solve the attacker-payoff zero-sum view")
    s.add_argument("--tolerance", type=float, default=1e-3)
    s.add_argument("--out")

    g = sub.add_parser("simulate", help="play one seeded game and write its trace")
    g.add_argument("--scenario", required=True)
    g.add_argument("--config", required=True)
    g.add_argument("--seed", type=_seed)
    g.add_argument("--out")

    c = sub.add_parser("score", help="adjudicate a trace")
    c.add_argument("--trace", required=True)
    c.add_argument("--rules")
    c.add_argument("--roster")
    c.add_argument("--csv", help="also write line items as CSV")
    c.add_argument("--out")

    m = sub.add_parser("montecarlo", help="seeded replications with summary statistics")
    m.add_argument("--scenario", required=True)
    m.add_argument("--config", required=True)
    m.add_argument("--seed", type=_seed)
    m.add_argument("-n", type=int, required=True)
    m.add_argument("--workers", type=int, help=f"process count (default: ${analysis.THREADS_ENV} or CPU count)")
    m.add_argument("--keep-traces", action="store_true", help="write every replication's trace")
    m.add_argument("--out", help="output directory")

    k = sub.add_parser("compare", help="compare traces with a saved prediction")
    k.add_argument("--traces", required=True, help="glob of trace files")
    k.add_argument("--prediction", required=True)
    k.add_argument("--scenario", help="scenario file, to size the frequency vectors")
    k.add_argument("--out")
    return p


def _write(path: str, text: str, written: list[str]) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    written.append(path)


def _dump(obj: object) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _load_config(args: argparse.Namespace):
    cfg = load_config(args.config)
    return cfg if args.seed is None else cfg.replace(seed=args.seed)


def _cmd_validate(args: argparse.Namespace, written: list[str]) -> tuple[int, str]:
    s = load_scenario(args.scenario)
    issues = validate_scenario(s)
    n_err = sum(1 for i in issues if i.severity.value == "error")
    lines = [str(i) for i in issues]
    lines.append(f"{n_err} errors, {len(issues) - n_err} warnings")
    return (1 if has_errors(issues) else 0), "\n".join(lines)


def _cmd_solve(args: argparse.Namespace, written: list[str]) -> tuple[int, str]:
    s = load_scenario(args.scenario)
    res = stackelberg(s, args.leader, MODES[args.mode], args.budget, TIE_BREAKS[args.tie_break])
    doc: dict[str, object] = {"equilibrium": res.to_dict()}
    lines = [
        f"{res.kind.value}: s_a*={res.attack_index} s_d*={res.defense_index} "
        f"u_a*={res.u_a_star:.6g} u_d*={res.u_d_star:.6g} P_T*={res.p_target_star:.6g}"
    ]
    if args.zero_sum:
        cols = sorted(affordable_defenses(s, args.budget))
        mixed = mixed_minimax(zero_sum_view(build_matrices(s), cols), tolerance=args.tolerance)
        doc["mixed"] = {**mixed.to_dict(), "defense_columns": cols}
        lines.append(f"zero-sum value {mixed.value:.6g} (gap {mixed.gap:.2e}, {mixed.iterations} iterations)")
    if args.out:
        _write(args.out, _dump(doc), written)
    return 0, "\n".join(lines)


def _cmd_simulate(args: argparse.Namespace, written: list[str]) -> tuple[int, str]:
    s = load_scenario(args.scenario)
    cfg = _load_config(args)
    t = run_game(s, cfg)
    if args.out:
        parent = os.path.dirname(args.out)
        if parent:
            os.makedirs(parent, exist_ok=True)
        write_trace(t, args.out)
        written.append(args.out)
    return 0, f"{len(t.events)} events, final minute {t.final_minute}, target reached {str(t.target_reached).lower()}"


def _cmd_score(args: argparse.Namespace, written: list[str]) -> tuple[int, str]:
    rules = scoring.load_rules(args.rules)
    roster = scoring.load_roster(args.roster)
    t = read_trace(args.trace)
    report = scoring.adjudicate(t, rules, roster)
    if args.out:
        _write(args.out, scoring.report_to_json(report) + "\n", written)
    if args.csv:
        _write(args.csv, scoring.render_csv(report), written)
    return 0, scoring.render_text(report)


def _cmd_montecarlo(args: argparse.Namespace, written: list[str]) -> tuple[int, str]:
    if args.n < 1:
        raise InputError("-n must be >= 1")
    s = load_scenario(args.scenario)
    cfg = _load_config(args)
    results = analysis.run_replications(s, cfg, args.n, workers=args.workers, keep_traces=args.keep_traces)
    summary = analysis.summarize(cfg.seed, [o for o, _ in results])
    if args.out:
        _write(os.path.join(args.out, "summary.json"), analysis.summary_to_json(summary) + "\n", written)
        _write(os.path.join(args.out, "replications.csv"), analysis.outcomes_csv(summary), written)
        if args.keep_traces:
            os.makedirs(os.path.join(args.out, "traces"), exist_ok=True)
            for o, t in results:
                path = os.path.join(args.out, "traces", f"replication-{o.index:05d}.jsonl")
                write_trace(t, path)
                written.append(path)
    return 0, analysis.render_summary(summary)


def _cmd_compare(args: argparse.Namespace, written: list[str]) -> tuple[int, str]:
    paths = sorted(glob.glob(args.traces))
    if not paths:
        raise InputError(f"no trace files match {args.traces!r}")
    with open(args.prediction, encoding="utf-8") as fh:
        doc = json.load(fh)
    predicted = EquilibriumResult.from_dict(doc.get("equilibrium", doc))
    n_a = n_d = None
    if args.scenario:
        sc = load_scenario(args.scenario)
        n_a, n_d = sc.n_attacks, sc.n_defenses
    traces = [read_trace(p) for p in paths]
    try:
        cmp = analysis.compare_report(traces, predicted, n_a, n_d)
    except analysis.AnalysisError as exc:
        raise InputError(str(exc)) from None
    if args.out:
        _write(args.out, analysis.comparison_to_json(cmp) + "\n", written)
    return 0, analysis.render_comparison(cmp)


COMMANDS = {
    "validate": _cmd_validate,
    "solve": _cmd_solve,
    "simulate": _cmd_simulate,
    "score": _cmd_score,
    "montecarlo": _cmd_montecarlo,
    "compare": _cmd_compare,
}


def _one_line(exc: BaseException) -> str:
    return " ".join(str(exc).split()) or type(exc).__name__


def run_cli(argv: Sequence[str]) -> CommandResult:
    written: list[str] = []
    try:
        args = build_parser().parse_args(list(argv))
    except UsageError as exc:
        msg = str(exc)
        first, _, usage = msg.partition("\n")
        return CommandResult(1, usage, error=f"error: {first}")
    except SystemExit as exc:  # --help
        return CommandResult(int(exc.code or 0))
    try:
        code, text = COMMANDS[args.command](args, written)
        return CommandResult(code, text, written)
    except (TraceError, ConvergenceError) as exc:
        return CommandResult(2, "", written, f"error: {_one_line(exc)}")
    except (ScenarioError, ConfigError, InfeasibleError, InputError, OSError, json.JSONDecodeError) as exc:
        return CommandResult(1, "", written, f"error: {_one_line(exc)}")
    except (KeyError, TypeError, ValueError) as exc:
        return CommandResult(1, "", written, f"error: {_one_line(exc)}")
    except Exception as exc:  # noqa: BLE001
        return CommandResult(2, "", written, f"error: {_one_line(exc)}")


def main(argv: Sequence[str] | None = None) -> int:
    result = run_cli(sys.argv[1:] if argv is None else argv)
    if result.stdout_summary:
        print(result.stdout_summary)
    if result.error:
        print(result.error, file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
