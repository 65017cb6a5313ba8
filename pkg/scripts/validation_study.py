"""Check how well equilibrium-playing agents follow the model as red's knowledge shrinks.

For each mask fraction, plays a batch of equilibrium-vs-equilibrium games, then
compares the traces with the defender-leader prediction: strategy agreement,
per-game target rate, and per-attempt success at the predicted cell.
"""

from __future__ import annotations

import argparse

from wargame_lab import fixture_path
from wargame_lab.analysis import compare_report, run_replications
from wargame_lab.config import AgentPolicy, GameConfig, PolicyKind
from wargame_lab.equilibria import stackelberg
from wargame_lab.scenario import load_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default=str(fixture_path("alpha.json")))
    ap.add_argument("--masks", type=float, nargs="+", default=[0.0, 0.25, 0.5, 0.75, 1.0])
    ap.add_argument("-n", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--workers", type=int)
    args = ap.parse_args()

    s = load_scenario(args.scenario)
    predicted = stackelberg(s, "defender")
    print(
        f"prediction: s_a*={predicted.attack_index} s_d*={predicted.defense_index} "
        f"P_T*={predicted.p_target_star:.4f}"
    )
    eq = AgentPolicy(PolicyKind.EQUILIBRIUM)
    print(f"{'mask':>6}{'joint':>8}{'attack':>8}{'defense':>9}{'P_T game':>10}{'P_T try':>9}{'tries':>7}")
    for mask in args.masks:
        cfg = GameConfig(seed=args.seed, red_policy=eq, blue_policy=eq, knowledge_mask_fraction=mask)
        traces = [t for _, t in run_replications(s, cfg, args.n, workers=args.workers, keep_traces=True)]
        c = compare_report(traces, predicted, s.n_attacks, s.n_defenses)
        a = c.attempt_p_target
        per_try = f"{a.estimate:>9.4f}{a.trials:>7d}" if a else f"{'-':>9}{0:>7d}"
        print(
            f"{mask:>6.2f}{c.agreement_rate:>8.3f}{c.attack_agreement_rate:>8.3f}"
            f"{c.defense_agreement_rate:>9.3f}{c.empirical_p_target.estimate:>10.4f}{per_try}"
        )


if __name__ == "__main__":
    main()
