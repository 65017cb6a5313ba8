"""Compare an untrained and a trained blue team on the same scenario and seed.

Runs two seeded Monte Carlo batches (event1 and event2 configs by default) and
prints red and blue outcome rates side by side. The two batches share a master
seed, so replication k faces the same red randomness stream in both.
"""

from __future__ import annotations

import argparse
import json

from wargame_lab import fixture_path
from wargame_lab.analysis import monte_carlo
from wargame_lab.config import load_config
from wargame_lab.scenario import load_scenario


def _per_detection(summary) -> float:
    outs = summary.per_replication_outcomes
    return sum(o.blocks for o in outs) / max(1, sum(o.detections for o in outs))


def _row(label, s) -> dict:
    e = s.empirical_p_target
    return {
        "event": label,
        "red_win_rate": s.red_win_rate,
        "blue_win_rate": s.blue_win_rate,
        "p_target": e.estimate,
        "p_target_ci": [e.ci_lower, e.ci_upper],
        "blocks_per_attempt": s.block_rate,
        "blocks_per_detection": _per_detection(s),
        "mean_red": s.mean_red_total,
        "mean_blue": s.mean_blue_total,
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default=str(fixture_path("alpha.json")))
    ap.add_argument("--before", default=str(fixture_path("event1.json")))
    ap.add_argument("--after", default=str(fixture_path("event2.json")))
    ap.add_argument("-n", type=int, default=1000)
    ap.add_argument("--seed", type=int, help="override both configs' master seed")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--json", action="store_true", help="print rows as JSON")
    args = ap.parse_args()

    s = load_scenario(args.scenario)
    rows = []
    for label, path in (("before", args.before), ("after", args.after)):
        cfg = load_config(path)
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        rows.append(_row(label, monte_carlo(s, cfg, args.n, workers=args.workers)))

    if args.json:
        print(json.dumps(rows, indent=2))
        return
    keys = [k for k in rows[0] if k not in ("event", "p_target_ci")]
    print(f"{'metric':<22}{'before':>10}{'after':>10}")
    for k in keys:
        print(f"{k:<22}{rows[0][k]:>10.4f}{rows[1][k]:>10.4f}")


if __name__ == "__main__":
    main()
