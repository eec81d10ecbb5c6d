"""Run the four fault scenarios and print detection latency and global-cost behavior."""

import argparse
from pathlib import Path

from infofdi.config import load_builtin
from infofdi.report import write_report
from infofdi.simulation import run

SCENARIOS = ["actuator_drift", "pointing_large", "sensor_degradation", "pointing_small"]


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out-dir", type=Path, help="also write each run's CSV files here")
    p.add_argument("--seed", type=int, help="override every scenario's seed")
    args = p.parse_args()
    overrides = [] if args.seed is None else [f"seed={args.seed}"]
    print(f"{'scenario':<16}{'fault':<10}{'agent':<7}{'detected':<10}{'latency_s':>10}  {'class':<10}observed")
    for name in SCENARIOS:
        cfg = load_builtin(name, overrides)
        rep = run(cfg)
        if args.out_dir:
            write_report(rep, args.out_dir / name)
        false_pos = sorted(rep.detected_agents() - {f.agent_id for f in cfg.faults})
        for s in rep.summary:
            lat = "" if s.latency is None else f"{s.latency:g}"
            print(f"{name:<16}{s.fault_id:<10}{s.agent_id:<7}{'yes' if s.detected else 'no':<10}{lat:>10}  "
                  f"{s.classification or '':<10}{s.observed_behavior}")
        if false_pos:
            print(f"{name:<16}false positives on {', '.join(false_pos)}")


if __name__ == "__main__":
    main()
