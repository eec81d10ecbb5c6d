"""Count detections over seeded fault-free runs, optionally with nominal noise."""

import argparse
from dataclasses import replace

from infofdi.calibration import calibrate_epsilon_nom
from infofdi.config import load_builtin
from infofdi.simulation import run


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--scenario", default="fp_nominal")
    p.add_argument("--seeds", type=int, default=20, help="evaluation seeds 0..N-1")
    p.add_argument("--noise", type=float, default=0.0, help="nominal_noise_std in meters")
    p.add_argument("--calibration-seeds", type=int, default=10, help="held-out seeds 1000.. for epsilon_nom")
    p.add_argument("--quantile", type=float, default=1.0)
    args = p.parse_args()

    cfg = replace(load_builtin(args.scenario), faults=[], nominal_noise_std=args.noise)
    if args.noise > 0.0:
        eps = calibrate_epsilon_nom(cfg, range(1000, 1000 + args.calibration_seeds), args.quantile)
        cfg = replace(cfg, fdi=replace(cfg.fdi, epsilon_nom=eps))
        print(f"epsilon_nom = {eps:.6g}")
    windows = len(cfg.agents) * int(round(cfg.duration / cfg.window))
    flagged = 0
    for s in range(args.seeds):
        rep = run(replace(cfg, seed=s))
        hits = {(d.agent_id, d.window) for d in rep.detections}
        flagged += len(hits)
        print(f"seed {s:4d}: {len(hits)} of {windows} agent-windows flagged")
    total = windows * args.seeds
    print(f"rate: {flagged}/{total} = {100.0 * flagged / total:.2f}%")


if __name__ == "__main__":
    main()
