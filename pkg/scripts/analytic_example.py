"""Print the closed-form 1-DOF ratio and metric table for both fault cases."""

import argparse

from infofdi.analytic import format_table
from infofdi.config import load_builtin
from infofdi.simulation import run


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--bias", type=float, default=0.05, help="over-actuation added to agent 1's step")
    p.add_argument("--beta", type=float, default=0.7, help="sensor degradation factor of agent 2")
    args = p.parse_args()
    cases = [
        ("actuator", run(load_builtin("analytic1dof_actuator", [f"faults.0.bias={args.bias}"]))),
        ("sensor", run(load_builtin("analytic1dof_sensor", [f"faults.0.beta={args.beta}"]))),
    ]
    print(format_table(cases))


if __name__ == "__main__":
    main()
