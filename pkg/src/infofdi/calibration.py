"""Empirical nominal perturbation bound for noisy fault-free operation."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .config import ScenarioConfig
from .simulation import run


def nominal_deviations(cfg: ScenarioConfig, seeds) -> np.ndarray:
    """``|H_i - H_i_pred|`` at every FDI evaluation of fault-free runs of ``cfg``."""
    out = []
    for s in seeds:
        rep = run(replace(cfg, seed=int(s), faults=[]))
        evaluated = np.isfinite(rep.Hm)
        out.append(np.abs(rep.Hi - rep.Hi_pred)[evaluated])
    return np.concatenate(out) if out else np.zeros(0)


def calibrate_epsilon_nom(cfg: ScenarioConfig, seeds, quantile: float = 0.99) -> float:
    """Quantile of the nominal contribution deviation over ``seeds``.

    Seeds used here should be disjoint from the ones a detection-rate
    estimate is made on.
    """
    if not 0.0 < quantile <= 1.0:
        raise ValueError("quantile must be in (0, 1]")
    dev = nominal_deviations(cfg, seeds)
    if not len(dev):
        raise ValueError("no FDI evaluations in the calibration runs")
    return float(np.quantile(dev, quantile))
