"""Aggregation of trial outcomes and threshold calibration."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TrialStats:
    """Counts from one trial; aggregation is a plain field-wise sum."""

    true_syncs: int = 0
    detected_syncs: int = 0
    formed_pairs: int = 0
    correct_pairs: int = 0
    eligible_users: int = 0
    offered_packets: int = 0
    decoded_packets: int = 0
    elapsed_tp: float = 0.0

    def __add__(self, other: "TrialStats") -> "TrialStats":
        return TrialStats(*(a + b for a, b in
                            zip(self._astuple(), other._astuple())))

    def _astuple(self):
        return (self.true_syncs, self.detected_syncs, self.formed_pairs,
                self.correct_pairs, self.eligible_users, self.offered_packets,
                self.decoded_packets, self.elapsed_tp)


@dataclass
class Summary:
    pd: float
    pd_ci: float
    pcc: float
    pcc_ci: float
    plr: float
    plr_ci: float
    xi: float
    xi_ci: float
    offered: int
    decoded: int


def binomial_ci(p: float, n: int) -> float:
    """95% normal-approximation half width."""
    if n == 0:
        return 1.0
    return 1.96 * np.sqrt(max(p * (1.0 - p), 0.0) / n)


def aggregate(stats: list[TrialStats], rate: float = 1.0) -> Summary:
    """Reduce a trial batch to P_D, P_CC, PLR and spectral efficiency.

    Spectral efficiency is R times the decoded packets per packet duration
    of offered time; its CI follows the binomial CI of the decode fraction.
    """
    if not stats:
        raise ValueError("empty batch")
    tot = TrialStats()
    for s in stats:
        tot = tot + s
    if tot.offered_packets == 0 and tot.true_syncs == 0:
        raise ValueError("empty batch")
    pd = tot.detected_syncs / tot.true_syncs if tot.true_syncs else 0.0
    pcc = tot.correct_pairs / tot.eligible_users if tot.eligible_users else 0.0
    plr = (1.0 - tot.decoded_packets / tot.offered_packets
           if tot.offered_packets else 0.0)
    if tot.elapsed_tp:
        xi = rate * tot.decoded_packets / tot.elapsed_tp
        xi_ci = (rate * binomial_ci(1.0 - plr, tot.offered_packets)
                 * tot.offered_packets / tot.elapsed_tp)
    else:
        xi, xi_ci = 0.0, 0.0
    return Summary(
        pd=pd, pd_ci=binomial_ci(pd, tot.true_syncs),
        pcc=pcc, pcc_ci=binomial_ci(pcc, tot.eligible_users),
        plr=plr, plr_ci=binomial_ci(plr, tot.offered_packets),
        xi=xi, xi_ci=xi_ci,
        offered=tot.offered_packets, decoded=tot.decoded_packets,
    )


def calibrate_threshold(cfg, target_pf: float, trials: int,
                        rng: np.random.Generator,
                        g_cal: float | None = None) -> float:
    """Empirical (1 - target_pf) quantile of the plain score under H0.

    H0 samples come from loaded windows at a fixed calibration load; the
    resulting threshold is reused unchanged across a whole load sweep.
    """
    if not 0.0 < target_pf <= 1.0:
        raise ValueError("target_pf must be in (0, 1]")
    from . import experiments  # local import; experiments builds on metrics
    scores = experiments.h0_scores(cfg, trials, rng, g_cal=g_cal)
    if len(scores) < 100.0 / target_pf:
        raise ValueError(
            f"insufficient H0 samples ({len(scores)}) for target_pf={target_pf}")
    if target_pf == 1.0:
        return float(np.min(scores))
    return float(np.quantile(scores, 1.0 - target_pf))
