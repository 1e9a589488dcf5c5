"""Phase-1 sync-word detection.

Scores every grid position of a window with the non-coherent correlation
(or its interference-aware variant), thresholds and keeps local peaks.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter1d

from . import _kernels
from .traffic import GroundTruth
from .waveform import SignalBuffer

P_I = 1.0  # per-symbol interferer power under perfect power control


@dataclass(frozen=True)
class Candidate:
    position: int   # absolute grid index of the hypothesized sync-word start
    score: float


@dataclass
class CandidateSet:
    candidates: list[Candidate]

    def __post_init__(self):
        self._pos = np.array([c.position for c in self.candidates],
                             dtype=np.int64)
        if np.any(np.diff(self._pos) <= 0):
            raise ValueError("candidate positions must be strictly increasing")

    def positions(self) -> np.ndarray:
        return self._pos

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)


def lambda1(y: np.ndarray, s: np.ndarray) -> float:
    """Non-coherent soft correlation |sum y_i^* s_i|."""
    if len(y) != len(s):
        raise ValueError("tap/sync-word length mismatch")
    return float(np.abs(np.dot(np.conj(y), s)))


def lambda1_ia(y: np.ndarray, s: np.ndarray, sigma_i2: float,
               two_sigma2: float) -> float:
    """Interference-aware score: scaled correlation minus a variance penalty."""
    if sigma_i2 < 0:
        raise ValueError("interference variance must be >= 0")
    total = sigma_i2 + two_sigma2
    if total <= 0:
        raise ValueError("total variance must be positive")
    return (lambda1(y, s) - len(s)) / total


def scan(buf: SignalBuffer, s: np.ndarray, cfg, dp, window_start: int,
         window_samples: int, rule: str = "plain", lam: float | None = None,
         genie: GroundTruth | None = None) -> CandidateSet:
    """Threshold test at every grid position of [window_start, +window).

    Emits positions whose score exceeds the threshold, then suppresses
    near-duplicates: only local maxima within a one-symbol radius survive.
    """
    lam = cfg.threshold if lam is None else lam
    n_sw = len(s)
    osf = cfg.osf
    n_pos = window_samples - (n_sw - 1) * osf
    if n_pos <= 0:
        raise ValueError("window shorter than the sync word")
    y = buf.view(window_start, window_samples)
    scores = _kernels.corr_scan(y, s, osf)
    if rule == "ia":
        if genie is None:
            raise ValueError("interference-aware rule requires genie occupancy")
        sigma_i2 = scan_sigma_i2(genie, window_start, n_pos, n_sw, osf)
        total = sigma_i2 + dp.noise_var_2sigma2
        scores = (scores - n_sw) / total
    elif rule != "plain":
        raise ValueError(f"unknown rule {rule!r}")

    return candidates_from_scores(scores, window_start, lam, osf)


def candidates_from_scores(scores: np.ndarray, window_start: int, lam: float,
                           osf: int) -> CandidateSet:
    """Threshold + local-peak suppression on a precomputed score array."""
    keep = _suppress_local_peaks(scores, lam, osf)
    cands = [Candidate(window_start + int(p), float(scores[p])) for p in keep]
    return CandidateSet(cands)


def scan_sigma_i2(genie: GroundTruth, window_start: int, n_pos: int,
                  n_sw: int, osf: int) -> np.ndarray:
    """Genie interference variance per test position.

    Mean occupancy over the sync-word taps times P_I, minus the
    contribution of a sync word actually starting at (about) the position.
    """
    i0 = window_start - genie.origin
    occ = genie.occupancy[i0:i0 + n_pos + (n_sw - 1) * osf]
    mean_occ = _kernels.tap_mean(occ, n_sw, osf)
    own = np.zeros(n_pos, dtype=np.float64)
    tol = osf // 2
    for _, _, start in genie.replica_records:
        p = start - window_start
        lo, hi = max(p - tol, 0), min(p + tol + 1, n_pos)
        if lo < hi:
            own[lo:hi] = 1.0
    return np.maximum(mean_occ - own, 0.0) * P_I


def _suppress_local_peaks(scores: np.ndarray, lam: float, osf: int) -> list[int]:
    """Above-threshold positions that are maxima within a half-symbol radius.

    A full one-symbol radius displaces true peaks under heavy interference,
    so the suppression window is one symbol wide in total. Ties go to the
    smaller position so the result is deterministic.
    """
    above = scores > lam
    if not above.any():
        return []
    wmax = maximum_filter1d(scores, size=osf + 1, mode="constant")
    keep = np.flatnonzero(above & (scores >= wmax))
    # ties within the radius: keep the first of each cluster
    out = []
    for p in keep:
        if out and p - out[-1] <= osf // 2:
            continue
        out.append(int(p))
    return out


def roc_sweep(h0_scores: np.ndarray, h1_scores: np.ndarray,
              thresholds: np.ndarray) -> list[tuple[float, float, float]]:
    """(lambda, P_F, P_D) triples; both probabilities non-increasing in lambda."""
    h0 = np.sort(np.asarray(h0_scores))
    h1 = np.sort(np.asarray(h1_scores))
    if len(h0) == 0 or len(h1) == 0:
        raise ValueError("empty score set")
    out = []
    for lam in np.sort(np.asarray(thresholds, dtype=np.float64)):
        pf = 1.0 - np.searchsorted(h0, lam, side="right") / len(h0)
        pd = 1.0 - np.searchsorted(h1, lam, side="right") / len(h1)
        out.append((float(lam), float(pf), float(pd)))
    return out


def roc_auc(points: list[tuple[float, float, float]]) -> float:
    """Trapezoidal area under the (P_F, P_D) curve, endpoints closed."""
    pf = np.array([p[1] for p in points] + [0.0, 1.0])
    pd = np.array([p[2] for p in points] + [0.0, 1.0])
    order = np.lexsort((pd, pf))
    return float(np.trapezoid(pd[order], pf[order]))


def write_roc_csv(path, plain: list[tuple[float, float, float]],
                  ia: list[tuple[float, float, float]]) -> None:
    """Paired sweeps; row i holds each rule's i-th own-scale threshold."""
    if len(plain) != len(ia):
        raise ValueError("rule sweeps must use equally many thresholds")
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["threshold", "pf_plain", "pd_plain", "pf_ia", "pd_ia"])
        for (lam, pf0, pd0), (_, pf1, pd1) in zip(plain, ia):
            w.writerow([f"{lam:.10g}", f"{pf0:.10g}", f"{pd0:.10g}",
                        f"{pf1:.10g}", f"{pd1:.10g}"])
