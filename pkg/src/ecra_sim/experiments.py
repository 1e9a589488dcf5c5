"""Monte Carlo trial builders for the three experiment families.

Each trial is a pure function of (master seed, trial index), so results are
identical at any worker count.
"""
from __future__ import annotations

import copy
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .detector import P_I, lambda1, lambda1_ia, scan
from .matcher import match
from .metrics import TrialStats
from .params import SystemConfig, derive, standard_sync_word
from .receiver import SicState, sic_window
from .traffic import build_ground_truth, draw_single_arrivals, draw_users
from .waveform import (SignalBuffer, add_awgn, add_waveform, pulse_table,
                       replica_waveform)


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def default_workers() -> int:
    env = os.environ.get("ECRA_SIM_WORKERS")
    if env:
        return max(int(env), 1)
    return os.cpu_count() or 1


def _apply(args):
    fn, index, seed, extra = args
    return fn(index, trial_rng(seed, index), *extra)


def run_trials(trial_fn, n_trials: int, seed: int, workers: int = 1,
               extra: tuple = ()) -> list:
    """Run trials 0..n-1; ordering and results independent of worker count."""
    jobs = [(trial_fn, i, seed, extra) for i in range(n_trials)]
    if workers <= 1:
        return [_apply(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_apply, jobs))


class TrialScene:
    """One synthesized realization: buffer, ground truth, receiver region."""

    def __init__(self, cfg: SystemConfig, region_packets: int,
                 rng: np.random.Generator, noiseless: bool = False,
                 single_copy: bool = False):
        self.cfg = cfg
        self.dp = dp = derive(cfg)
        margin = dp.pulse_margin_samples
        region = region_packets * dp.samples_per_packet
        guard = dp.samples_per_packet if single_copy else dp.samples_per_vf
        arrival_span = guard + region
        buf_len = arrival_span + guard + 2 * margin
        self.buf = SignalBuffer.zeros(buf_len, origin=-margin)
        draw = draw_single_arrivals if single_copy else draw_users
        self.users = draw(cfg, dp, arrival_span, rng)
        self.pulse = pulse_table(cfg.osf, cfg.rolloff)
        self.wave_cache: dict[tuple[int, int], tuple[int, np.ndarray]] = {}
        for u in self.users:
            for r, start in enumerate(u.replica_starts(dp.samples_per_slot)):
                first, wave = replica_waveform(u.packet, int(start), u.f_norm,
                                               float(u.replica_phases[r]),
                                               self.pulse, cfg.osf)
                self.wave_cache[(u.user_id, r)] = (first, wave)
                add_waveform(self.buf, first, wave)
        if not noiseless:
            add_awgn(self.buf, dp.noise_var_2sigma2, rng)
        self.gt = build_ground_truth(self.users, dp, buf_len, self.buf.origin)
        self.region_start = guard
        self.region_samples = region
        self.sync_word = standard_sync_word()

    def region_end(self) -> int:
        return self.region_start + self.region_samples


# --------------------------------------------------------------------------
# ROC family: per-interval scores under H0 / H1

def roc_trial(index: int, rng: np.random.Generator, cfg: SystemConfig,
              n_h0: int, single_copy: bool = True):
    """Scores from one loaded window.

    H1 intervals sit exactly on true sync starts inside the region; H0
    intervals are uniform positions at least half a symbol away from any
    true start. By default the traffic is single-copy packet arrivals
    (the detection-rule study isolates the correlation test from time
    diversity, so the interferer count over a sync word is ~Poisson(G)).
    The interference variance fed to the interference-aware rule is the
    region-mean interference power, held constant across test intervals.
    Returns four arrays: plain/IA under H0/H1.
    """
    scene = TrialScene(cfg, cfg.window_packets, rng, single_copy=single_copy)
    dp, osf = scene.dp, cfg.osf
    n_sw = cfg.sync_word_symbols
    sw = scene.sync_word
    two_sigma2 = dp.noise_var_2sigma2
    tap_span = (n_sw - 1) * osf
    lo, hi = scene.region_start, scene.region_end() - tap_span

    i0 = scene.region_start - scene.gt.origin
    sigma_i2 = P_I * float(np.mean(
        scene.gt.occupancy[i0:i0 + scene.region_samples]))

    starts = np.array([r[2] for r in scene.gt.replica_records], dtype=np.int64)
    h1p, h1i, h0p, h0i = [], [], [], []

    for p in starts:
        p = int(p)
        if not lo <= p < hi:
            continue
        y = scene.buf.view(p, tap_span + 1)[::osf]
        h1p.append(lambda1(y, sw))
        h1i.append(lambda1_ia(y, sw, sigma_i2, two_sigma2))

    tol = osf // 2
    drawn = 0
    while drawn < n_h0:
        p = int(rng.integers(lo, hi))
        j = np.searchsorted(starts, p)
        near = [starts[k] for k in (j - 1, j) if 0 <= k < len(starts)]
        if any(abs(int(s) - p) <= tol for s in near):
            continue
        y = scene.buf.view(p, tap_span + 1)[::osf]
        h0p.append(lambda1(y, sw))
        h0i.append(lambda1_ia(y, sw, sigma_i2, two_sigma2))
        drawn += 1

    return (np.array(h0p), np.array(h0i), np.array(h1p), np.array(h1i))


def h0_scores(cfg: SystemConfig, n_scores: int, rng: np.random.Generator,
              g_cal: float | None = None) -> np.ndarray:
    """Plain-rule H0 scores at the calibration load (default G = 1).

    Calibration uses the operational traffic model (d replicas per user)
    so the threshold reflects the interference the receiver actually sees.
    """
    cal_cfg = cfg.replace(channel_load=1.0 if g_cal is None else g_cal)
    per_window = 500
    out = []
    while sum(len(a) for a in out) < n_scores:
        h0p, _, _, _ = roc_trial(0, rng, cal_cfg, per_window,
                                 single_copy=False)
        out.append(h0p)
    return np.concatenate(out)[:n_scores]


# --------------------------------------------------------------------------
# Detection / coupling family

def detect_trial(index: int, rng: np.random.Generator, cfg: SystemConfig,
                 lam: float) -> TrialStats:
    """One full-frame two-phase pass: P_D and P_CC counters, no decoding."""
    scene = TrialScene(cfg, cfg.window_packets, rng)
    cfg_, dp, osf = scene.cfg, scene.dp, cfg.osf
    n_s, n_sw = cfg.packet_symbols, cfg.sync_word_symbols
    w0, w_samples = scene.region_start, scene.region_samples
    cand = scan(scene.buf, scene.sync_word, cfg_, dp, w0, w_samples,
                rule="plain", lam=lam)
    cand_pos = cand.positions()
    tol = osf // 2

    def credited(start):
        j = np.searchsorted(cand_pos, start)
        for k in (j - 1, j):
            if 0 <= k < len(cand_pos) and abs(int(cand_pos[k]) - start) <= tol:
                return int(cand_pos[k])
        return None

    stats = TrialStats()
    by_user: dict[int, list[int]] = {}
    for uid, ridx, start in scene.gt.replica_records:
        by_user.setdefault(uid, []).append(start)
        if w0 <= start and start + (n_sw - 1) * osf < w0 + w_samples:
            stats.true_syncs += 1
            if credited(start) is not None:
                stats.detected_syncs += 1

    for uid, starts in by_user.items():
        starts = sorted(starts)
        if not all(w0 <= s and s + (n_s - 1) * osf < w0 + w_samples
                   for s in starts):
            continue
        stats.eligible_users += 1
        # the receiver tries every candidate as an anchor, so the pairing
        # succeeds if any of the user's detected replicas anchors it
        formed = correct = False
        for a_idx, a_start in enumerate(starts):
            anchor = credited(a_start)
            if anchor is None:
                continue
            m = match(anchor, cand, scene.buf, cfg_, dp, w0, w_samples)
            if not m.partners:
                continue
            formed = True
            others = [s for j, s in enumerate(starts) if j != a_idx]
            hits = {s for tau, _ in m.partners for s in others
                    if abs(tau - s) <= tol}
            if len(hits) == len(others):
                correct = True
                break
        stats.formed_pairs += int(formed)
        stats.correct_pairs += int(correct)
    return stats


# --------------------------------------------------------------------------
# Spectral-efficiency family

def throughput_trial(index: int, rng: np.random.Generator, cfg: SystemConfig,
                     lam: float, modes: tuple[str, ...] = ("two_phase", "ideal"),
                     ) -> dict[str, TrialStats]:
    """SIC over a sliding window; one realization, all requested modes.

    The receiver region spans the window plus a virtual frame of warm-up
    and cool-down on each side; only users whose whole virtual frame sits
    in the central window count as offered traffic.
    """
    dp = derive(cfg)
    region_packets = cfg.window_packets + 2 * dp.vf_packets
    scene = TrialScene(cfg, region_packets, rng)
    central_lo = scene.region_start + dp.samples_per_vf
    central_hi = central_lo + cfg.window_packets * dp.samples_per_packet
    offered = [u.user_id for u in scene.users
               if central_lo <= u.vf_start_sample < central_hi]

    out = {}
    for mode in modes:
        buf = SignalBuffer(scene.buf.samples.copy(), scene.buf.origin)
        gt = copy.deepcopy(scene.gt)
        state = SicState(buf, gt, scene.users, cfg, dp, scene.pulse,
                         wave_cache=scene.wave_cache)
        outcome = sic_window(state, scene.sync_word, scene.region_start,
                             scene.region_samples, mode=mode, lam=lam)
        decoded = sum(1 for uid in offered if uid in outcome.decoded)
        out[mode] = TrialStats(offered_packets=len(offered),
                               decoded_packets=decoded,
                               elapsed_tp=float(cfg.window_packets))
    return out
