"""Combining, mutual-information decoding and the sliding-window SIC loop."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .detector import (P_I, Candidate, CandidateSet, _suppress_local_peaks,
                       scan)
from .matcher import match
from .params import PULSE_SPAN_SYMBOLS
from .traffic import GroundTruth, UserTransmission
from .waveform import SignalBuffer, add_waveform, synthesize_replica


@dataclass
class CombinedObservation:
    snir: np.ndarray                       # per-symbol, nonnegative
    records: list[tuple[int, int, int]]    # contributing (user, replica, start)


@dataclass
class DecodingOutcome:
    decoded: dict[int, tuple[int, int]]    # user_id -> (window index, SIC iteration)
    windows: int
    events: list[tuple[int, int, int, str]] = field(default_factory=list)

    def dump_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["window", "iteration", "user_id", "action"])
            w.writerows(self.events)


def symbol_snir(start: int, n_s: int, osf: int, gt: GroundTruth,
                two_sigma2: float) -> np.ndarray:
    """Per-symbol SNIR of one replica from genie occupancy counts.

    The replica's own contribution is excluded from the interferer count.
    """
    occ = gt.occ_at(start, n_s, osf).astype(np.float64)
    c = np.maximum(occ - 1.0, 0.0)
    return 1.0 / (two_sigma2 + c * P_I)


def mrc_combine(snirs: list[np.ndarray],
                records: list[tuple[int, int, int]]) -> CombinedObservation:
    """Maximal-ratio combining under perfect CSI: SNIRs add."""
    if not snirs:
        raise ValueError("need at least one replica")
    return CombinedObservation(np.sum(snirs, axis=0), list(records))


def sc_combine(snirs: list[np.ndarray],
               records: list[tuple[int, int, int]]) -> CombinedObservation:
    """Selection combining: per-symbol best replica."""
    if not snirs:
        raise ValueError("need at least one replica")
    return CombinedObservation(np.max(snirs, axis=0), list(records))


def egc_combine(snirs: list[np.ndarray],
                records: list[tuple[int, int, int]]) -> CombinedObservation:
    """Equal-gain combining: coherent unit-weight sum of the branches."""
    if not snirs:
        raise ValueError("need at least one replica")
    amp = np.sum(np.sqrt(snirs), axis=0)
    return CombinedObservation(amp ** 2 / len(snirs), list(records))


COMBINERS = {"mrc": mrc_combine, "sc": sc_combine, "egc": egc_combine}


def decode(obs: CombinedObservation, rate: float) -> bool:
    """Gaussian-codebook model: mean mutual information >= rate."""
    mi = float(np.mean(np.log2(1.0 + obs.snir)))
    return mi >= rate


class SicState:
    """One trial's mutable receiver state: buffer, genie data, SIC progress."""

    def __init__(self, buf: SignalBuffer, gt: GroundTruth,
                 users: list[UserTransmission], cfg, dp, pulse: np.ndarray,
                 wave_cache: dict | None = None):
        self.buf = buf
        self.wave_cache = wave_cache
        self.gt = gt
        self.users = {u.user_id: u for u in users}
        self.cfg = cfg
        self.dp = dp
        self.pulse = pulse
        self.cancelled: set[int] = set()
        self.score_cache: "_ScoreCache | None" = None
        starts = np.array([r[2] for r in gt.replica_records], dtype=np.int64)
        order = np.argsort(starts, kind="stable")
        self._starts = starts[order]
        self._owners = [gt.replica_records[i][:2] for i in order]
        self._alive = np.ones(len(self._starts), dtype=bool)
        self._by_uid: dict[int, list[int]] = {}
        for j, (uid, _) in enumerate(self._owners):
            self._by_uid.setdefault(uid, []).append(j)
        # uid -> visible replica starts at the last failed decode attempt;
        # re-attempting is pointless until the window or the nearby
        # interference changes
        self._failed: dict[int, tuple[int, ...]] = {}

    def credit(self, position: int) -> tuple[int, int] | None:
        """(user, replica) whose true sync start lies within +-osf/2."""
        tol = self.cfg.osf // 2
        i = int(np.searchsorted(self._starts, position))
        best = None
        for j in (i - 1, i, i + 1):
            if 0 <= j < len(self._starts):
                d = abs(int(self._starts[j]) - position)
                if d <= tol and (best is None or d < best[0]):
                    best = (d, self._owners[j])
        return None if best is None else best[1]

    def credit_many(self, positions: np.ndarray) -> np.ndarray:
        """Index into replica records of the credited start, -1 if none."""
        tol = self.cfg.osf // 2
        n = len(self._starts)
        if n == 0:
            return np.full(len(positions), -1, dtype=np.int64)
        idx = np.searchsorted(self._starts, positions)
        lo = np.clip(idx - 1, 0, n - 1)
        hi = np.clip(idx, 0, n - 1)
        d_lo = np.abs(self._starts[lo] - positions)
        d_hi = np.abs(self._starts[hi] - positions)
        best = np.where(d_hi < d_lo, hi, lo)
        d = np.minimum(d_lo, d_hi)
        return np.where(d <= tol, best, -1)

    def replica_starts(self, user_id: int) -> np.ndarray:
        u = self.users[user_id]
        return u.replica_starts(self.dp.samples_per_slot)

    def cancel(self, user_id: int) -> None:
        """Subtract the user's exact waveform and release its occupancy."""
        if user_id in self.cancelled:
            raise ValueError(f"user {user_id} already cancelled")
        u = self.users[user_id]
        n_s = self.dp.symbols_per_packet
        osf = self.cfg.osf
        span = (n_s - 1) * osf + 1
        tail = PULSE_SPAN_SYMBOLS * osf
        for r, start in enumerate(self.replica_starts(user_id)):
            if self.wave_cache is not None and (user_id, r) in self.wave_cache:
                first, wave = self.wave_cache[(user_id, r)]
                add_waveform(self.buf, first, wave, sign=-1.0)
            else:
                synthesize_replica(u.packet, int(start), u.f_norm,
                                   float(u.replica_phases[r]), self.buf,
                                   self.pulse, osf, sign=-1.0)
            i = int(start) - self.gt.origin
            self.gt.occupancy[max(i, 0):i + span] -= 1
            if self.score_cache is not None:
                self.score_cache.invalidate(int(start) - tail,
                                            int(start) + span + tail)
        for j in self._by_uid.get(user_id, ()):
            self._alive[j] = False
        self.cancelled.add(user_id)
        # a cancellation changes the interference seen by every replica it
        # overlapped, so those owners deserve another decode attempt
        reach = span + 2 * tail
        for start in self.replica_starts(user_id):
            lo = np.searchsorted(self._starts, int(start) - reach)
            hi = np.searchsorted(self._starts, int(start) + span + reach)
            for j in range(int(lo), int(hi)):
                self._failed.pop(self._owners[j][0], None)

    def mark_failed(self, user_id: int, vis_key: tuple[int, ...]) -> None:
        self._failed[user_id] = vis_key

    def already_failed(self, user_id: int, vis_key: tuple[int, ...]) -> bool:
        return self._failed.get(user_id) == vis_key

    def live_packet_records(self, w0: int, w_samples: int) -> np.ndarray:
        """Indices of uncancelled replicas whose full packet fits the window."""
        n_s = self.dp.symbols_per_packet
        osf = self.cfg.osf
        m = self._alive & (self._starts >= w0)
        m &= self._starts + (n_s - 1) * osf < w0 + w_samples
        return np.flatnonzero(m)


class _ScoreCache:
    """Correlation scores and candidates over the whole region, kept lazily.

    Sliding windows overlap heavily and most SIC iterations cancel only a
    few packets, so scores and surviving peaks are kept for every region
    position and only the spans touched by a cancellation are recomputed.
    """

    def __init__(self, state: SicState, sync_word: np.ndarray,
                 region_start: int, region_samples: int, lam: float):
        self.state = state
        self.sw = sync_word
        self.r0 = region_start
        self.lam = lam
        osf = state.cfg.osf
        self.tap_span = (len(sync_word) - 1) * osf
        self.n_pos = region_samples - self.tap_span
        y = state.buf.view(region_start, region_samples)
        self.scores = _kernels.corr_scan(y, sync_word, osf)
        self.dirty = np.zeros(self.n_pos, dtype=bool)
        self.cand = np.array(_suppress_local_peaks(self.scores, lam, osf),
                             dtype=np.int64)

    def invalidate(self, lo: int, hi: int) -> None:
        """Mark absolute grid span [lo, hi) of affected signal as dirty."""
        a = max(lo - self.tap_span - self.r0, 0)
        b = min(hi - self.r0, self.n_pos)
        if a < b:
            self.dirty[a:b] = True

    def _refresh(self, a: int, b: int) -> None:
        d = np.flatnonzero(self.dirty[a:b])
        if len(d) == 0:
            return
        osf = self.state.cfg.osf
        for run in np.split(d, np.flatnonzero(np.diff(d) > 1) + 1):
            lo, hi = a + int(run[0]), a + int(run[-1]) + 1
            y = self.state.buf.view(self.r0 + lo, hi - lo + self.tap_span)
            self.scores[lo:hi] = _kernels.corr_scan(y, self.sw, osf)
            self.dirty[lo:hi] = False
            # redo peak suppression with margin; splice the central part
            xlo, xhi = max(lo - 2 * osf, 0), min(hi + 2 * osf, self.n_pos)
            kept = np.array(_suppress_local_peaks(self.scores[xlo:xhi],
                                                  self.lam, osf),
                            dtype=np.int64) + xlo
            slo, shi = max(lo - osf, 0), min(hi + osf, self.n_pos)
            kept = kept[(kept >= slo) & (kept < shi)]
            i = np.searchsorted(self.cand, slo)
            j = np.searchsorted(self.cand, shi)
            self.cand = np.concatenate([self.cand[:i], kept, self.cand[j:]])

    def window_candidates(self, w0: int, w_samples: int) -> CandidateSet:
        a = w0 - self.r0
        b = a + w_samples - self.tap_span
        self._refresh(a, b)
        i = np.searchsorted(self.cand, a)
        j = np.searchsorted(self.cand, b)
        return CandidateSet([Candidate(self.r0 + int(p), float(self.scores[p]))
                             for p in self.cand[i:j]])


def _window_positions(region_start: int, region_samples: int,
                      window_samples: int, shift_samples: int) -> list[int]:
    if region_samples <= window_samples:
        return [region_start]
    last = region_start + region_samples - window_samples
    pos = list(range(region_start, last + 1, shift_samples))
    if pos[-1] != last:
        pos.append(last)
    return pos


def sic_window(state: SicState, sync_word: np.ndarray, region_start: int,
               region_samples: int, mode: str = "two_phase",
               lam: float | None = None, rule: str = "plain",
               combiner: str = "mrc") -> DecodingOutcome:
    """Slide the receiver window over a region, running SIC in each position.

    ``two_phase`` re-runs detection and matching every SIC iteration on the
    updated signal; ``ideal`` takes replica positions and pairings from the
    ground truth. Both stop a window early once an iteration decodes nothing.
    """
    cfg, dp = state.cfg, state.dp
    combine = COMBINERS[combiner]
    w_samples = dp.samples_per_window
    shift = cfg.window_shift_packets * dp.samples_per_packet
    positions = _window_positions(region_start, region_samples, w_samples, shift)
    out = DecodingOutcome(decoded={}, windows=len(positions))
    if mode == "two_phase" and rule == "plain":
        lam_eff = cfg.threshold if lam is None else lam
        state.score_cache = _ScoreCache(state, sync_word, region_start,
                                        region_samples, lam_eff)

    for wi, w0 in enumerate(positions):
        for it in range(cfg.sic_max_iters):
            if mode == "ideal":
                progress = _ideal_pass(state, combine, w0, w_samples, wi, it, out)
            elif mode == "two_phase":
                progress = _two_phase_pass(state, sync_word, combine, w0,
                                           w_samples, wi, it, out, lam, rule)
            else:
                raise ValueError(f"unknown mode {mode!r}")
            if not progress:
                break
    return out


def _in_window(start: int, n_s: int, osf: int, w0: int, w_samples: int) -> bool:
    return start >= w0 and start + (n_s - 1) * osf < w0 + w_samples


def _ideal_pass(state: SicState, combine, w0: int, w_samples: int,
                wi: int, it: int, out: DecodingOutcome) -> bool:
    cfg, dp = state.cfg, state.dp
    n_s, osf = dp.symbols_per_packet, cfg.osf
    live = state.live_packet_records(w0, w_samples)
    uids = sorted({state._owners[j][0] for j in live})
    progress = False
    for uid in uids:
        if uid in state.cancelled:
            continue
        starts = state.replica_starts(uid)
        vis = [(r, int(s)) for r, s in enumerate(starts)
               if _in_window(int(s), n_s, osf, w0, w_samples)]
        vis_key = tuple(s for _, s in vis)
        if state.already_failed(uid, vis_key):
            continue
        snirs = [symbol_snir(s, n_s, osf, state.gt, dp.noise_var_2sigma2)
                 for _, s in vis]
        obs = combine(snirs, [(uid, r, s) for r, s in vis])
        if decode(obs, cfg.rate):
            state.cancel(uid)
            out.decoded[uid] = (wi, it)
            out.events.append((wi, it, uid, "decoded"))
            progress = True
        else:
            state.mark_failed(uid, vis_key)
    return progress


def _two_phase_pass(state: SicState, sync_word: np.ndarray, combine,
                    w0: int, w_samples: int, wi: int, it: int,
                    out: DecodingOutcome, lam: float | None,
                    rule: str) -> bool:
    cfg, dp = state.cfg, state.dp
    n_s, osf = dp.symbols_per_packet, cfg.osf
    if len(state.live_packet_records(w0, w_samples)) == 0:
        return False
    cache = state.score_cache
    if cache is not None and rule == "plain":
        cand = cache.window_candidates(w0, w_samples)
    else:
        cand = scan(state.buf, sync_word, cfg, dp, w0, w_samples,
                    rule=rule, lam=lam, genie=state.gt)
    pos = cand.positions()
    rec_idx = state.credit_many(pos)
    progress = False
    for ci in np.flatnonzero(rec_idx >= 0):
        credit = state._owners[int(rec_idx[ci])]
        uid = credit[0]
        if uid in state.cancelled:
            continue
        position = int(pos[ci])
        if position + (n_s - 1) * osf >= w0 + w_samples:
            continue
        vis_key = tuple(int(s) for s in state.replica_starts(uid)
                        if _in_window(int(s), n_s, osf, w0, w_samples))
        if state.already_failed(uid, vis_key):
            continue
        m = match(position, cand, state.buf, cfg, dp, w0, w_samples)
        replicas = {credit}
        for tau, _ in m.partners:
            pc = state.credit(tau)
            if pc is not None and pc[0] == uid:
                replicas.add(pc)
        starts = state.replica_starts(uid)
        recs = [(uid, r, int(starts[r])) for _, r in sorted(replicas)]
        snirs = [symbol_snir(s, n_s, osf, state.gt, dp.noise_var_2sigma2)
                 for _, _, s in recs]
        obs = combine(snirs, recs)
        if decode(obs, cfg.rate):
            state.cancel(uid)
            out.decoded[uid] = (wi, it)
            out.events.append((wi, it, uid, "decoded"))
            progress = True
        else:
            state.mark_failed(uid, vis_key)
    return progress
