"""Phase-2 replica matching via full-packet non-coherent correlation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detector import CandidateSet
from .waveform import SignalBuffer, extract_symbol_taps


@dataclass
class MatchResult:
    anchor: int
    partners: list[tuple[int, float]]   # (position, score), descending score


def _slot_aligned(delta: np.ndarray, slot_samples: int, tol: int) -> np.ndarray:
    r = delta % slot_samples
    return np.minimum(r, slot_samples - r) <= tol


def compatible_set(tau1: int, cand: CandidateSet, slot_samples: int,
                   samples_per_packet: int, window_start: int,
                   window_samples: int, tol: int) -> list[int]:
    """Candidates after tau1 at (about) integer multiples of the slot spacing.

    A position qualifies when its offset from tau1 is within ``tol`` grid
    samples of a positive multiple of the slot duration, it is at least one
    packet away, and a full packet after it still fits in the window.
    """
    pos = cand.positions()
    delta = pos - tau1
    ok = (delta >= samples_per_packet)
    ok &= pos + samples_per_packet <= window_start + window_samples
    ok &= _slot_aligned(delta, slot_samples, tol)
    return [int(p) for p in pos[ok]]


def lambda2(y1: np.ndarray, yi: np.ndarray) -> float:
    """Full-packet non-coherent correlation |sum y1_j * conj(yi_j)|."""
    if len(y1) != len(yi):
        raise ValueError("tap length mismatch")
    return float(np.abs(np.dot(y1, np.conj(yi))))


def match(anchor: int, cand: CandidateSet, buf: SignalBuffer, cfg, dp,
          window_start: int, window_samples: int) -> MatchResult:
    """Rank compatible candidates by full-packet correlation, keep top d-1.

    Compatibility is checked in both directions: positions an exact number
    of slots after the anchor, and positions the anchor itself is
    compatible with (earlier candidates). Each candidate can carry up to
    half a symbol of grid error, so the tolerance on the pair offset is a
    full symbol.
    """
    tol = cfg.osf
    n_s = cfg.packet_symbols
    pos = cand.positions()
    delta = np.abs(pos - anchor)
    ok = delta >= dp.samples_per_packet
    ok &= np.maximum(pos, anchor) + dp.samples_per_packet \
        <= window_start + window_samples
    ok &= _slot_aligned(delta, dp.slot_duration_samples, tol)
    peers = pos[ok]
    if len(peers) == 0:
        return MatchResult(anchor, [])
    y1 = extract_symbol_taps(buf, anchor, n_s, cfg.osf)
    scored = [(int(tau), lambda2(y1, extract_symbol_taps(buf, int(tau), n_s, cfg.osf)))
              for tau in peers]
    # descending score, ties to the smaller position
    scored.sort(key=lambda t: (-t[1], t[0]))
    return MatchResult(anchor, scored[:cfg.replicas - 1])
