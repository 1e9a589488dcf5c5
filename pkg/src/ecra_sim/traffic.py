"""Poisson arrivals, replica slot placement and genie ground truth."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .params import SystemConfig, DerivedParams
from .waveform import PacketSymbols


@dataclass
class UserTransmission:
    user_id: int
    vf_start_sample: int        # t_0, symbol-aligned on the grid
    epoch_grid_offset: int      # 0 .. osf-1
    f_norm: float               # common to all replicas of the user
    replica_slots: np.ndarray   # d slot indices within the VF
    replica_phases: np.ndarray  # independent per replica
    packet: PacketSymbols

    def replica_starts(self, samples_per_slot: int) -> np.ndarray:
        """Absolute grid index of each replica's first symbol peak."""
        return (self.vf_start_sample
                + self.replica_slots * samples_per_slot
                + self.epoch_grid_offset)


@dataclass
class GroundTruth:
    """Genie bookkeeping: replica placements and per-grid-sample occupancy.

    ``occupancy[k]`` counts the replicas whose n_s-symbol span covers
    absolute grid sample ``k + origin`` (noise excluded).
    """

    replica_records: list[tuple[int, int, int]]   # (user_id, replica_idx, start)
    occupancy: np.ndarray
    origin: int

    def occ_at(self, start: int, count: int, step: int) -> np.ndarray:
        i = start - self.origin
        return self.occupancy[i:i + (count - 1) * step + 1:step]

    def dump_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["user_id", "replica", "start_sample"])
            w.writerows(self.replica_records)


def _draw_slots(d: int, n_p: int, n_slots: int, rng: np.random.Generator) -> np.ndarray:
    """d starting slots in [0, n_slots - n_p], rejecting self-interference."""
    while True:
        slots = rng.integers(0, n_slots - n_p + 1, size=d)
        slots.sort()
        if np.all(np.diff(slots) >= n_p):
            return slots


def draw_users(cfg: SystemConfig, dp: DerivedParams, span_samples: int,
               rng: np.random.Generator) -> list[UserTransmission]:
    """Poisson user population over [0, span_samples) of arrival instants.

    The caller chooses the span (analysis window plus guards); arrival
    count is Poisson with mean G * span / T_p.
    """
    mean = cfg.channel_load * span_samples / dp.samples_per_packet
    count = rng.poisson(mean)
    users = []
    n_symbol_starts = span_samples // dp.samples_per_symbol
    for uid in range(count):
        t0 = int(rng.integers(0, n_symbol_starts)) * dp.samples_per_symbol
        users.append(UserTransmission(
            user_id=uid,
            vf_start_sample=t0,
            epoch_grid_offset=int(rng.integers(0, cfg.osf)),
            f_norm=float(rng.uniform(-cfg.f_max_norm, cfg.f_max_norm)),
            replica_slots=_draw_slots(cfg.replicas, cfg.slots_per_packet,
                                      cfg.slots_per_vf, rng),
            replica_phases=rng.uniform(0.0, 2.0 * np.pi, size=cfg.replicas),
            packet=PacketSymbols.random(cfg.packet_symbols, rng),
        ))
    return users


def draw_single_arrivals(cfg: SystemConfig, dp: DerivedParams,
                         span_samples: int,
                         rng: np.random.Generator) -> list[UserTransmission]:
    """Poisson packet arrivals without time diversity, one copy each.

    This is the interference model of the detection-rule ROC study:
    information packets arrive at rate G per packet duration and are
    transmitted once, so the interferer count over a sync word is
    approximately Poisson with mean G.
    """
    mean = cfg.channel_load * span_samples / dp.samples_per_packet
    count = rng.poisson(mean)
    users = []
    n_symbol_starts = span_samples // dp.samples_per_symbol
    for uid in range(count):
        t0 = int(rng.integers(0, n_symbol_starts)) * dp.samples_per_symbol
        users.append(UserTransmission(
            user_id=uid,
            vf_start_sample=t0,
            epoch_grid_offset=int(rng.integers(0, cfg.osf)),
            f_norm=float(rng.uniform(-cfg.f_max_norm, cfg.f_max_norm)),
            replica_slots=np.zeros(1, dtype=np.int64),
            replica_phases=rng.uniform(0.0, 2.0 * np.pi, size=1),
            packet=PacketSymbols.random(cfg.packet_symbols, rng),
        ))
    return users


def build_ground_truth(users: list[UserTransmission], dp: DerivedParams,
                       buf_len: int, origin: int) -> GroundTruth:
    """Occupancy and sorted replica records over a buffer span."""
    occ = np.zeros(buf_len, dtype=np.int32)
    records = []
    # cover the symbol peaks [start, start + (n_s-1)*osf] inclusive
    span = (dp.symbols_per_packet - 1) * dp.samples_per_symbol + 1
    for u in users:
        for r, start in enumerate(u.replica_starts(dp.samples_per_slot)):
            records.append((u.user_id, r, int(start)))
            i = int(start) - origin
            occ[max(i, 0):min(i + span, buf_len)] += 1
    records.sort(key=lambda t: t[2])
    return GroundTruth(records, occ, origin)
