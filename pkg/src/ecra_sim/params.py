"""System configuration, derived sample-domain quantities and the sync word.

All other modules consume the values computed here; nothing downstream
re-derives unit conversions on its own.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields, asdict

import numpy as np

# CCSDS attached sync marker, 32 bits.
SYNC_WORD_HEX = 0x1ACFFC1D
SYNC_WORD_BITS = 32

# Raised-cosine pulse truncation, symbols each side.
PULSE_SPAN_SYMBOLS = 8


class ConfigError(ValueError):
    """Raised for invalid or inconsistent configuration values."""


@dataclass(frozen=True)
class SystemConfig:
    """All scenario knobs.

    Time quantities are dimensionless: ``channel_load`` is packet arrivals
    per packet duration, ``f_max_norm`` is the maximum frequency offset
    times the symbol period, window sizes are in packet durations.
    """

    channel_load: float = 1.0          # G, packets per T_p
    es_n0_db: float = 10.0
    f_max_norm: float = 0.01           # f_max * T_s
    replicas: int = 2                  # d, copies per user
    packet_symbols: int = 1000         # n_s, includes the sync word
    sync_word_symbols: int = 32        # n_sw
    slots_per_packet: int = 1          # n_p
    slots_per_vf: int = 100            # N_s
    osf: int = 4                       # samples per symbol
    rolloff: float = 0.2
    window_packets: int = 100          # W*T_s in units of T_p
    window_shift_packets: int = 10     # delta-W in units of T_p
    rate: float = 1.0                  # R, bits per symbol
    threshold: float = 16.0            # lambda for the detection test
    sic_max_iters: int = 10
    trials: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.channel_load < 0:
            raise ConfigError("channel_load must be >= 0")
        if self.replicas < 2:
            raise ConfigError("replicas must be >= 2")
        if self.sync_word_symbols > self.packet_symbols:
            raise ConfigError("sync word longer than packet")
        if self.replicas * self.slots_per_packet > self.slots_per_vf:
            raise ConfigError("virtual frame too short for replica placement")
        if self.osf < 2:
            raise ConfigError("osf must be >= 2")
        if not 0.0 < self.rolloff <= 1.0:
            raise ConfigError("rolloff must be in (0, 1]")
        if self.packet_symbols % self.slots_per_packet != 0:
            raise ConfigError("packet_symbols not divisible by slots_per_packet")
        for name in ("packet_symbols", "sync_word_symbols", "slots_per_packet",
                     "slots_per_vf", "osf", "window_packets",
                     "window_shift_packets", "sic_max_iters", "trials"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be a positive integer")

    @classmethod
    def from_json(cls, text: str) -> "SystemConfig":
        """Parse a flat JSON object; unknown keys are rejected."""
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def replace(self, **kw) -> "SystemConfig":
        d = asdict(self)
        d.update(kw)
        return SystemConfig(**d)


@dataclass(frozen=True)
class DerivedParams:
    """Sample-domain quantities derived from a :class:`SystemConfig`."""

    samples_per_symbol: int
    symbols_per_packet: int
    samples_per_packet: int
    samples_per_slot: int
    samples_per_window: int
    samples_per_vf: int
    vf_packets: int                 # virtual frame duration in units of T_p
    noise_var_2sigma2: float        # total complex noise variance, Es = 1
    slot_duration_samples: int      # delta-T on the oversampled grid
    pulse_margin_samples: int       # truncated pulse tail, each side


def derive(cfg: SystemConfig) -> DerivedParams:
    """Compute every sample-domain quantity; deterministic and pure."""
    osf = cfg.osf
    samples_per_packet = cfg.packet_symbols * osf
    slot_symbols, rem = divmod(cfg.packet_symbols, cfg.slots_per_packet)
    if rem:
        raise ConfigError("packet_symbols not divisible by slots_per_packet")
    samples_per_slot = slot_symbols * osf
    if cfg.slots_per_vf % cfg.slots_per_packet != 0:
        raise ConfigError("slots_per_vf not divisible by slots_per_packet")
    noise_var = 10.0 ** (-cfg.es_n0_db / 10.0)
    if noise_var <= 0:
        raise ConfigError("noise variance must be positive")
    return DerivedParams(
        samples_per_symbol=osf,
        symbols_per_packet=cfg.packet_symbols,
        samples_per_packet=samples_per_packet,
        samples_per_slot=samples_per_slot,
        samples_per_window=cfg.window_packets * samples_per_packet,
        samples_per_vf=cfg.slots_per_vf * samples_per_slot,
        vf_packets=cfg.slots_per_vf // cfg.slots_per_packet,
        noise_var_2sigma2=noise_var,
        slot_duration_samples=samples_per_slot,
        pulse_margin_samples=(PULSE_SPAN_SYMBOLS + 1) * osf,
    )


def standard_sync_word() -> np.ndarray:
    """32 antipodal symbols from hex 1ACFFC1D, MSB first, bit b -> 2b-1."""
    bits = [(SYNC_WORD_HEX >> (SYNC_WORD_BITS - 1 - i)) & 1
            for i in range(SYNC_WORD_BITS)]
    return np.array([2 * b - 1 for b in bits], dtype=np.float64)
