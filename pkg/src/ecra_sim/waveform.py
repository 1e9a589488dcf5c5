"""Complex-baseband synthesis on a shared oversampled grid.

The transmit root-raised-cosine and the receive matched filter are collapsed
into a single raised-cosine pulse, so symbol-spaced taps of an isolated,
offset-free replica reproduce the symbols exactly (Nyquist zeros).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import PULSE_SPAN_SYMBOLS, standard_sync_word


@dataclass
class SignalBuffer:
    """Shared medium: complex samples on the oversampled grid.

    ``origin`` is the absolute grid index of ``samples[0]``; all positions
    elsewhere in the simulator are absolute indices.
    """

    samples: np.ndarray
    origin: int = 0

    @classmethod
    def zeros(cls, length: int, origin: int = 0) -> "SignalBuffer":
        return cls(np.zeros(length, dtype=np.complex128), origin)

    def __len__(self) -> int:
        return len(self.samples)

    def view(self, start: int, length: int) -> np.ndarray:
        """Samples for absolute grid indices [start, start+length)."""
        i = start - self.origin
        if i < 0 or i + length > len(self.samples):
            raise IndexError("requested span outside buffer")
        return self.samples[i:i + length]

    def dump_csv(self, path) -> None:
        idx = np.arange(self.origin, self.origin + len(self.samples))
        np.savetxt(path, np.column_stack([idx, self.samples.real, self.samples.imag]),
                   delimiter=",", header="index,re,im", comments="", fmt="%.10g")


def rc_pulse(t_over_ts, rolloff: float):
    """Time-domain raised cosine at t/T_s; singularities by their limits."""
    if not 0.0 < rolloff <= 1.0:
        raise ValueError("rolloff must be in (0, 1]")
    t = np.asarray(t_over_ts, dtype=np.float64)
    out = np.sinc(t)
    denom = 1.0 - (2.0 * rolloff * t) ** 2
    sing = np.abs(denom) < 1e-10
    with np.errstate(divide="ignore", invalid="ignore"):
        out = out * np.cos(np.pi * rolloff * t) / np.where(sing, 1.0, denom)
    # limit at t = +-1/(2*rolloff): (pi/4) * sinc(1/(2*rolloff))
    lim = (np.pi / 4.0) * np.sinc(1.0 / (2.0 * rolloff))
    out = np.where(sing, lim, out)
    return out if out.ndim else float(out)


def pulse_table(osf: int, rolloff: float) -> np.ndarray:
    """Truncated pulse sampled on the grid, span +-PULSE_SPAN_SYMBOLS."""
    n = PULSE_SPAN_SYMBOLS * osf
    t = np.arange(-n, n + 1, dtype=np.float64) / osf
    return rc_pulse(t, rolloff)


@dataclass
class PacketSymbols:
    """n_s antipodal symbols, sync-word prefix first."""

    symbols: np.ndarray

    @classmethod
    def random(cls, n_s: int, rng: np.random.Generator,
               sync_word: np.ndarray | None = None) -> "PacketSymbols":
        sw = standard_sync_word() if sync_word is None else sync_word
        data = rng.integers(0, 2, size=n_s - len(sw)) * 2.0 - 1.0
        return cls(np.concatenate([sw, data]))


def replica_waveform(pkt: PacketSymbols, start_sample: int, f_norm: float,
                     phase: float, pulse: np.ndarray,
                     osf: int) -> tuple[int, np.ndarray]:
    """One pulse-shaped, rotated replica and its first absolute grid index.

    ``start_sample`` is the absolute grid index of the first symbol peak
    (epoch already folded in by the caller).
    """
    n_s = len(pkt.symbols)
    tail = (len(pulse) - 1) // 2
    first = start_sample - tail
    length = (n_s - 1) * osf + len(pulse)
    train = np.zeros(length - len(pulse) + 1, dtype=np.float64)
    train[::osf] = pkt.symbols
    shaped = np.convolve(train, pulse)
    # rotation e^{j(2*pi*f*t + phi)} with t in absolute symbol units
    m = np.arange(first, first + length, dtype=np.float64)
    rot = np.exp(1j * (2.0 * np.pi * f_norm * m / osf + phase))
    return first, shaped * rot


def add_waveform(out: SignalBuffer, first: int, wave: np.ndarray,
                 sign: float = 1.0) -> None:
    """Add (or with ``sign=-1`` subtract) a waveform at an absolute index."""
    i0 = first - out.origin
    if i0 < 0 or i0 + len(wave) > len(out.samples):
        raise IndexError("replica placement outside buffer")
    out.samples[i0:i0 + len(wave)] += sign * wave


def synthesize_replica(pkt: PacketSymbols, start_sample: int, f_norm: float,
                       phase: float, out: SignalBuffer, pulse: np.ndarray,
                       osf: int, sign: float = 1.0) -> None:
    """Add one pulse-shaped, rotated replica into the buffer.

    ``sign=-1`` subtracts, used by ideal interference cancellation.
    """
    first, wave = replica_waveform(pkt, start_sample, f_norm, phase, pulse, osf)
    add_waveform(out, first, wave, sign)


def add_awgn(buf: SignalBuffer, noise_var_2sigma2: float,
             rng: np.random.Generator) -> SignalBuffer:
    """Add i.i.d. circular complex Gaussian noise per grid sample."""
    if noise_var_2sigma2 < 0:
        raise ValueError("noise variance must be >= 0")
    if noise_var_2sigma2 > 0:
        sigma = np.sqrt(noise_var_2sigma2 / 2.0)
        n = len(buf.samples)
        buf.samples += sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return buf


def extract_symbol_taps(buf: SignalBuffer, start_sample: int, count: int,
                        osf: int) -> np.ndarray:
    """``count`` symbol-spaced taps beginning at an absolute grid index."""
    if count == 0:
        return np.zeros(0, dtype=np.complex128)
    i = start_sample - buf.origin
    last = i + (count - 1) * osf
    if i < 0 or last >= len(buf.samples):
        raise IndexError("tap span outside buffer")
    return buf.samples[i:last + 1:osf]
