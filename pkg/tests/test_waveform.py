import numpy as np
import pytest

from ecra_sim.params import standard_sync_word
from ecra_sim.waveform import (PacketSymbols, SignalBuffer, add_awgn,
                               extract_symbol_taps, pulse_table, rc_pulse,
                               replica_waveform, synthesize_replica)


def test_rc_pulse_peak_and_nyquist_zeros():
    assert rc_pulse(0.0, 0.2) == pytest.approx(1.0)
    for k in range(1, 9):
        assert rc_pulse(float(k), 0.2) == pytest.approx(0.0, abs=1e-12)
        assert rc_pulse(float(-k), 0.2) == pytest.approx(0.0, abs=1e-12)


def test_rc_pulse_singularity_value():
    # analytic limit (pi/4)*sinc(1/(2*rolloff)); for rolloff 0.2 this is 0.1
    assert rc_pulse(1.0 / (2 * 0.2), 0.2) == pytest.approx(0.1, abs=1e-12)
    assert rc_pulse(-1.0 / (2 * 0.2), 0.2) == pytest.approx(0.1, abs=1e-12)


def test_rc_pulse_rejects_bad_rolloff():
    with pytest.raises(ValueError):
        rc_pulse(0.0, 0.0)
    with pytest.raises(ValueError):
        rc_pulse(0.0, 1.5)


def _packet(n_s, rng):
    return PacketSymbols.random(n_s, rng)


def test_nyquist_taps_reproduce_symbols(rng):
    osf = 4
    pulse = pulse_table(osf, 0.2)
    pkt = _packet(100, rng)
    buf = SignalBuffer.zeros(100 * osf + 2 * 9 * osf, origin=-9 * osf)
    synthesize_replica(pkt, 0, 0.0, 0.0, buf, pulse, osf)
    taps = extract_symbol_taps(buf, 0, 100, osf)
    assert np.max(np.abs(taps - pkt.symbols)) < 1e-6


def test_antiphase_superposition_cancels(rng):
    osf = 4
    pulse = pulse_table(osf, 0.2)
    pkt = _packet(50, rng)
    buf = SignalBuffer.zeros(50 * osf + 2 * 9 * osf, origin=-9 * osf)
    synthesize_replica(pkt, 0, 0.0, 0.0, buf, pulse, osf)
    synthesize_replica(pkt, 0, 0.0, np.pi, buf, pulse, osf)
    assert np.max(np.abs(buf.samples)) < 1e-12


def test_frequency_rotation_at_taps(rng):
    osf = 4
    f_norm = 0.01
    phase = 0.7
    pulse = pulse_table(osf, 0.2)
    pkt = _packet(64, rng)
    buf = SignalBuffer.zeros(64 * osf + 2 * 9 * osf, origin=-9 * osf)
    synthesize_replica(pkt, 0, f_norm, phase, buf, pulse, osf)
    taps = extract_symbol_taps(buf, 0, 64, osf)
    k = np.arange(64)
    expect = pkt.symbols * np.exp(1j * (2 * np.pi * f_norm * k + phase))
    assert np.max(np.abs(taps - expect)) < 1e-6


def test_synthesis_linearity(rng):
    osf = 4
    pulse = pulse_table(osf, 0.2)
    a, b = _packet(40, rng), _packet(40, rng)
    one = SignalBuffer.zeros(60 * osf + 2 * 9 * osf, origin=-9 * osf)
    two = SignalBuffer.zeros(60 * osf + 2 * 9 * osf, origin=-9 * osf)
    sep = SignalBuffer.zeros(60 * osf + 2 * 9 * osf, origin=-9 * osf)
    synthesize_replica(a, 0, 0.003, 0.2, one, pulse, osf)
    synthesize_replica(b, 8, -0.002, 1.1, two, pulse, osf)
    synthesize_replica(a, 0, 0.003, 0.2, sep, pulse, osf)
    synthesize_replica(b, 8, -0.002, 1.1, sep, pulse, osf)
    assert np.max(np.abs(sep.samples - (one.samples + two.samples))) < 1e-12


def test_subtraction_restores_buffer(rng):
    osf = 4
    pulse = pulse_table(osf, 0.2)
    pkt = _packet(40, rng)
    buf = SignalBuffer.zeros(40 * osf + 2 * 9 * osf, origin=-9 * osf)
    synthesize_replica(pkt, 0, 0.005, 0.4, buf, pulse, osf)
    synthesize_replica(pkt, 0, 0.005, 0.4, buf, pulse, osf, sign=-1.0)
    assert np.max(np.abs(buf.samples)) < 1e-12


def test_replica_waveform_matches_synthesis(rng):
    osf = 4
    pulse = pulse_table(osf, 0.2)
    pkt = _packet(40, rng)
    buf = SignalBuffer.zeros(40 * osf + 2 * 9 * osf, origin=-9 * osf)
    synthesize_replica(pkt, 4, 0.002, 0.3, buf, pulse, osf)
    first, wave = replica_waveform(pkt, 4, 0.002, 0.3, pulse, osf)
    direct = np.zeros_like(buf.samples)
    direct[first - buf.origin:first - buf.origin + len(wave)] = wave
    assert np.array_equal(buf.samples, direct)


def test_out_of_range_placement_rejected(rng):
    osf = 4
    pulse = pulse_table(osf, 0.2)
    pkt = _packet(40, rng)
    buf = SignalBuffer.zeros(40 * osf, origin=0)   # no pulse-tail guard
    with pytest.raises(IndexError):
        synthesize_replica(pkt, 0, 0.0, 0.0, buf, pulse, osf)


def test_awgn_moments(rng):
    buf = SignalBuffer.zeros(10 ** 6)
    add_awgn(buf, 0.1, rng)
    var = np.mean(np.abs(buf.samples) ** 2)
    assert abs(var - 0.1) / 0.1 < 0.01
    assert abs(np.mean(buf.samples)) < 3 * np.sqrt(0.1) / 10 ** 3


def test_awgn_zero_variance_noop(rng):
    buf = SignalBuffer.zeros(100)
    add_awgn(buf, 0.0, rng)
    assert np.all(buf.samples == 0)
    with pytest.raises(ValueError):
        add_awgn(buf, -1.0, rng)


def test_extract_symbol_taps_edges():
    buf = SignalBuffer.zeros(100, origin=10)
    assert len(extract_symbol_taps(buf, 10, 0, 4)) == 0
    with pytest.raises(IndexError):
        extract_symbol_taps(buf, 0, 5, 4)
    with pytest.raises(IndexError):
        extract_symbol_taps(buf, 10, 100, 4)


def test_half_sample_offset_taps_match_convolution_oracle(rng):
    # sample the replica off-peak and compare with a direct dense
    # convolution of the symbol train with the pulse
    osf = 4
    rolloff = 0.2
    pulse = pulse_table(osf, rolloff)
    pkt = _packet(60, rng)
    buf = SignalBuffer.zeros(60 * osf + 2 * 9 * osf, origin=-9 * osf)
    synthesize_replica(pkt, 0, 0.0, 0.0, buf, pulse, osf)
    shift = osf // 2
    taps = extract_symbol_taps(buf, shift, 59, osf)
    t = np.arange(59) + shift / osf
    expect = np.zeros(59, dtype=np.float64)
    for j, sym in enumerate(pkt.symbols):
        contrib = rc_pulse(t - j, rolloff)
        contrib[np.abs(t - j) > 8] = 0.0   # same truncation as pulse_table
        expect += sym * contrib
    assert np.max(np.abs(taps - expect)) < 1e-12


def test_signal_buffer_view_bounds():
    buf = SignalBuffer.zeros(50, origin=5)
    assert len(buf.view(5, 50)) == 50
    with pytest.raises(IndexError):
        buf.view(4, 10)
    with pytest.raises(IndexError):
        buf.view(50, 10)


def test_packet_symbols_prefix(rng):
    pkt = PacketSymbols.random(100, rng)
    assert np.array_equal(pkt.symbols[:32], standard_sync_word())
    assert set(np.unique(pkt.symbols)) <= {-1.0, 1.0}
    assert len(pkt.symbols) == 100


def test_buffer_csv_dump(tmp_path, rng):
    buf = SignalBuffer.zeros(10, origin=-2)
    add_awgn(buf, 0.1, rng)
    path = tmp_path / "buf.csv"
    buf.dump_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (10, 3)
    assert data[0, 0] == -2
