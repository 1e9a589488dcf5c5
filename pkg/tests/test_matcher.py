import numpy as np
import pytest

from ecra_sim.detector import Candidate, CandidateSet
from ecra_sim.matcher import compatible_set, lambda2, match
from ecra_sim.params import derive
from ecra_sim.waveform import PacketSymbols, SignalBuffer, pulse_table, \
    synthesize_replica


def _cands(positions):
    return CandidateSet([Candidate(int(p), 1.0) for p in sorted(positions)])


def test_compatible_set_slot_multiples():
    s = _cands([0, 12000, 12001])
    out = compatible_set(0, s, 4000, 4000, 0, 10 ** 6, tol=2)
    assert out == [12000, 12001]


def test_compatible_set_rejects_half_slot():
    s = _cands([0, 2000])
    assert compatible_set(0, s, 4000, 4000, 0, 10 ** 6, tol=2) == []


def test_compatible_set_one_packet_away_included():
    s = _cands([0, 4000])
    assert compatible_set(0, s, 4000, 4000, 0, 10 ** 6, tol=2) == [4000]


def test_compatible_set_window_bound():
    # partner must leave room for a full packet inside the window
    s = _cands([0, 8000])
    assert compatible_set(0, s, 4000, 4000, 0, 12000, tol=2) == [8000]
    assert compatible_set(0, s, 4000, 4000, 0, 11999, tol=2) == []


def test_lambda2_identical_replicas():
    y = np.random.default_rng(0).choice([-1.0, 1.0], size=1000).astype(complex)
    assert lambda2(y, y) == pytest.approx(1000.0)
    assert lambda2(y, y * np.exp(1j * 0.9)) == pytest.approx(1000.0)


def test_lambda2_symmetry_and_errors(rng):
    a = rng.standard_normal(100) + 1j * rng.standard_normal(100)
    b = rng.standard_normal(100) + 1j * rng.standard_normal(100)
    assert lambda2(a, b) == lambda2(b, a)
    with pytest.raises(ValueError):
        lambda2(a, b[:50])


def test_lambda2_gaussian_moment(rng):
    # E[lambda2^2] = n_s for independent unit-variance complex taps
    n_s, n_draws = 1000, 10 ** 4
    a = (rng.standard_normal((n_draws, n_s))
         + 1j * rng.standard_normal((n_draws, n_s))) / np.sqrt(2)
    b = (rng.standard_normal((n_draws, n_s))
         + 1j * rng.standard_normal((n_draws, n_s))) / np.sqrt(2)
    scores2 = np.abs(np.sum(a * np.conj(b), axis=1)) ** 2
    assert np.mean(scores2) / n_s == pytest.approx(1.0, rel=0.05)


def test_true_twin_beats_unrelated_packet(rng):
    # anchor taps vs (same packet, rotated, noisy) and (unrelated packet)
    n_s = 1000
    two_sigma2 = 0.1
    wins = 0
    n_trials = 1000
    sym = rng.choice([-1.0, 1.0], size=(n_trials, n_s))
    other = rng.choice([-1.0, 1.0], size=(n_trials, n_s))
    noise = lambda: np.sqrt(two_sigma2 / 2) * (
        rng.standard_normal((n_trials, n_s))
        + 1j * rng.standard_normal((n_trials, n_s)))
    y1 = sym + noise()
    twin = sym * np.exp(1j * rng.uniform(0, 2 * np.pi, (n_trials, 1))) + noise()
    unrel = other * np.exp(1j * rng.uniform(0, 2 * np.pi, (n_trials, 1))) + noise()
    s_twin = np.abs(np.sum(y1 * np.conj(twin), axis=1))
    s_unrel = np.abs(np.sum(y1 * np.conj(unrel), axis=1))
    wins = np.sum(s_twin > s_unrel)
    assert wins / n_trials > 0.999


def _match_scene(cfg):
    """Noiseless buffer: twin replicas at slots 0 and 3, stranger at slot 6."""
    dp = derive(cfg)
    rng = np.random.default_rng(9)
    pkt = PacketSymbols.random(cfg.packet_symbols, rng)
    stranger = PacketSymbols.random(cfg.packet_symbols, rng)
    margin = dp.pulse_margin_samples
    buf = SignalBuffer.zeros(20 * dp.samples_per_packet + 2 * margin,
                             origin=-margin)
    pulse = pulse_table(cfg.osf, cfg.rolloff)
    pos = [0, 3 * dp.samples_per_slot, 6 * dp.samples_per_slot]
    synthesize_replica(pkt, pos[0], 0.0, 0.0, buf, pulse, cfg.osf)
    synthesize_replica(pkt, pos[1], 0.0, 1.2, buf, pulse, cfg.osf)
    synthesize_replica(stranger, pos[2], 0.0, 0.4, buf, pulse, cfg.osf)
    return buf, dp, pos


def test_match_selects_true_twin(small_cfg):
    buf, dp, pos = _match_scene(small_cfg)
    cand = _cands(pos)
    m = match(pos[0], cand, buf, small_cfg, dp, 0, 20 * dp.samples_per_packet)
    assert len(m.partners) == small_cfg.replicas - 1
    assert m.partners[0][0] == pos[1]


def test_match_anchor_only_empty(small_cfg):
    buf, dp, pos = _match_scene(small_cfg)
    cand = _cands([pos[0]])
    m = match(pos[0], cand, buf, small_cfg, dp, 0, 20 * dp.samples_per_packet)
    assert m.partners == []


def test_match_backward_compatibility(small_cfg):
    # anchoring on the later twin still finds the earlier one
    buf, dp, pos = _match_scene(small_cfg)
    cand = _cands(pos)
    m = match(pos[1], cand, buf, small_cfg, dp, 0, 20 * dp.samples_per_packet)
    assert m.partners[0][0] == pos[0]


def test_match_partner_count_bound(small_cfg):
    buf, dp, pos = _match_scene(small_cfg)
    cand = _cands(pos + [9 * dp.samples_per_slot])
    m = match(pos[0], cand, buf, small_cfg, dp, 0, 20 * dp.samples_per_packet)
    assert len(m.partners) <= small_cfg.replicas - 1
    delta = abs(m.partners[0][0] - pos[0])
    assert delta % dp.slot_duration_samples <= small_cfg.osf
