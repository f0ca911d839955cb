import numpy as np
import pytest
from hypothesis import given, strategies as st

from sparsemd.signal_model import (
    SPEED_OF_LIGHT, CirStream, InputError, RadioConfig, ReflectorTrack, TrafficTrace, doppler_axis,
    golay_check, golay_pair, load_traffic_trace, poisson_trace, save_traffic_trace, synth_cir,
    velocity_bins, velocity_to_bin,
)


def test_radio_defaults_and_validation():
    r = RadioConfig()
    assert r.c == SPEED_OF_LIGHT
    assert r.range_resolution == pytest.approx(2.9979e8 / (2 * 1.76e9))
    for bad in (dict(f_o=0), dict(B=-1), dict(T_c=0), dict(L=0), dict(N_BP=0)):
        with pytest.raises(InputError):
            RadioConfig(**bad)


def test_static_track_constant_phase(radio):
    tr = ReflectorTrack.constant(5, np.ones(radio.N_BP), 0.0, phase0=0.3)
    s = synth_cir(radio, [tr], np.arange(20) * radio.T_c)
    cell = s.gains[:, 5, 2]
    assert np.allclose(cell, cell[0], atol=0, rtol=0)
    assert np.count_nonzero(s.gains[:, 4]) == 0


def test_phase_decrement_per_sample():
    radio = RadioConfig(f_o=60e9, T_c=0.27e-3)
    tr = ReflectorTrack.constant(0, np.ones(radio.N_BP), 1.0)
    s = synth_cir(radio, [tr], np.arange(4) * radio.T_c)
    step = np.angle(s.gains[1, 0, 0] / s.gains[0, 0, 0])
    expected = 4 * np.pi * radio.f_o * 1.0 * radio.T_c / radio.c
    assert -step == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.6786, abs=1e-3)
    assert 2 * radio.f_o * 1.0 / radio.c == pytest.approx(400, rel=1e-3)


def test_constant_velocity_line_lands_on_its_bin(radio):
    W = 64
    dv = doppler_axis(radio, W).dv
    for g in (-20, -3, 0, 5, 17):
        v = -g * dv
        tr = ReflectorTrack.constant(3, np.ones(radio.N_BP), v)
        s = synth_cir(radio, [tr], np.arange(W) * radio.T_c)
        X = np.abs(np.fft.fft(s.gains[:, 3, 0]))
        assert int(np.argmax(X)) == g % W == int(velocity_to_bin(radio, W, v))
        # Doppler frequency 2 f_o v / c sits at bin -f_d W T_c
        f_d = 2 * radio.f_o * v / radio.c
        assert -f_d * W * radio.T_c == pytest.approx(g, abs=1e-9)


@given(v=st.floats(-4, 4), dt=st.lists(st.floats(1e-5, 1e-3), min_size=2, max_size=10))
def test_phase_increment_law(v, dt):
    radio = RadioConfig()
    t = np.cumsum(dt)
    tr = ReflectorTrack.constant(1, np.ones(radio.N_BP), v)
    s = synth_cir(radio, [tr], t)
    h = s.gains[:, 1, 0]
    got = np.angle(h[1:] / h[:-1])
    want = -4 * np.pi * radio.f_o / radio.c * v * np.diff(t)
    err = np.angle(np.exp(1j * (got - want)))
    assert np.max(np.abs(err)) < 1e-9


def test_piecewise_velocity_integrates(radio):
    tr = ReflectorTrack(2, np.ones(radio.N_BP), [1.0, -2.0, 0.5], 0.01)
    t = np.array([0.0, 0.005, 0.01, 0.015, 0.02, 0.03, 0.05])
    # 1 m/s for 10 ms, then -2 m/s for 10 ms, then 0.5 m/s held
    want = np.array([0, 0.005, 0.01, 0.0, -0.01, -0.01 + 0.005, -0.01 + 0.5 * 0.03])
    assert np.allclose(tr.displacement(t), want, atol=1e-15)


@given(seed=st.integers(0, 2**32 - 1))
def test_linearity(seed):
    radio = RadioConfig(L=6, N_BP=2)
    rng = np.random.default_rng(seed)
    tracks = [ReflectorTrack(int(rng.integers(0, 6)), rng.standard_normal(2) + 1j * rng.standard_normal(2),
                             rng.uniform(-3, 3, 4), 0.002, rng.uniform(0, 6)) for _ in range(4)]
    t = np.sort(rng.uniform(0, 0.01, 15))
    t = np.unique(t)
    total = synth_cir(radio, tracks, t).gains
    parts = synth_cir(radio, tracks[:2], t).gains + synth_cir(radio, tracks[2:], t).gains
    assert np.allclose(total, parts, atol=1e-12)


def test_synth_rejects_bad_input(radio):
    tr = ReflectorTrack.constant(0, np.ones(radio.N_BP))
    with pytest.raises(InputError):
        synth_cir(radio, [tr], [0.0, 0.0])
    with pytest.raises(InputError):
        synth_cir(radio, [ReflectorTrack.constant(radio.L, np.ones(radio.N_BP))], [0.0])
    with pytest.raises(InputError):
        synth_cir(radio, [], [0.0, 1.0])
    s = synth_cir(radio, [], [0.0, 1.0], noise_std=0.1, seed=1)
    assert s.gains.shape == (2, radio.L, radio.N_BP)


def test_noise_statistics_and_seed(radio):
    s1 = synth_cir(radio, [], np.arange(2000) * 1e-3, noise_std=0.5, seed=7)
    s2 = synth_cir(radio, [], np.arange(2000) * 1e-3, noise_std=0.5, seed=7)
    assert np.array_equal(s1.gains, s2.gains)
    g = s1.gains.ravel()
    assert np.sqrt(np.mean(np.abs(g) ** 2)) == pytest.approx(0.5, rel=0.01)
    assert np.std(g.real) == pytest.approx(np.std(g.imag), rel=0.02)


def test_doppler_axis_reference_numbers():
    ax = doppler_axis(RadioConfig(f_o=62e9, T_c=0.27e-3), 64)
    assert ax.dv == pytest.approx(0.14, rel=0.05)
    assert ax.v_max == pytest.approx(4.48, rel=0.01)
    nr = doppler_axis(RadioConfig(f_o=28e9, T_c=0.3125e-3), 64)
    assert nr.v_max == pytest.approx(8.57, rel=0.01)
    assert ax.df == pytest.approx(1 / (64 * 0.27e-3))
    assert ax.fd_max == pytest.approx(1 / (2 * 0.27e-3))
    with pytest.raises(InputError):
        doppler_axis(RadioConfig(), 1)


@given(W=st.integers(2, 4096), f=st.floats(1e9, 1e11), T=st.floats(1e-5, 1e-2))
def test_doppler_axis_scaling(W, f, T):
    radio = RadioConfig(f_o=f, T_c=T)
    a, b = doppler_axis(radio, W), doppler_axis(radio, 2 * W)
    assert a.dv * W == pytest.approx(2 * a.v_max, rel=1e-15)
    assert b.dv == pytest.approx(a.dv / 2, rel=1e-15)
    assert b.v_max == a.v_max


def test_velocity_bins_span(radio):
    v = velocity_bins(radio, 64)
    ax = doppler_axis(radio, 64)
    assert v[0] == 0
    assert np.isclose(v.max(), ax.v_max) and np.isclose(v.min(), -ax.v_max + ax.dv)
    assert np.allclose(np.diff(np.sort(v)), ax.dv)


def test_golay_smallest_pair():
    a, b = golay_pair(2)
    assert a.tolist() == [1, 1] and b.tolist() == [1, -1]
    s = np.correlate(a.astype(int), a.astype(int), "full") + np.correlate(b.astype(int), b.astype(int), "full")
    assert s[1:].tolist() == [4, 0]


@pytest.mark.parametrize("n", [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024])
def test_golay_complementary(n):
    a, b = golay_pair(n)
    assert set(np.unique(a)) <= {-1, 1} and a.size == n
    assert golay_check(a, b)
    # direct convolution oracle for every nonzero lag
    a64, b64 = a.astype(np.int64), b.astype(np.int64)
    for k in range(1, n):
        assert int(a64[:-k] @ a64[k:] + b64[:-k] @ b64[k:]) == 0
    for i in (0, n // 2, n - 1):
        flipped = a.copy()
        flipped[i] *= -1
        assert not golay_check(flipped, b)


@pytest.mark.parametrize("n", [0, 3, 100, 2048])
def test_golay_rejects_lengths(n):
    with pytest.raises(InputError):
        golay_pair(n)


def test_trace_parse(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("# comment\n0.000100,1500\n\n0.000400,1500\n")
    tr, n_bad = load_traffic_trace(p)
    assert n_bad == 0 and len(tr) == 2
    assert tr.timestamps.tolist() == [100e-6, 400e-6]
    assert tr.total_bits == 2 * 1500 * 8


def test_trace_out_of_order(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("0.3,10\n0.1,20\n0.2,30\n")
    tr, n_bad = load_traffic_trace(p)
    assert n_bad == 1
    assert tr.timestamps.tolist() == [0.1, 0.2, 0.3]
    assert tr.sizes.tolist() == [20, 30, 10]


@pytest.mark.parametrize("body,line", [("0.1,10\n0.2\n", 2), ("0.1,10\nabc,5\n", 2), ("x\n", 1), ("0.1,0\n", 1)])
def test_trace_malformed_names_line(tmp_path, body, line):
    p = tmp_path / "t.csv"
    p.write_text(body)
    with pytest.raises(InputError, match=f":{line}:"):
        load_traffic_trace(p)


def test_trace_empty_file(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("# only a comment\n")
    with pytest.raises(InputError, match="empty"):
        load_traffic_trace(p)


def test_trace_roundtrip(tmp_path):
    tr = poisson_trace(500, 1.0, seed=3)
    save_traffic_trace(tr, tmp_path / "t.csv")
    back, n_bad = load_traffic_trace(tmp_path / "t.csv")
    assert n_bad == 0
    assert np.array_equal(back.timestamps, tr.timestamps) and np.array_equal(back.sizes, tr.sizes)


def test_poisson_trace_scale():
    # 1 h at 370 pkt/s is about 1.33 M packets; check the rate on a shorter span
    tr = poisson_trace(370, 100.0, seed=0)
    assert len(tr) == pytest.approx(37000, rel=0.03)
    assert np.all(np.diff(tr.timestamps) >= 0)
    assert np.array_equal(poisson_trace(370, 10.0, seed=5).timestamps, poisson_trace(370, 10.0, seed=5).timestamps)


def test_stream_and_trace_invariants():
    with pytest.raises(InputError):
        CirStream(np.array([0.0, 0.0]), np.zeros((2, 1, 1), complex))
    with pytest.raises(InputError):
        TrafficTrace(np.array([0.2, 0.1]), np.array([1, 1]))
    with pytest.raises(InputError):
        TrafficTrace(np.array([0.1]), np.array([0]))
