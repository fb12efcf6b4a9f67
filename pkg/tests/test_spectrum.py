import numpy as np
import pytest

from cutvibro import spectrum as spec
from cutvibro.spectrum import Band


def test_hann_endpoints_and_peak():
    w = spec.hann(11)
    assert w[0] == 0.0 and w[-1] == pytest.approx(0.0, abs=1e-15)
    assert w[5] == pytest.approx(1.0)


def test_hann_sum_closed_form():
    assert spec.hann(1000).sum() == pytest.approx(499.5, rel=1e-13)


def test_hann_rejects_short():
    with pytest.raises(ValueError):
        spec.hann(1)


def test_dft_trivial_cases():
    X = spec.dft(np.full(8, 3.0))
    assert X[0] == pytest.approx(24.0)
    assert np.allclose(X[1:], 0.0)
    imp = np.zeros(16)
    imp[0] = 1.0
    assert np.allclose(spec.dft(imp), 1.0)


@pytest.mark.parametrize("n", [8, 16, 64])
def test_dft_matches_direct_sum(n, rng):
    x = rng.standard_normal(n)
    ref = spec.dft_direct(x)
    assert np.abs(spec.dft(x) - ref).max() <= 1e-12 * np.abs(ref).max()
    assert np.abs(spec.idft(spec.dft(x)).real - x).max() <= 1e-12 * np.abs(x).max()


def test_integrate_outlet_examples():
    # two edges of length 0.05 covering a 0.1 m outlet
    w = np.array([0.025, 0.05, 0.025])
    assert spec.integrate_outlet(np.ones(3), w) == pytest.approx(0.1)
    assert spec.integrate_outlet(np.zeros(3), w) == 0.0
    assert spec.integrate_outlet(np.array([0.0, 0.5, 1.0]), w) == pytest.approx(0.05)


def test_band_from_interval_notation():
    b = Band.from_hz("[1000, 2500]", 1.0, 50.0)
    assert b.bins[0] == 20 and b.bins[-1] == 50 and len(b.bins) == 31
    b = Band.from_hz("(2500, 4000]", 1e-3, 50.0)
    assert b.bins[0] == 51 and b.bins[-1] == 80
    b = Band.from_hz("[1000, 2500); (4000, 5500]", 1e-3, 50.0)
    assert b.bins[:2] == (20, 21) and 49 in b.bins and 50 not in b.bins and 80 not in b.bins and 81 in b.bins


@pytest.mark.parametrize(
    "text", ["[1000, 2510]", "1000-2500", "[2500, 2500)"]
)
def test_band_errors(text):
    with pytest.raises(ValueError):
        Band.from_hz(text, 1.0, 50.0)


def test_band_rejects_bad_target():
    with pytest.raises(ValueError):
        Band((1, 2), 0.0)


def test_transmission_identities(rng):
    x = rng.standard_normal(64)
    P0 = spec.spectrum(x)
    band = Band(tuple(range(1, 20)), 1.0)
    assert np.allclose(spec.transmission(P0, P0, [band])[1:20], 1.0, rtol=0, atol=1e-15)
    assert np.allclose(spec.transmission(spec.spectrum(0.5 * x), P0)[1:20], 0.5)


def test_transmission_weak_baseline_error():
    P0 = np.ones(8, dtype=complex)
    P0[3] = 1e-6
    with pytest.raises(ValueError, match="too weak"):
        spec.transmission(P0, P0, [Band((2, 3), 1.0)])


def test_constraint_value_examples():
    band = Band((0, 1, 2), 0.5)
    assert spec.constraint_value(np.full(3, 0.5), band) == 0.0
    assert spec.constraint_value(np.array([0.0, 1.0, 1.0]), Band((0,), 1.0)) == 1.0


def test_seed_zero_off_band_and_at_target(rng):
    x = rng.standard_normal(32)
    P0 = spec.spectrum(x)
    band = Band((2, 3, 4), 1.0)
    G = spec.spectrum_gradient(P0, P0, band)
    assert not G.any()
    G = spec.spectrum_gradient(spec.spectrum(2 * x), P0, band)
    assert np.flatnonzero(G).tolist() == [2, 3, 4]


def test_seed_matches_finite_differences(rng):
    n = 64
    x0 = rng.standard_normal(n)
    x = x0 + 0.3 * rng.standard_normal(n)
    P0 = spec.spectrum(x0)
    band = Band(tuple(range(3, 12)), 0.3)
    g = spec.trace_gradient(spec.spectrum_gradient(spec.spectrum(x), P0, band))
    for k in rng.choice(n, 8, replace=False):
        e = 1e-6
        xp, xm = x.copy(), x.copy()
        xp[k] += e
        xm[k] -= e
        fd = (spec.band_objective(xp, P0, band) - spec.band_objective(xm, P0, band)) / (2 * e)
        assert abs(fd - g[k]) <= 1e-8 * max(abs(g).max(), 1e-30) * 10


def test_trace_gradient_is_transpose_of_windowed_dft(rng):
    # x -> (Re X, Im X) restricted to bins; adjoint takes G = gr + i gi
    n = 50
    x = rng.standard_normal(n)
    G = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    X = spec.spectrum(x)
    lhs = np.sum(X.real * G.real + X.imag * G.imag)
    rhs = x @ spec.trace_gradient(G)
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


def test_seed_adjoint_layout(rng):
    n = 20
    w = np.zeros(7)
    w[[5, 6]] = 0.5
    P0 = spec.spectrum(rng.standard_normal(n))
    P = spec.spectrum(rng.standard_normal(n))
    seeds = spec.seed_adjoint(P, P0, Band((2, 3), 1.0), w)
    assert seeds.shape == (n + 1, 7)
    assert not seeds[0].any()
    assert not seeds[:, :5].any()


def test_spl_reference():
    assert spec.spl(np.array([20e-6]))[0] == pytest.approx(0.0)
    assert spec.spl(np.array([1.0]))[0] == pytest.approx(20 * np.log10(1 / 20e-6))
