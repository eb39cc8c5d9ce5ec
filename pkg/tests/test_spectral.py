import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zenodecay import spectral
from zenodecay.errors import ParameterError, QuadratureError
from zenodecay.model import LorentzianModel, SpectralModel, lorentzian_to_spectral
from oracles import AZE, WEAK_QZE, free_rate, rate_closed_form


def model(**kw):
    return LorentzianModel.from_detuning(**kw)


def spec(**kw):
    return lorentzian_to_spectral(model(**kw))


def band_model(eta, lo=-3.0, hi=5.0, level=0.7, omega0=0.5):
    """Flat detected band; its smeared form factor has a closed form."""
    flat = lambda k: np.full_like(np.asarray(k, dtype=float), level)
    none = lambda k: np.zeros_like(np.asarray(k, dtype=float))
    return SpectralModel(omega0, flat, none, eta, (lo, hi))


def band_form_factor(mu, eta, lo=-3.0, hi=5.0, level=0.7):
    w = math.pi * eta
    return level / math.pi * (math.atan((hi - mu) / w) - math.atan((lo - mu) / w))


# -- renormalized form factor --------------------------------------------------

@pytest.mark.parametrize("mu", [9000.0, 9950.0, 10000.0, 10123.4])
def test_unmeasured_form_factor_is_bare_density(mu):
    s = spec(detuning=0.0, eta=0.0, eps_inf=0.3)
    assert spectral.renormalized_form_factor(s, mu) == float(s.jd(mu) + s.ju(mu))


@pytest.mark.parametrize("eta", [0.5, 30.0, 200.0])
@pytest.mark.parametrize("offset", [0.0, 37.0, -250.0, 3000.0])
def test_detected_channel_broadens_to_wider_lorentzian(eta, offset):
    s = spec(detuning=0.0, eta=eta, eps_inf=0.0)
    D, Dt = 100.0, 100.0 + math.pi * eta
    expected = D * Dt / (offset ** 2 + Dt ** 2)
    assert spectral.renormalized_form_factor(s, 1e4 + offset) == pytest.approx(expected, rel=1e-8)


def test_form_factor_far_tail_is_negligible():
    s = spec(detuning=0.0, eta=30.0, eps_inf=0.0)
    peak = spectral.renormalized_form_factor(s, 1e4)
    assert spectral.renormalized_form_factor(s, 1e4 + 1e6) <= 1e-6 * peak


@pytest.mark.parametrize("mu", [-4.0, -3.0, 0.5, 4.9, 8.0])
def test_general_band_model(mu):
    assert spectral.renormalized_form_factor(band_model(0.2), mu) == pytest.approx(
        band_form_factor(mu, 0.2), rel=1e-8)


def test_position_dependent_eta():
    # eta(k) = c*(k - a) keeps the integral elementary:
    # int eta J/((mu-k)^2 + pi^2 eta^2) is checked against brute-force trapezoid
    eta = lambda k: 0.1 + 0.05 * (np.asarray(k) + 3.0)
    s = band_model(eta)
    k = np.linspace(-3.0, 5.0, 2_000_001)
    e = eta(k)
    dense = np.trapezoid(e * 0.7 / ((1.0 - k) ** 2 + (math.pi * e) ** 2), k)
    assert spectral.renormalized_form_factor(s, 1.0) == pytest.approx(dense, rel=1e-8)


def test_delta_kernel_limit_converges_monotonically():
    mu = 1.2
    bare = 0.7
    errors = [abs(spectral.renormalized_form_factor(band_model(lam), mu) - bare)
              for lam in (1e-2, 1e-3, 1e-4)]
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 1e-4


def test_delta_kernel_limit_lorentzian():
    base = model(detuning=40.0, eta=5.0, eps_inf=0.3)
    mu = base.k0 + 40.0
    bare = float(base.lorentzian(mu))
    errors = [abs(spectral.renormalized_form_factor(
        lorentzian_to_spectral(base.replace(eta=5.0 * lam)), mu) - bare) for lam in (1e-2, 1e-3, 1e-4)]
    assert errors[0] > errors[1] > errors[2]


def test_form_factor_curve_csv():
    curve = spectral.form_factor_curve(spec(detuning=0.0, eta=0.0), [1e4, 1e4 + 100.0])
    lines = curve.to_csv(meta="# m", trailer="# t").splitlines()
    assert lines[0] == "# m" and lines[1] == "mu,g2" and lines[-1] == "# t"
    assert lines[2] == "10000.0,1.0" and lines[3] == "10100.0,0.5"
    assert np.all(curve.g2 >= 0)


def test_quadrature_failure_is_reported(monkeypatch):
    monkeypatch.setattr(spectral, "EPSREL", 1e-30)
    monkeypatch.setattr(spectral, "EPSABS", 0.0)
    with pytest.raises(QuadratureError, match="achieved"):
        spectral.renormalized_form_factor(band_model(0.2), 1.0)


# -- sum rule ------------------------------------------------------------------

@pytest.mark.parametrize("eta, eps", [(0.0, 0.0), (2.0, 0.2), (30.0, 0.2), (200.0, 0.7)])
def test_sum_rule_rhs_is_analytic_weight(eta, eps):
    lhs, rhs, rel = spectral.sum_rule_check(spec(detuning=0.0, eta=eta, eps_inf=eps))
    assert rhs == pytest.approx(100 * math.pi, rel=1e-9)
    assert rel < 1e-6


def test_sum_rule_is_identity_without_detector():
    _, _, rel = spectral.sum_rule_check(spec(detuning=150.0, eta=0.0, eps_inf=0.4))
    assert rel < 1e-10
    _, _, rel = spectral.sum_rule_check(band_model(0.0))
    assert rel < 1e-10


def test_sum_rule_holds_for_band_with_varying_eta():
    s = band_model(lambda k: 0.1 + 0.05 * (np.asarray(k) + 3.0))
    lhs, rhs, rel = spectral.sum_rule_check(s)
    assert rhs == pytest.approx(0.7 * 8.0, rel=1e-12)
    assert rel < 1e-6


@settings(max_examples=12, deadline=None)
@given(eta=st.floats(0.0, 1e3), eps=st.floats(0.0, 1.0), x=st.floats(-5.0, 5.0))
def test_sum_rule_randomized(eta, eps, x):
    _, _, rel = spectral.sum_rule_check(spec(detuning=100.0 * x, eta=eta, eps_inf=eps))
    assert rel < 1e-6


# -- rates ---------------------------------------------------------------------

@pytest.mark.parametrize("detuning, expected", [
    (0.0, 2 * math.pi), (200.0, 0.4 * math.pi), (100.0, math.pi), (-100.0, math.pi),
])
def test_free_rate_examples(detuning, expected):
    assert spectral.free_rate(spec(detuning=detuning)) == pytest.approx(expected, rel=1e-14)


def test_free_rate_needs_omega0_in_support():
    s = band_model(0.2, omega0=7.0)
    with pytest.raises(ParameterError, match="outside the support"):
        spectral.free_rate(s)
    with pytest.raises(ParameterError):
        spectral.measured_rate_general(s)


def test_unmeasured_rate_equals_free_rate():
    r = spectral.measured_rate_general(spec(detuning=70.0, eta=0.0, eps_inf=0.5))
    assert r.ratio == 1.0 and r.classification == "NEUTRAL"


@pytest.mark.parametrize("params, ratio, label", [
    (WEAK_QZE, 0.9527, "QZE"),
    (AZE, 1.1996, "AZE"),
    (dict(detuning=200.0, delta=100.0, eta=200.0, eps_inf=0.2), 0.711, "QZE"),
])
def test_rate_examples(params, ratio, label):
    for result in (spectral.measured_rate_general(spec(**params)),
                   spectral.measured_rate_lorentzian(model(**params))):
        expected = rate_closed_form(1.0, params["delta"], params["detuning"], params["eta"],
                                    params["eps_inf"]) / free_rate(1.0, params["delta"], params["detuning"])
        assert result.ratio == pytest.approx(expected, rel=1e-8)
        assert result.ratio == pytest.approx(ratio, abs=1e-4 if ratio != 0.711 else 1e-3)
        assert result.classification == label


def test_strong_measurement_leaves_undetected_rate():
    r = spectral.measured_rate_lorentzian(model(detuning=0.0, eta=1e12, eps_inf=0.3))
    assert r.measured_rate == pytest.approx(2 * math.pi * 0.3, rel=1e-8)
    r = spectral.measured_rate_lorentzian(model(detuning=0.0, eta=1e12, eps_inf=0.0))
    assert r.measured_rate < 1e-8


@pytest.mark.parametrize("eta", [0.0, 3.0, 300.0])
def test_zero_efficiency_is_free_decay(eta):
    r = spectral.measured_rate_lorentzian(model(detuning=-120.0, eta=eta, eps_inf=1.0))
    assert r.measured_rate == pytest.approx(r.free_rate, rel=1e-15)


@settings(max_examples=12, deadline=None)
@given(eta=st.floats(0.0, 1e3), eps=st.floats(0.0, 1.0), x=st.floats(-5.0, 5.0))
def test_closed_form_matches_quadrature(eta, eps, x):
    m = model(detuning=100.0 * x, eta=eta, eps_inf=eps)
    closed = spectral.measured_rate_lorentzian(m).measured_rate
    quad = spectral.measured_rate_quadrature(m).measured_rate
    assert quad == pytest.approx(closed, rel=1e-6)


@pytest.mark.parametrize("eps", [0.0, 0.2, 0.9])
def test_rate_falls_with_eta_on_resonance(eps):
    eta = np.linspace(0.0, 2000.0, 4001)
    rate = spectral.lorentzian_rate(0.0, 100.0, eta, eps)
    assert np.all(np.diff(rate) < 0)


@pytest.mark.parametrize("detuning", [0.0, 50.0, 250.0])
def test_rate_is_linear_in_eps_inf(detuning):
    eta = np.linspace(0.0, 500.0, 101)
    for eps in (0.1, 0.5, 0.8):
        mixed = spectral.lorentzian_rate(detuning, 100.0, eta, eps)
        pure = (eps * spectral.lorentzian_rate(detuning, 100.0, 0.0, 0.0)
                + (1 - eps) * spectral.lorentzian_rate(detuning, 100.0, eta, 0.0))
        np.testing.assert_allclose(mixed, pure, rtol=1e-14)


def test_vectorized_ratio_matches_scalar_path():
    eta = np.array([0.0, 2.0, 30.0, 200.0])
    ratio = spectral.lorentzian_ratio(200.0, 100.0, eta, 0.2)
    for e, r in zip(eta, ratio):
        assert r == pytest.approx(spectral.measured_rate_lorentzian(model(**{**AZE, "eta": e})).ratio,
                                  rel=1e-14)


@pytest.mark.parametrize("s", [
    spec(detuning=150.0, eta=30.0, eps_inf=0.4),
    spec(detuning=0.0, eta=1e-9, eps_inf=0.0),
    band_model(0.2),
    band_model(lambda k: 0.1 + 0.05 * (np.asarray(k) + 3.0)),
], ids=["lorentzian", "narrow", "band", "band-varying-eta"])
def test_batched_form_factor_matches_scalar(s):
    lo, hi = s.support
    mu = np.concatenate([np.linspace(lo - 3.0, hi + 3.0, 17), [s.omega0]])
    batch = spectral._form_factor_batch(s, mu)
    scalar = np.array([spectral.renormalized_form_factor(s, m) for m in mu])
    np.testing.assert_allclose(batch, scalar, rtol=0, atol=1e-9 * scalar.max())
