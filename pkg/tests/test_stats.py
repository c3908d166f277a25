import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from travelsample.errors import DegenerateInputError, DomainError
from travelsample.stats import (
    CURVE_HEADER,
    SizeSpec,
    base_sample_size,
    coefficient_of_variation,
    curve_to_csv,
    curve_to_json,
    fpc_sample_size,
    interchange_rate,
    rate_curve,
    z_quantile,
)


def _cdf_by_quadrature(x):
    area, _ = integrate.quad(lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi), 0.0, x,
                             epsabs=1e-14, epsrel=1e-14)
    return 0.5 + area


def oracle_z(confidence):
    """Bisection on the numerically integrated normal CDF."""
    p = (1 + confidence) / 2
    return optimize.bisect(lambda x: _cdf_by_quadrature(x) - p, 0.0, 10.0, xtol=1e-14, rtol=1e-15)


@pytest.mark.parametrize("c", [0.5, 0.6, 0.8, 0.9, 0.95, 0.975, 0.99, 0.995, 0.999])
def test_z_quantile_matches_integration_oracle(c):
    assert abs(z_quantile(c) - oracle_z(c)) <= 1e-8


def test_z_quantile_examples():
    assert round(z_quantile(0.90), 4) == 1.6449
    assert round(z_quantile(0.95), 4) == 1.9600
    z = z_quantile(0.0001)
    assert 0 < z == pytest.approx(1.2533e-4, rel=1e-3)


@pytest.mark.parametrize("c", [0.0, 1.0, -0.2, 1.5, float("nan")])
def test_z_quantile_domain(c):
    with pytest.raises(DomainError):
        z_quantile(c)


def test_size_spec():
    s = SizeSpec(0.95, 0.05)
    assert s.z == z_quantile(0.95)
    assert s.to_dict()["confidence"] == 0.95
    for bad in [(0, 0.1), (1, 0.1), (0.9, 0), (0.9, 1)]:
        with pytest.raises(DomainError):
            SizeSpec(*bad)


def test_coefficient_of_variation():
    assert coefficient_of_variation([5, 5, 5, 5]) == 0.0
    assert coefficient_of_variation([0, 10]) == 1.0
    assert coefficient_of_variation([0, 10], ddof=1) == pytest.approx(math.sqrt(2))
    for bad in ([], [3], [0, 0]):
        with pytest.raises(DegenerateInputError):
            coefficient_of_variation(bad)


def test_base_sample_size():
    assert base_sample_size(1, SizeSpec(0.90, 0.25)) == pytest.approx(43.29, abs=0.005)
    assert base_sample_size(0, SizeSpec(0.5, 0.5)) == 0
    assert base_sample_size(0.5, SizeSpec(0.95, 0.25)) == pytest.approx(15.37, abs=0.005)
    with pytest.raises(DomainError):
        base_sample_size(-1, SizeSpec(0.9, 0.25))


def test_fpc_sample_size():
    n = fpc_sample_size(43.29, 1100)
    assert n == pytest.approx(41.65, abs=0.005)
    assert n / 1100 == pytest.approx(0.0379, abs=5e-5)
    assert fpc_sample_size(0, 10) == 0
    assert fpc_sample_size(1e12, 500) == pytest.approx(500.0, abs=1e-6)
    assert fpc_sample_size(math.inf, 500) == 500
    with pytest.raises(DomainError):
        fpc_sample_size(10, 0.5)


def test_interchange_rate_anchors():
    spec = SizeSpec(0.90, 0.25)
    assert round(interchange_rate(1000, 0.5, spec) * 100, 2) == 1.07
    assert round(interchange_rate(1100, 1.0, spec) * 100, 2) == 3.79
    assert round(interchange_rate(510_000, 0.5, spec) * 100, 4) == 0.0021


def test_rate_curve_family():
    trips = np.geomspace(100, 1e6, 17).round().astype(int).tolist()
    cvs = [0.5, 0.75, 1.0, 1.25, 1.5]
    pts = rate_curve(trips, cvs, [0.90, 0.95], 0.25)
    assert len(pts) == len(trips) * 10
    assert len({(p.confidence, p.cv) for p in pts}) == 10
    keys = [(p.confidence, p.cv, p.trip_total) for p in pts]
    assert keys == sorted(keys)
    for p in pts:
        assert p.required_rate == interchange_rate(p.trip_total, p.cv, SizeSpec(p.confidence, 0.25))


def test_rate_curve_single_and_empty():
    (p,) = rate_curve([1100], [1.0], [0.9], 0.25)
    assert p.required_rate == interchange_rate(1100, 1.0, SizeSpec(0.9, 0.25))
    assert rate_curve([], [1.0], [0.9], 0.25) == []


def test_rate_curve_increases_across_cvs():
    pts = rate_curve([5000], [0.5, 0.75, 1.0, 1.25, 1.5], [0.9], 0.25)
    rates = [p.required_rate for p in pts]
    assert all(a < b for a, b in zip(rates, rates[1:]))


def test_curve_serialization():
    pts = rate_curve([100, 1000], [0.5], [0.9], 0.25)
    text = curve_to_csv(pts)
    assert text.splitlines()[0] == ",".join(CURVE_HEADER) == "confidence,cv,margin_of_error,trip_total,required_rate"
    assert float(text.splitlines()[1].split(",")[-1]) == pts[0].required_rate
    assert json.loads(curve_to_json(pts))[1]["trip_total"] == 1000


def test_limit_large_population():
    spec = SizeSpec(0.9, 0.25)
    assert interchange_rate(10**9, 1.0, spec) < 1e-4 * interchange_rate(10**3, 1.0, spec)


def test_figure3_shape():
    grid = np.unique(np.geomspace(100, 1e6, 41).round().astype(int))
    cvs = [0.5, 0.75, 1.0, 1.25, 1.5]
    for conf in (0.90, 0.95):
        spec = SizeSpec(conf, 0.25)
        curves = np.array([[interchange_rate(n, cv, spec) for n in grid] for cv in cvs])
        assert np.all(np.diff(curves, axis=1) < 0)
        assert np.all(np.diff(curves, axis=0) > 0)


trip_totals = st.integers(min_value=1, max_value=10**8)
cvs = st.floats(min_value=1e-3, max_value=5.0)
confs = st.floats(min_value=0.5, max_value=0.999)
margins = st.floats(min_value=0.01, max_value=0.9)


@settings(max_examples=200, deadline=None)
@given(trip_totals, trip_totals, cvs, confs, margins)
def test_rate_decreasing_in_trip_total(n1, n2, cv, conf, e):
    assume(n1 != n2)
    lo, hi = sorted((n1, n2))
    spec = SizeSpec(conf, e)
    r_lo, r_hi = interchange_rate(lo, cv, spec), interchange_rate(hi, cv, spec)
    assert r_hi < r_lo or r_lo == r_hi == 1.0 or math.isclose(r_hi, r_lo, rel_tol=1e-12)


@settings(max_examples=200, deadline=None)
@given(trip_totals, cvs, cvs, confs, margins)
def test_rate_increasing_in_cv(n, cv1, cv2, conf, e):
    assume(abs(cv1 - cv2) > 1e-6)
    lo, hi = sorted((cv1, cv2))
    spec = SizeSpec(conf, e)
    assert interchange_rate(n, lo, spec) <= interchange_rate(n, hi, spec)
    assume(n > 1)
    assert interchange_rate(n, lo, spec) < interchange_rate(n, hi, spec)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 10**7), cvs, confs, confs, margins)
def test_rate_increasing_in_confidence(n, cv, c1, c2, e):
    assume(abs(c1 - c2) > 1e-6)
    lo, hi = sorted((c1, c2))
    assert interchange_rate(n, cv, SizeSpec(lo, e)) < interchange_rate(n, cv, SizeSpec(hi, e))


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 10**7), cvs, confs, margins, margins)
def test_rate_decreasing_in_margin(n, cv, conf, e1, e2):
    assume(abs(e1 - e2) > 1e-6)
    lo, hi = sorted((e1, e2))
    assert interchange_rate(n, cv, SizeSpec(conf, hi)) < interchange_rate(n, cv, SizeSpec(conf, lo))


@settings(max_examples=300, deadline=None)
@given(trip_totals, cvs, confs, margins)
def test_rate_bounds(n, cv, conf, e):
    spec = SizeSpec(conf, e)
    n0 = base_sample_size(cv, spec)
    assert fpc_sample_size(n0, n) <= min(n0, n) * (1 + 1e-12)
    assert 0 < interchange_rate(n, cv, spec) <= 1
