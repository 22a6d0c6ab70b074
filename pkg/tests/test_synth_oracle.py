import numpy as np
import pytest
from scipy import stats

from lymphmargin.density_profile import profile_labels, to_fixed_window
from lymphmargin.errors import GeometryTooSmall, InvalidProfile
from lymphmargin.slide_model import SlideMeta
from lymphmargin.synth_oracle import (
    ProfileSpec,
    SineMargin,
    StraightMargin,
    binomial_envelope,
    generate_case,
    oracle_curve,
    pixel_uniforms,
)

META = SlideMeta(8.0, 520, 40)  # 2080 um either side of the margin


def test_density_extremes():
    zero = generate_case(ProfileSpec.constant(0.0), StraightMargin(), META, 1)
    assert not zero.lymph_a.mask.any() and not zero.lymph_b.mask.any()
    one = generate_case(ProfileSpec.constant(1.0), StraightMargin(), META, 1)
    assert one.lymph_a.mask.all() and one.lymph_b.mask.all()


def test_bit_identical_regeneration(backend):
    spec = ProfileSpec.peak(0.05, 0.4, 0.1)
    a = generate_case(spec, SineMargin(50.0, 200.0), SlideMeta(4.0, 1100, 64), 2**63 + 17)
    b = generate_case(spec, SineMargin(50.0, 200.0), SlideMeta(4.0, 1100, 64), 2**63 + 17)
    np.testing.assert_array_equal(a.labels.labels, b.labels.labels)
    np.testing.assert_array_equal(a.lymph_a.mask, b.lymph_a.mask)
    np.testing.assert_array_equal(a.lymph_b.mask, b.lymph_b.mask)
    c = generate_case(spec, SineMargin(50.0, 200.0), SlideMeta(4.0, 1100, 64), 2**63 + 18)
    assert not np.array_equal(a.lymph_a.mask, c.lymph_a.mask)


def test_geometry_too_small():
    with pytest.raises(GeometryTooSmall):
        generate_case(ProfileSpec.constant(0.1), StraightMargin(), SlideMeta(1.0, 3000, 10), 0)
    with pytest.raises(GeometryTooSmall):
        generate_case(ProfileSpec.constant(0.1), SineMargin(100.0, 500.0), SlideMeta(2.0, 2000, 10), 0)


def test_profile_validation():
    with pytest.raises(InvalidProfile):
        ProfileSpec(((-2000, 0, 0.1), (10, 2000, 0.1)))
    with pytest.raises(InvalidProfile):
        ProfileSpec(((-2000, 2000, 1.5),))
    with pytest.raises(InvalidProfile):
        ProfileSpec(((-1000, 2000, 0.5),))
    spec = ProfileSpec.from_dict({"pieces": [[-2000, 0, 0.05], [0, 2000, 0.4]]})
    assert ProfileSpec.from_dict(spec.to_dict()) == spec


def test_oracle_constant_and_step():
    np.testing.assert_array_equal(oracle_curve(ProfileSpec.constant(0.3)).values, 0.3)
    step = oracle_curve(ProfileSpec(((-2000, 0, 0.05), (0, 2000, 0.4)))).values
    np.testing.assert_array_equal(step[:200], 0.05)
    np.testing.assert_array_equal(step[200:], 0.4)


def test_oracle_misaligned_matches_monte_carlo():
    spec = ProfileSpec(((-2000, -33.0, 0.1), (-33.0, 47.5, 0.6), (47.5, 2000, 0.2)))
    expected = oracle_curve(spec).values
    np.testing.assert_allclose(expected[196], (7 * 0.1 + 3 * 0.6) / 10)
    rng = np.random.default_rng(7)
    n = 1_000_000
    d = rng.uniform(-2000, 2000, n)
    hit = rng.random(n) < spec.density_at(d)
    k = np.floor(d / 10).astype(int) + 200
    count = np.bincount(k, minlength=400)
    rate = np.bincount(k, weights=hit, minlength=400) / count
    for i in (196, 197, 203, 204):  # bins cut by a piece boundary, and their neighbours
        assert abs(rate[i] - expected[i]) <= binomial_envelope(expected[i], count[i], 3.0)


def test_uniform_stream(backend):
    u = pixel_uniforms(123, 200_000, 0)
    assert ((u >= 0) & (u < 1)).all()
    assert stats.kstest(u, "uniform").pvalue > 1e-4
    v = pixel_uniforms(123, 200_000, 1)
    assert abs(np.corrcoef(u, v)[0, 1]) < 4 / np.sqrt(len(u))
    np.testing.assert_array_equal(pixel_uniforms(123, 1000, 0), u[:1000])


def test_empirical_curve_converges_to_oracle():
    spec = ProfileSpec.peak(0.05, 0.4, 0.1, center_um=-300, half_width_um=150)
    meta = SlideMeta(4.0, 1000, 600)
    case = generate_case(spec, StraightMargin(), meta, 99)
    expected = oracle_curve(spec).values
    for lymph in (case.lymph_a, case.lymph_b):
        curve = profile_labels(case.labels, lymph)
        got = to_fixed_window(curve).values
        k0 = curve.first_bin_index
        n_bin = np.zeros(400)
        lo = max(k0, -200)
        hi = min(k0 + len(curve), 200)
        n_bin[lo + 200:hi + 200] = curve.tissue_px[lo - k0:hi - k0]
        ok = n_bin >= 1000
        assert ok.sum() > 350
        err = np.abs(got - expected)[ok]
        assert (err <= binomial_envelope(expected[ok], n_bin[ok])).all()


def test_realizations_independent():
    spec = ProfileSpec.constant(0.3)
    case = generate_case(spec, StraightMargin(), SlideMeta(4.0, 1000, 400), 5)
    a = case.lymph_a.mask.astype(float) - 0.3
    b = case.lymph_b.mask.astype(float) - 0.3
    prod = (a * b).ravel()
    bound = 4 * 0.3 * 0.7 / np.sqrt(prod.size)
    assert abs(prod.mean()) <= bound
