import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from core_algebra import conj_by_R, digit_matrix, group_params
from errors import ConstructionError, PoleError
from interval_dynamics import Digit, digit, interval_spec
from measure_entropy import mu_domain
from natext_domain import build_alpha_one, build_domain, contains, heights
from planar_map import (
    _lamination,
    block_images,
    containment_threshold,
    jacobian_density_ratio,
    partition_blocks,
    planar_apply,
    planar_apply_array,
    sample_mu,
    verify_bijectivity,
)

SAMPLES = 20000


@pytest.fixture(scope='module')
def p3():
    return group_params(3)


@pytest.fixture(scope='module')
def omega_014(p3):
    return build_domain(p3, 0.14)


@pytest.fixture(scope='module')
def spec_014(p3):
    return interval_spec(p3, 0.14)


def test_planar_apply_near_r0(p3, spec_014):
    x = spec_014.r0 - 1e-9
    X, Y = planar_apply(spec_014, x, 0.0)
    m = digit_matrix(p3, 1, 1)
    assert X == pytest.approx(m.apply(x))
    assert Y == pytest.approx(conj_by_R(m).apply(0.0))
    assert Y == pytest.approx(-1 / 3)


def test_planar_apply_pole(spec_014):
    # RMR⁻¹ pour (1,1) : y ↦ −1/(y + 3)
    with pytest.raises(PoleError):
        planar_apply(spec_014, spec_014.r0 - 1e-9, -3.0)


def test_locus_is_invariant(spec_014):
    for x in (-1.5, -0.9, -0.3, math.sqrt(3) / 10):
        X, Y = planar_apply(spec_014, x, -1 / x)
        assert Y == pytest.approx(-1 / X, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1), st.floats(-0.3, 0.3))
def test_measure_preservation(u, y):
    spec = interval_spec(group_params(3), 0.14)
    x = spec.ell0 + u * (spec.r0 - spec.ell0)
    h = 1e-6
    assume(abs(x) > 1e-2)
    assume(x - h > spec.ell0 and x + h < spec.r0)
    assume(digit(spec, x - h) == digit(spec, x + h))
    assert jacobian_density_ratio(spec, x, y, h) == pytest.approx(1.0, rel=1e-5)


def test_planar_apply_array_matches_scalar(omega_014, spec_014):
    rng = np.random.default_rng(11)
    xs, ys = sample_mu(omega_014, 300, rng)
    X, Y = planar_apply_array(spec_014, xs, ys)
    for x, y, X1, Y1 in zip(xs, ys, X, Y):
        ref = planar_apply(spec_014, x, y)
        assert X1 == pytest.approx(ref[0], abs=1e-9)
        assert Y1 == pytest.approx(ref[1], abs=1e-9)


def test_sample_mu_stays_in_domain(omega_014):
    xs, ys = sample_mu(omega_014, 2000, np.random.default_rng(5))
    assert contains(omega_014, xs, ys).all()
    again = sample_mu(omega_014, 2000, np.random.default_rng(5))
    assert np.array_equal(xs, again[0])


def test_partition_mass_additivity(omega_014):
    blocks = partition_blocks(omega_014)
    assert blocks.mass() == pytest.approx(mu_domain(omega_014).mass, abs=1e-9)
    digits = set(blocks.by_digit())
    assert {Digit(-1, 1), Digit(-2, 1), Digit(1, 1), Digit(2, 1)} <= digits
    assert all(d.l == 1 for d in digits)


def test_partition_large_alpha_has_l2_blocks(p3):
    blocks = partition_blocks(build_domain(p3, 0.86))
    assert any(d.l == 2 for d in blocks.by_digit())


def test_block_images_are_boxes(omega_014, spec_014):
    images = block_images(spec_014, partition_blocks(omega_014))
    assert images
    for _, X1, X2, Y1, Y2 in images:
        assert X1 <= X2 and Y1 <= Y2


def test_containment_threshold():
    assert containment_threshold(100000) == pytest.approx(1 - 5 / np.sqrt(100000))
    assert containment_threshold(10 ** 9) == pytest.approx(0.999)


@pytest.mark.parametrize("alpha", [0.14, 0.86, 0.87])
def test_verify_bijectivity_passes(p3, alpha):
    domain = build_domain(p3, alpha)
    report = verify_bijectivity(domain, samples=SAMPLES, grid=256, seed=7)
    assert report.verdict == 'pass', report.to_text()
    assert report.containment_fraction >= containment_threshold(SAMPLES)
    assert report.mass_balance_residual <= 1e-6 * report.mass
    assert report.lamination_ok
    assert report.limit_extent < 1e-3


def test_exchange_small_regime(omega_014):
    report = verify_bijectivity(omega_014, samples=2000, grid=128, seed=1)
    assert report.exchange_ok is True


def test_negative_control_fails(omega_014):
    up, low = heights(omega_014)
    jittered = list(up)
    jittered[-1] += 0.05
    broken = omega_014.with_heights(upper=jittered)
    report = verify_bijectivity(broken, samples=SAMPLES, grid=256, seed=7)
    assert report.verdict == 'fail'
    assert report.mass_balance_residual > 1e-3


def test_infinite_mass_is_inconclusive(p3):
    report = verify_bijectivity(build_alpha_one(p3), samples=100)
    assert report.verdict == 'inconclusive'


def test_report_exports(omega_014, tmp_path):
    report = verify_bijectivity(omega_014, samples=2000, grid=128, seed=3)
    text = report.to_text()
    assert "seed=3" in text
    assert f"verdict={report.verdict}" in text
    path = report.to_csv(tmp_path / "report.csv")
    assert path.exists()
    assert report.to_frame().loc[0, 'samples'] == 2000


def test_report_is_reproducible(omega_014):
    a = verify_bijectivity(omega_014, samples=2000, grid=128, seed=9)
    b = verify_bijectivity(omega_014, samples=2000, grid=128, seed=9)
    assert a == b


@pytest.mark.slow
@pytest.mark.parametrize("n, alpha", [(3, 0.14), (4, 0.3), (5, 0.12), (4, 0.7)])
def test_verify_bijectivity_full_samples(n, alpha):
    domain = build_domain(group_params(n), alpha)
    report = verify_bijectivity(domain, samples=100000, grid=512)
    assert report.verdict == 'pass', report.to_text()


def test_overlapping_cylinders_raise(monkeypatch, omega_014):
    import planar_map

    spec = interval_spec(group_params(3), 0.14)
    real = planar_map.cylinders(spec, 8)
    doubled = real + real[:1]
    monkeypatch.setattr(planar_map, 'cylinders', lambda s, k: sorted(doubled, key=lambda c: c.lam))
    with pytest.raises(ConstructionError):
        partition_blocks(omega_014, spec, kmax=8)


@pytest.mark.parametrize("alpha", ["zeta:1,1", "eta:1,1", "delta:-1,1", "zeta:-1,1"])
def test_verify_bijectivity_at_endpoints(p3, alpha):
    domain = build_domain(p3, alpha)
    report = verify_bijectivity(domain, samples=SAMPLES, grid=256, seed=7)
    assert report.verdict == 'pass', report.to_text()
    assert report.mass_balance_residual <= 1e-6 * report.mass
    assert report.lamination_ok, report.lamination_gap


def test_lamination_detects_missing_image(omega_014, spec_014):
    blocks = partition_blocks(omega_014, spec_014)
    images = block_images(spec_014, blocks)
    ok, gap = _lamination(omega_014, blocks, images)
    assert ok and gap <= 1e-9
    hole = Digit(-3, 1)
    assert blocks.by_digit()[hole].full
    ok, gap = _lamination(omega_014, blocks, [img for img in images if img[0] != hole])
    assert not ok
    assert gap > 1e-3
