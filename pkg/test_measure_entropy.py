import math

import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from config import precision_context
from core_algebra import group_params
from errors import DomainError, InfiniteMassError, PoleError, PreconditionError
from interval_dynamics import interval_spec
from measure_entropy import (
    SCAN_COLUMNS,
    close_neighbors,
    mass_jumps,
    mu_box,
    mu_domain,
    mu_rect,
    neighbor_entropy,
    parse_alphas,
    rohlin_integral,
    scan,
    strip_measure,
    tau,
    verify_conjecture,
    vol_n,
)
from natext_domain import Domain, Rect, build_alpha_one, build_domain
from sync_solver import certified_interval

G = (1 + math.sqrt(5)) / 2
g = G - 1
VOL3 = 2 * math.pi ** 2 / 3


@pytest.fixture(scope='module')
def p3():
    return group_params(3)


def _density_oracle(x1, x2, y1, y2):
    value, _ = integrate.dblquad(lambda y, x: 1 / (1 + x * y) ** 2, x1, x2, y1, y2, epsabs=1e-13, epsrel=1e-12)
    return value


def test_mu_box_closed_forms():
    assert mu_box(0, 1, 0, 1) == pytest.approx(math.log(2), abs=1e-12)
    assert mu_box(-g, g, -g * g, g * g) == pytest.approx(2 * math.log(G), abs=1e-12)
    assert mu_box(0, 1, 0.5, 0.5) == 0.0


def test_mu_box_matches_quadrature():
    for box in [(0, 1, 0, 1), (-g, g, -g * g, g * g), (-1.72, -0.4, 0.0, 0.39)]:
        assert mu_box(*box) == pytest.approx(_density_oracle(*box), abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 0.9), st.floats(0.01, 1), st.floats(-0.5, 0.4), st.floats(0.01, 0.5))
def test_mu_box_oracle_random(x1, w, y1, h):
    box = (x1, x1 + w, y1, y1 + h)
    assert mu_box(*box) == pytest.approx(_density_oracle(*box), abs=1e-9)


def test_mu_box_pole_raises():
    with pytest.raises(InfiniteMassError):
        mu_box(0, 1, -1, 0)


def test_mu_domain_alpha_one_is_infinite(p3):
    result = mu_domain(build_alpha_one(p3))
    assert result.infinite
    assert math.isinf(result.mass)


def test_mass_at_delta(p3):
    domain = build_domain(p3, "delta:-1,1")
    # r₀(δ) = 1 + g² : Ω = [−g, g]×[0, g²] ∪ [g, 1 + g²]×[0, G] ∪ [−g, 1 + g²]×[−g², 0]
    x2 = 1 + g * g
    expected = 2 * math.log(G) + math.log((1 + x2 * G) * (1 - g ** 3) / ((1 + g * G) * (1 - x2 * g * g)))
    assert expected == pytest.approx(4 * math.log(G), abs=1e-12)
    result = mu_domain(domain)
    assert result.mass == pytest.approx(expected, abs=1e-9)
    assert rohlin_integral(domain, params=p3).integral == pytest.approx(VOL3, abs=1e-8)


def test_mass_continuity(p3):
    a = mu_domain(build_domain(p3, 0.14)).mass
    b = mu_domain(build_domain(p3, 0.1405)).mass
    assert abs(a - b) < 0.01


def test_strip_measure_whole_interval(p3):
    domain = build_domain(p3, 0.14)
    assert strip_measure(domain, domain.ell0, domain.r0) == pytest.approx(1.0)
    assert strip_measure(domain, 0.1, 0.1) == 0.0


def test_tau(p3):
    spec = interval_spec(p3, 1.0)
    assert tau(spec, 0.5) == pytest.approx(2 * math.log(2))
    assert tau(spec, 1.5) == pytest.approx(2 * math.log(2))
    with pytest.raises(PoleError):
        tau(spec, 0.0)
    spec = interval_spec(p3, 0.14)
    assert tau(spec, -1.0) == pytest.approx(0.0)


def test_rohlin_alpha_one(p3):
    domain = build_alpha_one(p3)
    single = Domain(3, 1.0, 'alpha-one', (), domain.lower[:1])
    assert rohlin_integral(single, params=p3).integral == pytest.approx(math.pi ** 2 / 3, abs=1e-8)
    result = rohlin_integral(domain, params=p3)
    assert result.integral == pytest.approx(VOL3, abs=1e-8)
    assert result.infinite_mass
    assert math.isnan(result.entropy)


def test_rohlin_empty_domain(p3):
    flat = Domain(3, 0.5, 'sweep', (Rect(-1.0, 1.0, 0.0, 0.0),), ())
    assert rohlin_integral(flat, params=p3).integral == 0.0


def test_vol_n():
    assert vol_n(3) == pytest.approx(VOL3)
    assert vol_n(4) == pytest.approx(2 * 5 * math.pi ** 2 / 12)


@pytest.mark.parametrize("alpha", [0.14, 0.75, 0.86, 0.87])
def test_conjecture_n3(alpha):
    report = verify_conjecture(3, alpha)
    assert report.vol == pytest.approx(VOL3)
    assert abs(report.residual) < 1e-6
    assert report.within(1e-6)


@pytest.mark.slow
@pytest.mark.parametrize("n, alpha", [(4, 0.3), (5, 0.12), (4, 0.7)])
def test_conjecture_higher_n(n, alpha):
    assert abs(verify_conjecture(n, alpha).residual) < 1e-6


@pytest.mark.slow
def test_extended_precision_entropy():
    with precision_context(128):
        params = group_params(4, 128)
        domain = build_domain(params, 0.3)
        result = rohlin_integral(domain, params=params)
    assert result.integral == pytest.approx(vol_n(4), abs=1e-6)


def test_scan_table():
    table = scan(3, [0.14, 0.75])
    assert list(table.columns[:len(SCAN_COLUMNS)]) == SCAN_COLUMNS
    assert (table['error'] == '').all()
    assert (table['product'] - VOL3).abs().max() < 1e-4
    assert mass_jumps(table) > 0


def test_scan_records_failures():
    table = scan(4, [1.0])
    assert table['error'].iloc[0]


def test_mass_jumps_single_row():
    assert mass_jumps(pd.DataFrame({'alpha': [0.1], 'mass': [1.0]})) == 0.0


def test_parse_alphas():
    assert parse_alphas("0.1:0.2:3") == pytest.approx([0.1, 0.15, 0.2])
    with pytest.raises(DomainError):
        parse_alphas("0.1-0.2")


def test_neighbor_entropy_matches_direct(p3):
    interval = certified_interval(p3, 1, "1")
    assert close_neighbors(p3, interval, 0.14, 0.135)
    prediction = neighbor_entropy(3, interval, 0.14, 0.135, params=p3)
    direct = rohlin_integral(build_domain(p3, 0.135), params=p3).entropy
    assert prediction.predicted == pytest.approx(direct, abs=1e-4)


def test_neighbor_entropy_vanishing_strip(p3):
    interval = certified_interval(p3, 1, "1")
    prediction = neighbor_entropy(3, interval, 0.14, 0.14 - 1e-9, params=p3)
    assert prediction.ratio == pytest.approx(1.0, abs=1e-6)


def test_neighbor_entropy_requires_smaller_alpha(p3):
    interval = certified_interval(p3, 1, "1")
    with pytest.raises(PreconditionError):
        neighbor_entropy(3, interval, 0.135, 0.14, params=p3)


DOMAIN_KINDS = [
    (0.14, 'interior-small'),
    ("zeta:1,1", 'zeta-small'),
    ("eta:1,1", 'eta-small'),
    (0.5, 'large-left'),
    (0.75, 'large-right'),
    ("delta:-1,1", 'delta'),
    ("eta:-1,1", 'endpoint-large'),
    ("zeta:-1,1", 'endpoint-large'),
    (0.86, None),
    (1.0, 'alpha-one'),
]


@pytest.mark.parametrize("alpha, kind", DOMAIN_KINDS)
def test_rohlin_over_domain_kinds(p3, alpha, kind):
    domain = build_domain(p3, alpha)
    if kind is not None:
        assert domain.kind == kind
    assert rohlin_integral(domain, params=p3).integral == pytest.approx(VOL3, abs=1e-6)


def test_domain_kinds_cover_cases():
    kinds = {kind for _, kind in DOMAIN_KINDS if kind}
    assert kinds == {'interior-small', 'zeta-small', 'eta-small', 'large-left', 'large-right', 'delta',
                     'endpoint-large', 'alpha-one'}


def test_mass_continuity_step_halving(p3):
    alpha = 0.14
    base = mu_domain(build_domain(p3, alpha)).mass
    jumps = [abs(mu_domain(build_domain(p3, alpha + h)).mass - base) for h in (4e-3, 2e-3, 1e-3)]
    assert jumps[1] <= jumps[0] + 1e-12
    assert jumps[2] <= jumps[1] + 1e-12
    assert jumps[2] < 1e-2


@pytest.mark.slow
def test_scan_fifty_points():
    table = scan(3, parse_alphas("0.05:0.95:50"))
    assert (table['error'] == '').all(), table.loc[table['error'] != '', ['alpha', 'error']]
    exact = table[~table['approximate'].astype(bool)]
    swept = table[table['approximate'].astype(bool)]
    assert (exact['product'] - VOL3).abs().max() < 1e-4
    if len(swept):
        assert (swept['product'] - VOL3).abs().max() < 1e-3
    assert table['product'].astype(float).std() < 1e-3


@pytest.mark.parametrize("alpha, alpha_prime", [(0.5, 0.4999), (0.75, 0.7499)])
def test_neighbor_entropy_large(p3, alpha, alpha_prime):
    interval = certified_interval(p3, -1, "1")
    assert interval.large
    assert close_neighbors(p3, interval, alpha, alpha_prime)
    prediction = neighbor_entropy(3, interval, alpha, alpha_prime, params=p3)
    assert 'b' in prediction.strips
    direct = rohlin_integral(build_domain(p3, alpha_prime), params=p3).entropy
    assert prediction.predicted == pytest.approx(direct, abs=1e-4)
