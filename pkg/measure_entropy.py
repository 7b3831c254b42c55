"""
Masses μ, entropie de Rohlin et loi produit entropie × masse = vol_n.

dμ = dx dy / (1 + xy)². La masse d'un rectangle est fermée ; l'intégrale de
∫_Ω τ dμ est calculée en x par quadrature adaptative (scipy, ou mpmath en
précision étendue) avec le facteur intérieur en y exact.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import mpmath
import numpy as np
import pandas as pd
from scipy import integrate

from config import LAB_TIE_TOL
from core_algebra import group_params
from errors import DomainError, InfiniteMassError, LabError, PoleError, PreconditionError, UnresolvedParameterError
from interval_dynamics import digit, frak_b, interval_spec, landmarks, orbit

logger = logging.getLogger(__name__)

# Seuil sur 1 + xy aux coins ; en dessous la densité a un pôle sur le rectangle
CORNER_EPS = 1e-14
QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-12
QUAD_LIMIT = 200

SCAN_COLUMNS = ['n', 'alpha', 'kind', 'mass', 'rohlin_integral', 'entropy', 'product',
                'residual_vs_vol', 'quad_error']
EXPANSIVE_COLUMNS = ['r', 'mass_F', 'induced_integral', 'abramov_residual']


@dataclass(frozen=True)
class MassResult:
    mass: float
    breakdown: tuple = ()
    infinite: bool = False


@dataclass(frozen=True)
class EntropyResult:
    integral: float
    mass: float
    entropy: float
    quad_error: float
    infinite_mass: bool = False


@dataclass(frozen=True)
class ConjectureReport:
    n: int
    alpha: float
    kind: str
    integral: float
    vol: float
    residual: float
    quad_error: float
    approximate: bool = False
    mass_residual: float = 0.0

    def within(self, tol):
        return abs(self.residual) <= tol + self.quad_error


# ========================================
# MASSES
# ========================================

def mu_box(x1, x2, y1, y2):
    """μ([x1,x2]×[y1,y2]) = log((1+x1y1)(1+x2y2) / ((1+x1y2)(1+x2y1)))."""
    if x2 <= x1 or y2 <= y1:
        return 0.0
    corners = (1 + x1 * y1, 1 + x2 * y2, 1 + x1 * y2, 1 + x2 * y1)
    if min(corners) <= CORNER_EPS:
        raise InfiniteMassError(f"Pôle de la densité sur [{x1}, {x2}]×[{y1}, {y2}] (1 + xy = {min(corners):.3g})")
    return math.log1p(x1 * y1) + math.log1p(x2 * y2) - math.log1p(x1 * y2) - math.log1p(x2 * y1)


def mu_boxes(x1, x2, y1, y2):
    """Version vectorisée de mu_box, sans contrôle des coins ; les rectangles vides comptent 0."""
    x1, x2, y1, y2 = (np.asarray(a, dtype=float) for a in (x1, x2, y1, y2))
    out = np.log1p(x1 * y1) + np.log1p(x2 * y2) - np.log1p(x1 * y2) - np.log1p(x2 * y1)
    return np.where((x2 > x1) & (y2 > y1), out, 0.0)


def mu_rect(rect):
    return mu_box(rect.x1, rect.x2, rect.y1, rect.y2)


def mu_domain(domain):
    """
    Masse de Ω ; un coin sur l'hyperbole y = −1/x rend la masse infinie (drapeau `infinite`).
    """
    parts, infinite = [], False
    for rect in domain.rects:
        try:
            parts.append(mu_rect(rect))
        except InfiniteMassError:
            logger.info("Masse infinie sur %s", rect)
            parts.append(math.inf)
            infinite = True
    total = math.inf if infinite else math.fsum(parts)
    return MassResult(total, tuple(parts), infinite)


def strip_measure(domain, a, b):
    """ν_α([a, b]) = μ(Ω ∩ [a,b]×ℝ) / μ(Ω)."""
    total = mu_domain(domain)
    if total.infinite:
        raise InfiniteMassError("ν_α indéfinie : masse de Ω infinie")
    lo, hi = min(a, b), max(a, b)
    inside = math.fsum(mu_box(max(r.x1, lo), min(r.x2, hi), r.y1, r.y2) for r in domain.rects)
    return inside / total.mass


# ========================================
# τ ET INTÉGRALE DE ROHLIN
# ========================================

def tau(spec, x):
    """τ_α(x) = −2 log|cx + d| pour la ligne du bas de A^kC^l : −2 ln|x| (l=1), −2 ln|x−1| (l=2)."""
    d = digit(spec, x)
    u = x if d.l == 1 else x - 1
    if u == 0:
        raise PoleError(f"τ singulier en x = {x}", value=x)
    return -2 * (mpmath.log(abs(u)) if spec.params.extended else math.log(abs(u)))


def _splits(spec, x1, x2):
    """Découpe [x1, x2] en morceaux de l constant, coupés aux singularités de τ."""
    cuts = [0.0]
    two_from = None
    if spec.alpha > landmarks(spec.params).gamma:
        two_from = float(frak_b(spec))
        cuts += [two_from, 1.0]
    points = sorted({x1, x2, *(c for c in cuts if x1 < c < x2)})
    pieces = []
    for a, b in zip(points, points[1:]):
        mid = 0.5 * (a + b)
        l = 2 if two_from is not None and mid >= two_from else 1
        pieces.append((a, b, l))
    return pieces


def _inner(x, y1, y2):
    return (y2 - y1) / ((1 + x * y1) * (1 + x * y2))


def _piece_integral(a, b, l, y1, y2, extended, weighted):
    shift = 0.0 if l == 1 else 1.0
    if extended:
        f = lambda x: -2 * mpmath.log(abs(x - shift)) * _inner(x, y1, y2)  # noqa: E731
        value, err = mpmath.quad(f, [a, b], error=True)
        return float(value), float(err)
    if weighted and a == shift:
        # poids log(x − a) de QUADPACK
        value, err = integrate.quad(lambda x: -2 * _inner(x, y1, y2), a, b, weight='alg-loga', wvar=(0, 0),
                                    epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
        return value, err
    if weighted and b == shift:
        value, err = integrate.quad(lambda x: -2 * _inner(x, y1, y2), a, b, weight='alg-logb', wvar=(0, 0),
                                    epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
        return value, err
    value, err, *_ = integrate.quad(lambda x: -2 * math.log(abs(x - shift)) * _inner(x, y1, y2), a, b,
                                    epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT, full_output=1)
    return value, err


def rohlin_integral(domain, spec=None, params=None):
    """
    ∫_Ω τ dμ rectangle par rectangle.

    Pour chaque morceau en x de chiffre l constant, le facteur intérieur
    ∫dy/(1+xy)² = (y₂−y₁)/((1+xy₁)(1+xy₂)) est exact et la quadrature porte sur x.

    Returns:
        EntropyResult (entropie nan quand la masse est infinie)
    """
    params = params or (spec.params if spec is not None else group_params(domain.n))
    spec = spec or interval_spec(params, domain.alpha)
    total, err = 0.0, 0.0
    for rect in domain.rects:
        for a, b, l in _splits(spec, rect.x1, rect.x2):
            value, e = _piece_integral(a, b, l, rect.y1, rect.y2, params.extended, not rect.corner_limit)
            total += value
            err += abs(e)
    mass = mu_domain(domain)
    entropy = total / mass.mass if not mass.infinite and mass.mass > 0 else float('nan')
    return EntropyResult(total, mass.mass, entropy, err, mass.infinite)


def vol_n(n):
    """vol_n = 2(2n−3)π²/(3n)."""
    return 2 * (2 * n - 3) * math.pi ** 2 / (3 * n)


def verify_conjecture(n, alpha, precision=53, sweep=False, **kwargs):
    """Résidu ∫τdμ − vol_n sur Ω_{n,α}, avec sa barre d'erreur de quadrature."""
    from natext_domain import build_domain

    params = group_params(n, precision)
    try:
        domain = build_domain(params, alpha, sweep=sweep, **kwargs)
    except UnresolvedParameterError:
        logger.warning("α = %s non localisé, repli sur le balayage", alpha)
        domain = build_domain(params, alpha, sweep=True, **kwargs)
    result = rohlin_integral(domain, params=params)
    vol = vol_n(n)
    return ConjectureReport(n, float(domain.alpha), domain.kind, result.integral, vol, result.integral - vol,
                            result.quad_error, domain.approximate, domain.residual)


# ========================================
# BALAYAGES EN α
# ========================================

def _scan_row(job):
    n, alpha, precision, with_expansive = job
    from natext_domain import build_domain

    row = {'n': n, 'alpha': float(alpha)}
    params = group_params(n, precision)
    try:
        try:
            domain = build_domain(params, alpha)
        except UnresolvedParameterError:
            domain = build_domain(params, alpha, sweep=True)
        result = rohlin_integral(domain, params=params)
        product = result.integral if result.infinite_mass else result.entropy * result.mass
        row.update(kind=domain.kind, mass=result.mass, rohlin_integral=result.integral, entropy=result.entropy,
                   product=product, residual_vs_vol=product - vol_n(n), quad_error=result.quad_error,
                   approximate=domain.approximate, error='')
        if with_expansive:
            from expansive_power import expansive_summary

            row.update(expansive_summary(domain, params, integral=result.integral))
    except LabError as exc:
        logger.warning("Échec en α = %s : %s", alpha, exc)
        row.update(kind=None, error=f"{type(exc).__name__}: {exc}")
    return row


def scan(n, alphas, precision=53, workers=1, with_expansive=False):
    """
    Tableau (alpha, mass, rohlin_integral, entropy, product, …) sur une grille de α.

    Un α non localisé est traité par balayage ; un échec est consigné dans la
    colonne `error` sans interrompre le balayage.
    """
    jobs = [(n, float(a), precision, with_expansive) for a in alphas]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_scan_row, jobs))
    else:
        rows = [_scan_row(job) for job in jobs]
    df = pd.DataFrame(rows)
    columns = SCAN_COLUMNS + (EXPANSIVE_COLUMNS if with_expansive else [])
    for col in columns + ['approximate', 'error']:
        if col not in df.columns:
            df[col] = None
    return df[columns + ['approximate', 'error']]


def mass_jumps(table):
    """Plus grand saut de masse entre lignes adjacentes (triées par α)."""
    ordered = table.dropna(subset=['mass']).sort_values('alpha')
    if len(ordered) < 2:
        return 0.0
    return float(np.max(np.abs(np.diff(ordered['mass'].to_numpy(dtype=float)))))


def parse_alphas(text):
    """« début:fin:nombre » → grille linéaire incluant les bornes."""
    try:
        start, end, count = text.split(':')
        return np.linspace(float(start), float(end), int(count)).tolist()
    except ValueError:
        raise DomainError(f"Grille de α illisible : {text!r} (attendu début:fin:nombre)") from None


# ========================================
# VOISINS PROCHES
# ========================================

@dataclass(frozen=True)
class NeighborPrediction:
    alpha: float
    alpha_prime: float
    entropy: float
    predicted: float
    ratio: float
    strips: dict = field(default_factory=dict, compare=False, hash=False)


def _portion(interval, alpha):
    if not interval.large:
        return 'small'
    return 'left' if alpha < interval.delta else 'right'


def close_neighbors(params, interval, alpha, alpha_prime, tie_tol=LAB_TIE_TOL):
    """
    ℓ_i, ℓ′_i (1 <= i <= e_ℓ) et r_j, r′_j (1 <= j <= e_r) dans 𝕀_α ∩ 𝕀_{α′},
    avec e_ℓ = S̲+1 et e_r = S̄+1 (S̄+2 sur la partie droite des grands α).
    """
    if not (interval.contains(alpha, closed=False) and interval.contains(alpha_prime, closed=False)):
        return False
    portion = _portion(interval, alpha)
    if interval.large and _portion(interval, alpha_prime) != portion:
        return False
    e_l = interval.Sunder + 1
    e_r = interval.Sbar + (2 if portion == 'right' else 1)
    specs = [interval_spec(params, a, tie_tol) for a in (alpha, alpha_prime)]
    lo = max(s.ell0 for s in specs)
    hi = min(s.r0 for s in specs)
    for s in specs:
        ell = orbit(s, s.ell0, e_l).points[1:]
        r = orbit(s, s.r0, e_r).points[1:]
        if len(ell) < e_l or len(r) < e_r:
            return False
        if any(not lo <= p < hi for p in ell + r):
            return False
    return True


def neighbor_entropy(n, interval, alpha, alpha_prime, params=None, domain=None, entropy=None):
    """
    Entropie prédite de T_{α′} à partir de celle de T_α (α′ < α voisins proches).

    Petits α : h′ = h / (1 + (S̲ − S̄) ν([r₀′, r₀])).
    Grands α, partie gauche : h′ = h / (1 + (S̲ − S̄) ν([r₀′, r₀]) − ν([𝔟′, 𝔟])).
    Grands α, partie droite : h′ = h / (1 + (1 + S̲ − S̄) ν([r₀′, r₀]) − ν([𝔟′, 𝔟])).
    """
    from natext_domain import build_domain

    params = params or group_params(n)
    if not alpha_prime < alpha:
        raise PreconditionError(f"α′ = {alpha_prime} doit être < α = {alpha}")
    if not close_neighbors(params, interval, alpha, alpha_prime):
        raise PreconditionError(f"α = {alpha} et α′ = {alpha_prime} ne sont pas voisins proches dans J_{{{interval.k},{interval.v}}}")
    domain = domain or build_domain(params, alpha, interval=interval)
    if entropy is None:
        entropy = rohlin_integral(domain, params=params).entropy
    spec, spec_p = interval_spec(params, alpha), interval_spec(params, alpha_prime)
    nu_r = strip_measure(domain, float(spec_p.r0), float(spec.r0))
    diff = interval.Sunder - interval.Sbar
    strips = {'r0': nu_r}
    portion = _portion(interval, alpha)
    if portion == 'small':
        factor = 1 + diff * nu_r
    else:
        nu_b = strip_measure(domain, float(frak_b(spec_p)), float(frak_b(spec)))
        strips['b'] = nu_b
        factor = 1 + (diff if portion == 'left' else diff + 1) * nu_r - nu_b
    predicted = entropy / factor
    logger.debug("Voisins %s → %s : facteur %.12g", alpha, alpha_prime, factor)
    return NeighborPrediction(float(alpha), float(alpha_prime), entropy, predicted, 1 / factor, strips)
