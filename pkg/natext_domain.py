"""
Domaines Ω_{n,α} de l'extension naturelle.

Unions de rectangles fermées sur les intervalles de synchronisation (intérieur,
extrémités ζ, η, δ), cas α = 1 pour n = 3, et balayage itératif (enveloppe des
fibres) pour les α non synchronisants. Les domaines s'exportent en
enregistrements versionnés.
"""
import json
import logging
import re
from dataclasses import dataclass, field

import numpy as np

from config import LAB_KMAX, LAB_MASS_TOL, LAB_MAX_ITER, LAB_TIE_TOL
from core_algebra import INF, conj_by_R, digit_matrix, generators, group_params
from errors import ConstructionError, DomainError, PoleError, UnsupportedCaseError
from interval_dynamics import Digit, cylinders, digit, frak_b, interval_spec, landmarks, orbit
from measure_entropy import mu_boxes
from sync_solver import certified_interval, locate
from word_machinery import parse_word

logger = logging.getLogger(__name__)

RECORD_FORMAT = 'natext-domain'
RECORD_VERSION = 1

# Largeur/hauteur relative (× t) en dessous de laquelle un rectangle est dégénéré
DEGENERATE_TOL = 1e-12
ENDPOINT_TOL = 1e-12
PAIRING_TOL = 1e-9
SEED_ORBIT_DEPTH = 64
SWEEP_MAX_POINTS = 4096

KINDS = ('interior-small', 'zeta-small', 'eta-small', 'large-left', 'large-right', 'delta',
         'endpoint-large', 'alpha-one', 'sweep', 'induced')


@dataclass(frozen=True)
class Rect:
    x1: float
    x2: float
    y1: float
    y2: float
    part: str = 'upper'  # upper | lower
    tag: str = ''
    corner_limit: bool = False

    @property
    def width(self):
        return self.x2 - self.x1

    @property
    def height(self):
        return self.y2 - self.y1

    @property
    def level(self):
        """Hauteur signée : y₂ pour Ω⁺, y₁ pour Ω⁻."""
        return self.y2 if self.part == 'upper' else self.y1

    def contains(self, x, y, tol=0.0):
        return self.x1 - tol <= x <= self.x2 + tol and self.y1 - tol <= y <= self.y2 + tol


@dataclass(frozen=True)
class Domain:
    n: int
    alpha: float
    kind: str
    upper: tuple
    lower: tuple
    approximate: bool = False
    residual: float = 0.0
    interval: object = field(default=None, compare=False)
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def rects(self):
        return self.upper + self.lower

    @property
    def ell0(self):
        return min(r.x1 for r in self.rects)

    @property
    def r0(self):
        return max(r.x2 for r in self.rects)

    def bbox(self):
        rects = self.rects
        return (min(r.x1 for r in rects), max(r.x2 for r in rects),
                min(r.y1 for r in rects), max(r.y2 for r in rects))

    def with_heights(self, upper=None, lower=None):
        """Copie avec des hauteurs remplacées (utilisé pour les contrôles négatifs)."""
        ups = tuple(Rect(r.x1, r.x2, 0.0, h, 'upper', r.tag) for r, h in zip(self.upper, upper)) \
            if upper is not None else self.upper
        lows = tuple(Rect(r.x1, r.x2, h, 0.0, 'lower', r.tag) for r, h in zip(self.lower, lower)) \
            if lower is not None else self.lower
        return Domain(self.n, self.alpha, self.kind, ups, lows, self.approximate, self.residual,
                      self.interval, dict(self.meta))


# ========================================
# OUTILS DE CONSTRUCTION
# ========================================

def _orbit_points(spec, start, count):
    rec = orbit(spec, start, count)
    if len(rec.points) <= count:
        raise ConstructionError(f"Orbite de {float(start)} interrompue après {len(rec.points) - 1} pas (attendu {count})")
    return [float(p) for p in rec.points[:count + 1]]


def _keep(rect, t):
    tol = DEGENERATE_TOL * float(t)
    if rect.width < tol or rect.height < tol:
        logger.warning("Rectangle dégénéré ignoré : %s", rect)
        return False
    return True


def _upper_part(points, r0, heights, t, label):
    """
    Ω⁺ à partir des points (indice i, ℓ_i) : K_a entre points consécutifs triés,
    le dernier jusqu'à r₀ ; le rectangle d'extrémité gauche ℓ_i reçoit heights[i].
    """
    ordered = sorted(points, key=lambda p: p[1])
    rects = []
    for a, (i, x) in enumerate(ordered):
        x2 = ordered[a + 1][1] if a + 1 < len(ordered) else r0
        rect = Rect(x, x2, 0.0, heights[i], 'upper', f"K{a + 1}: ℓ{i}, {label}")
        if _keep(rect, t):
            rects.append(rect)
    return tuple(rects)


def _lower_part(points, ell0, heights, t, label):
    """
    Ω⁻ à partir des points (j, r_j) décroissants : L_b entre points consécutifs,
    le plus à gauche depuis ℓ₀ ; le rectangle d'extrémité droite r_j reçoit heights[j].
    """
    ordered = sorted(points, key=lambda p: -p[1])
    rects = []
    for b, (j, x) in enumerate(ordered):
        x1 = ordered[b + 1][1] if b + 1 < len(ordered) else ell0
        rect = Rect(x1, x, heights[j], 0.0, 'lower', f"L{-b - 1}: r{j}, {label}")
        if _keep(rect, t):
            rects.append(rect)
    return tuple(sorted(rects, key=lambda r: r.x1))


def _check_same_order(at_alpha, at_endpoint, what):
    if np.argsort(at_alpha).tolist() != np.argsort(at_endpoint).tolist():
        raise ConstructionError(f"Ordre des {what} différent entre α et l'extrémité")


def _require_small(interval):
    if interval.large:
        raise DomainError(f"J_{{{interval.k},{interval.v}}} n'est pas un intervalle des petits α")


def _require_large(interval):
    if not interval.large:
        raise DomainError(f"J_{{{interval.k},{interval.v}}} n'est pas un intervalle des grands α")


def _params_for(interval, params):
    return params or group_params(interval.n)


# ========================================
# PETITS α
# ========================================

def build_small_interior(interval, alpha, params=None, tie_tol=LAB_TIE_TOL):
    """
    Ω pour ζ_{k,v} < α < η_{k,v}.

    Hauteurs : y_{τ(i)} = −ℓ_{S̲−i}(ζ) pour Ω⁺, y_{β(j)} = −r_{S̄−j}(η) pour Ω⁻.
    """
    _require_small(interval)
    params = _params_for(interval, params)
    if not interval.zeta < alpha < interval.eta:
        raise DomainError(f"α = {alpha} hors de l'intérieur de ]{interval.zeta}, {interval.eta}[")
    Su, Sb = interval.Sunder, interval.Sbar
    spec = interval_spec(params, alpha, tie_tol)
    spec_z = interval_spec(params, interval.zeta, tie_tol)
    spec_e = interval_spec(params, interval.eta, tie_tol)
    ell = _orbit_points(spec, spec.ell0, Su)
    ell_z = _orbit_points(spec_z, spec_z.ell0, Su)
    _check_same_order(ell, ell_z, "ℓ_i")
    r = _orbit_points(spec, spec.r0, Sb)
    r_e = _orbit_points(spec_e, spec_e.r0, Sb)
    upper = _upper_part(list(enumerate(ell)), float(spec.r0), [-ell_z[Su - i] for i in range(Su + 1)],
                        params.t, "ζ")
    lower = _lower_part(list(enumerate(r)), float(spec.ell0), [-r_e[Sb - j] for j in range(Sb + 1)],
                        params.t, "η")
    logger.info("Ω intérieur petits α : %d + %d rectangles en α = %s", len(upper), len(lower), alpha)
    return Domain(params.n, float(alpha), 'interior-small', upper, lower, interval=interval)


def build_small_zeta(interval, params=None, tie_tol=LAB_TIE_TOL):
    """α = ζ_{k,v} : r_{S̄}(ζ) = ℓ₀, le rectangle L_{−S̄−1} disparaît et L_{−S̄} = [ℓ₀, r_ι]."""
    _require_small(interval)
    params = _params_for(interval, params)
    Su, Sb = interval.Sunder, interval.Sbar
    spec = interval_spec(params, interval.zeta, tie_tol)
    spec_e = interval_spec(params, interval.eta, tie_tol)
    ell = _orbit_points(spec, spec.ell0, Su)
    r = _orbit_points(spec, spec.r0, Sb)[:Sb]
    r_e = _orbit_points(spec_e, spec_e.r0, Sb)
    upper = _upper_part(list(enumerate(ell)), float(spec.r0), [-ell[Su - i] for i in range(Su + 1)],
                        params.t, "ζ")
    lower = _lower_part(list(enumerate(r)), float(spec.ell0), [-r_e[Sb - j] for j in range(Sb + 1)],
                        params.t, "η")
    return Domain(params.n, float(interval.zeta), 'zeta-small', upper, lower, interval=interval)


def build_small_eta(interval, params=None, tie_tol=LAB_TIE_TOL):
    """α = η_{k,v} : ℓ_{S̲}(η) = r₀, K_{S̲} = [ℓ_{i_{S̲}}, r₀] et Ω⁺ perd une hauteur."""
    _require_small(interval)
    params = _params_for(interval, params)
    Su, Sb = interval.Sunder, interval.Sbar
    spec = interval_spec(params, interval.eta, tie_tol)
    spec_z = interval_spec(params, interval.zeta, tie_tol)
    ell = _orbit_points(spec, spec.ell0, Su)[:Su]
    ell_z = _orbit_points(spec_z, spec_z.ell0, Su)
    r = _orbit_points(spec, spec.r0, Sb)
    upper = _upper_part(list(enumerate(ell)), float(spec.r0), [-ell_z[Su - i] for i in range(Su + 1)],
                        params.t, "ζ")
    lower = _lower_part(list(enumerate(r)), float(spec.ell0), [-r[Sb - j] for j in range(Sb + 1)],
                        params.t, "η")
    return Domain(params.n, float(interval.eta), 'eta-small', upper, lower, interval=interval)


# ========================================
# GRANDS α
# ========================================

def large_kind(interval, alpha, tol=ENDPOINT_TOL):
    """Cas de construction d'un α de l'adhérence de J_{−k,v}."""
    _require_large(interval)
    if not interval.eta - tol <= alpha <= interval.zeta + tol:
        raise DomainError(f"α = {alpha} hors de [η, ζ] = [{interval.eta}, {interval.zeta}]")
    if abs(alpha - interval.zeta) <= tol or abs(alpha - interval.eta) <= tol:
        return 'endpoint-large'
    if abs(alpha - interval.delta) <= tol:
        return 'delta'
    return 'large-left' if alpha < interval.delta else 'large-right'


def _hat_heights(spec_e, r_e):
    """−r̂_i triés, r̂_i = C·r_i(η) quand r_i(η) est dans le cylindre (1,2)."""
    two = Digit(1, 2)
    # en α = γ_n, [𝔟, r₀) est vide : r₀ ne reçoit (1,2) que par accrochage
    empty = frak_b(spec_e) >= spec_e.r0 - spec_e.snap
    hats = []
    for x in r_e:
        try:
            d = digit(spec_e, x)
        except PoleError:
            d = None
        hats.append(-(x - 1) / x if d == two and not empty else -x)
    return sorted(hats)


def build_large(interval, alpha, params=None, tie_tol=LAB_TIE_TOL):
    """
    Ω pour α dans l'adhérence de J_{−k,v}.

    Ω⁺ : y_{τ(i)} = −ℓ_{S̲−i}(η). Ω⁻ : hauteurs −r̂_i(η) triées, attribuées de gauche
    à droite ; pour α > δ on ajoute L_{−S̄−2} = [ℓ₀, r_{S̄+1}) de hauteur RAC²R⁻¹·y_{β(S̄)}.
    """
    params = _params_for(interval, params)
    kind = large_kind(interval, alpha)
    at_zeta = kind == 'endpoint-large' and abs(alpha - interval.zeta) <= ENDPOINT_TOL
    right = kind == 'large-right' or at_zeta
    Su, Sb = interval.Sunder, interval.Sbar
    spec = interval_spec(params, alpha, tie_tol)
    spec_e = interval_spec(params, interval.eta, tie_tol)
    ell_e = _orbit_points(spec_e, spec_e.ell0, Su)
    ell = _orbit_points(spec, spec.ell0, Su)
    if at_zeta:
        ell = ell[:Su]
    else:
        _check_same_order(ell, ell_e, "ℓ_i")
    upper = _upper_part(list(enumerate(ell)), float(spec.r0), [-ell_e[Su - i] for i in range(Su + 1)],
                        params.t, "η")

    r = _orbit_points(spec, spec.r0, Sb + 1 if right else Sb)
    r_e = _orbit_points(spec_e, spec_e.r0, Sb)
    ordered = sorted(range(Sb + 1), key=lambda j: r[j])
    heights = _hat_heights(spec_e, r_e)
    by_index = {j: heights[pos] for pos, j in enumerate(ordered)}
    lower = list(_lower_part([(j, r[j]) for j in range(Sb + 1)], float(spec.ell0), by_index, params.t, "η"))
    if right:
        A, C, R = generators(params)
        extra = conj_by_R(A @ C @ C)
        y_beta = by_index[Sb]
        cut = r[Sb + 1]
        leftmost = lower[0]
        lower[0] = Rect(cut, leftmost.x2, leftmost.y1, 0.0, 'lower', leftmost.tag)
        rect = Rect(float(spec.ell0), cut, float(extra.apply(y_beta)), 0.0, 'lower',
                    f"L{-Sb - 2}: r{Sb + 1}, RAC²R⁻¹")
        lower = [rect] + lower if _keep(rect, params.t) else lower
    logger.info("Ω grands α (%s) : %d + %d rectangles en α = %s", kind, len(upper), len(lower), alpha)
    return Domain(params.n, float(alpha), kind, upper, tuple(lower), interval=interval)


# ========================================
# α = 1
# ========================================

def build_alpha_one(params):
    """Ω_{3,1} = [0,1]×[−1,0] ∪ [1,2]×[−1/2,0] ; masse infinie (coins (1,−1) et (2,−1/2))."""
    if params.n != 3:
        raise UnsupportedCaseError(f"Ω_{{n,1}} n'est fourni que pour n = 3 (reçu n = {params.n})")
    lower = (Rect(0.0, 1.0, -1.0, 0.0, 'lower', "coin limite (1,−1)", corner_limit=True),
             Rect(1.0, 2.0, -0.5, 0.0, 'lower', "coin limite (2,−1/2)", corner_limit=True))
    return Domain(3, 1.0, 'alpha-one', (), lower)


# ========================================
# BALAYAGE
# ========================================

def _cyl(cyls, k, l):
    for c in cyls:
        if c.digit.k == k and c.digit.l == l:
            return c
    raise ConstructionError(f"Cylindre ({k},{l}) vide : graine indisponible pour ce α")


def seed_small(spec, cyls):
    """𝒵 : pièces (x₁, x₂, bas, haut) avec Φ = [−r₀, −ℓ₀]."""
    ell0, r0 = float(spec.ell0), float(spec.r0)
    k = digit(spec, spec.r0).k
    lam = float(_cyl(cyls, -3, 1).lam)
    rho = float(_cyl(cyls, k + 2, 1).rho)
    return [(ell0, lam, -r0, -lam), (lam, rho, -r0, -ell0), (rho, r0, -rho, -ell0)]


def seed_large(spec, cyls):
    """𝒲 : cinq pièces de fibres Φ₁…Φ₅."""
    params = spec.params
    ell0, r0 = float(spec.ell0), float(spec.r0)
    b = float(frak_b(spec))
    k = -digit(spec, spec.ell0).k
    _, C, _ = generators(params)
    ell1 = float(orbit(spec, spec.ell0, 1).points[1])

    def mu(d):
        return float(digit_matrix(params, -d, 1).inverse().apply(b))

    lam = float(_cyl(cyls, -k - 2, 1).lam)
    rho21 = float(_cyl(cyls, 2, 1).rho)
    rho22 = float(_cyl(cyls, 2, 2).rho)
    cr0 = float(C.apply(spec.r0))
    return [(ell0, ell1, -b, -mu(k + 1)), (ell1, lam, -b, -mu(k)), (lam, rho21, -b, -ell0),
            (rho21, rho22, -cr0, -ell0), (rho22, r0, -rho21, -ell0)]


def image_box(params, d, x1, x2, y1, y2):
    """Image (X₁, X₂, Y₁, Y₂) de [x1,x2]×[y1,y2] par (M·x, RMR⁻¹·y) ; None si un pôle y est atteint."""
    m = d.matrix(params)
    n = conj_by_R(m)
    pole = n.pole()
    if pole is not INF and y1 < float(pole) < y2:
        logger.debug("Pôle %s dans la fibre de %s", float(pole), d)
        return None
    X = sorted((float(m.apply(x1)), float(m.apply(x2))))
    Y = sorted((float(n.apply(y1)), float(n.apply(y2))))
    return (X[0], X[1], Y[0], Y[1], d)


def _profile_mass(xs, bots, tops):
    x1, x2 = xs[:-1], xs[1:]
    zeros = np.zeros_like(bots)
    return float(np.sum(mu_boxes(x1, x2, zeros, tops)) + np.sum(mu_boxes(x1, x2, bots, zeros)))


def _sweep_pieces(params, cyls, xs, cache):
    """
    Pièces segment ∩ cylindre de la grille : (j, X₁, X₂, coefficients de RMR⁻¹).

    X₁, X₂ bornent l'image du morceau de segment par M ; le cache garde les matrices par chiffre.
    """
    rows = []
    ci = 0
    for j in range(len(xs) - 1):
        a, b = xs[j], xs[j + 1]
        while ci < len(cyls) and cyls[ci].rho <= a:
            ci += 1
        cj = ci
        while cj < len(cyls) and cyls[cj].lam < b:
            c = cyls[cj]
            lo, hi = max(a, float(c.lam)), min(b, float(c.rho))
            if hi > lo:
                if c.digit not in cache:
                    m = c.digit.matrix(params)
                    cache[c.digit] = (m, tuple(float(v) for v in conj_by_R(m).entries()))
                m, conj = cache[c.digit]
                X = sorted((float(m.apply(lo)), float(m.apply(hi))))
                rows.append((j, X[0], X[1], *conj))
            cj += 1
    return np.array(rows, dtype=float).reshape(-1, 7)


def _sweep_image(pieces, xs, bots, tops, snap):
    """
    Profil de 𝒯(D) : sur chaque segment, enveloppe de {0} et des fibres images qui le couvrent.

    Les morceaux dont la fibre contient le pôle de RMR⁻¹ sont écartés.
    """
    j = pieces[:, 0].astype(int)
    a, b, c, d = pieces[:, 3], pieces[:, 4], pieces[:, 5], pieces[:, 6]
    den_b, den_t = c * bots[j] + d, c * tops[j] + d
    ok = den_b * den_t > 0
    with np.errstate(divide='ignore', invalid='ignore'):
        yb = (a * bots[j] + b) / den_b
        yt = (a * tops[j] + b) / den_t
    lo, hi = np.minimum(yb, yt), np.maximum(yb, yt)
    j0 = np.searchsorted(xs, pieces[:, 1] - snap, side='left')
    j1 = np.searchsorted(xs, pieces[:, 2] + snap, side='right') - 1
    new_b, new_t = np.zeros(len(xs) - 1), np.zeros(len(xs) - 1)
    for idx in np.flatnonzero(ok & (j1 > j0)):
        s = slice(j0[idx], j1[idx])
        new_t[s] = np.maximum(new_t[s], hi[idx])
        new_b[s] = np.minimum(new_b[s], lo[idx])
    return new_b, new_t, int(np.count_nonzero(~ok))


def _missing_points(pieces, xs, snap):
    """Bornes d'images absentes de la grille (à plus de snap de tout point)."""
    ends = np.unique(pieces[:, 1:3].ravel())
    pos = np.clip(np.searchsorted(xs, ends), 1, len(xs) - 1)
    gap = np.minimum(np.abs(ends - xs[pos - 1]), np.abs(xs[pos] - ends))
    return ends[(gap > snap) & (ends > xs[0]) & (ends < xs[-1])]


def _refine(xs, bots, tops, extra):
    """Insère des points dans la grille ; chaque nouveau segment hérite de la fibre de son parent."""
    grid = np.unique(np.concatenate((xs, extra)))
    mids = 0.5 * (grid[:-1] + grid[1:])
    parent = np.clip(np.searchsorted(xs, mids, side='right') - 1, 0, len(bots) - 1)
    return grid, bots[parent], tops[parent]


def _profile_change(xs, b0, t0, b1, t1):
    """μ(D₀ Δ D₁) pour deux profils portés par la même grille."""
    x1, x2 = xs[:-1], xs[1:]
    return float(np.sum(mu_boxes(x1, x2, np.minimum(t0, t1), np.maximum(t0, t1)))
                 + np.sum(mu_boxes(x1, x2, np.minimum(b0, b1), np.maximum(b0, b1))))


def _merge(xs, values, part, t):
    """Regroupe les segments consécutifs de même hauteur en rectangles."""
    rects = []
    start = 0
    for j in range(1, len(values) + 1):
        if j == len(values) or abs(values[j] - values[start]) > 1e-14 * (1 + abs(values[start])):
            h = float(values[start])
            y1, y2 = (0.0, h) if part == 'upper' else (h, 0.0)
            rect = Rect(float(xs[start]), float(xs[j]), y1, y2, part, 'balayage')
            if rect.height > DEGENERATE_TOL * float(t):
                rects.append(rect)
            start = j
    return tuple(rects)


def _seed_pieces(spec, cyls, seed):
    if seed == 'zero':
        return []
    try:
        return seed_small(spec, cyls) if seed == 'small' else seed_large(spec, cyls)
    except ConstructionError as exc:
        logger.warning("Graine %s indisponible (%s) : départ de 𝕀_α × {0}", seed, exc)
        return []


def build_sweep(spec, seed=None, max_iter=LAB_MAX_ITER, mass_tol=LAB_MASS_TOL, kmax=LAB_KMAX):
    """
    Approximation de Ω par itération de 𝒯_α sur un profil de fibres.

    Le profil (bas, haut) est porté par une grille : orbites de ℓ₀ et r₀, bornes de
    la graine, puis bornes des images au fil des passes. Une passe remplace D par
    l'enveloppe (fibres contenant 0) de 𝒯(D). Arrêt quand μ(𝒯D Δ D) < mass_tol.

    Args:
        seed: 'small' (𝒵), 'large' (𝒲) ou 'zero' (𝕀_α × {0}) ; une graine dont un
            cylindre manque est remplacée par 'zero'

    Returns:
        Domain de type sweep, `approximate` vrai et `residual` = μ(𝒯D Δ D) à la dernière passe
    """
    params = spec.params
    t = float(params.t)
    gamma = landmarks(params).gamma
    seed = seed or ('small' if spec.alpha < gamma else 'large')
    cyls = cylinders(spec, kmax)
    pieces = _seed_pieces(spec, cyls, seed)
    used = seed if pieces or seed == 'zero' else 'zero'

    grid = {float(spec.ell0), float(spec.r0)}
    for start in (spec.ell0, spec.r0):
        grid.update(float(p) for p in orbit(spec, start, SEED_ORBIT_DEPTH).points)
    for x1, x2, _, _ in pieces:
        grid.update((x1, x2))
    snap = float(spec.snap)
    xs = np.array(sorted(x for x in grid if spec.ell0 - snap <= x <= spec.r0 + snap))
    xs = xs[np.concatenate(([True], np.diff(xs) > snap))]
    mids = 0.5 * (xs[:-1] + xs[1:])
    bots, tops = np.zeros(len(mids)), np.zeros(len(mids))
    for x1, x2, lo, hi in pieces:
        sel = (mids >= x1) & (mids <= x2)
        bots[sel], tops[sel] = lo, hi

    cache = {}
    images = _sweep_pieces(params, cyls, xs, cache)
    residual, converged, it, dropped = float('inf'), False, 0, 0
    for it in range(1, max_iter + 1):
        extra = _missing_points(images, xs, snap)
        refined = extra.size > 0 and len(xs) + extra.size <= SWEEP_MAX_POINTS
        if refined:
            xs, bots, tops = _refine(xs, bots, tops, extra)
            images = _sweep_pieces(params, cyls, xs, cache)
        new_b, new_t, dropped = _sweep_image(images, xs, bots, tops, snap)
        residual = _profile_change(xs, bots, tops, new_b, new_t)
        bots, tops = new_b, new_t
        logger.debug("Balayage passe %d : %d points, μ(𝒯D Δ D) = %.3g", it, len(xs), residual)
        if residual < mass_tol:
            converged = True
            break
    if not converged:
        logger.warning("Balayage non convergé après %d passes (μ(𝒯D Δ D) = %.3g)", max_iter, residual)
    if dropped:
        logger.warning("Balayage α = %s : %d morceaux au pôle écartés à la dernière passe", spec.alpha, dropped)
    upper = _merge(xs, tops, 'upper', t)
    lower = _merge(xs, bots, 'lower', t)
    mass = _profile_mass(xs, bots, tops)
    meta = {'iterations': it, 'converged': converged, 'seed': used, 'seed_pieces': pieces,
            'grid_points': len(xs)}
    logger.info("Balayage α = %s : %d passes, masse %.10g", spec.alpha, it, mass)
    return Domain(params.n, float(spec.alpha), 'sweep', upper, lower, approximate=True,
                  residual=float(residual), meta=meta)


# ========================================
# POINT D'ENTRÉE
# ========================================

_SYMBOLIC = re.compile(r'^\s*(zeta|eta|delta)\s*:\s*(-?\d+)\s*,\s*(.+)$')


def parse_alpha(params, text):
    """
    Lit α : nombre décimal ou extrémité symbolique « zeta:k,v », « eta:k,v », « delta:k,v ».

    Returns:
        (alpha, interval) ; interval vaut None pour une valeur numérique
    """
    if not isinstance(text, str):
        return params.num(text), None
    match = _SYMBOLIC.match(text)
    if match is None:
        try:
            return params.num(text.strip()), None
        except ValueError:
            raise DomainError(f"Valeur de α illisible : {text!r}") from None
    which, k, v = match.group(1), int(match.group(2)), parse_word(match.group(3))
    interval = certified_interval(params, k, v)
    if not interval.valid:
        logger.warning("J_{%s,%s} non certifié, extrémité utilisée telle quelle", k, v)
    value = getattr(interval, which)
    if value is None:
        raise DomainError(f"δ n'est défini que pour les grands α (k < 0), reçu k = {k}")
    return value, interval


def build_domain(params, alpha, *, sweep=False, interval=None, tie_tol=LAB_TIE_TOL,
                 max_letters=5, max_iter=LAB_MAX_ITER, mass_tol=LAB_MASS_TOL, kmax=LAB_KMAX):
    """
    Construit Ω_{n,α} avec le constructeur adapté au cas de α.

    Args:
        alpha: nombre ou texte symbolique (voir parse_alpha)
        sweep: force le balayage (α non synchronisant)
        interval: intervalle connu, court-circuite la localisation
    """
    if isinstance(alpha, str):
        alpha, symbolic = parse_alpha(params, alpha)
        interval = interval or symbolic
    if params.n == 3 and alpha == 1:
        return build_alpha_one(params)
    if not 0 < alpha < 1:
        raise DomainError(f"α = {alpha} doit être dans (0, 1)")
    if sweep:
        return build_sweep(interval_spec(params, alpha, tie_tol), max_iter=max_iter, mass_tol=mass_tol, kmax=kmax)
    if interval is None:
        interval = locate(params, alpha, max_letters=max_letters, tie_tol=tie_tol)
    if interval.large:
        return build_large(interval, alpha, params, tie_tol)
    if abs(alpha - interval.zeta) <= ENDPOINT_TOL:
        return build_small_zeta(interval, params, tie_tol)
    if abs(alpha - interval.eta) <= ENDPOINT_TOL:
        return build_small_eta(interval, params, tie_tol)
    return build_small_interior(interval, alpha, params, tie_tol)


# ========================================
# REQUÊTES
# ========================================

def _profile(rects):
    rects = sorted(rects, key=lambda r: r.x1)
    xs = np.array([r.x1 for r in rects] + [rects[-1].x2]) if rects else np.array([])
    return xs, np.array([r.level for r in rects])


def profile(domain):
    """(xs⁺, hauts, xs⁻, bas) : bornes et hauteurs des deux parties, dans l'ordre des x."""
    xu, hu = _profile(domain.upper)
    xl, hl = _profile(domain.lower)
    return xu, hu, xl, hl


def _lookup(xs, values, x):
    if len(values) == 0 or x < xs[0] or x > xs[-1]:
        return None
    j = min(int(np.searchsorted(xs, x, side='right')) - 1, len(values) - 1)
    return float(values[max(j, 0)])


def fiber(domain, x):
    """Fibre verticale (bas, haut) de Ω au-dessus de x ; DomainError hors de 𝕀_α."""
    xu, hu, xl, hl = profile(domain)
    top, bot = _lookup(xu, hu, x), _lookup(xl, hl, x)
    if top is None and bot is None:
        raise DomainError(f"x = {x} hors de la projection de Ω")
    return (0.0 if bot is None else bot, 0.0 if top is None else top)


def _vector_lookup(xs, values, x):
    if len(values) == 0:
        return np.zeros_like(x), np.zeros_like(x, dtype=bool)
    j = np.clip(np.searchsorted(xs, x, side='right') - 1, 0, len(values) - 1)
    inside = (x >= xs[0]) & (x <= xs[-1])
    return np.where(inside, values[j], 0.0), inside


def contains(domain, xs, ys, tol=1e-9):
    """Appartenance vectorisée de points (x, y) à Ω (fibres fermées, tolérance absolue)."""
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    xu, hu, xl, hl = profile(domain)
    top, in_up = _vector_lookup(xu, hu, xs)
    bot, in_low = _vector_lookup(xl, hl, xs)
    inside_x = in_up | in_low
    return inside_x & (ys <= top + tol) & (ys >= bot - tol)


def heights(domain):
    """Hauteurs de Ω⁺ et de Ω⁻, de gauche à droite."""
    return [r.y2 for r in sorted(domain.upper, key=lambda r: r.x1)], \
        [r.y1 for r in sorted(domain.lower, key=lambda r: r.x1)]


def _check_cover(rects, lo, hi, gap_tol, part):
    rects = sorted(rects, key=lambda r: r.x1)
    if not rects:
        return
    if abs(rects[0].x1 - lo) > gap_tol or abs(rects[-1].x2 - hi) > gap_tol:
        raise ConstructionError(f"La partie {part} ne couvre pas [{lo}, {hi}]")
    for a, b in zip(rects, rects[1:]):
        if abs(b.x1 - a.x2) > gap_tol:
            raise ConstructionError(f"Trou ou chevauchement dans {part} entre {a.x2} et {b.x1}")


def check_domain(domain, params=None):
    """
    Contrôles structurels : recouvrement de 𝕀_α, monotonie des hauteurs, coins
    admissibles (1 + xy > 0), et appariements en t pour les petits α.

    Raises:
        ConstructionError
    """
    params = params or group_params(domain.n)
    t = float(params.t)
    gap_tol = 1e-12 * t * 100
    lo, hi = domain.ell0, domain.r0
    _check_cover(domain.upper, lo, hi, gap_tol, 'Ω⁺')
    _check_cover(domain.lower, lo, hi, gap_tol, 'Ω⁻')
    up, low = heights(domain)
    if not domain.approximate:
        if any(b <= a for a, b in zip(up, up[1:])):
            raise ConstructionError(f"Hauteurs de Ω⁺ non croissantes : {up}")
        if any(b <= a for a, b in zip(low, low[1:])):
            raise ConstructionError(f"Hauteurs de Ω⁻ non croissantes : {low}")
    for r in domain.rects:
        if r.corner_limit:
            continue
        corners = [1 + x * y for x in (r.x1, r.x2) for y in (r.y1, r.y2)]
        if min(corners) <= 0:
            raise ConstructionError(f"Coin hors de la région 1 + xy > 0 : {r}")
    if domain.kind in ('interior-small', 'zeta-small', 'eta-small'):
        low_sorted, up_sorted = sorted(low), sorted(up)
        if domain.kind == "interior-small":
            pairs = [(up_sorted[-1], low_sorted[1]), (up_sorted[-2], low_sorted[0])]
        else:
            # une seule hauteur disparait aux extrémités
            pairs = [(up_sorted[-1], low_sorted[0])]
        for top, bottom in pairs:
            if abs(top - bottom - t) > PAIRING_TOL:
                raise ConstructionError(f"Appariement en t violé : {top} − ({bottom}) ≠ {t}")
    return True


# ========================================
# ENREGISTREMENTS
# ========================================

def _num(x):
    return format(float(x), '.17g')


def to_record(domain):
    """Enregistrement versionné (nombres décimaux à 17 chiffres significatifs)."""
    return {
        'format': RECORD_FORMAT,
        'version': RECORD_VERSION,
        'n': domain.n,
        'alpha': _num(domain.alpha),
        'kind': domain.kind,
        'approximate': domain.approximate,
        'residual': _num(domain.residual),
        'rects': [
            {'part': r.part, 'x1': _num(r.x1), 'x2': _num(r.x2), 'y1': _num(r.y1), 'y2': _num(r.y2),
             'tag': r.tag, 'corner_limit': r.corner_limit}
            for r in domain.rects
        ],
    }


def from_record(record):
    if record.get('format') != RECORD_FORMAT:
        raise ConstructionError(f"Format d'enregistrement inconnu : {record.get('format')!r}")
    if record.get('version') != RECORD_VERSION:
        raise ConstructionError(f"Version d'enregistrement non prise en charge : {record.get('version')!r}")
    if record['kind'] not in KINDS:
        raise ConstructionError(f"Type de domaine inconnu : {record['kind']!r}")
    upper, lower = [], []
    for item in record['rects']:
        rect = Rect(float(item['x1']), float(item['x2']), float(item['y1']), float(item['y2']),
                    item['part'], item.get('tag', ''), bool(item.get('corner_limit', False)))
        (upper if rect.part == 'upper' else lower).append(rect)
    return Domain(int(record['n']), float(record['alpha']), record['kind'], tuple(upper), tuple(lower),
                  bool(record['approximate']), float(record['residual']))


def dumps(domain):
    return json.dumps(to_record(domain), ensure_ascii=False, indent=2)


def loads(text):
    return from_record(json.loads(text))
