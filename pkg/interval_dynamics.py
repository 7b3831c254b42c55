"""
Applications d'intervalle T_{n,α} : chiffres, orbites des extrémités,
cylindres et repères γ_n, ε_n, 𝔟_α.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from config import LAB_TIE_TOL
from core_algebra import (
    INF,
    digit_matrix,
    floor_,
    generators,
    sqrt_,
)
from errors import ConstructionError, DomainError, PoleError

logger = logging.getLogger(__name__)

DEFAULT_ORBIT_CAP = 512


@dataclass(frozen=True)
class Digit:
    k: int
    l: int
    tie: bool = field(default=False, compare=False)

    def matrix(self, params):
        return digit_matrix(params, self.k, self.l)

    def order_key(self):
        """Clé croissante le long de 𝕀_α : (k,1) avant (k,2), puis −1, −2, … puis …, 2, 1."""
        return (self.l, 0 if self.k < 0 else 1, -self.k)

    def __str__(self):
        return f"({self.k},{self.l})"


@dataclass(frozen=True)
class IntervalSpec:
    params: object
    alpha: object
    ell0: object
    r0: object
    tie_tol: float = LAB_TIE_TOL

    @property
    def t(self):
        return self.params.t

    @property
    def n(self):
        return self.params.n

    @property
    def snap(self):
        return self.tie_tol * float(self.params.t)

    def inside(self, y):
        """Appartenance à [ℓ₀, r₀) avec accrochage des égalités à tolérance près."""
        return self.ell0 - self.snap <= y < self.r0 - self.snap


def interval_spec(params, alpha, tie_tol=LAB_TIE_TOL):
    alpha = params.num(alpha)
    if not 0 <= alpha <= 1:
        raise DomainError(f"α doit être dans [0, 1] (reçu {alpha})")
    return IntervalSpec(params, alpha, (alpha - 1) * params.t, alpha * params.t, tie_tol)


@dataclass(frozen=True)
class OrbitRecord:
    start: object
    points: tuple
    digits: tuple
    truncated: bool = False
    pole: bool = False

    def __len__(self):
        return len(self.points)


# ========================================
# CHIFFRES ET ITÉRATION
# ========================================

def _digit_and_image(spec, x):
    if x is INF or not (spec.ell0 - spec.snap <= x <= spec.r0 + spec.snap):
        raise DomainError(f"x = {x} hors de [ℓ₀, r₀] = [{spec.ell0}, {spec.r0}]")
    if x == 0:
        raise PoleError("x = 0 est le pôle de C", value=x)
    y = (x - 1) / x
    l = 1
    if spec.inside(y):
        if y == 0:
            raise PoleError("x = 1 est le pôle de C²", value=x)
        y = (y - 1) / y
        l = 2
    t = spec.t
    q = (y - spec.ell0) / t
    m = floor_(q)
    frac = q - m
    tie = frac < spec.tie_tol or frac > 1 - spec.tie_tol
    if frac > 1 - spec.tie_tol:
        m += 1
    image = y - m * t
    if image < spec.ell0:
        image = spec.ell0
    return Digit(-m, l, tie), image


def digit(spec, x):
    """
    Chiffre α de x : l minimal tel que C^l·x ∉ 𝕀_α, puis k tel que A^kC^l·x ∈ 𝕀_α.

    Les égalités à tolérance près sont affectées au cylindre de droite ;
    le drapeau `tie` du chiffre le signale.
    """
    return _digit_and_image(spec, x)[0]


def step(spec, x):
    return _digit_and_image(spec, x)[1]


def orbit(spec, x, nmax=None, until=None):
    """
    Orbite de x sous T_α.

    Args:
        spec: IntervalSpec
        x: point de départ
        nmax: nombre maximal de pas (512 par défaut)
        until: prédicat optionnel sur la liste des points ; l'itération s'arrête
            dès qu'il est vrai, et `truncated` signale qu'il ne l'a jamais été

    Returns:
        OrbitRecord: points[0] = x et points[i+1] = T(points[i])
    """
    nmax = DEFAULT_ORBIT_CAP if nmax is None else nmax
    points, digits = [x], []
    hit_pole, met = False, until is None
    for _ in range(nmax):
        if until is not None and until(points):
            met = True
            break
        try:
            d, image = _digit_and_image(spec, points[-1])
        except PoleError:
            hit_pole = True
            logger.debug("Orbite interrompue par un pôle en %s", points[-1])
            break
        digits.append(d)
        points.append(image)
    else:
        if until is not None and until(points):
            met = True
    truncated = not met and not hit_pole
    if truncated:
        logger.warning("Orbite de %s tronquée après %d pas", x, nmax)
    return OrbitRecord(x, tuple(points), tuple(digits), truncated, hit_pole)


def ell_orbit(spec, count):
    """ℓ₀, …, ℓ_count."""
    return list(orbit(spec, spec.ell0, count).points)


def r_orbit(spec, count):
    """r₀, …, r_count (r₀ est traité comme limite à gauche)."""
    return list(orbit(spec, spec.r0, count).points)


def digits_array(spec, xs):
    """Version vectorisée de digit() : renvoie (k, l, images) pour un tableau de x."""
    xs = np.asarray(xs, dtype=float)
    t, ell0, r0, snap = float(spec.t), float(spec.ell0), float(spec.r0), spec.snap
    with np.errstate(divide='ignore', invalid='ignore'):
        y1 = (xs - 1.0) / xs
        in1 = (y1 >= ell0 - snap) & (y1 < r0 - snap)
        y2 = (y1 - 1.0) / y1
    y = np.where(in1, y2, y1)
    ls = np.where(in1, 2, 1)
    q = (y - ell0) / t
    m = np.floor(q)
    m = m + (q - m > 1 - spec.tie_tol)
    images = np.maximum(y - m * t, ell0)
    return (-m).astype(np.int64), ls.astype(np.int64), images


# ========================================
# REPÈRES DU PARAMÈTRE
# ========================================

def frak_b(spec):
    """𝔟_α = C⁻¹·ℓ₀ = 1/(1 − ℓ₀)."""
    return 1 / (1 - spec.ell0)


@dataclass(frozen=True)
class Landmarks:
    gamma: object
    epsilon: object


def _root_in_unit(params, roots, label):
    for x in roots:
        alpha = x / params.t
        if 0 < alpha < 1:
            return alpha
    raise ConstructionError(f"Aucune racine dans (0, 1) pour {label} (n = {params.n})")


def landmarks(params):
    """
    γ_n : 𝔟_α = r₀(α), soit x² − (1+t)x + 1 = 0 pour x = αt.
    ε_n : A⁻¹C·ℓ₀(α) = r₀(α), soit x² − x + (1 + t − t²) = 0.
    """
    t = params.t
    disc = (1 + t) ** 2 - 4
    gamma = _root_in_unit(params, [((1 + t) - sqrt_(disc)) / 2, ((1 + t) + sqrt_(disc)) / 2], 'γ')
    disc = 1 - 4 * (1 + t - t * t)
    epsilon = _root_in_unit(params, [(1 + sqrt_(disc)) / 2, (1 - sqrt_(disc)) / 2], 'ε')
    return Landmarks(gamma, epsilon)


# ========================================
# CYLINDRES
# ========================================

@dataclass(frozen=True)
class Cylinder:
    digit: Digit
    lam: object
    rho: object
    full: bool


def _preimage(m, u, v):
    """Préimage de [u, v) par m (croissante) sous forme de liste d'intervalles [a, b)."""
    inv = m.inverse()
    pole = m.apply(INF)
    if pole is not INF and u < pole < v:
        return [(inv.apply(u), float('inf')), (float('-inf'), inv.apply(v))]
    a, b = inv.apply(u), inv.apply(v)
    a = float('-inf') if a is INF else a
    b = float('inf') if b is INF else b
    return [(a, b)]


def _intersect(pieces, lo, hi):
    out = []
    for a, b in pieces:
        a2, b2 = max(a, lo), min(b, hi)
        if b2 > a2:
            out.append((a2, b2))
    return out


def cylinder_bounds(spec, d):
    """
    Cylindre Δ_α(k, l) = [λ, ρ).

    Returns:
        Cylinder ou None si le cylindre est vide
    """
    if d.k == 0:
        return None
    _, C, _ = generators(spec.params)
    C2 = C @ C
    t = spec.t
    target = (spec.ell0 - d.k * t, spec.r0 - d.k * t)
    if d.l == 1:
        pieces = _intersect(_preimage(C, *target), spec.ell0, spec.r0)
    else:
        strip = _intersect(_preimage(C, spec.ell0, spec.r0), spec.ell0, spec.r0)
        pieces = []
        for lo, hi in strip:
            pieces += _intersect(_preimage(C2, *target), lo, hi)
    if not pieces:
        return None
    pieces.sort()
    for (a1, b1), (a2, b2) in zip(pieces, pieces[1:]):
        if a2 - b1 > spec.snap:
            raise ConstructionError(f"Cylindre {d} non connexe : {pieces}")
    lam, rho = pieces[0][0], pieces[-1][1]
    if rho - lam <= spec.snap:
        return None
    m = d.matrix(spec.params)
    full = abs(m.apply(lam) - spec.ell0) <= 1e3 * spec.snap and abs(m.apply(rho) - spec.r0) <= 1e3 * spec.snap
    return Cylinder(Digit(d.k, d.l), lam, rho, full)


def cylinders(spec, kmax):
    """Cylindres non vides pour |k| <= kmax, triés de gauche à droite."""
    found = []
    for l in (1, 2):
        for k in range(-kmax, kmax + 1):
            cyl = cylinder_bounds(spec, Digit(k, l))
            if cyl is not None:
                found.append(cyl)
    found.sort(key=lambda c: c.lam)
    return found
