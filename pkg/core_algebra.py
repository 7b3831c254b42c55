"""
Algèbre de Möbius sur la droite réelle achevée.

Générateurs A, C, R du groupe G_n, composition, inverses, conjugaison par R
et points fixes. Les coefficients sont des float en précision standard, ou des
mpmath.mpf quand GroupParams est construit en précision étendue.
"""
import logging
import math
from dataclasses import dataclass, field

import mpmath
from mpmath import mp

from errors import InvalidIndexError, SingularMatrixError

logger = logging.getLogger(__name__)

# Tolérances de classification et d'égalité projective
PROJECTIVE_TOL = 1e-12
PARABOLIC_TOL = 1e-8
# |det| <= SINGULAR_RTOL·‖M‖² : singulière à la précision de travail
SINGULAR_RTOL = 1e-14


class _Infinity:
    """Point à l'infini de la droite réelle achevée (jamais un inf IEEE)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return '∞'

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


def is_inf(x):
    return x is INF


# ========================================
# OUTILS NUMÉRIQUES (float ou mpf)
# ========================================

def is_extended(x):
    return isinstance(x, mpmath.mpf)


def sqrt_(x):
    return mpmath.sqrt(x) if is_extended(x) else math.sqrt(x)


def log_(x):
    return mpmath.log(x) if is_extended(x) else math.log(x)


def floor_(x):
    return int(mpmath.floor(x)) if is_extended(x) else math.floor(x)


def to_float(x):
    return float(x)


# ========================================
# PARAMÈTRES DU GROUPE
# ========================================

@dataclass(frozen=True)
class GroupParams:
    n: int
    t: object
    nu: object
    precision: int = 53

    @property
    def extended(self):
        return self.precision > 53

    def num(self, value):
        """Convertit une constante dans l'arithmétique de travail."""
        return mpmath.mpf(value) if self.extended else float(value)


def group_params(n, precision=53):
    """
    Paramètres du groupe triangulaire G_n.

    Args:
        n: indice du groupe, n >= 3
        precision: bits de mantisse ; au-delà de 53 les calculs passent par mpmath
            (mp.prec doit alors être fixé, voir config.precision_context)

    Returns:
        GroupParams: t = 1 + 2cos(π/n) et nu = 2cos(π/n)
    """
    if isinstance(n, bool) or not isinstance(n, int) or n < 3:
        raise InvalidIndexError(f"L'indice n doit être un entier >= 3 (reçu {n!r})")
    if precision > 53:
        if mp.prec < precision:
            mp.prec = precision
        nu = 2 * mpmath.cos(mpmath.pi / n)
    elif n == 3:
        # 2cos(π/3) vaut 1.0000000000000002 en double : les mots de G_3 restent entiers
        nu = 1.0
    else:
        nu = 2 * math.cos(math.pi / n)
    return GroupParams(n=n, t=1 + nu, nu=nu, precision=int(precision))


# ========================================
# MATRICES DE MÖBIUS
# ========================================

@dataclass(frozen=True)
class Mobius:
    """
    Matrice 2×2 réelle agissant projectivement.

    Le déterminant des produits est propagé (det(M₁M₂) = det M₁ · det M₂), jamais
    recalculé à partir des coefficients.
    """

    a: object
    b: object
    c: object
    d: object
    det_hint: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.det_hint is not None:
            if self.det_hint == 0:
                raise SingularMatrixError(f"Matrice singulière : {self.entries()}")
            return
        det = self.a * self.d - self.b * self.c
        norm2 = sum(v * v for v in self.entries())
        rtol = 64 * mp.eps if is_extended(norm2) else SINGULAR_RTOL
        if det == 0 or abs(det) <= rtol * norm2:
            raise SingularMatrixError(f"Matrice singulière : {self.entries()}")

    @classmethod
    def normalized(cls, a, b, c, d, det=None):
        m = cls(a, b, c, d, det)
        return m.normalize()

    def normalize(self):
        """Représentant de |det| = 1."""
        det = self.det
        s = sqrt_(abs(det))
        if s == 1:
            return self
        return Mobius(self.a / s, self.b / s, self.c / s, self.d / s, det / abs(det))

    @property
    def det(self):
        if self.det_hint is not None:
            return self.det_hint
        return self.a * self.d - self.b * self.c

    @property
    def trace(self):
        return self.a + self.d

    def entries(self):
        return (self.a, self.b, self.c, self.d)

    def __matmul__(self, other):
        return Mobius(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
            self.det * other.det,
        ).normalize()

    def inverse(self):
        """Inverse projectif (d, −b, −c, a), sans division par det."""
        return Mobius(self.d, -self.b, -self.c, self.a, self.det)

    def apply(self, x):
        if x is INF:
            return INF if self.c == 0 else self.a / self.c
        den = self.c * x + self.d
        if den == 0:
            return INF
        return (self.a * x + self.b) / den

    __call__ = apply

    def denominator(self, x):
        return self.c * x + self.d

    def pole(self):
        """Point envoyé sur ∞."""
        return INF if self.c == 0 else -self.d / self.c

    def derivative(self, x):
        return self.det / (self.c * x + self.d) ** 2

    def power(self, k):
        if k < 0:
            return self.inverse().power(-k)
        result, base = IDENTITY, self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def projectively_equal(self, other, tol=PROJECTIVE_TOL):
        m1 = self.normalize()
        m2 = other.normalize()
        for sign in (1, -1):
            if all(abs(u - sign * v) <= tol * (1 + abs(u)) for u, v in zip(m1.entries(), m2.entries())):
                return True
        return False


IDENTITY = Mobius(1, 0, 0, 1)


def compose(m1, m2):
    return m1 @ m2


def inverse(m):
    return m.inverse()


def apply(m, x):
    return m.apply(x)


def generators(params):
    """Retourne (A, C, R) : A·x = x + t, C·x = (x−1)/x, R·x = −1/x."""
    one, zero = params.num(1), params.num(0)
    A = Mobius(one, params.t, zero, one)
    C = Mobius(-one, one, -one, zero)
    R = Mobius(zero, -one, one, zero)
    return A, C, R


def translation(params, k):
    one = params.num(1)
    return Mobius(one, k * params.t, params.num(0), one)


def digit_matrix(params, k, l):
    """A^k C^l pour un chiffre (k, l)."""
    _, C, _ = generators(params)
    return translation(params, k) @ C.power(l)


def conj_by_R(m):
    """R M R⁻¹ ; son action sur y est l'action associée à M dans l'extension naturelle."""
    return Mobius(m.d, -m.c, -m.b, m.a, m.det)


# ========================================
# POINTS FIXES
# ========================================

@dataclass(frozen=True)
class FixedPoint:
    root: object
    kind: str  # attracting | repelling | parabolic


def _classify(m, x):
    slope = abs(m.derivative(x))
    if abs(slope - 1) <= PARABOLIC_TOL:
        return 'parabolic'
    return 'repelling' if slope > 1 else 'attracting'


def fixed_points(m):
    """
    Points fixes finis de m : racines réelles de c·x² + (d−a)·x − b = 0.

    Returns:
        list[FixedPoint]: vide pour une matrice elliptique ou une translation
    """
    a2, b2, c2 = m.c, m.d - m.a, -m.b
    scale = max(abs(v) for v in m.entries())
    if abs(a2) <= PROJECTIVE_TOL * scale:
        if abs(b2) <= PROJECTIVE_TOL * scale:
            return []
        x = -c2 / b2
        return [FixedPoint(x, _classify(m, x))]
    disc = m.trace * m.trace - 4 * m.det  # = (d − a)² + 4bc
    if disc < -PROJECTIVE_TOL * scale * scale:
        logger.warning("Matrice elliptique, pas de point fixe réel : %s", m.entries())
        return []
    if disc <= PROJECTIVE_TOL * scale * scale:
        x = -b2 / (2 * a2)
        return [FixedPoint(x, 'parabolic')]
    root = sqrt_(disc)
    q = -(b2 + root) / 2 if b2 >= 0 else -(b2 - root) / 2
    roots = sorted({q / a2, c2 / q})
    return [FixedPoint(x, _classify(m, x)) for x in roots]
