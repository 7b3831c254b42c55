"""
Puissance expansive : ℓ(x) minimal tel que |(T^ℓ)′(x)| > 1, accélération
U(x) = T^{ℓ(x)}(x), partition E₁…E_r, domaine induit ℱ et formule d'Abramov
h(U)μ(ℱ) = h(T)μ(Ω).
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from core_algebra import conj_by_R
from errors import ConstructionError, LabError, PreconditionError
from interval_dynamics import cylinders, digit, digits_array, frak_b, interval_spec, landmarks, step
from measure_entropy import mu_box, mu_domain, rohlin_integral
from natext_domain import Domain, Rect, image_box, profile

logger = logging.getLogger(__name__)

R_MAX = 12
PARTITION_GRID = 4096
PARTITION_KMAX = 16
BREAK_XTOL = 1e-13
INDUCED_KMAX = 48


@dataclass(frozen=True)
class ExpansivePartition:
    r: object  # None si r_max est dépassé
    pieces: dict = field(default_factory=dict, compare=False, hash=False)  # k -> [(a, b), …]
    status: str = 'ok'  # ok | inconclusive
    exact: bool = False

    def E(self, k):
        return self.pieces.get(k, [])

    def which(self, x):
        for k, spans in self.pieces.items():
            for a, b in spans:
                if a <= x < b:
                    return k
        return None


# ========================================
# ℓ(x) ET U
# ========================================

def log_derivative(spec, x):
    """log|T′(x)| = −2 ln|cx + d|."""
    d = digit(spec, x)
    u = x if d.l == 1 else x - 1
    return -2 * math.log(abs(float(u)))


def ell(spec, x, cap=R_MAX):
    """Plus petit k tel que Π_{i<k} |T′(Tⁱx)| > 1."""
    total, y = 0.0, x
    for k in range(1, cap + 1):
        total += log_derivative(spec, y)
        if total > 0:
            return k
        y = step(spec, y)
    raise ConstructionError(f"ℓ({x}) > {cap}")


def U_apply(spec, x, cap=R_MAX):
    """U(x) = T^{ℓ(x)}(x)."""
    for _ in range(ell(spec, x, cap)):
        x = step(spec, x)
    return x


def log_U_derivative(spec, x, cap=R_MAX):
    total, y = 0.0, x
    for _ in range(cap):
        total += log_derivative(spec, y)
        if total > 0:
            return total
        y = step(spec, y)
    raise ConstructionError(f"ℓ({x}) > {cap}")


def ell_array(spec, xs, cap=R_MAX):
    """ℓ vectorisé ; 0 marque les points dont ℓ dépasse cap."""
    y = np.asarray(xs, dtype=float).copy()
    total = np.zeros_like(y)
    result = np.zeros(y.shape, dtype=np.int64)
    for k in range(1, cap + 1):
        _, l, images = digits_array(spec, y)
        with np.errstate(divide='ignore'):
            total += -2 * np.log(np.abs(np.where(l == 1, y, y - 1)))
        hit = (result == 0) & (total > 0)
        result[hit] = k
        if np.all(result > 0):
            break
        y = images
    return result


# ========================================
# PUISSANCE ET PARTITION
# ========================================

def _expansive_at_once(spec):
    """T expansif partout : |x| < 1 sur la zone l = 1 et |x − 1| < 1 sur la zone l = 2."""
    ell0, r0 = float(spec.ell0), float(spec.r0)
    if ell0 <= -1:
        return False
    if spec.alpha > landmarks(spec.params).gamma:
        return 0 < float(frak_b(spec)) and r0 <= 2
    return r0 <= 1


def _sample_grid(spec):
    ell0, r0 = float(spec.ell0), float(spec.r0)
    xs = set(np.linspace(ell0, r0, PARTITION_GRID, endpoint=False).tolist())
    for c in cylinders(spec, PARTITION_KMAX):
        xs.update((float(c.lam), float(c.rho)))
    return np.array(sorted(x for x in xs if ell0 <= x < r0 and x != 0))


def _spans(spec, xs, ls):
    pieces = {}
    start = xs[0]
    for i in range(1, len(xs) + 1):
        if i < len(xs) and ls[i] == ls[i - 1]:
            continue
        end = float(spec.r0)
        if i < len(xs):
            a, b, la, lb = xs[i - 1], xs[i], ls[i - 1], ls[i]
            mid_level = 0.5 * (la + lb)
            try:
                end = optimize.brentq(lambda x: ell(spec, x) - mid_level, a, b, xtol=BREAK_XTOL)
            except (ValueError, ConstructionError):
                end = 0.5 * (a + b)
        pieces.setdefault(int(ls[i - 1]), []).append((float(start), float(end)))
        start = end
    return pieces


def expansivity_power(spec, r_max=R_MAX):
    """
    Puissance r et partition E₁…E_r.

    r = 1 est décidé exactement ; au-delà, ℓ est évalué sur une grille incluant
    les bornes de cylindres et les frontières des E_k sont localisées par brentq.
    Un dépassement de r_max rend un résultat `inconclusive`, jamais un non-expansif.
    """
    if _expansive_at_once(spec):
        return ExpansivePartition(1, {1: [(float(spec.ell0), float(spec.r0))]}, 'ok', exact=True)
    xs = _sample_grid(spec)
    ls = ell_array(spec, xs, r_max)
    if np.any(ls == 0):
        logger.warning("ℓ(x) > %d en %d points : puissance non décidée", r_max, int(np.sum(ls == 0)))
        return ExpansivePartition(None, {}, 'inconclusive')
    pieces = _spans(spec, xs, ls)
    r = int(ls.max())
    logger.info("α = %s : puissance expansive r = %d", spec.alpha, r)
    return ExpansivePartition(r, pieces, 'ok')


# ========================================
# DOMAINE INDUIT
# ========================================

def _fibers_over(domain, a, b):
    """Rectangles de Ω au-dessus de [a, b] (découpés sur le profil)."""
    out = []
    for r in domain.rects:
        lo, hi = max(r.x1, a), min(r.x2, b)
        if hi > lo:
            out.append((lo, hi, r.y1, r.y2))
    return out


def _push(spec, cyls, box):
    """Image par 𝒯 d'une boîte (x1, x2, y1, y2), découpée selon les cylindres."""
    x1, x2, y1, y2 = box
    out = []
    for c in cyls:
        lo, hi = max(x1, float(c.lam)), min(x2, float(c.rho))
        if hi > lo:
            img = image_box(spec.params, c.digit, lo, hi, y1, y2)
            if img is not None:
                out.append(img[:4])
    return out


def _removed_boxes(domain, spec, partition):
    cyls = cylinders(spec, INDUCED_KMAX)
    removed = []
    for k in range(2, (partition.r or 1) + 1):
        boxes = []
        for a, b in partition.E(k):
            boxes += _fibers_over(domain, a, b)
        for _ in range(1, k):
            boxes = [img for box in boxes for img in _push(spec, cyls, box)]
            removed += boxes
    return removed


def _subtract(domain, removed):
    """Ω moins une union de boîtes, tranche par tranche (bornes communes en x)."""
    xu, hu, xl, hl = profile(domain)
    cuts = set(xu.tolist()) | set(xl.tolist())
    for x1, x2, _, _ in removed:
        cuts.update((x1, x2))
    xs = sorted(c for c in cuts if domain.ell0 <= c <= domain.r0)
    arr = np.array(removed) if removed else np.empty((0, 4))
    rects = []
    for x1, x2 in zip(xs, xs[1:]):
        if x2 <= x1:
            continue
        mid = 0.5 * (x1 + x2)
        fibers = [(r.y1, r.y2, r.part) for r in domain.rects if r.x1 <= mid < r.x2]
        holes = sorted(arr[(arr[:, 0] <= mid) & (arr[:, 1] >= mid)][:, 2:4].tolist())
        for lo, hi, part in fibers:
            cur = lo
            for a, b in holes:
                if b <= cur or a >= hi:
                    continue
                if a > cur:
                    rects.append(Rect(x1, x2, cur, a, part, 'ℱ'))
                cur = max(cur, b)
            if cur < hi:
                rects.append(Rect(x1, x2, cur, hi, part, 'ℱ'))
    return rects


def _has_full_cylinder_in(spec, spans):
    for c in cylinders(spec, PARTITION_KMAX):
        if c.full and any(a <= c.lam and c.rho <= b for a, b in spans):
            return True
    return False


def induced_domain(domain, spec, partition):
    """
    ℱ = Ω \\ ⋃_{k=2}^{r} ⋃_{j=1}^{k−1} 𝒯^j(ℰ_k), avec ℰ_k = Ω ∩ (E_k × ℝ).

    Raises:
        PreconditionError: E₁ ne contient aucun cylindre plein
    """
    if partition.r is None:
        raise PreconditionError("Partition expansive non décidée")
    if partition.r == 1:
        return domain
    if not _has_full_cylinder_in(spec, partition.E(1)):
        raise PreconditionError("E₁ ne contient aucun cylindre plein")
    removed = _removed_boxes(domain, spec, partition)
    rects = _subtract(domain, removed)
    upper = tuple(r for r in rects if r.part == 'upper')
    lower = tuple(r for r in rects if r.part == 'lower')
    mass = math.fsum(mu_box(r.x1, r.x2, r.y1, r.y2) for r in rects)
    if not mass > 0:
        raise ConstructionError("ℱ de masse nulle")
    logger.info("ℱ : %d rectangles, masse %.10g (Ω : %.10g)", len(rects), mass, mu_domain(domain).mass)
    return Domain(domain.n, domain.alpha, 'induced', upper, lower, approximate=True,
                  residual=domain.residual, meta={'removed': len(removed)})


def first_return_exponent(induced, spec, x, y, cap=R_MAX + 2):
    """Plus petit j >= 1 tel que 𝒯^j(x, y) ∈ ℱ (None au-delà de cap)."""
    for j in range(1, cap + 1):
        d = digit(spec, x)
        m = d.matrix(spec.params)
        x, y = float(m.apply(x)), float(conj_by_R(m).apply(y))
        if any(r.contains(x, y, tol=1e-12) for r in induced.rects):
            return j
    return None


# ========================================
# ABRAMOV
# ========================================

@dataclass(frozen=True)
class AbramovResult:
    r: object
    mass_F: float
    induced_integral: float
    integral: float
    residual: float
    error: float
    failures: int = 0  # évaluations de log|U′| en échec (comptées pour 0)

    @property
    def reliable(self):
        return self.failures == 0


def _induced_integral(induced, spec, partition):
    """
    ∫_ℱ log|U′| dμ : log|U′| ne dépend que de x, intégration en x du facteur intérieur exact.

    Returns:
        (valeur, erreur de quadrature, nombre d'évaluations en échec)
    """
    cuts = sorted({0.0, 1.0, *(b for spans in partition.pieces.values() for _, b in spans)})
    total, err = 0.0, 0.0
    failed = []
    for r in induced.rects:
        points = [r.x1] + [c for c in cuts if r.x1 < c < r.x2] + [r.x2]
        for a, b in zip(points, points[1:]):
            def f(x, y1=r.y1, y2=r.y2):
                try:
                    val = log_U_derivative(spec, x)
                except LabError as exc:
                    failed.append((x, exc))
                    return 0.0
                return val * (y2 - y1) / ((1 + x * y1) * (1 + x * y2))
            value, e, *_ = integrate.quad(f, a, b, limit=400, epsabs=1e-11, epsrel=1e-10, full_output=1)
            total += value
            err += abs(e)
    if failed:
        x, exc = failed[0]
        logger.warning("log|U′| indisponible en %d points (premier : x = %.12g, %s) : intégrale non fiable",
                       len(failed), x, exc)
    return total, err, len(failed)


def abramov_check(domain, induced, spec, partition=None, integral=None):
    """
    Résidu ∫_ℱ log|U′| dμ − ∫_Ω τ dμ (identité de tour). Nul par construction quand r = 1.
    """
    partition = partition or expansivity_power(spec)
    if integral is None:
        integral = rohlin_integral(domain, spec=spec).integral
    mass_F = mu_domain(induced).mass
    if partition.r == 1:
        return AbramovResult(1, mass_F, integral, integral, 0.0, 0.0)
    value, err, failures = _induced_integral(induced, spec, partition)
    return AbramovResult(partition.r, mass_F, value, integral, value - integral, err, failures)


def expansive_summary(domain, params, integral=None):
    """Colonnes r, mass_F, induced_integral, abramov_residual pour les balayages."""
    spec = interval_spec(params, domain.alpha)
    partition = expansivity_power(spec)
    if partition.r is None:
        return {'r': None, 'mass_F': None, 'induced_integral': None, 'abramov_residual': None}
    induced = induced_domain(domain, spec, partition)
    result = abramov_check(domain, induced, spec, partition, integral)
    return {'r': result.r, 'mass_F': result.mass_F, 'induced_integral': result.induced_integral,
            'abramov_residual': result.residual if result.reliable else float('nan')}
