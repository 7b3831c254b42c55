"""
Application plane 𝒯_α(x, y) = (M·x, RMR⁻¹·y), partition de Ω en blocs et
certificat numérique de bijectivité (inclusion, bilan de masse, multiplicité).
"""
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from config import CONTAINMENT_MIN, LAB_GRID, LAB_KMAX, LAB_SAMPLES, LAB_SEED, MASS_BALANCE_REL_TOL, MULTIPLICITY_MAX
from core_algebra import conj_by_R, group_params
from errors import ConstructionError, InfiniteMassError, PoleError
from interval_dynamics import cylinders, digit, digits_array, interval_spec, landmarks
from measure_entropy import mu_box, mu_domain
from natext_domain import Rect, contains, fiber, image_box, profile

logger = logging.getLogger(__name__)

POLE_TOL = 1e-13
LAMINATION_TOL = 1e-9
DEGENERATE_HEIGHT = 1e-15
LIMIT_BLOCKS = 10


# ========================================
# APPLICATION PLANE
# ========================================

def planar_apply(spec, x, y):
    """(M·x, RMR⁻¹·y) où M = A^kC^l est la matrice du chiffre de x."""
    d = digit(spec, x)
    m = d.matrix(spec.params)
    n = conj_by_R(m)
    if abs(n.denominator(y)) < POLE_TOL:
        raise PoleError(f"y = {y} au pôle de RMR⁻¹ pour le chiffre {d}", value=y)
    return m.apply(x), n.apply(y)


def _entries(spec, k, l):
    """Coefficients de A^kC^l (l = 1 ou 2) pour des tableaux de chiffres."""
    kt = k * float(spec.t)
    one = l == 1
    a = np.where(one, -1.0 - kt, kt)
    b = np.where(one, 1.0, -1.0 - kt)
    c = np.where(one, -1.0, 1.0)
    d = np.where(one, 0.0, -1.0)
    return a, b, c, d


def planar_apply_array(spec, xs, ys):
    """Version vectorisée ; les points au pôle de RMR⁻¹ renvoient nan."""
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    k, l, images = digits_array(spec, xs)
    a, b, c, d = _entries(spec, k, l)
    # RMR⁻¹ = [[d, −c], [−b, a]]
    den = -b * ys + a
    with np.errstate(divide='ignore', invalid='ignore'):
        y_img = np.where(np.abs(den) < POLE_TOL, np.nan, (d * ys - c) / den)
    return images, y_img


def jacobian_density_ratio(spec, x, y, h=1e-6):
    """|det D𝒯| × densité(image)/densité(point), par différences centrées."""
    x1, y1 = planar_apply(spec, x, y)
    dxdx = (planar_apply(spec, x + h, y)[0] - planar_apply(spec, x - h, y)[0]) / (2 * h)
    dydy = (planar_apply(spec, x, y + h)[1] - planar_apply(spec, x, y - h)[1]) / (2 * h)
    dydx = (planar_apply(spec, x + h, y)[1] - planar_apply(spec, x - h, y)[1]) / (2 * h)
    dxdy = (planar_apply(spec, x, y + h)[0] - planar_apply(spec, x, y - h)[0]) / (2 * h)
    jac = abs(dxdx * dydy - dxdy * dydx)
    return jac * (1 + x * y) ** 2 / (1 + x1 * y1) ** 2


# ========================================
# BLOCS
# ========================================

@dataclass(frozen=True)
class Block:
    digit: object
    regions: tuple
    full: bool
    lam: float
    rho: float

    @property
    def mass(self):
        return math.fsum(mu_box(r.x1, r.x2, r.y1, r.y2) for r in self.regions)


@dataclass(frozen=True)
class BlockSet:
    blocks: tuple
    tail: tuple = ()  # parties de Ω au-dessus des cylindres non énumérés (|k| > kmax)
    kmax: int = LAB_KMAX

    def mass(self):
        return math.fsum(b.mass for b in self.blocks) + self.tail_mass()

    def tail_mass(self):
        return math.fsum(mu_box(r.x1, r.x2, r.y1, r.y2) for r in self.tail)

    def by_digit(self):
        return {b.digit: b for b in self.blocks}


def _clip(rects, lo, hi, part_tag):
    out = []
    for r in rects:
        a, b = max(r.x1, lo), min(r.x2, hi)
        if b > a:
            out.append(Rect(a, b, r.y1, r.y2, r.part, part_tag))
    return out


def partition_blocks(domain, spec=None, kmax=LAB_KMAX):
    """
    Blocs ℬ_{k,l} = Ω ∩ (Δ(k,l) × ℝ) pour |k| <= kmax ; le reste (voisinage de x = 0)
    est conservé dans `tail`.

    Raises:
        ConstructionError: deux cylindres se chevauchent au-delà de la tolérance
    """
    params = group_params(domain.n)
    spec = spec or interval_spec(params, domain.alpha)
    cyls = cylinders(spec, kmax)
    for c1, c2 in zip(cyls, cyls[1:]):
        if c2.lam < c1.rho - 1e3 * spec.snap:
            raise ConstructionError(f"Blocs {c1.digit} et {c2.digit} à cheval : [{c1.lam}, {c1.rho}) ∩ [{c2.lam}, {c2.rho})")
    blocks = []
    for c in cyls:
        regions = _clip(domain.rects, float(c.lam), float(c.rho), str(c.digit))
        if regions:
            blocks.append(Block(c.digit, tuple(regions), c.full, float(c.lam), float(c.rho)))
    tail = []
    edges = [(float(a.rho), float(b.lam)) for a, b in zip(cyls, cyls[1:]) if b.lam - a.rho > spec.snap]
    for lo, hi in edges:
        tail += _clip(domain.rects, lo, hi, 'queue')
    logger.info("%d blocs, masse de queue %.3g", len(blocks), math.fsum(mu_box(r.x1, r.x2, r.y1, r.y2) for r in tail))
    return BlockSet(tuple(blocks), tuple(tail), kmax)


def block_images(spec, blockset):
    """Liste de (chiffre, X₁, X₂, Y₁, Y₂) : images des régions de chaque bloc."""
    images = []
    for block in blockset.blocks:
        for r in block.regions:
            box = image_box(spec.params, block.digit, r.x1, r.x2, r.y1, r.y2)
            if box is None:
                logger.warning("Pôle dans l'image du bloc %s", block.digit)
                continue
            images.append((block.digit, *box[:4]))
    return images


# ========================================
# ÉCHANTILLONNAGE μ-PONDÉRÉ
# ========================================

def _marginal(x, y1, y2):
    return (y2 - y1) / ((1 + x * y1) * (1 + x * y2))


def _marginal_bound(r):
    candidates = [r.x1, r.x2]
    if r.y1 * r.y2 != 0:
        crit = -(r.y1 + r.y2) / (2 * r.y1 * r.y2)
        if r.x1 < crit < r.x2:
            candidates.append(crit)
    return max(_marginal(x, r.y1, r.y2) for x in candidates)


def sample_mu(domain, count, rng):
    """
    Points de Ω tirés selon μ : rectangle ∝ masse, x par rejet sur la marginale,
    y par inversion de la fonction de répartition conditionnelle.
    """
    rects = [r for r in domain.rects if r.width > 0 and r.height > 0]
    masses = np.array([mu_box(r.x1, r.x2, r.y1, r.y2) for r in rects])
    choice = rng.choice(len(rects), size=count, p=masses / masses.sum())
    xs, ys = np.empty(count), np.empty(count)
    for idx in np.unique(choice):
        r = rects[idx]
        slots = np.flatnonzero(choice == idx)
        bound = _marginal_bound(r) * (1 + 1e-12)
        got = np.empty(0)
        while got.size < slots.size:
            batch = rng.uniform(r.x1, r.x2, size=2 * (slots.size - got.size) + 16)
            keep = rng.uniform(0, bound, size=batch.size) < _marginal(batch, r.y1, r.y2)
            got = np.concatenate((got, batch[keep]))
        x = got[:slots.size]
        u = rng.uniform(size=slots.size)
        p = 1 + x * r.y1
        c = _marginal(x, r.y1, r.y2)
        xs[slots] = x
        ys[slots] = (r.y1 + u * c * p) / (1 - u * c * p * x)
    return xs, ys


# ========================================
# CERTIFICAT
# ========================================

@dataclass(frozen=True)
class BijectivityReport:
    containment_fraction: float
    mass_balance_residual: float
    grid_multiplicity_excess: float
    samples: int
    verdict: str  # pass | fail | inconclusive
    seed: int = LAB_SEED
    mass: float = float('nan')
    tail_mass: float = 0.0
    escaped_mass: float = 0.0
    exchange_ok: object = None
    lamination_ok: object = None
    lamination_gap: float = float('nan')
    limit_extent: float = float('nan')
    details: dict = field(default_factory=dict, compare=False, hash=False)

    def to_text(self):
        """Lignes key=value."""
        data = asdict(self)
        data.pop('details')
        return '\n'.join(f"{key}={value}" for key, value in data.items()) + '\n'

    def to_frame(self):
        data = asdict(self)
        data.pop('details')
        return pd.DataFrame([data])

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False)
        return path


def containment_threshold(samples):
    return min(CONTAINMENT_MIN, 1 - 5 / math.sqrt(samples))


def _union_length_in(intervals, lo, hi, x1, x2):
    """μ de (∪ intervalles) ∩ [lo, hi] et de la partie hors de [lo, hi], sur la tranche [x1, x2]."""
    inside, outside = 0.0, 0.0
    merged = []
    for a, b in sorted(intervals):
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    for a, b in merged:
        ia, ib = max(a, lo), min(b, hi)
        if ib > ia:
            inside += mu_box(x1, x2, ia, ib)
        if a < lo:
            outside += mu_box(x1, x2, a, min(b, lo))
        if b > hi:
            outside += mu_box(x1, x2, max(a, hi), b)
    return inside, outside


def mass_balance(domain, images, tail_mass):
    """
    Bilan exact tranche par tranche : résidu = |μ(Ω) − queue − μ(∪ images ∩ Ω)| + masse échappée.
    """
    xu, hu, xl, hl = profile(domain)
    cuts = set(xu.tolist()) | set(xl.tolist())
    arr = np.array([img[1:] for img in images]) if images else np.empty((0, 4))
    cuts.update(arr[:, 0].tolist())
    cuts.update(arr[:, 1].tolist())
    lo_x, hi_x = domain.ell0, domain.r0
    xs = np.array(sorted(c for c in cuts if lo_x <= c <= hi_x))
    covered, escaped = 0.0, 0.0
    for x1, x2 in zip(xs[:-1], xs[1:]):
        if x2 - x1 <= 0:
            continue
        mid = 0.5 * (x1 + x2)
        sel = (arr[:, 0] <= mid) & (arr[:, 1] >= mid)
        top = _at(xu, hu, mid)
        bot = _at(xl, hl, mid)
        inside, outside = _union_length_in(arr[sel][:, 2:4].tolist(), bot, top, x1, x2)
        covered += inside
        escaped += outside
    total = mu_domain(domain).mass
    return abs(total - tail_mass - covered) + escaped, escaped


def _at(xs, values, x):
    if len(values) == 0:
        return 0.0
    j = int(np.clip(np.searchsorted(xs, x, side='right') - 1, 0, len(values) - 1))
    return float(values[j])


def multiplicity_excess(domain, images, grid):
    """Fraction μ-pondérée des cellules couvertes au moins deux fois par des images distinctes."""
    x0, x1, y0, y1 = domain.bbox()
    cx = x0 + (np.arange(grid) + 0.5) * (x1 - x0) / grid
    cy = y0 + (np.arange(grid) + 0.5) * (y1 - y0) / grid
    counts = np.zeros((grid, grid), dtype=np.int32)
    for _, X1, X2, Y1, Y2 in images:
        i0, i1 = np.searchsorted(cx, X1, side='left'), np.searchsorted(cx, X2, side='left')
        j0, j1 = np.searchsorted(cy, Y1, side='left'), np.searchsorted(cy, Y2, side='left')
        counts[i0:i1, j0:j1] += 1
    gx, gy = np.meshgrid(cx, cy, indexing='ij')
    with np.errstate(divide='ignore', invalid='ignore'):
        weight = np.where(1 + gx * gy > 0, 1.0 / (1 + gx * gy) ** 2, 0.0)
    covered = weight[counts >= 1].sum()
    if covered == 0:
        return 0.0
    return float(weight[counts >= 2].sum() / covered)


def _exchange(images, tol):
    ok = True
    for d, _, _, Y1, Y2 in images:
        if d.l != 1:
            continue
        if d.k < 0 and Y1 < -tol:
            ok = False
        if d.k > 0 and Y2 > tol:
            ok = False
    return ok


def _outer_digits(blockset):
    """Chiffres de plus grand |k| par signe de k et par l : voisins de la queue non énumérée."""
    outer = {}
    for b in blockset.blocks:
        key = (b.digit.k > 0, b.digit.l)
        if key not in outer or abs(b.digit.k) > abs(outer[key].k):
            outer[key] = b.digit
    return set(outer.values())


def _edge_gap(domain, arr, breaks, x1, x2, edge, eps, up):
    """Distance entre une arête d'image et ce qui la borde juste au-dessus (up) ou au-dessous."""
    level = edge + eps if up else edge - eps
    near = arr[(arr[:, 0] < x2) & (arr[:, 1] > x1) & (arr[:, 2] <= level) & (arr[:, 3] >= level)]
    cuts = {x1, x2}
    cuts.update(v for v in near[:, :2].ravel().tolist() if x1 < v < x2)
    cuts.update(v for v in breaks if x1 < v < x2)
    xs = np.array(sorted(cuts))
    mids = 0.5 * (xs[:-1] + xs[1:])
    covered = ((near[:, 0][None, :] <= mids[:, None]) & (near[:, 1][None, :] >= mids[:, None])).any(axis=1)
    outside = ~contains(domain, mids, np.full_like(mids, level), tol=0.0)
    holes = mids[~(covered | outside)]
    worst = 0.0
    for m in holes.tolist():
        over = arr[(arr[:, 0] <= m) & (arr[:, 1] >= m)]
        bot, top = fiber(domain, min(max(m, domain.ell0), domain.r0))
        if up:
            nxt = [top] + [y for y in over[:, 2].tolist() if y > edge]
            worst = max(worst, min(nxt) - edge)
        else:
            nxt = [bot] + [y for y in over[:, 3].tolist() if y < edge]
            worst = max(worst, edge - max(nxt))
    return worst


def _lamination(domain, blockset, images):
    """
    Images des blocs pleins : chaque arête horizontale touche une autre image ou le bord de Ω.

    Les blocs voisins de la queue (|k| maximal) sont exclus. L'écart renvoyé est relatif
    à la hauteur de l'image.
    """
    full = {b.digit for b in blockset.blocks if b.full} - _outer_digits(blockset)
    if not images:
        return True, 0.0
    arr = np.array([img[1:] for img in images])
    xu, _, xl, _ = profile(domain)
    breaks = sorted(set(xu.tolist()) | set(xl.tolist()))
    worst = 0.0
    for d, X1, X2, Y1, Y2 in images:
        if d not in full or X2 <= X1:
            continue
        height = max(Y2 - Y1, DEGENERATE_HEIGHT)
        for edge, up in ((Y2, True), (Y1, False)):
            eps = max(LAMINATION_TOL * height, 1e-12 * (1 + abs(edge)))
            gap = _edge_gap(domain, arr, breaks, X1, X2, edge, eps, up)
            worst = max(worst, gap / height)
    return worst <= LAMINATION_TOL, worst


def _limit_extent(images):
    extent = {}
    for d, _, _, Y1, Y2 in images:
        lo, hi = extent.get(d, (math.inf, -math.inf))
        extent[d] = (min(lo, Y1), max(hi, Y2))
    by_k = sorted(extent, key=lambda d: abs(d.k))
    outer = [d for d in by_k if d.k < 0][-LIMIT_BLOCKS:] + [d for d in by_k if d.k > 0][-LIMIT_BLOCKS:]
    if not outer:
        return float('nan')
    return max(extent[d][1] - extent[d][0] for d in outer)


def verify_bijectivity(domain, blockset=None, samples=LAB_SAMPLES, grid=LAB_GRID, seed=LAB_SEED, spec=None):
    """
    Certificat numérique de bijectivité de 𝒯_α sur Ω.

    (a) fraction des points μ-aléatoires de Ω envoyés dans Ω ; (b) résidu du bilan
    de masse des images de blocs ; (c) excès de multiplicité sur une grille.
    """
    params = group_params(domain.n)
    spec = spec or interval_spec(params, domain.alpha)
    try:
        total = mu_domain(domain)
    except InfiniteMassError:
        total = None
    if total is None or total.infinite:
        return BijectivityReport(float('nan'), float('nan'), float('nan'), samples, 'inconclusive', seed,
                                 details={'reason': "masse infinie"})
    blockset = blockset or partition_blocks(domain, spec)
    rng = np.random.default_rng(seed)

    xs, ys = sample_mu(domain, samples, rng)
    X, Y = planar_apply_array(spec, xs, ys)
    ok = np.isfinite(Y) & contains(domain, X, Y)
    containment = float(np.mean(ok))

    images = block_images(spec, blockset)
    residual, escaped = mass_balance(domain, images, blockset.tail_mass())
    excess = multiplicity_excess(domain, images, grid)

    small = domain.alpha < landmarks(params).gamma
    exchange = _exchange(images, LAMINATION_TOL) if small else None
    laminated, gap = _lamination(domain, blockset, images)
    limit = _limit_extent(images)

    passed = (containment >= containment_threshold(samples)
              and residual <= MASS_BALANCE_REL_TOL * total.mass
              and excess <= MULTIPLICITY_MAX)
    verdict = 'pass' if passed else 'fail'
    logger.info("Bijectivité α = %s : inclusion %.5f, résidu %.3g, multiplicité %.3g → %s",
                domain.alpha, containment, residual, excess, verdict)
    return BijectivityReport(containment, residual, excess, samples, verdict, seed, total.mass,
                             blockset.tail_mass(), escaped, exchange, laminated, gap, limit,
                             details={'blocks': len(blockset.blocks), 'images': len(images)})
