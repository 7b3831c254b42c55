"""
Extrémités des intervalles de synchronisation ζ, η (et δ pour les grands α),
certificats de synchronisation, localisation d'un paramètre et atlas CSV.
"""
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import pandas as pd

from config import LAB_SYNC_TOL, LAB_TIE_TOL
from core_algebra import PARABOLIC_TOL, fixed_points, generators, group_params
from errors import (
    DomainError,
    InvalidCandidateError,
    InvalidWordError,
    LabError,
    UnresolvedParameterError,
)
from interval_dynamics import frak_b, interval_spec, landmarks, orbit
from word_machinery import (
    Word,
    digit_word_large,
    digit_word_small,
    lower_digit_word_small,
    matrix_L_large,
    matrix_L_small,
    matrix_R_large,
    matrix_R_small,
    parse_word,
)

logger = logging.getLogger(__name__)

ATLAS_COLUMNS = ['n', 'k', 'v', 'zeta', 'eta', 'delta', 'Sunder', 'Sbar', 'valid']

# Positions relatives des points d'échantillonnage du certificat
SMALL_SAMPLES = (0.25, 0.5, 0.75)
# Décalage (√5 − 1)/10 des nouveaux essais quand l'orbite d'un point rencontre un pôle
SAMPLE_SHIFT = 0.12360679774997896
SAMPLE_RETRIES = 4


@dataclass(frozen=True)
class SyncReport:
    alpha: float
    left_value: float
    right_value: float
    difference: float
    prefix_ok: bool
    status: str  # pass | fail | inconclusive
    detail: str = ''

    @property
    def passed(self):
        return self.status == 'pass'


@dataclass(frozen=True)
class SyncInterval:
    """Intervalle J_{k,v} (k >= 1) ou J_{−k,v} (k signé <= −1)."""

    n: int
    k: int
    v: Word
    zeta: object
    eta: object
    delta: object
    Sunder: int
    Sbar: int
    e: int = 0
    valid: bool = False
    certificate: tuple = field(default=(), compare=False)
    delta_certificate: tuple = field(default=(), compare=False)

    @property
    def large(self):
        return self.k < 0

    @property
    def level(self):
        return abs(self.k)

    @property
    def left(self):
        return self.eta if self.large else self.zeta

    @property
    def right(self):
        return self.zeta if self.large else self.eta

    def contains(self, alpha, closed=True):
        if closed:
            return self.left <= alpha <= self.right
        return self.left < alpha < self.right

    def as_row(self):
        return {
            'n': self.n,
            'k': self.k,
            'v': str(self.v),
            'zeta': float(self.zeta),
            'eta': float(self.eta),
            'delta': float(self.delta) if self.delta is not None else None,
            'Sunder': self.Sunder,
            'Sbar': self.Sbar,
            'valid': self.valid,
        }


# ========================================
# RÉSOLUTION DES EXTRÉMITÉS
# ========================================

def _pick_alpha(params, matrix, lo, hi, label, shift=0):
    """Point fixe de `matrix` converti en α = x/t + shift dans [lo, hi] ; préfère le répulsif."""
    tol = 1e-12
    candidates = []
    for fp in fixed_points(matrix):
        alpha = fp.root / params.t + shift
        if lo - tol <= alpha <= hi + tol:
            candidates.append((fp, alpha))
    if not candidates:
        raise InvalidCandidateError(f"Aucun point fixe admissible pour {label}")
    repelling = [c for c in candidates if c[0].kind == 'repelling']
    chosen = repelling[0] if repelling else candidates[0]
    if chosen[0].kind == 'parabolic':
        raise InvalidCandidateError(f"Point fixe parabolique pour {label} (|M′| à {PARABOLIC_TOL} de 1)")
    if len(candidates) > 1 and not repelling:
        logger.warning("Deux racines admissibles sans racine répulsive pour %s", label)
    return chosen[1]


def solve_small(params, k, v):
    """
    ζ_{k,v} : A·R_{k,v} fixe r₀ ; η_{k,v} : L_{k,v} fixe r₀. Dans les deux cas α = x/t.

    Returns:
        (zeta, eta)
    """
    v = parse_word(v)
    A, _, _ = generators(params)
    gamma = landmarks(params).gamma
    zeta = _pick_alpha(params, A @ matrix_R_small(params, k, v), 0, gamma, f"ζ_{k},{v}")
    eta = _pick_alpha(params, matrix_L_small(params, k, v), 0, gamma, f"η_{k},{v}")
    if not zeta < eta:
        raise InvalidCandidateError(f"ζ = {zeta} >= η = {eta} pour ({k}, {v})")
    return zeta, eta


def solve_large(params, k, v):
    """
    Niveau −k : ζ par L_{−k,v}·r₀ = r₀ ; η par A·C·R_{−k,v}·r₀ = r₀ ;
    δ par C·L_{−k,v}·A·ℓ₀ = ℓ₀, soit α = ℓ₀/t + 1.

    Returns:
        (eta, delta, zeta)
    """
    v = parse_word(v)
    A, C, _ = generators(params)
    gamma = landmarks(params).gamma
    L = matrix_L_large(params, k, v)
    zeta = _pick_alpha(params, L, gamma, 1, f"ζ_-{k},{v}")
    eta = _pick_alpha(params, A @ C @ matrix_R_large(params, k, v), gamma, 1, f"η_-{k},{v}")
    delta = _pick_alpha(params, C @ L @ A, gamma, 1, f"δ_-{k},{v}", shift=1)
    if not eta < delta < zeta:
        raise InvalidCandidateError(f"Ordre η < δ < ζ violé pour (−{k}, {v}) : {eta}, {delta}, {zeta}")
    return eta, delta, zeta


def word_lengths(params, k, v):
    """(S̲, S̄, e) pour un niveau signé k."""
    v = parse_word(v)
    if k > 0:
        return len(lower_digit_word_small(k, v, params.n)), v.sbar, 0
    words = digit_word_large(-k, v, params.n)
    return len(words.lower), len(words.upper), words.e


# ========================================
# CERTIFICAT DE SYNCHRONISATION
# ========================================

def predicted_prefixes(params, k, v):
    """Préfixes attendus des orbites de ℓ₀ et r₀ (mots de chiffres)."""
    if k > 0:
        return lower_digit_word_small(k, v, params.n).symbols, digit_word_small(k, v).symbols
    words = digit_word_large(-k, v, params.n)
    return words.lower.symbols, words.upper.symbols


def verify_sync(interval, alpha, params=None, tol=LAB_SYNC_TOL, tie_tol=LAB_TIE_TOL):
    """
    Vérifie l'identité de synchronisation en un α intérieur.

    Petits α et partie gauche des grands α : ℓ_{1+S̲} = r_{1+S̄} ;
    partie droite (α > δ) : ℓ_{1+S̲} = r_{2+S̄}.
    """
    params = params or group_params(interval.n)
    spec = interval_spec(params, alpha, tie_tol)
    if interval.large and interval.delta is not None and abs(alpha - interval.delta) <= tol:
        return SyncReport(float(alpha), float('nan'), float('nan'), float('nan'), False, 'inconclusive',
                          "α = δ : identité à deux cas non définie")
    right_steps = interval.Sbar + 1
    if interval.large and alpha > interval.delta:
        right_steps += 1
    left = orbit(spec, spec.ell0, interval.Sunder + 1)
    right = orbit(spec, spec.r0, right_steps)
    if len(left.points) <= interval.Sunder + 1 or len(right.points) <= right_steps:
        return SyncReport(float(alpha), float('nan'), float('nan'), float('nan'), False, 'inconclusive',
                          "orbite interrompue avant la synchronisation")
    lhs, rhs = left.points[interval.Sunder + 1], right.points[right_steps]
    low_prefix, up_prefix = predicted_prefixes(params, interval.k, interval.v)
    prefix_ok = (tuple(left.digits[:len(low_prefix)]) == tuple(low_prefix)
                 and tuple(right.digits[:len(up_prefix)]) == tuple(up_prefix))
    diff = abs(lhs - rhs)
    status = 'pass' if diff <= tol * (1 + abs(lhs)) and prefix_ok else 'fail'
    detail = '' if prefix_ok else "préfixe de chiffres inattendu"
    return SyncReport(float(alpha), float(lhs), float(rhs), float(diff), prefix_ok, status, detail)


def _sample_spans(interval):
    """(origine, largeur, position relative) des trois points du certificat."""
    if not interval.large:
        width = interval.eta - interval.zeta
        return [(interval.zeta, width, f) for f in SMALL_SAMPLES]
    left_w = interval.delta - interval.eta
    right_w = interval.zeta - interval.delta
    return [(interval.eta, left_w, 0.5), (interval.delta, right_w, 0.25), (interval.delta, right_w, 0.75)]


def _certify_sample(interval, lo, width, f, params, tol, tie_tol):
    """
    verify_sync en lo + f·width ; une orbite qui tombe sur un pôle (rapport
    inconclusive) relance le test en une position décalée d'un pas irrationnel.
    """
    report = None
    for j in range(SAMPLE_RETRIES + 1):
        pos = f if j == 0 else 0.05 + 0.9 * ((f + j * SAMPLE_SHIFT) % 1)
        report = verify_sync(interval, lo + pos * width, params, tol, tie_tol)
        if report.status != 'inconclusive':
            return report
        logger.debug("α = %s : %s, nouvel essai", report.alpha, report.detail)
    return report


def _delta_certificate(params, interval, tie_tol):
    spec = interval_spec(params, interval.delta, tie_tol)
    ell = orbit(spec, spec.ell0, interval.Sunder).points
    r = orbit(spec, spec.r0, interval.Sbar + 1).points
    gap_b = abs(ell[-1] - frak_b(spec)) if len(ell) > interval.Sunder else float('nan')
    gap_l = abs(r[-1] - spec.ell0) if len(r) > interval.Sbar + 1 else float('nan')
    return float(gap_b), float(gap_l)


def solve_interval(params, k, v, tol=LAB_SYNC_TOL, tie_tol=LAB_TIE_TOL):
    """
    Résout et certifie J_{k,v} (k >= 1) ou J_{−|k|,v} (k <= −1).

    Returns:
        SyncInterval avec `valid` = certificat vérifié aux trois points intérieurs
    """
    v = parse_word(v)
    if k == 0:
        raise InvalidWordError("Le niveau k doit être non nul")
    Sunder, Sbar, e = word_lengths(params, k, v)
    if k > 0:
        zeta, eta = solve_small(params, k, v)
        delta = None
    else:
        eta, delta, zeta = solve_large(params, -k, v)
    interval = SyncInterval(params.n, k, v, zeta, eta, delta, Sunder, Sbar, e)
    reports = tuple(_certify_sample(interval, lo, width, f, params, tol, tie_tol)
                    for lo, width, f in _sample_spans(interval))
    # un pôle persistant ne compte pas comme un échec
    valid = any(r.passed for r in reports) and not any(r.status == 'fail' for r in reports)
    delta_cert = ()
    if interval.large:
        delta_cert = _delta_certificate(params, interval, tie_tol)
    if not valid:
        failing = [r for r in reports if not r.passed]
        logger.info("Candidat (%s, %s) non certifié : %s", k, v, failing[0])
    return SyncInterval(params.n, k, v, zeta, eta, delta, Sunder, Sbar, e, valid, reports, delta_cert)


# ========================================
# LOCALISATION D'UN PARAMÈTRE
# ========================================

def candidate_words(max_letters=5, max_letter=4, n=None, level=None):
    """Palindromes de longueur impaire <= max_letters, du plus court au plus long."""
    for size in range(1, max_letters + 1, 2):
        half = size // 2 + 1
        for head in itertools.product(range(1, max_letter + 1), repeat=half):
            letters = head + head[:size // 2][::-1]
            if level == 1 and n is not None:
                if any(c > n - 2 for c in letters[0::2]) or (letters[0] == n - 2 and size > 1):
                    continue
            yield Word(letters)


@lru_cache(maxsize=4096)
def _cached_interval(n, precision, k, letters, tol, tie_tol):
    params = group_params(n, precision)
    return solve_interval(params, k, Word(letters), tol, tie_tol)


def certified_interval(params, k, v, tol=LAB_SYNC_TOL, tie_tol=LAB_TIE_TOL):
    """solve_interval avec cache par (n, k, v)."""
    return _cached_interval(params.n, params.precision, k, parse_word(v).letters, tol, tie_tol)


def level_of(params, alpha, tie_tol=LAB_TIE_TOL):
    """Niveau signé : premier chiffre de r₀ (petits α) ou de ℓ₀ (grands α)."""
    spec = interval_spec(params, alpha, tie_tol)
    gamma = landmarks(params).gamma
    if alpha < gamma:
        return orbit(spec, spec.r0, 1).digits[0].k
    first = orbit(spec, spec.ell0, 1).digits[0]
    return first.k


def locate(params, alpha, max_letters=5, max_letter=4, tol=LAB_SYNC_TOL, tie_tol=LAB_TIE_TOL):
    """
    Trouve l'intervalle de synchronisation contenant α (bornes incluses).

    Raises:
        UnresolvedParameterError: aucun mot candidat certifié ne contient α
    """
    if not 0 < alpha < 1:
        raise DomainError(f"α = {alpha} doit être dans (0, 1)")
    k = level_of(params, alpha, tie_tol)
    levels = [k]
    if alpha >= landmarks(params).gamma and k < 0:
        # en α = ζ_{−k,v}, ℓ₀ tombe sur une frontière de cylindre et reçoit le chiffre de droite
        levels.append(k + 1 if k < -1 else k)
    for level in dict.fromkeys(levels):
        for v in candidate_words(max_letters, max_letter, params.n, -level if level < 0 else None):
            try:
                interval = certified_interval(params, level, v, tol, tie_tol)
            except LabError as exc:
                logger.debug("Candidat (%s, %s) rejeté : %s", level, v, exc)
                continue
            if interval.valid and interval.contains(alpha):
                logger.info("α = %s localisé dans J_{%s,%s}", alpha, level, v)
                return interval
    raise UnresolvedParameterError(
        f"α = {alpha} n'appartient à aucun intervalle certifié (mots <= {max_letters} lettres) ; "
        "utiliser --sweep")


# ========================================
# ATLAS
# ========================================

def _atlas_row(job):
    n, precision, k, letters, tol, tie_tol = job
    params = group_params(n, precision)
    try:
        interval = solve_interval(params, k, Word(letters), tol, tie_tol)
        return interval.as_row()
    except LabError as exc:
        return {'n': n, 'k': k, 'v': ' '.join(map(str, letters)), 'zeta': None, 'eta': None,
                'delta': None, 'Sunder': None, 'Sbar': None, 'valid': False, 'error': str(exc)}


def atlas(params, levels, words, workers=1, tol=LAB_SYNC_TOL, tie_tol=LAB_TIE_TOL):
    """
    Résolution en lot sur une grille (k, v) ; l'ordre des lignes suit l'ordre des entrées.

    Returns:
        pd.DataFrame avec les colonnes de ATLAS_COLUMNS
    """
    jobs = [(params.n, params.precision, k, parse_word(v).letters, tol, tie_tol)
            for k in levels for v in words]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_atlas_row, jobs))
    else:
        rows = [_atlas_row(job) for job in jobs]
    df = pd.DataFrame(rows)
    for col in ATLAS_COLUMNS:
        if col not in df.columns:
            df[col] = None
    return df[ATLAS_COLUMNS + [c for c in df.columns if c not in ATLAS_COLUMNS]]


def covered_fraction(df):
    """Longueur totale des intervalles valides (deux à deux disjoints) rapportée à (0, 1)."""
    valid = df[df['valid'] == True]  # noqa: E712
    if valid.empty:
        return 0.0
    lo = valid[['zeta', 'eta']].min(axis=1)
    hi = valid[['zeta', 'eta']].max(axis=1)
    spans = sorted(zip(lo, hi))
    total, cur_lo, cur_hi = 0.0, None, None
    for a, b in spans:
        if cur_hi is None or a > cur_hi:
            if cur_hi is not None:
                total += cur_hi - cur_lo
            cur_lo, cur_hi = a, b
        else:
            cur_hi = max(cur_hi, b)
    total += cur_hi - cur_lo
    return total


def write_atlas(df, path):
    df.to_csv(path, index=False)
    return path
