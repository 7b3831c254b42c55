"""
Mots de synchronisation v = c₁d₁⋯c_s, mots de chiffres associés et matrices
R, L pour les petits α (k ≥ 1) et les grands α (niveau −k).

Les mots sont des tuples d'entiers ; la parité de l'indice distingue les
lettres c (indices pairs, positions impaires) des lettres d.
"""
import re
from dataclasses import dataclass

from core_algebra import IDENTITY, digit_matrix, generators, translation
from errors import InvalidWordError, UnsupportedCaseError
from interval_dynamics import Digit


# ========================================
# MOTS v
# ========================================

@dataclass(frozen=True)
class Word:
    letters: tuple

    def __post_init__(self):
        if not self.letters:
            raise InvalidWordError("Mot vide")
        for pos, letter in enumerate(self.letters, start=1):
            if isinstance(letter, bool) or not isinstance(letter, int) or letter < 1:
                raise InvalidWordError(f"Lettre invalide {letter!r} (les lettres doivent être >= 1)", position=pos)
        if len(self.letters) % 2 == 0:
            raise InvalidWordError("Un mot c₁d₁⋯c_s a une longueur impaire", position=len(self.letters))

    @property
    def s(self):
        return (len(self.letters) + 1) // 2

    @property
    def c(self):
        return self.letters[0::2]

    @property
    def d(self):
        return self.letters[1::2]

    @property
    def sbar(self):
        """S̄(v) = Σcᵢ + Σd_j."""
        return sum(self.letters)

    def is_palindrome(self):
        return self.letters == self.letters[::-1]

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return ' '.join(str(x) for x in self.letters)


def parse_word(text):
    """Lit la forme compacte "c1 d1 c2 … cs" (espaces ou virgules)."""
    if isinstance(text, Word):
        return text
    if isinstance(text, (tuple, list)):
        return Word(tuple(text))
    tokens = [tok for tok in re.split(r'[\s,]+', str(text).strip()) if tok]
    if not tokens:
        raise InvalidWordError("Mot vide")
    letters = []
    for pos, tok in enumerate(tokens, start=1):
        try:
            letters.append(int(tok))
        except ValueError:
            raise InvalidWordError(f"Lettre non entière {tok!r}", position=pos) from None
    return Word(tuple(letters))


# ========================================
# MOTS DE CHIFFRES
# ========================================

@dataclass(frozen=True)
class DigitWord:
    symbols: tuple

    def __len__(self):
        return len(self.symbols)

    def simplified(self):
        """Chiffres simplifiés (exposants de A) ; pertinent quand tous les l valent 1."""
        return tuple(d.k for d in self.symbols)

    def count(self, digit):
        return sum(1 for d in self.symbols if d == digit)

    def __str__(self):
        return ','.join(str(d) for d in self.symbols)


def _blocks(k_odd, k_even, v, l=1):
    symbols = []
    for i, letter in enumerate(v.letters):
        symbols += [Digit(k_odd if i % 2 == 0 else k_even, l)] * letter
    return tuple(symbols)


def word_matrix(params, word):
    """Produit des A^kC^l d'un mot de chiffres, le premier chiffre appliqué en premier."""
    m = IDENTITY
    for d in word.symbols:
        m = digit_matrix(params, d.k, d.l) @ m
    return m


def digit_word_small(k, v):
    """d̄(k,v) = k^{c₁}, (k+1)^{d₁}, …, k^{c_s}."""
    v = parse_word(v)
    if k < 1:
        raise InvalidWordError(f"Niveau k = {k} invalide pour les petits α")
    return DigitWord(_blocks(k, k + 1, v))


def lower_digit_word_small(k, v, n):
    """
    d̲(k,v) = w^k, 𝒞^{c₁−1}𝒟^{d₁}⋯𝒟^{d_{s−1}}𝒞^{c_s}, (−1)^{n−2}

    avec w = (−1)^{n−2}, −2, (−1)^{n−3}, −2 ; 𝒞 = (−1)^{n−3}, −2, w^{k−1} ; 𝒟 = 𝒞 au niveau k+1.
    """
    v = parse_word(v)
    a, b, c = [-1] * (n - 2), [-1] * (n - 3), [-2]
    w = a + c + b + c

    def block(level):
        return b + c + w * (level - 1)

    letters = w * k
    for i, letter in enumerate(v.letters):
        if i % 2 == 0:
            reps = letter - 1 if i == 0 else letter
            letters += block(k) * reps
        else:
            letters += block(k + 1) * letter
    letters += a
    return DigitWord(tuple(Digit(p, 1) for p in letters))


def matrix_R_small(params, k, v):
    """R_{k,v} = (A^kC)^{c_s} ⋯ (A^{k+1}C)^{d₁} (A^kC)^{c₁}."""
    return word_matrix(params, digit_word_small(k, v))


def matrix_L_small(params, k, v):
    """L_{k,v} = C⁻¹ACR_{k,v}."""
    A, C, _ = generators(params)
    return C.inverse() @ A @ C @ matrix_R_small(params, k, v)


# ========================================
# GRANDS α
# ========================================

@dataclass(frozen=True)
class LargeDigitWords:
    lower: DigitWord  # d̲(−k,v), préfixe de l'orbite de ℓ₀
    upper: DigitWord  # b̄(−k,v), préfixe de l'orbite de r₀
    e: int  # nombre de chiffres (1,2) dans b̄(−k,v)


def check_restricted(k, v, n):
    """Restriction au niveau k = 1 : cᵢ <= n−2, et v = n−2 est le seul mot de préfixe n−2."""
    if k != 1:
        return
    for i, c in enumerate(v.c):
        if c > n - 2:
            raise InvalidWordError(f"Au niveau −1, cᵢ doit être <= n−2 = {n - 2}", position=2 * i + 1)
    if v.letters[0] == n - 2 and len(v) > 1:
        raise InvalidWordError(f"Au niveau −1, seul le mot {n - 2} commence par n−2", position=2)


def _free_reduce(letters):
    stack = []
    for sym, power in letters:
        if stack and stack[-1][0] == sym and stack[-1][1] == -power:
            stack.pop()
        else:
            stack.append((sym, power))
    return stack


def digit_word_large(k, v, n):
    """
    Mots de chiffres du niveau −k.

    b̄(−k,v) = (1,2)^{n−2} ℰ^{c₁} ℱ^{d₁} ⋯ ℰ^{c_s} avec ℰ_k = (1,1) u^{k−2} (1,2)^{n−3},
    ℱ = ℰ_{k+1} et u = (1,2)^{n−2}(1,1), réduit dans le groupe libre (u^{−1} quand k = 1).
    """
    v = parse_word(v)
    if k < 1:
        raise InvalidWordError(f"Niveau k = {k} invalide pour les grands α")
    check_restricted(k, v, n)
    one, two = Digit(1, 1), Digit(1, 2)
    u = [(two, 1)] * (n - 2) + [(one, 1)]

    def u_power(p):
        if p >= 0:
            return u * p
        inv = [(sym, -pw) for sym, pw in reversed(u)]
        return inv * (-p)

    def e_block(level):
        return [(one, 1)] + u_power(level - 2) + [(two, 1)] * (n - 3)

    letters = [(two, 1)] * (n - 2)
    for i, letter in enumerate(v.letters):
        letters += e_block(k if i % 2 == 0 else k + 1) * letter
    reduced = _free_reduce(letters)
    if any(power < 0 for _, power in reduced):
        raise InvalidWordError(f"b̄(−{k},{v}) ne se réduit pas en un mot positif")
    upper = DigitWord(tuple(sym for sym, _ in reduced))
    lower = DigitWord(_blocks(-k, -k - 1, v))
    return LargeDigitWords(lower, upper, upper.count(two))


def matrix_L_large(params, k, v):
    """L_{−k,v} = (A^{−k}C)^{c_s} ⋯ (A^{−k}C)^{c₁} A⁻¹."""
    v = parse_word(v)
    return word_matrix(params, DigitWord(_blocks(-k, -k - 1, v))) @ translation(params, -1)


def matrix_R_large(params, k, v):
    """R_{−k,v} = CA⁻¹C L_{−k,v}."""
    _, C, _ = generators(params)
    return C @ translation(params, -1) @ C @ matrix_L_large(params, k, v)


# ========================================
# ORDRES
# ========================================

def _sign(x):
    return (x > 0) - (x < 0)


def order_digits(w1, w2):
    """
    Ordre ≺ sur les mots de chiffres (ordre des réels le long de 𝕀_α).

    Returns:
        int: −1, 0 ou 1 ; 0 aussi quand l'un est préfixe de l'autre (ordre indéterminé)
    """
    for d1, d2 in zip(w1.symbols, w2.symbols):
        if d1 != d2:
            k1, k2 = d1.order_key(), d2.order_key()
            return -1 if k1 < k2 else 1
    return 0


def order_words(v1, v2):
    """
    Ordre alterné ⪻ : positions impaires croissantes, positions paires décroissantes.

    Returns:
        int: −1 si v1 ⪻ v2, 1 si v2 ⪻ v1, 0 si égaux ou préfixes l'un de l'autre
    """
    v1, v2 = parse_word(v1), parse_word(v2)
    for i, (a, b) in enumerate(zip(v1.letters, v2.letters)):
        if a != b:
            return _sign(a - b) if i % 2 == 0 else _sign(b - a)
    return 0


def _compare_tail(tail, v):
    for i, (a, b) in enumerate(zip(tail, v)):
        if a != b:
            return _sign(a - b) if i % 2 == 0 else _sign(b - a)
    return 0


def is_self_dominant(v):
    """σʲ(v) ⪯ v pour tout décalage 1 <= j <= |v| (les préfixes comptent comme égaux)."""
    v = parse_word(v)
    return all(_compare_tail(v.letters[j:], v.letters) <= 0 for j in range(1, len(v) + 1))


# ========================================
# EXTENSION Θ_q
# ========================================

def v_prime(v):
    """v' = 1 (c₁−1) 1 c₂ ⋯ 1 c_s si c₁ ≠ 1, sinon (d₁+1) 1 d₂ 1 ⋯ d_{s−1} 1."""
    v = parse_word(v)
    c, d = v.c, v.d
    if c[0] != 1:
        letters = [1, c[0] - 1]
        for ci in c[1:]:
            letters += [1, ci]
    else:
        if v.s == 1:
            raise UnsupportedCaseError("v' n'est pas défini par la règle générale pour v = 1")
        letters = [d[0] + 1, 1]
        for dj in d[1:]:
            letters += [dj, 1]
    return tuple(letters)


def parent_of(v):
    """Plus long suffixe propre de v qui en est aussi préfixe (parent dans l'arbre)."""
    v = parse_word(v)
    letters = v.letters
    for size in range(len(letters) - 1, 0, -1):
        if size % 2 == 1 and letters[:size] == letters[-size:]:
            return Word(letters[:size])
    return None


def theta(v, q, parent=None):
    """
    Θ_q(v) = v (v')^q v'' où v = u v'' pour le parent u de v.

    Args:
        v: mot
        q: entier >= 0
        parent: parent u ; déduit comme plus long bord propre de v s'il est absent

    Returns:
        Word
    """
    v = parse_word(v)
    if q < 0:
        raise InvalidWordError(f"q = {q} doit être >= 0")
    u = parse_word(parent) if parent is not None else parent_of(v)
    if u is None:
        raise UnsupportedCaseError(f"Pas de décomposition parent connue pour v = {v} (mot court)")
    if len(u) >= len(v) or v.letters[:len(u)] != u.letters:
        raise UnsupportedCaseError(f"{u} n'est pas un préfixe propre de {v}")
    suffix = v.letters[len(u):]
    return Word(v.letters + v_prime(v) * q + suffix)
