"""Exact Weingarten calculus for U(d), O(d) and Sp(d/2).

All Weingarten values are exact :class:`fractions.Fraction` objects obtained by
inverting Gram matrices over the rationals. Floats never enter this module
except in :func:`symmetric_projector_stats`, which takes numeric states, and in
the bound report, which compares irrational envelopes at high precision.

Indices are 0-based throughout. A permutation is stored as its tuple of
images; a pairing of ``{0, ..., 2k-1}`` is stored as ``k`` ordered pairs
``(a, b)`` with ``a < b`` and the pairs sorted by their left element.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import mpmath
import numpy as np

MAX_K_UNITARY = 6
MAX_K_PAIRINGS = 6
MAX_K_ORTHOGONAL = 5
MAX_K_MOMENT = 4
MAX_D_MOMENT = 16


class SingularGramError(ValueError):
    """The Gram matrix is not invertible at the requested dimension."""


class HypothesisError(ValueError):
    """A bound was requested outside the range where it is claimed to hold."""


# --------------------------------------------------------------------------
# Permutations and pairings
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Permutation:
    images: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.images) != list(range(len(self.images))):
            raise ValueError(f"not a permutation: {self.images}")

    @property
    def k(self) -> int:
        return len(self.images)

    @classmethod
    def identity(cls, k: int) -> "Permutation":
        return cls(tuple(range(k)))

    @classmethod
    def from_cycles(cls, k: int, cycles: Iterable[Sequence[int]]) -> "Permutation":
        images = list(range(k))
        for cyc in cycles:
            for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
                images[a] = b
        return cls(tuple(images))

    def __call__(self, i: int) -> int:
        return self.images[i]

    def __mul__(self, other: "Permutation") -> "Permutation":
        # composition: (self * other)(i) = self(other(i))
        return Permutation(tuple(self.images[j] for j in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * self.k
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(tuple(inv))

    def cycles(self) -> list[tuple[int, ...]]:
        seen = [False] * self.k
        out = []
        for start in range(self.k):
            if seen[start]:
                continue
            cyc = []
            i = start
            while not seen[i]:
                seen[i] = True
                cyc.append(i)
                i = self.images[i]
            out.append(tuple(cyc))
        return out

    def sign(self) -> int:
        return -1 if sum(len(c) - 1 for c in self.cycles()) % 2 else 1


def cycle_type(p: Permutation) -> tuple[int, ...]:
    """Cycle lengths of ``p`` in descending order; the number of parts is #(p)."""
    return tuple(sorted((len(c) for c in p.cycles()), reverse=True))


def num_cycles(p: Permutation) -> int:
    return len(p.cycles())


def partitions(k: int) -> list[tuple[int, ...]]:
    """Integer partitions of ``k`` in descending-part form, reverse-lex order."""
    out = []

    def rec(remaining, largest, prefix):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for part in range(min(remaining, largest), 0, -1):
            rec(remaining - part, part, prefix + [part])

    rec(k, k, [])
    return out


@dataclass(frozen=True)
class Pairing:
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        flat = [x for pair in self.pairs for x in pair]
        if sorted(flat) != list(range(2 * len(self.pairs))):
            raise ValueError(f"not a perfect matching of 0..2k-1: {self.pairs}")
        if any(a >= b for a, b in self.pairs):
            raise ValueError("each pair must be stored as (smaller, larger)")
        lefts = [a for a, _ in self.pairs]
        if lefts != sorted(lefts):
            raise ValueError("pairs must be ordered by their left element")

    @property
    def k(self) -> int:
        return len(self.pairs)

    @classmethod
    def identity(cls, k: int) -> "Pairing":
        return cls(tuple((2 * i, 2 * i + 1) for i in range(k)))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[int]]) -> "Pairing":
        canon = sorted(tuple(sorted(p)) for p in pairs)
        return cls(tuple(canon))

    def partner(self) -> tuple[int, ...]:
        """The involution sending each point to the point it is paired with."""
        f = [0] * (2 * self.k)
        for a, b in self.pairs:
            f[a], f[b] = b, a
        return tuple(f)

    def as_permutation(self) -> Permutation:
        """The element of S_2k sending (0, 1, 2, 3, ...) to (a1, b1, a2, b2, ...)."""
        return Permutation(tuple(x for pair in self.pairs for x in pair))

    def sign(self) -> int:
        return self.as_permutation().sign()

    def __str__(self) -> str:
        return "".join("{%d,%d}" % (a + 1, b + 1) for a, b in self.pairs)


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


@lru_cache(maxsize=None)
def enumerate_pairings(k: int) -> tuple[Pairing, ...]:
    """All (2k-1)!! canonical pairings of ``{0, ..., 2k-1}``; the identity first."""
    if not 1 <= k <= MAX_K_PAIRINGS:
        raise ValueError(f"k must be in 1..{MAX_K_PAIRINGS}, got {k}")

    def rec(items):
        if not items:
            yield ()
            return
        first, rest = items[0], items[1:]
        for idx, other in enumerate(rest):
            for tail in rec(rest[:idx] + rest[idx + 1:]):
                yield ((first, other),) + tail

    return tuple(Pairing(p) for p in rec(tuple(range(2 * k))))


def coset_type(m: Pairing, n: Pairing) -> tuple[int, ...]:
    """Half-lengths of the alternating loops of ``m`` and ``n``, descending.

    Starting from the smallest point not yet visited, alternately apply the
    partner maps of ``m`` and ``n`` until the sequence repeats; every loop has
    even length and contributes half of it as a part.
    """
    if m.k != n.k:
        raise ValueError("pairings act on different sets")
    fm, fn = m.partner(), n.partner()
    seen = [False] * (2 * m.k)
    parts = []
    for start in range(2 * m.k):
        if seen[start]:
            continue
        length = 0
        i = start
        use_m = True
        while not seen[i]:
            seen[i] = True
            length += 1
            i = fm[i] if use_m else fn[i]
            use_m = not use_m
        parts.append(length // 2)
    return tuple(sorted(parts, reverse=True))


# --------------------------------------------------------------------------
# Exact linear algebra
# --------------------------------------------------------------------------


def solve_exact(a: Sequence[Sequence], b: Sequence) -> list[Fraction]:
    """Solve ``a x = b`` over the rationals by Gauss-Jordan elimination."""
    n = len(a)
    rows = [[Fraction(x) for x in row] + [Fraction(rhs)] for row, rhs in zip(a, b)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if pivot is None:
            raise SingularGramError("matrix is singular")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        pv = rows[col][col]
        rows[col] = [x / pv for x in rows[col]]
        for r in range(n):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[col])]
    return [row[-1] for row in rows]


def _exact_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.dot(a.astype(object), b.astype(object))


def _common_denominator(values: Iterable[Fraction]) -> int:
    den = 1
    for v in values:
        den = den * v.denominator // math.gcd(den, v.denominator)
    return den


# --------------------------------------------------------------------------
# Unitary group
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _all_permutations(k: int) -> tuple[Permutation, ...]:
    return tuple(Permutation(p) for p in itertools.permutations(range(k)))


def gram_unitary(k: int, d: int) -> np.ndarray:
    """Integer matrix ``G[s, t] = d ** #(s^-1 t)`` over S_k in itertools order."""
    perms = _all_permutations(k)
    g = np.empty((len(perms), len(perms)), dtype=object)
    for i, s in enumerate(perms):
        s_inv = s.inverse()
        for j, t in enumerate(perms):
            g[i, j] = d ** num_cycles(s_inv * t)
    return g


@lru_cache(maxsize=None)
def _wg_unitary_table(k: int, d: int) -> dict[tuple[int, ...], Fraction]:
    if not 1 <= k <= MAX_K_UNITARY:
        raise ValueError(f"k must be in 1..{MAX_K_UNITARY}")
    if d == 0 or abs(d) < k:
        raise SingularGramError(f"unitary Gram matrix is singular for d={d}, k={k}")
    types = partitions(k)
    index = {t: i for i, t in enumerate(types)}
    reps = {}
    for p in _all_permutations(k):
        reps.setdefault(cycle_type(p), p)
    # Wg is a class function, so the row sigma = e of Wg G = I reduces to one
    # equation per conjugacy class of pi and one unknown per class of tau.
    a = [[0] * len(types) for _ in types]
    for row, lam in enumerate(types):
        pi = reps[lam]
        for tau in _all_permutations(k):
            a[row][index[cycle_type(tau)]] += Fraction(d) ** num_cycles(tau.inverse() * pi)
    rhs = [1 if lam == (1,) * k else 0 for lam in types]
    sol = solve_exact(a, rhs)
    return dict(zip(types, sol))


def wg_unitary(ct: Sequence[int] | Permutation, d: int) -> Fraction:
    """Unitary Weingarten function at a permutation or cycle type."""
    if isinstance(ct, Permutation):
        ct = cycle_type(ct)
    ct = tuple(sorted(ct, reverse=True))
    return _wg_unitary_table(sum(ct), d)[ct]


def wg_unitary_matrix(k: int, d: int) -> np.ndarray:
    perms = _all_permutations(k)
    table = _wg_unitary_table(k, d)
    w = np.empty((len(perms), len(perms)), dtype=object)
    for i, s in enumerate(perms):
        s_inv = s.inverse()
        for j, t in enumerate(perms):
            w[i, j] = table[cycle_type(s_inv * t)]
    return w


# --------------------------------------------------------------------------
# Orthogonal and symplectic groups
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _coset_table(k: int) -> np.ndarray:
    """Coset type of every ordered pair of pairings, as an object array."""
    prs = enumerate_pairings(k)
    out = np.empty((len(prs), len(prs)), dtype=object)
    for i, m in enumerate(prs):
        for j, n in enumerate(prs):
            out[i, j] = coset_type(m, n)
    return out


def gram_orthogonal(k: int, d: int) -> np.ndarray:
    """Integer matrix ``G[m, n] = d ** (number of loops of m and n)``."""
    ct = _coset_table(k)
    return np.vectorize(lambda t: d ** len(t), otypes=[object])(ct)


@lru_cache(maxsize=None)
def _wg_orthogonal_table(k: int, d: int) -> dict[tuple[int, ...], Fraction]:
    if not 1 <= k <= MAX_K_ORTHOGONAL:
        raise ValueError(f"k must be in 1..{MAX_K_ORTHOGONAL}")
    if d == 0:
        raise SingularGramError("d must be nonzero")
    prs = enumerate_pairings(k)
    ct = _coset_table(k)
    types = partitions(k)
    index = {t: i for i, t in enumerate(types)}
    reps = {}
    for j in range(len(prs)):
        reps.setdefault(ct[0, j], j)
    # Wg^O(m, n) depends on the coset type of (m, n) only; row m = e of the
    # inversion identity reduces to one equation per coset type of p.
    a = [[0] * len(types) for _ in types]
    for row, lam in enumerate(types):
        p = reps[lam]
        for j in range(len(prs)):
            a[row][index[ct[0, j]]] += Fraction(d) ** len(ct[j, p])
    rhs = [1 if lam == (1,) * k else 0 for lam in types]
    try:
        sol = solve_exact(a, rhs)
    except SingularGramError:
        raise SingularGramError(f"orthogonal Gram matrix is singular for d={d}, k={k}") from None
    return dict(zip(types, sol))


def wg_orthogonal(ct: Sequence[int], d: int) -> Fraction:
    """Orthogonal Weingarten function at a coset type (``d`` may be negative)."""
    ct = tuple(sorted(ct, reverse=True))
    return _wg_orthogonal_table(sum(ct), d)[ct]


def wg_orthogonal_matrix(k: int, d: int) -> np.ndarray:
    table = _wg_orthogonal_table(k, d)
    return np.vectorize(lambda t: table[t], otypes=[object])(_coset_table(k))


def wg_symplectic(m: Pairing, d: int, n: Pairing | None = None) -> Fraction:
    """Symplectic Weingarten function for Sp(d/2), ``d`` the matrix dimension.

    ``Wg^Sp(m, n) = (-1)^k sign(m) sign(n) Wg^O(coset(m, n), -d)`` where the
    signs are signatures in S_2k of the pairings read as permutations. With
    ``n`` omitted the identity pairing is used. The sign is not a function of
    the coset type alone, so this takes pairings rather than a partition.
    """
    if d % 2:
        raise ValueError("symplectic dimension must be even")
    if n is None:
        n = Pairing.identity(m.k)
    sign = (-1) ** m.k * m.sign() * n.sign()
    try:
        return sign * wg_orthogonal(coset_type(m, n), -d)
    except SingularGramError:
        raise SingularGramError(f"symplectic Gram matrix is singular for d={d}, k={m.k}") from None


def wg_symplectic_unsigned(ct: Sequence[int], d: int) -> Fraction:
    """``(-1)^k Wg^O(ct, -d)``: Wg^Sp at any pairing of coset type ``ct``, up to its signature."""
    ct = tuple(sorted(ct, reverse=True))
    if d % 2:
        raise ValueError("symplectic dimension must be even")
    try:
        return (-1) ** sum(ct) * wg_orthogonal(ct, -d)
    except SingularGramError:
        raise SingularGramError(f"symplectic Gram matrix is singular for d={d}, k={sum(ct)}") from None


def wg_symplectic_matrix(k: int, d: int) -> np.ndarray:
    prs = enumerate_pairings(k)
    signs = np.array([p.sign() for p in prs], dtype=object)
    base = wg_orthogonal_matrix(k, -d) * (-1) ** k
    return base * np.outer(signs, signs)


def symplectic_form(d: int) -> np.ndarray:
    """The form [[0, I], [-I, 0]] with d/2 x d/2 blocks."""
    if d % 2:
        raise ValueError("symplectic form needs even dimension")
    h = d // 2
    j = np.zeros((d, d), dtype=int)
    j[:h, h:] = np.eye(h, dtype=int)
    j[h:, :h] = -np.eye(h, dtype=int)
    return j


def gram_symplectic(k: int, d: int) -> np.ndarray:
    """``G[m, n] = sum_I Delta'_m(I) Delta'_n(I)`` evaluated loop by loop.

    Walking a loop, each pair contributes J when it is traversed from its
    smaller to its larger element and J^t = -J otherwise. A loop with 2l edges
    then contributes ``s * tr(J^(2l)) = s * (-1)^l * d``.
    """
    prs = enumerate_pairings(k)
    g = np.empty((len(prs), len(prs)), dtype=object)
    for i, m in enumerate(prs):
        for j, n in enumerate(prs):
            g[i, j] = _symplectic_loop_product(m, n, d)
    return g


def _symplectic_loop_product(m: Pairing, n: Pairing, d: int) -> int:
    fm, fn = m.partner(), n.partner()
    seen = [False] * (2 * m.k)
    total = 1
    for start in range(2 * m.k):
        if seen[start]:
            continue
        sign, edges, i, use_m = 1, 0, start, True
        while True:
            seen[i] = True
            j = fm[i] if use_m else fn[i]
            if i > j:
                sign = -sign
            edges += 1
            i, use_m = j, not use_m
            if i == start and use_m:
                break
        total *= sign * (-1) ** (edges // 2) * d
    return total


def gram_symplectic_bruteforce(k: int, d: int) -> np.ndarray:
    """Same as :func:`gram_symplectic` by explicit summation over all indices."""
    jm = symplectic_form(d)
    prs = enumerate_pairings(k)
    g = np.zeros((len(prs), len(prs)), dtype=object)
    for idx in itertools.product(range(d), repeat=2 * k):
        vals = [math.prod(int(jm[idx[a], idx[b]]) for a, b in p.pairs) for p in prs]
        if not any(vals):
            continue
        for i, vi in enumerate(vals):
            if vi:
                for j, vj in enumerate(vals):
                    if vj:
                        g[i, j] += vi * vj
    return g


def gram_inverse_residual(group: str, k: int, d: int) -> int:
    """Number of entries where ``Wg @ G`` differs from the identity (exact)."""
    if group == "u":
        w, g = wg_unitary_matrix(k, d), gram_unitary(k, d)
    elif group == "o":
        w, g = wg_orthogonal_matrix(k, d), gram_orthogonal(k, d)
    elif group == "sp":
        w, g = wg_symplectic_matrix(k, d), gram_symplectic(k, d)
    else:
        raise ValueError(f"unknown group {group!r}")
    den = _common_denominator(w.ravel())
    w_int = np.vectorize(lambda x: int(x * den), otypes=[object])(w)
    prod = _exact_matmul(w_int, g)
    target = np.identity(len(g), dtype=int).astype(object) * den
    return int(np.count_nonzero(prod != target))


# --------------------------------------------------------------------------
# Haar moments
# --------------------------------------------------------------------------


def _delta(p: Pairing, idx: Sequence[int]) -> int:
    return int(all(idx[a] == idx[b] for a, b in p.pairs))


def _delta_sp(p: Pairing, idx: Sequence[int], jm: np.ndarray) -> int:
    return math.prod(int(jm[idx[a], idx[b]]) for a, b in p.pairs)


def haar_moment(group: str, d: int, rows: Sequence[int], cols: Sequence[int],
                conj_rows: Sequence[int] = (), conj_cols: Sequence[int] = ()) -> Fraction:
    """Exact ``E[prod_s A[rows[s], cols[s]] * prod_t conj(A[conj_rows[t], conj_cols[t]])]``.

    ``group`` is ``"u"``, ``"o"`` or ``"sp"``. For O the conjugated factors are
    real and merge with the plain ones; for Sp each conjugated entry is
    rewritten through ``conj(S) = -J S J`` before applying the pairing formula.
    """
    rows, cols = list(rows), list(cols)
    conj_rows, conj_cols = list(conj_rows), list(conj_cols)
    if len(rows) != len(cols) or len(conj_rows) != len(conj_cols):
        raise ValueError("row and column index tuples must have equal length")
    if any(not 0 <= i < d for i in rows + cols + conj_rows + conj_cols):
        raise ValueError("index out of range")
    if d > MAX_D_MOMENT:
        raise ValueError(f"d must be at most {MAX_D_MOMENT}")

    if group == "u":
        k = len(rows)
        if k != len(conj_rows):
            return Fraction(0)
        if k == 0:
            return Fraction(1)
        if k > MAX_K_MOMENT:
            raise ValueError(f"k must be at most {MAX_K_MOMENT}")
        # E[U_IJ conj(U_I'J')] = sum_{s,t} delta(i_s(a) = i'_a) delta(j_t(a) = j'_a) Wg(s t^-1)
        perms = _all_permutations(k)
        row_ok = [s for s in perms if all(rows[s(a)] == conj_rows[a] for a in range(k))]
        col_ok = [t for t in perms if all(cols[t(a)] == conj_cols[a] for a in range(k))]
        return sum((wg_unitary(s * t.inverse(), d) for s in row_ok for t in col_ok), Fraction(0))

    if group == "o":
        rows, cols = rows + conj_rows, cols + conj_cols
        sign = 1
        jm = None
    elif group == "sp":
        jm = symplectic_form(d)
        partner = [int(np.nonzero(jm[i])[0][0]) for i in range(d)]
        sign = 1
        for r, c in zip(conj_rows, conj_cols):
            a, b = partner[r], partner[c]
            # conj(S)_rc = -J_ra S_ab J_bc with a, b the unique nonzero columns
            sign *= -int(jm[r, a]) * int(jm[b, c])
            rows.append(a)
            cols.append(b)
    else:
        raise ValueError(f"unknown group {group!r}")

    if len(rows) % 2:
        return Fraction(0)
    if not rows:
        return Fraction(1)
    k = len(rows) // 2
    if k > MAX_K_MOMENT:
        raise ValueError(f"k must be at most {MAX_K_MOMENT}")
    prs = enumerate_pairings(k)
    if group == "o":
        dr = [_delta(p, rows) for p in prs]
        dc = [_delta(p, cols) for p in prs]
    else:
        dr = [_delta_sp(p, rows, jm) for p in prs]
        dc = [_delta_sp(p, cols, jm) for p in prs]
    total = Fraction(0)
    for i, m in enumerate(prs):
        if not dr[i]:
            continue
        for j, n in enumerate(prs):
            if not dc[j]:
                continue
            if group == "o":
                w = wg_orthogonal(coset_type(m, n), d)
            else:
                w = wg_symplectic(m, d, n)
            total += dr[i] * dc[j] * w
    return sign * total


# --------------------------------------------------------------------------
# Asymptotic bound report
# --------------------------------------------------------------------------


def catalan_product(parts: Sequence[int]) -> int:
    return math.prod(math.factorial(2 * p - 2) // (math.factorial(p - 1) * math.factorial(p)) for p in parts)


@dataclass
class BoundRow:
    group: str
    type: tuple[int, ...]
    ratio: Fraction
    lower: float
    upper: float
    passed: bool


@dataclass
class BoundReport:
    group: str
    k: int
    d: int
    rows: list[BoundRow]
    identity_gap: Fraction
    envelope_constant: float
    in_hypothesis: bool

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


_HYPOTHESES = {
    # group: (description, predicate on (k, d) using exact arithmetic)
    "u": ("d > sqrt(6) k^(7/4)", lambda k, d: d ** 4 > 36 * k ** 7),
    "o": ("d > 12 k^(7/2)", lambda k, d: d ** 2 > 144 * k ** 7),
    "sp": ("d > 6 k^(7/2)", lambda k, d: d ** 2 > 36 * k ** 7),
}

_ENVELOPE_POWER = {"u": mpmath.mpf(7) / 2, "o": mpmath.mpf(7), "sp": mpmath.mpf(7) / 2}


def bound_hypothesis(group: str, k: int, d: int) -> tuple[str, bool]:
    text, pred = _HYPOTHESES[group]
    return text, bool(pred(k, d))


def _envelopes(group: str, k: int, d: int):
    k = mpmath.mpf(k)
    d = mpmath.mpf(d)
    k72 = k ** mpmath.mpf(3.5)
    if group == "u":
        return 1 / (1 - (k - 1) / d ** 2), 1 / (1 - 6 * k72 / d ** 2)
    if group == "o":
        return (1 - 24 * k72 / d) / (1 - 144 * k ** 7 / d ** 2), 1 / (1 - 144 * k ** 7 / d ** 2)
    h = d / 2
    return 1 / (1 - (k - 1) / h ** 2), 1 / (1 - 6 * k72 / h ** 2)


def check_wg_bounds(group: str, k: int, d: int, enforce_hypotheses: bool = True) -> BoundReport:
    """Evaluate the normalized Weingarten ratio against its two-sided envelope.

    For every cycle type (U) or coset type (O, Sp) the ratio
    ``(-1)^(k-#) d^(2k-#) Wg / prod Catalan(part - 1)`` is compared with the
    lower and upper envelopes at 60 significant digits (absolute value of Wg
    for Sp). Also reports ``|Wg(e) - d^-k|`` and the constant ``c`` with
    ``|Wg(e) - d^-k| = c k^p d^-(k+2)``.
    """
    if group not in _HYPOTHESES:
        raise ValueError(f"unknown group {group!r}")
    text, ok = bound_hypothesis(group, k, d)
    if enforce_hypotheses and not ok:
        raise HypothesisError(f"(k={k}, d={d}) violates the hypothesis {text} for group {group}")
    if group == "sp" and d % 2:
        raise HypothesisError("symplectic dimension must be even")

    with mpmath.workdps(60):
        lower, upper = _envelopes(group, k, d)
        slack = mpmath.mpf(10) ** -45
        rows = []
        for parts in partitions(k):
            if group == "u":
                wg = wg_unitary(parts, d)
            elif group == "o":
                wg = wg_orthogonal(parts, d)
            else:
                wg = abs(wg_symplectic_unsigned(parts, d))
            cycles = len(parts)
            signed = wg if group == "sp" else (-1) ** (k - cycles) * wg
            ratio = Fraction(d) ** (2 * k - cycles) * signed / catalan_product(parts)
            r = mpmath.mpf(ratio.numerator) / ratio.denominator
            passed = bool(lower - slack <= r <= upper + slack)
            rows.append(BoundRow(group, parts, ratio, float(lower), float(upper), passed))

        ident = (1,) * k
        if group == "u":
            w_e = wg_unitary(ident, d)
        elif group == "o":
            w_e = wg_orthogonal(ident, d)
        else:
            w_e = wg_symplectic_unsigned(ident, d)
        gap = abs(w_e - Fraction(1, d ** k))
        scale = mpmath.mpf(k) ** _ENVELOPE_POWER[group] * mpmath.mpf(d) ** -(k + 2)
        const = float((mpmath.mpf(gap.numerator) / gap.denominator) / scale)
    return BoundReport(group, k, d, rows, gap, const, ok)


def sum_abs_wg(group: str, k: int, d: int) -> Fraction:
    """``sum |Wg|`` over S_k (U) or over all pairings against the identity (O, Sp)."""
    if group == "u":
        return sum((abs(wg_unitary(p, d)) for p in _all_permutations(k)), Fraction(0))
    e = Pairing.identity(k)
    if group == "o":
        return sum((abs(wg_orthogonal(coset_type(e, m), d)) for m in enumerate_pairings(k)), Fraction(0))
    if group == "sp":
        return sum((abs(wg_symplectic(m, d)) for m in enumerate_pairings(k)), Fraction(0))
    raise ValueError(f"unknown group {group!r}")


def falling_factorial_ratio(d: int, k: int) -> Fraction:
    """(d-k)!/d! as an exact fraction."""
    return Fraction(1, math.prod(range(d - k + 1, d + 1)))


def double_factorial_ratio(d: int, k: int) -> Fraction:
    """(d-2k)!!/d!! as an exact fraction."""
    return Fraction(1, math.prod(range(d - 2 * k + 2, d + 1, 2)))


def rising_even_product(d: int, k: int) -> Fraction:
    """prod_{j<k} 1/(d+2j)."""
    return Fraction(1, math.prod(d + 2 * j for j in range(k)))


# --------------------------------------------------------------------------
# Symmetric subspace statistics
# --------------------------------------------------------------------------


def permanent(a: np.ndarray) -> complex:
    """Permanent by Ryser's formula (exponential time; fine for T <= 10)."""
    a = np.asarray(a)
    n = a.shape[0]
    if n == 0:
        return 1.0
    total = 0j
    for r in range(1, n + 1):
        for cols in itertools.combinations(range(n), r):
            total += (-1) ** r * np.prod(a[:, cols].sum(axis=1))
    return (-1) ** n * total


def symmetric_projector_stats(d: int, states: Sequence[np.ndarray]) -> tuple[float, float]:
    """Overlap ``sum_pi tr(pi psi_1 x ... x psi_T)`` and the purity likelihood ratio.

    The overlap of pure states equals the permanent of their Gram matrix.
    The likelihood ratio ``E_v prod_t d |<psi_t|v>|^2`` over Haar ``v`` is
    ``d^T / (d (d+1) ... (d+T-1))`` times the overlap.
    """
    psi = np.array([np.asarray(s, dtype=complex).ravel() for s in states])
    if psi.shape[1] != d:
        raise ValueError("state dimension does not match d")
    t = len(psi)
    gram = psi.conj() @ psi.T
    overlap = float(np.real(permanent(gram)))
    prefactor = float(Fraction(d ** t, math.prod(range(d, d + t))))
    return overlap, prefactor * overlap


def basis_likelihood_ratio(d: int, indices: Sequence[int]) -> Fraction:
    """Exact likelihood ratio when every state is a computational basis vector.

    The Gram matrix is then a 0/1 block matrix with permanent ``prod m_j!``
    over the multiplicities ``m_j`` of repeated indices.
    """
    t = len(indices)
    counts = {}
    for i in indices:
        counts[i] = counts.get(i, 0) + 1
    overlap = math.prod(math.factorial(c) for c in counts.values())
    return Fraction(d ** t * overlap, math.prod(range(d, d + t)))


def purity_ratio_floor(d: int, t: int) -> Fraction:
    """``d^T / (d (d+1) ... (d+T-1))``, the smallest possible likelihood ratio."""
    return Fraction(d ** t, math.prod(range(d, d + t)))
