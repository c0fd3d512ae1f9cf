"""Reduced words in a free group and their evaluation at map tuples.

Words are stored as runs of (letter index, nonzero exponent) with adjacent
runs on distinct letters.  Large powers are everywhere first-class: the
paper-scale constructions conjugate by huge powers, so evaluation raises
letters to powers by repeated squaring of map composition, with the
resampling tolerance of every composition tracked on the resulting map.

Convention: the leftmost letter is applied last, w = l1 l2 ... lk acts as
w(x) = l1(l2(...lk(x)...)).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from . import map_core
from .map_core import DEFAULT_KNOT_BUDGET, Homeo1D

__all__ = [
    "FreeWord",
    "reduce_runs",
    "word",
    "empty_word",
    "letter",
    "concat",
    "inverse",
    "word_power",
    "commutator",
    "conjugate",
    "substitute",
    "enumerate_reduced",
    "count_reduced",
    "evaluate",
    "apply_word",
    "apply_word_with_deriv",
    "parse_word",
    "format_word",
    "EnumerationBudgetError",
]


class EnumerationBudgetError(ValueError):
    """Requested enumeration exceeds the word-count budget."""


@dataclass(frozen=True)
class FreeWord:
    """Reduced word; runs are ((letter, exponent), ...) with exponent != 0."""

    runs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for (a, e) in self.runs:
            if e == 0:
                raise ValueError("zero exponent run")
        for (a, _), (b, _) in zip(self.runs, self.runs[1:]):
            if a == b:
                raise ValueError("unreduced adjacent runs")

    @property
    def length(self) -> int:
        return sum(abs(e) for _, e in self.runs)

    def is_empty(self) -> bool:
        return not self.runs

    def __mul__(self, other: "FreeWord") -> "FreeWord":
        return concat(self, other)

    def __invert__(self) -> "FreeWord":
        return inverse(self)

    def __pow__(self, n: int) -> "FreeWord":
        return word_power(self, n)

    def __str__(self) -> str:
        return format_word(self)


def reduce_runs(runs: Iterable[tuple[int, int]]) -> FreeWord:
    """Canonical reduced form; idempotent."""
    stack: list[list[int]] = []
    for a, e in runs:
        if e == 0:
            continue
        if stack and stack[-1][0] == a:
            stack[-1][1] += e
            if stack[-1][1] == 0:
                stack.pop()
        else:
            stack.append([a, e])
    return FreeWord(tuple((a, e) for a, e in stack))


def word(*runs: tuple[int, int]) -> FreeWord:
    return reduce_runs(runs)


def empty_word() -> FreeWord:
    return FreeWord(())


def letter(i: int, exponent: int = 1) -> FreeWord:
    return reduce_runs([(i, exponent)])


def concat(*words: FreeWord) -> FreeWord:
    runs: list[tuple[int, int]] = []
    for w in words:
        runs.extend(w.runs)
    return reduce_runs(runs)


def inverse(w: FreeWord) -> FreeWord:
    return FreeWord(tuple((a, -e) for a, e in reversed(w.runs)))


def word_power(w: FreeWord, n: int) -> FreeWord:
    if n == 0:
        return empty_word()
    base = w if n > 0 else inverse(w)
    return reduce_runs([run for _ in range(abs(n)) for run in base.runs])


def commutator(w1: FreeWord, w2: FreeWord) -> FreeWord:
    """[w1, w2] = w1 w2 w1^-1 w2^-1, reduced."""
    return concat(w1, w2, inverse(w1), inverse(w2))


def conjugate(w: FreeWord, by: FreeWord) -> FreeWord:
    """by w by^-1, reduced."""
    return concat(by, w, inverse(by))


def substitute(w: FreeWord, table: dict[int, FreeWord]) -> FreeWord:
    """Replace each letter by a word (identity substitution if absent)."""
    runs: list[tuple[int, int]] = []
    for a, e in w.runs:
        if a in table:
            runs.extend(word_power(table[a], e).runs)
        else:
            runs.append((a, e))
    return reduce_runs(runs)


# ---------------------------------------------------------------------------
# enumeration


def count_reduced(n_letters: int, max_length: int) -> int:
    """Number of nonempty reduced words of length <= max_length."""
    total = 0
    per = 2 * n_letters
    for k in range(1, max_length + 1):
        total += per * (per - 1) ** (k - 1) if k > 1 else per
    return total


def enumerate_reduced(
    n_letters: int, max_length: int, budget: int = 10_000_000
) -> Iterator[FreeWord]:
    """Every nonempty reduced word of length <= max_length, exactly once.

    Words are produced in length order.  Raises EnumerationBudgetError up
    front if the closed-form count exceeds ``budget``.
    """
    if n_letters < 1 or max_length < 1:
        raise ValueError("need n_letters >= 1 and max_length >= 1")
    total = count_reduced(n_letters, max_length)
    if total > budget:
        raise EnumerationBudgetError(
            f"{total} reduced words (sum over k of 2n(2n-1)^(k-1) with n={n_letters}, "
            f"L={max_length}) exceeds budget {budget}"
        )
    gens = [(i, +1) for i in range(n_letters)] + [(i, -1) for i in range(n_letters)]

    def extend(seq: list[tuple[int, int]]) -> Iterator[list[tuple[int, int]]]:
        for g in gens:
            if seq and seq[-1][0] == g[0] and seq[-1][1] == -g[1]:
                continue
            yield seq + [g]

    frontier: list[list[tuple[int, int]]] = [[]]
    for _ in range(max_length):
        nxt: list[list[tuple[int, int]]] = []
        for seq in frontier:
            for new in extend(seq):
                yield reduce_runs(new)
                nxt.append(new)
        frontier = nxt


# ---------------------------------------------------------------------------
# evaluation at tuples of maps

# Maps are duck-typed through an "ops" adapter so circle maps can reuse this
# engine; the default adapter handles Homeo1D.


class IntervalOps:
    identity = staticmethod(map_core.identity)
    compose = staticmethod(
        lambda f, g, budget: map_core.compose(f, g, budget=budget, on_budget="resample")
    )
    invert = staticmethod(map_core.invert)


def evaluate(
    w: FreeWord,
    gens: Sequence,
    budget: int = DEFAULT_KNOT_BUDGET,
    ops=IntervalOps,
):
    """Evaluate the word at a generator tuple; empty word gives the identity.

    Letter powers are computed by repeated squaring of composition so that
    paper-scale exponents stay cheap; every lossy composition accumulates its
    measured tolerance on the result map.
    """
    for a, _ in w.runs:
        if a < 0 or a >= len(gens):
            raise IndexError(f"letter {a} out of range for {len(gens)} generators")
    result = ops.identity()
    for a, e in reversed(w.runs):
        p = _map_power(gens[a], e, budget, ops)
        result = ops.compose(p, result, budget)
    return result


def _map_power(m, n: int, budget: int, ops):
    if n == 0:
        return ops.identity()
    base = m if n > 0 else ops.invert(m)
    n = abs(n)
    result = None
    while n:
        if n & 1:
            result = base if result is None else ops.compose(result, base, budget)
        n >>= 1
        if n:
            base = ops.compose(base, base, budget)
    return result


def apply_word(w: FreeWord, gens: Sequence[Homeo1D], x):
    """Pointwise-exact action of the word on points (no interpolation loss).

    Applies letters right to left by repeated evaluation, so each letter power
    costs |exponent| vectorized evaluations.  Independent of ``evaluate`` and
    usable as an oracle for it.
    """
    import numpy as np

    y = np.atleast_1d(np.asarray(x, dtype=float))
    for a, e in reversed(w.runs):
        g = gens[a]
        for _ in range(abs(e)):
            y = map_core.eval_map(g, y) if e > 0 else map_core.eval_inverse(g, y)
    return float(y[0]) if np.isscalar(x) else y


def apply_word_with_deriv(w: FreeWord, gens: Sequence[Homeo1D], x):
    """Pointwise word action plus chain-rule derivative along the orbit."""
    import numpy as np

    y = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    dy = np.ones_like(y)
    for a, e in reversed(w.runs):
        g = gens[a]
        for _ in range(abs(e)):
            if e > 0:
                dy *= map_core.deriv(g, y)
                y = map_core.eval_map(g, y)
            else:
                y = map_core.eval_inverse(g, y)
                dy /= map_core.deriv(g, y)
    return y, dy


# ---------------------------------------------------------------------------
# text format: letter id + signed exponent, e.g. "a2 b-1 c-3"; an uppercase
# letter negates the exponent on parse ("B1" == "b-1")


def format_word(w: FreeWord) -> str:
    if w.is_empty():
        return "e"
    parts = []
    for a, e in w.runs:
        if a >= 26:
            raise ValueError("text format supports at most 26 letters")
        parts.append(f"{chr(ord('a') + a)}{e}")
    return " ".join(parts)


def parse_word(text: str) -> FreeWord:
    text = text.strip()
    if text in ("", "e"):
        return empty_word()
    runs = []
    for tok in text.split():
        ch = tok[0]
        if not ch.isalpha():
            raise ValueError(f"bad word token {tok!r}")
        body = tok[1:] or "1"
        e = int(body)
        if ch.isupper():
            e = -e
        runs.append((ord(ch.lower()) - ord("a"), e))
    return reduce_runs(runs)
