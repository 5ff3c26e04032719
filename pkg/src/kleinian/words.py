"""Words in a product of n free groups F_2, and their plane itineraries.

Each factor j carries two generators: a_j (gen index 0) and b_j (gen index
1).  Letters of different factors commute; letters of one factor generate a
free group.  The normal form sorts each element into an n-tuple of reduced
free words, serialized factor 1 first.

Token syntax is `<gen><factor><sign>`: a1+ b2- etc., whitespace separated.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .errors import DepthTooLarge, EmptyWord

GEN_CHARS = "ab"


@dataclass(frozen=True, order=True)
class Letter:
    """One generator or its inverse: factor (1-based), gen in {0,1}, sign."""

    factor: int
    gen: int
    sign: int

    def __post_init__(self):
        if self.factor < 1:
            raise ValueError(f"factor {self.factor} out of range")
        if self.gen not in (0, 1) or self.sign not in (-1, 1):
            raise ValueError("gen must be 0/1 and sign must be +-1")

    def inverse(self) -> "Letter":
        return Letter(self.factor, self.gen, -self.sign)

    @property
    def token(self) -> str:
        return f"{GEN_CHARS[self.gen]}{self.factor}{'+' if self.sign > 0 else '-'}"

    def sort_key(self) -> tuple:
        return (self.factor, self.gen, 0 if self.sign > 0 else 1)


@dataclass(frozen=True)
class Word:
    letters: tuple[Letter, ...] = ()

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return " ".join(l.token for l in self.letters) if self.letters else "<e>"

    def inverse(self) -> "Word":
        return Word(tuple(l.inverse() for l in reversed(self.letters)))

    def concat(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)


@dataclass(frozen=True)
class Syllable:
    """A maximal run of letters sharing one junction plane."""

    plane: tuple[int, ...]
    letters: tuple[Letter, ...]

    @property
    def label(self) -> str:
        return "".join(str(b) for b in self.plane)


@dataclass(frozen=True)
class Itinerary:
    syllables: tuple[Syllable, ...]

    def __len__(self) -> int:
        return len(self.syllables)


def parse_word(text: str) -> Word:
    """Parse whitespace-separated tokens like `a1+ b2-` into a Word."""
    letters = []
    for tok in text.split():
        if len(tok) < 3 or tok[0] not in GEN_CHARS or tok[-1] not in "+-":
            raise ValueError(f"bad token {tok!r}")
        try:
            factor = int(tok[1:-1])
        except ValueError:
            raise ValueError(f"bad token {tok!r}") from None
        letters.append(Letter(factor, GEN_CHARS.index(tok[0]), 1 if tok[-1] == "+" else -1))
    return Word(tuple(letters))


def _free_reduce(seq: list[Letter]) -> list[Letter]:
    out: list[Letter] = []
    for l in seq:
        if out and out[-1].factor == l.factor and out[-1].gen == l.gen \
                and out[-1].sign == -l.sign:
            out.pop()
        else:
            out.append(l)
    return out


def reduce(w: Word) -> Word:
    """Normal form: per-factor free reduction, factors re-serialized in order.

    This is a normal form for the abstract group only.  The letters commute
    across factors in the group, but the realized translations along
    orthogonal axes through one point do not commute as matrices, so no
    isometry-level identity is implied between w and reduce(w).
    """
    factors: dict[int, list[Letter]] = {}
    for l in w.letters:
        factors.setdefault(l.factor, []).append(l)
    out: list[Letter] = []
    for j in sorted(factors):
        out.extend(_free_reduce(factors[j]))
    return Word(tuple(out))


def is_reduced(w: Word) -> bool:
    return reduce(w) == w


def word_to_itinerary(w: Word, c) -> Itinerary:
    """Greedy maximal-run decomposition of w into single-plane syllables.

    A letter (j, s) fits plane b iff b_j = s.  Runs extend while some plane
    admits every letter seen; ties among admissible planes are broken toward
    the lexicographically smallest bit-string (unpinned factors get 0).
    Consecutive syllables automatically differ in plane: a split only
    happens when a factor's pin flips.
    """
    n = c.n
    if not w.letters:
        raise EmptyWord("cannot build an itinerary for the empty word")
    syllables: list[Syllable] = []
    run: list[Letter] = []
    pins: dict[int, int] = {}

    def close():
        plane = tuple(pins.get(j, 0) for j in range(1, n + 1))
        syllables.append(Syllable(plane, tuple(run)))

    for l in w.letters:
        if l.factor > n:
            raise ValueError(f"letter {l.token} outside factor range 1..{n}")
        if run and pins.get(l.factor, l.gen) != l.gen:
            close()
            run = []
            pins = {}
        run.append(l)
        pins[l.factor] = l.gen
    close()
    return Itinerary(tuple(syllables))


def itinerary_word(it: Itinerary) -> Word:
    return Word(tuple(l for s in it.syllables for l in s.letters))


def count_reduced(n: int, depth: int) -> int:
    """Number of reduced words of length <= depth in n commuting F_2 factors."""
    # per-factor counts by length: 1, 4, 4*3, 4*3^2, ...
    per = [1] + [4 * 3 ** (k - 1) for k in range(1, depth + 1)]
    total = [1] + [0] * depth  # polynomial product over factors, truncated
    for _ in range(n):
        nxt = [0] * (depth + 1)
        for i, t in enumerate(total):
            for k in range(0, depth + 1 - i):
                nxt[i + k] += t * per[k]
        total = nxt
    return sum(total)


def _factor_words(j: int, length: int) -> list[tuple[Letter, ...]]:
    """All reduced words of exact given length in factor j, lex order."""
    if length == 0:
        return [()]
    alphabet = [Letter(j, g, s) for g in (0, 1) for s in (1, -1)]
    out: list[tuple[Letter, ...]] = []

    def grow(prefix: list[Letter]):
        if len(prefix) == length:
            out.append(tuple(prefix))
            return
        for l in alphabet:
            if prefix and prefix[-1].gen == l.gen and prefix[-1].sign == -l.sign:
                continue
            prefix.append(l)
            grow(prefix)
            prefix.pop()

    grow([])
    return out


def enumerate_reduced(n: int, depth: int, cap: int = 10 ** 6) -> list[Word]:
    """All normal-form words of length <= depth, in shortlex order.

    Raises DepthTooLarge before materializing anything if the count would
    exceed the cap.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    total = count_reduced(n, depth)
    if total > cap:
        raise DepthTooLarge(f"{total} words at depth {depth} exceeds cap {cap}")
    by_len: dict[int, dict[int, list[tuple[Letter, ...]]]] = {
        j: {k: _factor_words(j, k) for k in range(depth + 1)}
        for j in range(1, n + 1)
    }
    words: list[Word] = []
    for lengths in product(range(depth + 1), repeat=n):
        if sum(lengths) > depth:
            continue
        pools = [by_len[j + 1][lengths[j]] for j in range(n)]
        for combo in product(*pools):
            words.append(Word(tuple(l for part in combo for l in part)))
    words.sort(key=lambda w: (len(w.letters), [l.sort_key() for l in w.letters]))
    return words
