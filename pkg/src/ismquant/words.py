"""Finite words over a fixed alphabet, and antichains in the prefix order.

A word addresses a cylinder of a recursively defined set: symbol ``h``
selects which contraction is applied at depth ``h``.  The empty word is
the root.  Antichains of words act as cut sets of the symbol tree; a
maximal antichain meets every infinite branch exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass

#: Hard cap on word length.  Constructions that would descend past this
#: depth raise :class:`DepthCapExceeded` instead of recursing forever.
MAX_DEPTH = 64


class DepthCapExceeded(RuntimeError):
    """A word or tree descent exceeded the configured depth cap."""


class CardinalityCapExceeded(RuntimeError):
    """An enumeration grew past its configured cardinality cap."""


class AlphabetMismatch(ValueError):
    """Operands address different alphabets."""


@dataclass(frozen=True, slots=True)
class Word:
    """An element of the free monoid on symbols ``1..alphabet_size``."""

    alphabet_size: int
    symbols: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.alphabet_size < 1:
            raise ValueError(f"alphabet_size must be >= 1, got {self.alphabet_size}")
        if len(self.symbols) > MAX_DEPTH:
            raise DepthCapExceeded(
                f"word of length {len(self.symbols)} exceeds MAX_DEPTH={MAX_DEPTH}"
            )
        for s in self.symbols:
            if not isinstance(s, int) or not 1 <= s <= self.alphabet_size:
                raise ValueError(
                    f"symbol {s!r} outside alphabet 1..{self.alphabet_size}"
                )

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def is_empty(self) -> bool:
        return not self.symbols


def empty_word(alphabet_size: int) -> Word:
    return Word(alphabet_size, ())


def concat(a: Word, b: Word) -> Word:
    """Concatenation ``a * b``; both words must share an alphabet."""
    if a.alphabet_size != b.alphabet_size:
        raise AlphabetMismatch(
            f"cannot concatenate words over alphabets of size "
            f"{a.alphabet_size} and {b.alphabet_size}"
        )
    return Word(a.alphabet_size, a.symbols + b.symbols)


def prefix(w: Word, h: int) -> Word:
    """The first ``h`` symbols of ``w``.  Requires ``0 <= h <= len(w)``."""
    if not 0 <= h <= len(w):
        raise ValueError(f"prefix length {h} outside [0, {len(w)}]")
    return Word(w.alphabet_size, w.symbols[:h])


def drop_prefix(w: Word, h: int) -> Word:
    """Remainder of ``w`` after its first ``h`` symbols."""
    if not 0 <= h <= len(w):
        raise ValueError(f"prefix length {h} outside [0, {len(w)}]")
    return Word(w.alphabet_size, w.symbols[h:])


def parent(w: Word) -> Word:
    """``w`` with its last symbol removed.  Errors on the empty word."""
    if w.is_empty:
        raise ValueError("the empty word has no parent")
    return Word(w.alphabet_size, w.symbols[:-1])


def is_predecessor(a: Word, b: Word) -> bool:
    """True iff ``a`` is a (not necessarily proper) prefix of ``b``."""
    if a.alphabet_size != b.alphabet_size:
        raise AlphabetMismatch("words over different alphabets are incomparable")
    return len(a) <= len(b) and b.symbols[: len(a)] == a.symbols


def format_word(w: Word) -> str:
    """Dot-joined symbol text, e.g. ``"1.2.2"``; the empty word is ``""``."""
    return ".".join(str(s) for s in w.symbols)


def parse_word(text: str, alphabet_size: int) -> Word:
    if text == "":
        return empty_word(alphabet_size)
    try:
        syms = tuple(int(part) for part in text.split("."))
    except ValueError as exc:
        raise ValueError(f"malformed word text {text!r}") from exc
    return Word(alphabet_size, syms)


@dataclass(frozen=True)
class AntichainSet:
    """A finite set of pairwise prefix-incomparable words.

    Members are normalized to lexicographic order so that downstream
    output (codebooks, serialized tables) is reproducible.
    """

    alphabet_size: int
    members: tuple[Word, ...]

    def __post_init__(self) -> None:
        for w in self.members:
            if w.alphabet_size != self.alphabet_size:
                raise AlphabetMismatch(
                    "antichain member alphabet differs from the set alphabet"
                )
        ordered = tuple(sorted(self.members, key=lambda w: w.symbols))
        if len({w.symbols for w in ordered}) != len(ordered):
            raise ValueError("duplicate words in antichain")
        object.__setattr__(self, "members", ordered)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, w: Word) -> bool:
        return any(w.symbols == m.symbols for m in self.members)

    def max_length(self) -> int:
        if not self.members:
            raise ValueError("empty antichain has no maximal length")
        return max(len(w) for w in self.members)


def verify_maximal_antichain(ac: AntichainSet) -> bool:
    """Check that ``ac`` is an antichain covering every branch of the tree.

    Two conditions, both decided exactly:

    * no member is a proper prefix of another member;
    * every word of length ``L = max member length`` passes through a
      member (equivalent to maximality).  Checked by a depth-first
      descent from the root that prunes as soon as a member is reached,
      so the cost is proportional to the tree above the antichain rather
      than to ``alphabet_size ** L``.
    """
    if not ac.members:
        return False
    table = {w.symbols for w in ac.members}
    for syms in table:
        for h in range(len(syms)):
            if syms[:h] in table:
                return False
    depth = ac.max_length()
    stack: list[tuple[int, ...]] = [()]
    while stack:
        node = stack.pop()
        if node in table:
            continue
        if len(node) == depth:
            return False
        stack.extend(node + (s,) for s in range(1, ac.alphabet_size + 1))
    return True
