"""Alphabets, one-hot word vectors and column-per-symbol transform matrices.

A transform sends each symbol of an input alphabet to a word of ``nu`` symbols
of an output alphabet.  The word is represented as ``nu`` concatenated one-hot
blocks, so the whole code is a 0/1 matrix whose column ``j`` is the encoding
of input symbol ``j``.  Symbols are handled by index everywhere in this module;
labels only matter when parsing mappings or printing.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import (
    AmbiguousCode,
    DuplicateSymbol,
    IndexOutOfRange,
    Infeasible,
    NoOneHotSolution,
    ShapeMismatch,
    UnknownSymbol,
    WordLengthMismatch,
)

LP_TOL = 1e-9


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple[str, ...]

    def __post_init__(self):
        symbols = tuple(str(s) for s in self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if not symbols:
            raise ValueError("alphabet must contain at least one symbol")
        seen = set()
        for s in symbols:
            if s in seen:
                raise DuplicateSymbol(f"symbol {s!r} appears more than once")
            seen.add(s)

    @property
    def size(self) -> int:
        return len(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, label: str) -> int:
        try:
            return self.symbols.index(label)
        except ValueError:
            raise UnknownSymbol(f"symbol {label!r} not in alphabet {self.symbols}") from None

    def one_hot(self, i: int) -> np.ndarray:
        if not 0 <= i < self.size:
            raise IndexOutOfRange(f"symbol index {i} outside [0, {self.size})")
        v = np.zeros(self.size, dtype=np.int8)
        v[i] = 1
        return v

    def parse_word(self, word: str | Sequence[str]) -> tuple[int, ...]:
        """Turn ``"ab"`` or ``["a", "b"]`` into symbol indices.

        A bare string is split per character, which only makes sense when
        every label is a single character.
        """
        if isinstance(word, str):
            if all(len(s) == 1 for s in self.symbols):
                parts = list(word)
            else:
                parts = [word]
        else:
            parts = list(word)
        return tuple(self.index(str(p)) for p in parts)

    def format_word(self, indices: Sequence[int]) -> str:
        sep = "" if all(len(s) == 1 for s in self.symbols) else " "
        return sep.join(self.symbols[i] for i in indices)


@dataclass(frozen=True)
class WordVector:
    """A word of ``nu`` symbol indices over an alphabet of size ``n``."""

    symbols: tuple[int, ...]
    n: int

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        if self.n < 1 or not self.symbols:
            raise ValueError("word needs n >= 1 and at least one symbol")
        for s in self.symbols:
            if not 0 <= s < self.n:
                raise IndexOutOfRange(f"symbol index {s} outside [0, {self.n})")

    @property
    def nu(self) -> int:
        return len(self.symbols)

    @property
    def vector(self) -> np.ndarray:
        v = np.zeros(self.nu * self.n, dtype=np.int8)
        for block, s in enumerate(self.symbols):
            v[block * self.n + s] = 1
        return v

    @classmethod
    def from_vector(cls, q, n: int) -> "WordVector":
        """Read back a concatenated one-hot vector; raises if any block is not one-hot."""
        q = np.asarray(q)
        if q.ndim != 1 or q.size % n:
            raise ShapeMismatch(f"vector of length {q.size} is not a whole number of blocks of {n}")
        blocks = q.reshape(-1, n)
        if not (np.isin(blocks, (0, 1)).all() and (blocks.sum(axis=1) == 1).all()):
            raise NoOneHotSolution("vector is not a concatenation of one-hot blocks")
        return cls(tuple(int(i) for i in blocks.argmax(axis=1)), n)


@dataclass(frozen=True)
class TransformMatrix:
    """Column-per-input-symbol encoding map.

    ``words[j]`` holds the output-symbol indices that input symbol ``j`` is
    sent to; ``matrix`` is the derived (nu * N_out) x N_in 0/1 array.
    """

    in_alphabet: Alphabet
    out_alphabet: Alphabet
    nu: int
    words: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        words = tuple(tuple(int(s) for s in w) for w in self.words)
        object.__setattr__(self, "words", words)
        if self.nu < 1:
            raise ValueError("nu must be a positive integer")
        if len(words) != self.in_alphabet.size:
            raise ShapeMismatch(
                f"{len(words)} words given for an input alphabet of {self.in_alphabet.size} symbols"
            )
        for j, w in enumerate(words):
            if len(w) != self.nu:
                raise WordLengthMismatch(f"word for input {j} has length {len(w)}, expected {self.nu}")
            for s in w:
                if not 0 <= s < self.out_alphabet.size:
                    raise UnknownSymbol(f"output index {s} outside alphabet of size {self.out_alphabet.size}")

    @property
    def n_in(self) -> int:
        return self.in_alphabet.size

    @property
    def n_out(self) -> int:
        return self.out_alphabet.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nu * self.n_out, self.n_in)

    @cached_property
    def matrix(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=np.int8)
        for j, w in enumerate(self.words):
            for block, s in enumerate(w):
                m[block * self.n_out + s, j] = 1
        m.setflags(write=False)
        return m

    def column(self, j: int) -> np.ndarray:
        return self.matrix[:, j]

    @property
    def role(self) -> str:
        """Agent role when the transform is applied in the encoding direction."""
        return "distributor" if self.nu > 1 else "one-to-one"


@dataclass(frozen=True)
class DecodeObjective:
    """Linear cost over output coordinates; the LP minimises ``cost . (T x)``."""

    cost: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        cost = np.asarray(self.cost, dtype=float)
        if cost.ndim != 1 or not np.isfinite(cost).all():
            raise ValueError("objective must be a finite 1-D cost vector")
        object.__setattr__(self, "cost", cost)


def identity_transform(alphabet: Alphabet) -> TransformMatrix:
    return TransformMatrix(alphabet, alphabet, 1, tuple((i,) for i in range(alphabet.size)))


def build_transform(
    in_alphabet: Alphabet,
    out_alphabet: Alphabet,
    nu: int,
    mapping: Sequence[str | Sequence[str]],
) -> TransformMatrix:
    """Build the transform that sends ``in_alphabet[j]`` to the word ``mapping[j]``."""
    if len(mapping) != in_alphabet.size:
        raise ShapeMismatch(f"mapping has {len(mapping)} entries, input alphabet has {in_alphabet.size}")
    words = []
    for j, word in enumerate(mapping):
        idx = out_alphabet.parse_word(word)
        if len(idx) != nu:
            raise WordLengthMismatch(
                f"word {word!r} for {in_alphabet.symbols[j]!r} has length {len(idx)}, expected {nu}"
            )
        words.append(idx)
    return TransformMatrix(in_alphabet, out_alphabet, nu, tuple(words))


def encode(T: TransformMatrix, r: int) -> WordVector:
    if not 0 <= r < T.n_in:
        raise IndexOutOfRange(f"input symbol index {r} outside [0, {T.n_in})")
    return WordVector(T.words[r], T.n_out)


def _as_vector(T: TransformMatrix, q) -> np.ndarray:
    if isinstance(q, WordVector):
        q = q.vector
    q = np.asarray(q, dtype=float)
    if q.shape != (T.shape[0],):
        raise ShapeMismatch(f"vector of shape {q.shape} does not fit a transform with {T.shape[0]} rows")
    return q


def decode_exact(T: TransformMatrix, q) -> int:
    """Index of the unique column equal to ``q``."""
    q = _as_vector(T, q)
    hits = np.flatnonzero((T.matrix == q[:, None]).all(axis=0))
    if hits.size == 0:
        raise NoOneHotSolution("vector matches no column of the transform")
    if hits.size > 1:
        raise AmbiguousCode(f"vector matches columns {hits.tolist()}; code is not uniquely decodable")
    return int(hits[0])


def decode_lp(T: TransformMatrix, q, obj: DecodeObjective | None = None) -> np.ndarray:
    """Minimise ``c . T x`` over ``{x >= 0, sum x = 1, T x = q}``.

    Solved by enumerating basic feasible solutions, which is exact enough for
    the tiny dense systems this is meant for (N_in <= 16).  Columns with a 1
    in a row where ``q`` is zero are forced to zero first, since every entry
    is nonnegative; for a one-hot ``q`` this leaves only matching columns.
    Raises :class:`Infeasible` when the polytope is empty.
    """
    q = _as_vector(T, q)
    A = T.matrix.astype(float)
    if obj is None or obj.cost.size == 0:
        cost = np.zeros(T.shape[0])
    else:
        cost = obj.cost
        if cost.shape != (T.shape[0],):
            raise ShapeMismatch(f"objective has length {cost.size}, expected {T.shape[0]}")
    col_cost = cost @ A

    if (q < -LP_TOL).any():
        raise Infeasible("target vector has negative entries")
    zero_rows = np.abs(q) <= LP_TOL
    keep = [j for j in range(T.n_in) if not (A[zero_rows, j] > 0).any()]
    if not keep:
        raise Infeasible("no input symbol is consistent with the target vector")

    Aeq = np.vstack([A[:, keep], np.ones((1, len(keep)))])
    b = np.append(q, 1.0)
    max_support = min(len(keep), int(np.linalg.matrix_rank(Aeq)))
    scale = max(1.0, float(np.abs(b).max()))
    any_vertex = not np.any(col_cost)

    best_x, best_val = None, np.inf
    for k in range(1, max_support + 1):
        for support in itertools.combinations(range(len(keep)), k):
            sub = Aeq[:, support]
            xs, _, rk, _ = np.linalg.lstsq(sub, b, rcond=None)
            if rk < k or np.abs(sub @ xs - b).max() > LP_TOL * scale or (xs < -LP_TOL).any():
                continue
            xs = np.where(np.abs(xs) <= LP_TOL, 0.0, xs)
            xs = xs / xs.sum()  # a unit vertex comes out as exactly 1
            x = np.zeros(T.n_in)
            x[[keep[i] for i in support]] = xs
            val = float(col_cost @ x)
            if val < best_val - LP_TOL:
                best_x, best_val = x, val
            if any_vertex:
                return best_x
    if best_x is None:
        raise Infeasible("target vector lies outside the convex hull of the codewords")
    return best_x


def rank(T: TransformMatrix | np.ndarray) -> int:
    """Exact rank via fraction-free (Bareiss) elimination on integer entries."""
    M = T.matrix if isinstance(T, TransformMatrix) else np.asarray(T)
    if M.size and not np.issubdtype(M.dtype, np.integer):
        # rationals: scale each row to integers
        rows = []
        for row in M.tolist():
            fr = [Fraction(v).limit_denominator() for v in row]
            den = math.lcm(*(v.denominator for v in fr))
            rows.append([int(v * den) for v in fr])
    else:
        rows = [[int(v) for v in row] for row in M.tolist()]
    if not rows or not rows[0]:
        return 0
    n_rows, n_cols = len(rows), len(rows[0])
    r, prev = 0, 1
    for c in range(n_cols):
        pivot = next((i for i in range(r, n_rows) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        for i in range(r + 1, n_rows):
            for k in range(c + 1, n_cols):
                rows[i][k] = (rows[i][k] * rows[r][c] - rows[i][c] * rows[r][k]) // prev
            rows[i][c] = 0
        prev = rows[r][c]
        r += 1
        if r == n_rows:
            break
    return r


def is_uniquely_decodable(T: TransformMatrix) -> bool:
    return len(set(T.words)) == len(T.words)


def compose(T1: TransformMatrix, T2: TransformMatrix) -> TransformMatrix:
    """Apply ``T1`` and then ``T2`` to every symbol of the resulting word."""
    if T1.out_alphabet != T2.in_alphabet:
        raise ShapeMismatch(
            f"T1 emits {T1.out_alphabet.symbols} but T2 reads {T2.in_alphabet.symbols}"
        )
    words = tuple(
        tuple(itertools.chain.from_iterable(T2.words[s] for s in w)) for w in T1.words
    )
    return TransformMatrix(T1.in_alphabet, T2.out_alphabet, T1.nu * T2.nu, words)


def block_rank_bound(T: TransformMatrix) -> int:
    """Upper bound on rank from the shared all-ones row sum of every block."""
    return min(T.n_in, T.nu * T.n_out - (T.nu - 1))
