"""Words A^m1 B^n1 ... over a generator pair, and their evaluation."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import WordOverflow, WordTooLong

MAX_LETTERS = 1_000_000
OVERFLOW_NORM = 1e150

GENERATORS = ("A", "B")


@dataclass(frozen=True)
class Word:
    """Alternating run-length form: ((gen, exponent), ...), exponents >= 1."""
    letters: tuple = ()

    def __post_init__(self):
        merged: list[list] = []
        for gen, exp in self.letters:
            if gen not in GENERATORS:
                raise ValueError(f"unknown generator {gen!r}")
            exp = int(exp)
            if exp < 0:
                raise ValueError("exponents must be non-negative")
            if exp == 0:
                continue
            if merged and merged[-1][0] == gen:
                merged[-1][1] += exp
            else:
                merged.append([gen, exp])
        if len(merged) > MAX_LETTERS:
            raise WordTooLong(f"{len(merged)} letters exceeds cap {MAX_LETTERS}")
        object.__setattr__(self, "letters", tuple((g, e) for g, e in merged))

    @classmethod
    def parse(cls, text: str) -> "Word":
        """Parse strings like ``"A B A^3 B A"`` or ``"ABA3BA"``."""
        toks = re.findall(r"([AB])\s*\^?\s*(\d*)", text.replace("*", " "))
        if not toks and text.strip():
            raise ValueError(f"cannot parse word {text!r}")
        return cls(tuple((g, int(e) if e else 1) for g, e in toks))

    @classmethod
    def of(cls, *letters) -> "Word":
        return cls(tuple(letters))

    def __add__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def __mul__(self, k: int) -> "Word":
        return Word(self.letters * int(k))

    __rmul__ = __mul__

    def __len__(self) -> int:
        """Number of generator factors (sum of exponents)."""
        return sum(e for _, e in self.letters)

    @property
    def num_letters(self) -> int:
        return len(self.letters)

    def count(self, gen: str) -> int:
        return sum(e for g, e in self.letters if g == gen)

    def substitute(self, mapping: dict) -> "Word":
        """Replace each generator by a word (a semigroup homomorphism)."""
        out = []
        for g, e in self.letters:
            out.extend(mapping[g].letters * e)
        return Word(tuple(out))

    def sort_key(self):
        return self.letters

    def __str__(self):
        if not self.letters:
            return "1"
        return " ".join(g if e == 1 else f"{g}^{e}" for g, e in self.letters)

    def to_json(self) -> dict:
        return {"letters": [[g, e] for g, e in self.letters]}

    @classmethod
    def from_json(cls, obj) -> "Word":
        return cls(tuple((g, int(e)) for g, e in obj["letters"]))


def matrix_power(M, k: int):
    """M**k by repeated squaring, with the overflow guard applied."""
    result = None
    base = M
    while k:
        if k & 1:
            result = base if result is None else result @ base
            _guard(result)
        k >>= 1
        if k:
            base = base @ base
            _guard(base)
    return np.eye(M.shape[0], dtype=M.dtype) if result is None else result


def _guard(M):
    nrm = np.linalg.norm(M)
    if not np.isfinite(nrm) or nrm > OVERFLOW_NORM:
        raise WordOverflow(f"intermediate norm {nrm:.3e} exceeds {OVERFLOW_NORM:g}")


def evaluate_word(w: Word, pair) -> np.ndarray:
    """Left fold of the letters; ``pair`` is a GeneratorPair or an (A, B) tuple."""
    A, B = (pair.A, pair.B) if hasattr(pair, "A") else pair
    mats = {"A": np.asarray(A), "B": np.asarray(B)}
    dtype = np.result_type(mats["A"], mats["B"])
    out = np.eye(mats["A"].shape[0], dtype=dtype)
    cache: dict = {}
    for g, e in w.letters:
        key = (g, e)
        if key not in cache:
            try:
                cache[key] = matrix_power(mats[g], e)
            except WordOverflow:
                # the isolated power is huge but the running product may not be
                cache[key] = None
        if cache[key] is None:
            for _ in range(e):
                out = out @ mats[g]
                _guard(out)
        else:
            out = out @ cache[key]
            _guard(out)
    return out


def all_words(length: int) -> Iterable[Word]:
    """Every word with exactly ``length`` generator factors (2**length of them)."""
    for bits in range(2 ** length):
        yield Word(tuple(("B" if (bits >> i) & 1 else "A", 1) for i in range(length)))
