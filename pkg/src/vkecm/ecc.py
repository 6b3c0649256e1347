"""Syndrome error correction over GF(2): seeded random parity-check codes,
syndrome computation, and exact bounded-weight minimum-distance decoding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .qcore import ParameterError


def binary_entropy(q: float) -> float:
    """h2(q) in bits, with the usual h2(0) = h2(1) = 0 convention."""
    if not 0.0 <= q <= 1.0:
        raise ParameterError(f"binary entropy argument {q} outside [0, 1]")
    if q in (0.0, 1.0):
        return 0.0
    return float(-q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q))


def syndrome_length(xi: float, gamma: float, alpha: float, q: float, l: int) -> int:
    """ceil(xi (1-gamma)(1-alpha) h2(q) l) parity bits."""
    return math.ceil(xi * (1.0 - gamma) * (1.0 - alpha) * binary_entropy(q) * l)


@dataclass
class LinearCode:
    """Uniformly random parity-check matrix, reproducible from (l, n_syn, seed)."""

    l: int
    n_syn: int
    seed: int
    t_max: int = 4
    parity_matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_syn < 0 or self.l <= 0:
            raise ParameterError("code needs l > 0 and n_syn >= 0")
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed)))
        self.parity_matrix = rng.integers(0, 2, size=(self.n_syn, self.l), dtype=np.uint8)
        self._col_keys = [self._pack(self.parity_matrix[:, i]) for i in range(self.l)]
        self._single_index: dict[bytes, list[int]] | None = None
        self._pair_index: dict[bytes, list[tuple[int, int]]] | None = None

    @staticmethod
    def _pack(bits: np.ndarray) -> bytes:
        return np.packbits(bits.astype(np.uint8)).tobytes()

    def syndrome(self, word: np.ndarray) -> np.ndarray:
        word = np.asarray(word, dtype=np.uint8)
        if word.shape != (self.l,):
            raise ParameterError(f"word length {word.shape} != ({self.l},)")
        return (self.parity_matrix @ word) % 2

    def _ensure_single_index(self):
        if self._single_index is None:
            index: dict[bytes, list[int]] = {}
            for i, key in enumerate(self._col_keys):
                index.setdefault(key, []).append(i)
            self._single_index = index

    def _ensure_pair_index(self):
        if self._pair_index is None:
            index: dict[bytes, list[tuple[int, int]]] = {}
            cols = self.parity_matrix.T.astype(np.uint8)
            for i in range(self.l):
                xors = np.bitwise_xor(cols[i + 1 :], cols[i])
                packed = np.packbits(xors, axis=1) if self.n_syn else np.zeros((len(xors), 0), dtype=np.uint8)
                for off, row in enumerate(packed):
                    index.setdefault(row.tobytes(), []).append((i, i + 1 + off))
            self._pair_index = index


def compute_syndrome(code: LinearCode, word: np.ndarray) -> np.ndarray:
    return code.syndrome(word)


def decode_guess(
    code: LinearCode,
    received: np.ndarray,
    syn_target: np.ndarray,
    support: np.ndarray | None = None,
):
    """Guess the transmitted word from ``received`` and its intended syndrome.

    Searches for the minimum-weight error pattern e with H (received ^ e) =
    syn_target, weight at most t_max, breaking weight ties lexicographically by
    support; returns received ^ e, or None when no pattern qualifies. An
    optional boolean ``support`` restricts candidate flips to known-noisy
    positions (positions zeroed on both sides by construction cannot differ).
    """
    received = np.asarray(received, dtype=np.uint8)
    syn_target = np.asarray(syn_target, dtype=np.uint8)
    if received.shape != (code.l,) or syn_target.shape != (code.n_syn,):
        raise ParameterError("length mismatch between word, syndrome and code")
    deficit = (code.syndrome(received) ^ syn_target).astype(np.uint8)
    allowed = np.ones(code.l, dtype=bool) if support is None else np.asarray(support, dtype=bool)
    support_set = set(np.flatnonzero(allowed).tolist())

    flips = _search_error(code, deficit, support_set)
    if flips is None:
        return None
    guess = received.copy()
    for i in flips:
        guess[i] ^= 1
    return guess


def _search_error(code: LinearCode, deficit: np.ndarray, support: set[int]):
    """Minimum-weight support of e with H e = deficit, lexicographic tie-break."""
    target = code._pack(deficit)
    zero = code._pack(np.zeros(code.n_syn, dtype=np.uint8))
    if target == zero:
        return ()
    if code.t_max < 1:
        return None

    code._ensure_single_index()
    singles = [i for i in code._single_index.get(target, ()) if i in support]
    if singles:
        return (min(singles),)
    if code.t_max < 2:
        return None

    code._ensure_pair_index()

    def pairs_matching(key: bytes, lo: int):
        for i, j in code._pair_index.get(key, ()):
            if i > lo and j > lo and i in support and j in support:
                yield i, j

    best = min(pairs_matching(target, -1), default=None)
    if best is not None:
        return best
    # Heavier weights: fix a lexicographically ordered prefix, close with the
    # pair index (weight w searches prefixes of weight w - 2).
    cols = code._col_keys
    ordered = sorted(support)
    for weight in range(3, code.t_max + 1):
        for prefix in combinations(ordered, weight - 2):
            key = target
            for i in prefix:
                key = bytes(a ^ b for a, b in zip(key, cols[i]))
            pair = min(pairs_matching(key, prefix[-1]), default=None)
            if pair is not None:
                return prefix + pair
    return None
