"""Probability primitives for discrete token distributions.

Everything downstream (the staged sampler, the text and frame generators)
is built on the five operations in this module: temperature softmax, argmax
decoding, Shannon entropy, renormalization of truncated survivor sets, and
one-hot cross-entropy.

Conventions used throughout the package:

* All logarithms are natural, so entropies and cross-entropies are in nats.
* A distribution may cover only a *subset* of the token alphabet (a survivor
  set after truncation); ``index_map`` records the original token index of
  each retained mass.
* Ties are always broken toward the lowest original token index, so every
  operation is fully deterministic.
* All values are immutable after construction and safe to share across
  threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

# Original-token index of a mass entry.
TokenId = int

#: Absolute tolerance on "masses sum to one".
MASS_TOL = 1e-9

#: Floor applied to masses before taking logs, so logit vectors stay finite.
#: The distortion (1e-300 of probability mass) is far below every tolerance
#: used anywhere in the package.
LOGIT_FLOOR = 1e-300

#: Default 40-glyph alphabet: 26 lowercase letters, 10 digits, blank,
#: period, comma, and an end-of-sentence marker (pilcrow).
DEFAULT_SYMBOLS = "abcdefghijklmnopqrstuvwxyz0123456789 .,¶"


@dataclass(frozen=True)
class TokenAlphabet:
    """Ordered alphabet of printable single-character glyphs.

    ``symbols[i]`` is the glyph of token ``i``; ``eos_index`` marks the
    end-of-sentence token that terminates autoregressive generation.
    """

    symbols: tuple[str, ...]
    eos_index: int

    def __post_init__(self) -> None:
        if len(self.symbols) < 2:
            raise ValueError(f"alphabet needs at least 2 symbols (got {len(self.symbols)})")
        for glyph in self.symbols:
            if not (isinstance(glyph, str) and len(glyph) == 1 and glyph.isprintable()):
                raise ValueError(f"alphabet glyphs must be single printable characters (got {glyph!r})")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet glyphs must be distinct")
        if not 0 <= self.eos_index < len(self.symbols):
            raise ValueError(f"eos_index must be in [0, {len(self.symbols)}) (got {self.eos_index})")

    @property
    def size(self) -> int:
        return len(self.symbols)

    @cached_property
    def _glyph_to_id(self) -> dict[str, int]:
        return {g: i for i, g in enumerate(self.symbols)}

    def index_of(self, glyph: str) -> int | None:
        """Token index of ``glyph``, or None if it is not in the alphabet."""
        return self._glyph_to_id.get(glyph)

    @property
    def eos_glyph(self) -> str:
        return self.symbols[self.eos_index]


@lru_cache(maxsize=1)
def default_alphabet() -> TokenAlphabet:
    """The 40-token default alphabet (letters, digits, blank, '.', ',', EOS)."""
    return TokenAlphabet(tuple(DEFAULT_SYMBOLS), eos_index=39)


def as_logits(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Validate a raw score vector: 1-D, at least one entry, all finite."""
    z = np.asarray(values, dtype=np.float64)
    if z.ndim != 1 or z.size == 0:
        raise ValueError(f"logits must form a non-empty 1-D vector (got shape {z.shape})")
    if not np.all(np.isfinite(z)):
        raise ValueError("logits must be finite (no NaN or infinities)")
    return z


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ProbabilityDistribution:
    """Non-negative masses summing to one over a survivor set of tokens.

    ``index_map[i]`` is the original token index of ``masses[i]``; a full
    (untruncated) distribution has ``index_map == [0, 1, ..., D-1]``.
    """

    masses: np.ndarray
    index_map: np.ndarray

    def __post_init__(self) -> None:
        masses = np.asarray(self.masses, dtype=np.float64)
        if self.index_map is None:
            index_map = np.arange(masses.size, dtype=np.int64)
        else:
            index_map = np.asarray(self.index_map, dtype=np.int64)
        object.__setattr__(self, "masses", _freeze(masses))
        object.__setattr__(self, "index_map", _freeze(index_map))
        if masses.ndim != 1 or masses.size == 0:
            raise ValueError("distribution must hold at least one mass")
        if masses.shape != index_map.shape:
            raise ValueError("masses and index_map must have equal length")
        if np.any(masses < 0):
            raise ValueError("masses must be non-negative")
        total = float(masses.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"masses must sum to 1 within {MASS_TOL} (got {total!r})")
        if np.any(index_map < 0) or np.unique(index_map).size != index_map.size:
            raise ValueError("index_map entries must be distinct non-negative token indices")

    @classmethod
    def _unchecked(cls, masses: np.ndarray, index_map: np.ndarray) -> "ProbabilityDistribution":
        # Hot-path constructor: callers guarantee the invariants.
        self = object.__new__(cls)
        object.__setattr__(self, "masses", _freeze(masses))
        object.__setattr__(self, "index_map", _freeze(index_map))
        return self

    def __len__(self) -> int:
        return int(self.masses.size)

    def restored(self) -> "ProbabilityDistribution":
        """The same survivor set reordered to ascending original token index."""
        order = np.argsort(self.index_map)
        return ProbabilityDistribution._unchecked(self.masses[order], self.index_map[order])

    def dense(self, size: int) -> np.ndarray:
        """Expand to a length-``size`` vector with zeros on pruned tokens."""
        if size < int(self.index_map.max()) + 1:
            raise ValueError("size smaller than the largest retained token index")
        out = np.zeros(size, dtype=np.float64)
        out[self.index_map] = self.masses
        return out


def full_distribution(masses: Sequence[float] | np.ndarray) -> ProbabilityDistribution:
    """A distribution over the whole alphabet, token i at position i."""
    arr = np.asarray(masses, dtype=np.float64)
    return ProbabilityDistribution(arr, np.arange(arr.size, dtype=np.int64))


def softmax(z: Sequence[float] | np.ndarray, temperature: float) -> ProbabilityDistribution:
    """Temperature softmax: ``P_i = exp(z_i / T) / sum_j exp(z_j / T)``.

    The maximum logit is subtracted before exponentiation, which leaves the
    result unchanged but avoids overflow at small temperatures.  ``T = 0``
    is rejected here; argmax decoding is a separate operation
    (:func:`argmax_onehot`), selected by the sampler when configured with
    zero temperature.
    """
    z = as_logits(z)
    if temperature <= 0:
        raise ValueError(f"temperature must be > 0 for softmax (got {temperature!r}); T = 0 means argmax mode")
    e = np.exp((z - z.max()) / temperature)
    p = e / e.sum()
    return ProbabilityDistribution._unchecked(p, np.arange(p.size, dtype=np.int64))


def argmax_onehot(dist: ProbabilityDistribution) -> TokenId:
    """Index of the most probable token; ties go to the lowest original index."""
    masses = dist.masses
    if masses.size == 0:
        raise ValueError("cannot take the argmax of an empty distribution")
    best = np.flatnonzero(masses == masses.max())
    return int(dist.index_map[best].min())


def entropy(dist: ProbabilityDistribution) -> float:
    """Shannon entropy ``H = -sum_i P_i ln P_i`` in nats, with 0 ln 0 = 0."""
    p = dist.masses
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * np.log(p), 0.0)
    return float(-terms.sum())


def renormalize(
    masses: Sequence[float] | np.ndarray,
    index_map: Sequence[int] | np.ndarray | None = None,
) -> ProbabilityDistribution:
    """Divide survivor masses by their total so they sum to one again.

    ``index_map`` is carried through unchanged (defaults to 0..n-1).
    Raises ValueError on an empty or all-zero survivor set; the sampling
    pipeline can never produce one (see the survivor guarantee).
    """
    m = np.asarray(masses, dtype=np.float64)
    if m.ndim != 1 or m.size == 0:
        raise ValueError("survivor set must hold at least one mass")
    if np.any(m < 0):
        raise ValueError("masses must be non-negative")
    total = float(m.sum())
    if total <= 0.0:
        raise ValueError("degenerate survivor set: no strictly positive mass to renormalize")
    if index_map is None:
        idx = np.arange(m.size, dtype=np.int64)
    else:
        idx = np.asarray(index_map, dtype=np.int64)
    return ProbabilityDistribution(m / total, idx)


def logits_from_masses(masses: Sequence[float] | np.ndarray) -> np.ndarray:
    """Log of a mass vector, floored at :data:`LOGIT_FLOOR` so entries stay finite.

    ``softmax(logits_from_masses(p), 1)`` reproduces a normalized ``p``
    within 1e-9 even when ``p`` contains exact zeros.
    """
    return np.log(np.maximum(np.asarray(masses, dtype=np.float64), LOGIT_FLOOR))


def cross_entropy(dist: ProbabilityDistribution, target_index: TokenId) -> float:
    """Cross-entropy ``-ln P[target]`` against a one-hot target, in nats.

    Because the target is one-hot, this equals the KL divergence from the
    target to ``dist``.  A pruned or zero-mass target yields ``float('inf')``
    (a documented sentinel so diagnostic sweeps never abort).
    """
    if target_index < 0:
        raise ValueError(f"target index must be non-negative (got {target_index})")
    pos = np.flatnonzero(dist.index_map == target_index)
    if pos.size == 0:
        return float("inf")
    p = float(dist.masses[pos[0]])
    if p <= 0.0:
        return float("inf")
    return float(-np.log(p))
