"""The staged sampling pipeline: sort, top-k, top-p, min-p, seeded draw.

Stage order is fixed: temperature softmax, sort descending, top-k,
renormalize, top-p, renormalize, min-p, renormalize, restore original token
order, inverse-CDF draw.  Every truncation stage is followed by a
renormalization (including min-p, before the draw), and every stage's
survivor set is recorded in a :class:`SampleTrace`.

Two semantic points that differ between samplers in the wild and are pinned
here:

* **Top-p crossing entry is included**: the shortest prefix whose cumulative
  mass reaches ``top_p`` survives, *including* the entry that crosses the
  threshold.  Kept mass is therefore always >= ``top_p`` and at least one
  token always survives.
* **Min-p is an absolute floor**, not relative to the maximum mass: a token
  survives iff its (renormalized, post-top-p) mass is >= ``min_p``.  If no
  token qualifies, the single largest entry is kept (survivor guarantee).

``temperature = 0`` is accepted in :class:`SamplerConfig` and means argmax
mode: the pipeline is bypassed and the most probable token under
``softmax(z, 1)`` is returned deterministically.

Randomness comes from :class:`RandomStream`, a Philox (4x64)
counter-based generator.  The algorithm identity is part of the external
contract: a given seed yields the identical uniform sequence on every
platform and in every run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .probcore import (
    ProbabilityDistribution,
    TokenId,
    argmax_onehot,
    as_logits,
    softmax,
)

STAGE_SOFTMAX = "after-softmax"
STAGE_TOP_K = "after-top-k"
STAGE_TOP_P = "after-top-p"
STAGE_MIN_P = "after-min-p"

#: Stage names in pipeline order.
STAGES = (STAGE_SOFTMAX, STAGE_TOP_K, STAGE_TOP_P, STAGE_MIN_P)

_U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class SamplerConfig:
    """The four sampling knobs plus the seed.

    The canonical textual order is ``(T, k, top_p, min_p)``, e.g.
    ``(0.8, 40, 0.95, 0)``.  ``temperature = 0`` selects argmax mode.
    """

    temperature: float
    top_k: int
    top_p: float = 1.0
    min_p: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not np.isfinite(self.temperature) or self.temperature < 0:
            raise ValueError(f"temperature must satisfy T >= 0 (got {self.temperature!r})")
        if not isinstance(self.top_k, (int, np.integer)) or isinstance(self.top_k, bool):
            raise ValueError(f"top_k must be an integer (got {self.top_k!r})")
        if self.top_k < 1:
            raise ValueError(f"top_k must satisfy k >= 1 (got {self.top_k})")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError(f"top_p must satisfy 0 < top_p <= 1 (got {self.top_p!r})")
        if not 0.0 <= self.min_p < 1.0:
            raise ValueError(f"min_p must satisfy 0 <= min_p < 1 (got {self.min_p!r})")
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise ValueError(f"seed must be an integer (got {self.seed!r})")
        if not 0 <= self.seed <= _U64_MAX:
            raise ValueError(f"seed must fit in an unsigned 64-bit integer (got {self.seed})")

    def shorthand(self) -> str:
        """Compact ``(T, k, top_p, min_p)`` rendering, e.g. ``(0.8, 40, 0.95, 0)``."""
        return f"({self.temperature:g}, {self.top_k}, {self.top_p:g}, {self.min_p:g})"


class RandomStream:
    """Seeded uniform stream backed by the Philox (4x64) counter-based generator.

    The generator algorithm is fixed and documented here because it is part
    of the reproducibility contract: the same 64-bit seed produces the
    identical sequence of ``next_uniform()`` values across runs and
    platforms.  One stream must be owned by exactly one generation sequence;
    parallel work derives per-sequence seeds with :func:`derive_seed`.
    """

    __slots__ = ("seed", "_gen")

    def __init__(self, seed: int):
        if not 0 <= int(seed) <= _U64_MAX:
            raise ValueError(f"seed must fit in an unsigned 64-bit integer (got {seed})")
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.Philox(self.seed))

    def next_uniform(self) -> float:
        """Next pseudo-random double in [0, 1)."""
        return float(self._gen.random())


def derive_seed(master_seed: int, ordinal: int) -> int:
    """Deterministic per-sequence seed from a master seed and an ordinal.

    Implemented as ``SeedSequence(master_seed, spawn_key=(ordinal,))``, a
    fixed published hashing scheme, so sweep row ``i`` gets the same seed no
    matter where or in which order rows execute.
    """
    if ordinal < 0:
        raise ValueError(f"ordinal must be non-negative (got {ordinal})")
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(ordinal),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True, eq=False)
class StageRecord:
    """Survivor set snapshot after one pipeline stage (post-renormalization)."""

    stage: str
    survivor_count: int
    masses: np.ndarray
    index_map: np.ndarray

    def distribution(self) -> ProbabilityDistribution:
        """The recorded survivor set as a validated distribution."""
        return ProbabilityDistribution(self.masses, self.index_map)

    def to_json_dict(self) -> dict:
        return {
            "stage": self.stage,
            "survivor_count": self.survivor_count,
            "masses": [float(x) for x in self.masses],
            "index_map": [int(i) for i in self.index_map],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "StageRecord":
        return cls(
            stage=str(d["stage"]),
            survivor_count=int(d["survivor_count"]),
            masses=np.asarray(d["masses"], dtype=np.float64),
            index_map=np.asarray(d["index_map"], dtype=np.int64),
        )


@dataclass(frozen=True, eq=False)
class SampleTrace:
    """Per-stage instrumentation of one pipeline run.

    ``stages`` holds one record per executed stage in pipeline order;
    ``drawn_uniform`` is the unit-interval value consumed by the draw
    (None in argmax mode, which draws nothing).  The JSON rendering of this
    object is the golden-vector format used by conformance tests.
    """

    stages: tuple[StageRecord, ...]
    drawn_token: TokenId
    drawn_uniform: float | None
    argmax_mode: bool = False

    @property
    def final(self) -> StageRecord:
        """The last executed stage (the distribution actually sampled)."""
        return self.stages[-1]

    def to_json_dict(self) -> dict:
        return {
            "argmax_mode": self.argmax_mode,
            "stages": [s.to_json_dict() for s in self.stages],
            "drawn_token": int(self.drawn_token),
            "drawn_uniform": None if self.drawn_uniform is None else float(self.drawn_uniform),
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_json_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_json_dict(cls, d: dict) -> "SampleTrace":
        u = d["drawn_uniform"]
        return cls(
            stages=tuple(StageRecord.from_json_dict(s) for s in d["stages"]),
            drawn_token=int(d["drawn_token"]),
            drawn_uniform=None if u is None else float(u),
            argmax_mode=bool(d["argmax_mode"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "SampleTrace":
        return cls.from_json_dict(json.loads(text))


def sort_descending(dist: ProbabilityDistribution) -> ProbabilityDistribution:
    """Sorted view: masses non-increasing, ties by ascending original index."""
    order = np.lexsort((dist.index_map, -dist.masses))
    return ProbabilityDistribution._unchecked(dist.masses[order], dist.index_map[order])


def _renorm(masses: np.ndarray, index_map: np.ndarray) -> ProbabilityDistribution:
    # Internal fast renormalization; callers guarantee a positive total.
    return ProbabilityDistribution._unchecked(masses / masses.sum(), index_map)


def top_k_filter(sorted_dist: ProbabilityDistribution, k: int) -> ProbabilityDistribution:
    """Keep the first ``min(k, n)`` entries of a descending-sorted distribution."""
    if k < 1:
        raise ValueError(f"top_k must satisfy k >= 1 (got {k})")
    n = len(sorted_dist)
    if k >= n:
        return sorted_dist
    return _renorm(sorted_dist.masses[:k], sorted_dist.index_map[:k])


def top_p_filter(sorted_dist: ProbabilityDistribution, top_p: float) -> ProbabilityDistribution:
    """Keep the shortest prefix whose cumulative mass reaches ``top_p``.

    The entry that crosses the threshold is included, so at least one token
    survives and the kept mass is always >= ``top_p``.  Input must be sorted
    descending and normalized.
    """
    masses = sorted_dist.masses
    cum = np.cumsum(masses)
    cut = int(np.searchsorted(cum, top_p, side="left"))
    if cut >= masses.size:  # cumulative total fell short of top_p by rounding
        cut = masses.size - 1
    if cut == masses.size - 1:
        return sorted_dist
    return _renorm(masses[: cut + 1], sorted_dist.index_map[: cut + 1])


def min_p_filter(dist: ProbabilityDistribution, min_p: float) -> ProbabilityDistribution:
    """Keep entries whose mass is at least the absolute floor ``min_p``.

    The threshold applies to the masses as given (in the pipeline: already
    renormalized after top-p).  If nothing qualifies, the single largest
    entry is kept (the survivor guarantee), with ties going to the lowest
    original token index.  This is the *absolute* min-p semantics; some
    samplers elsewhere scale the floor by the maximum mass, this one does
    not.
    """
    masses = dist.masses
    keep = masses >= min_p
    if not keep.any():
        best = np.flatnonzero(masses == masses.max())
        pos = best[np.argmin(dist.index_map[best])]
        return ProbabilityDistribution._unchecked(
            np.ones(1, dtype=np.float64), dist.index_map[pos : pos + 1].copy()
        )
    if keep.all():
        return dist
    return _renorm(masses[keep], dist.index_map[keep])


def _draw(dist: ProbabilityDistribution, rng: RandomStream) -> tuple[TokenId, float]:
    # Restore ascending original token order before the cumulative sum, then
    # return the first index whose cumulative mass exceeds the uniform.
    order = np.argsort(dist.index_map)
    cum = np.cumsum(dist.masses[order])
    u = rng.next_uniform()
    pos = int(np.searchsorted(cum, u, side="right"))
    if pos >= cum.size:  # u beyond a rounded-down total
        pos = cum.size - 1
    return int(dist.index_map[order[pos]]), u


def draw(dist: ProbabilityDistribution, rng: RandomStream) -> TokenId:
    """Inverse-CDF draw from a normalized survivor set.

    Entries are resorted to ascending original token index before the
    cumulative summation; exactly one uniform is consumed per draw, so the
    outcome is fully determined by the stream's seed and position.
    """
    token, _ = _draw(dist, rng)
    return token


def _record(stage: str, dist: ProbabilityDistribution) -> StageRecord:
    return StageRecord(stage, len(dist), dist.masses, dist.index_map)


def run_pipeline(
    z: Sequence[float] | np.ndarray,
    cfg: SamplerConfig,
    rng: RandomStream,
    *,
    want_trace: bool = True,
) -> tuple[TokenId, SampleTrace | None]:
    """Run the full staged pipeline on a logit vector and draw one token.

    Executes softmax(z, T), sort, top-k, top-p, min-p (each truncation
    followed by renormalization), restores original token order, and draws.
    With ``cfg.temperature == 0`` the sampling stages are bypassed entirely
    and the argmax of ``softmax(z, 1)`` is returned with a trace marked
    ``argmax_mode`` (no uniform is consumed).

    ``want_trace=False`` skips building the trace objects (the hot-path
    switch for large sweeps) without changing any computed value or the
    random stream position.
    """
    if cfg.temperature == 0.0:
        p = softmax(z, 1.0)
        token = argmax_onehot(p)
        if not want_trace:
            return token, None
        trace = SampleTrace(
            stages=(_record(STAGE_SOFTMAX, p),),
            drawn_token=token,
            drawn_uniform=None,
            argmax_mode=True,
        )
        return token, trace

    p0 = softmax(z, cfg.temperature)
    p1 = top_k_filter(sort_descending(p0), cfg.top_k)
    p2 = top_p_filter(p1, cfg.top_p)
    p3 = min_p_filter(p2, cfg.min_p)
    token, u = _draw(p3, rng)
    if not want_trace:
        return token, None
    trace = SampleTrace(
        stages=(
            _record(STAGE_SOFTMAX, p0),
            _record(STAGE_TOP_K, p1),
            _record(STAGE_TOP_P, p2),
            _record(STAGE_MIN_P, p3),
        ),
        drawn_token=token,
        drawn_uniform=u,
    )
    return token, trace
