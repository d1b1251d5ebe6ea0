"""Autoregressive next-frame prediction over grids of discrete patch tokens.

A frame is an ``H x W`` integer array of patch tokens in ``[0, V)``.  The
synthetic world model assigns each patch a conditional distribution over the
next frame's token at the same position, given that patch's previous token
and its 4-neighborhood:

* a fixed ``stay_mass`` sits on "repeat the previous token", and the
  construction guarantees it strictly exceeds every other single mass, so the
  conditional *mode* is always "stay";
* the remaining mass is spread over the other tokens, shaped by a seeded
  per-token bias and by how often a token appears among the 4 neighbors, with
  deviations capped so the mode invariant and positivity are provable rather
  than empirical.

That makes the central phenomenon exact: under argmax decoding (top-k with
k = 1, or zero temperature) every patch repeats, so a rollout is frozen on
its prompt frame from the first prediction onward, for every seed and every
valid world.  Widening the sampler (larger k) admits non-stay tokens and the
per-frame novelty grows with k.

Patches are sampled independently given the previous frame (there is no
within-frame autoregression), in row-major order from one shared random
stream, so rollouts are cheap, analytic, and fully deterministic per seed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .probcore import logits_from_masses
from .sampler import RandomStream, SampleTrace, SamplerConfig, derive_seed, run_pipeline

#: A frame: 2-D integer array of patch tokens, shape (height, width).
FrameGrid = np.ndarray

#: Fraction of the deviation budget actually used; keeps the mode and
#: positivity invariants strict rather than marginal.
_DEVIATION_HEADROOM = 0.9


@dataclass(frozen=True, eq=False)
class WorldModel:
    """Synthetic per-patch conditional model with a guaranteed "stay" mode.

    Immutable after construction; built by :func:`build_world`.
    """

    height: int
    width: int
    vocab: int
    stay_mass: float
    neighbor_gain: float
    seed: int
    token_bias: np.ndarray  # (vocab,) seeded values in [-1, 1]

    def conditional(self, stay: int, neighbors: Iterable[int]) -> np.ndarray:
        """Next-token distribution for a patch.

        ``stay`` is the patch's token in the previous frame; ``neighbors``
        are the previous-frame tokens of its in-grid 4-neighborhood (2 to 4
        values).  The result sums to one and its argmax is ``stay``.
        """
        v = self.vocab
        if not 0 <= stay < v:
            raise ValueError(f"stay token {stay} outside vocabulary of size {v}")
        rest = 1.0 - self.stay_mass
        base = rest / (v - 1)
        w = self.token_bias.copy()
        for t in neighbors:
            t = int(t)
            if not 0 <= t < v:
                raise ValueError(f"neighbor token {t} outside vocabulary of size {v}")
            if t != stay:
                w[t] += self.neighbor_gain
        mask = np.ones(v, dtype=bool)
        mask[stay] = False
        dev = w[mask]
        dev = dev - dev.mean()  # zero-sum: the non-stay total stays at `rest`
        peak = np.abs(dev).max()
        if peak > 0.0:
            dev *= _DEVIATION_HEADROOM * min(self.stay_mass - base, base) / peak
        out = np.empty(v, dtype=np.float64)
        out[mask] = base + dev
        out[stay] = self.stay_mass
        return out


def build_world(
    height: int,
    width: int,
    vocab: int,
    stay_mass: float,
    seed: int,
    neighbor_gain: float = 1.0,
) -> WorldModel:
    """Construct a world model; deterministic in ``seed``.

    ``stay_mass`` must exceed ``1/vocab`` so "stay" can strictly dominate
    every other mass, and be below 1 so the rest of the vocabulary keeps
    positive probability.
    """
    if height < 1 or width < 1:
        raise ValueError(f"grid must be at least 1x1 (got {height}x{width})")
    if vocab < 2:
        raise ValueError(f"vocabulary must hold at least 2 tokens (got {vocab})")
    if not 1.0 / vocab < stay_mass < 1.0:
        raise ValueError(
            f"stay_mass must satisfy 1/vocab < stay_mass < 1 (got {stay_mass!r} with vocab {vocab})"
        )
    if neighbor_gain < 0:
        raise ValueError(f"neighbor_gain must be >= 0 (got {neighbor_gain!r})")
    gen = np.random.Generator(np.random.Philox(int(seed)))
    bias = gen.uniform(-1.0, 1.0, size=vocab)
    bias.flags.writeable = False
    return WorldModel(
        height=int(height),
        width=int(width),
        vocab=int(vocab),
        stay_mass=float(stay_mass),
        neighbor_gain=float(neighbor_gain),
        seed=int(seed),
        token_bias=bias,
    )


def random_frame(height: int, width: int, vocab: int, seed: int) -> FrameGrid:
    """A uniformly random prompt frame, deterministic in ``seed``."""
    gen = np.random.Generator(np.random.Philox(int(seed)))
    return gen.integers(0, vocab, size=(height, width), dtype=np.int64)


def _check_frame(world: WorldModel, frame: FrameGrid) -> np.ndarray:
    f = np.asarray(frame)
    if f.shape != (world.height, world.width):
        raise ValueError(
            f"frame shape {f.shape} does not match world grid {(world.height, world.width)}"
        )
    if not np.issubdtype(f.dtype, np.integer):
        raise ValueError(f"frame must hold integer patch tokens (got dtype {f.dtype})")
    if f.size and (f.min() < 0 or f.max() >= world.vocab):
        raise ValueError(f"frame tokens must lie in [0, {world.vocab})")
    return f.astype(np.int64, copy=False)


def predict_frame(
    world: WorldModel,
    prev: FrameGrid,
    cfg: SamplerConfig,
    rng: RandomStream,
    *,
    want_traces: bool = True,
) -> tuple[FrameGrid, tuple[SampleTrace, ...] | None]:
    """Sample the next frame patch by patch through the sampling pipeline.

    Patches are processed in row-major order against one shared stream, each
    drawn independently from its own conditional given the previous frame.
    Returns the new frame and (unless ``want_traces=False``) one trace per
    patch in the same order.
    """
    prev = _check_frame(world, prev)
    h, w = world.height, world.width
    out = np.empty((h, w), dtype=np.int64)
    traces: list[SampleTrace] = []
    for i in range(h):
        for j in range(w):
            stay = int(prev[i, j])
            neighbors = []
            if i > 0:
                neighbors.append(int(prev[i - 1, j]))
            if i < h - 1:
                neighbors.append(int(prev[i + 1, j]))
            if j > 0:
                neighbors.append(int(prev[i, j - 1]))
            if j < w - 1:
                neighbors.append(int(prev[i, j + 1]))
            z = logits_from_masses(world.conditional(stay, neighbors))
            token, trace = run_pipeline(z, cfg, rng, want_trace=want_traces)
            out[i, j] = token
            if want_traces:
                traces.append(trace)
    out.flags.writeable = False
    return out, tuple(traces) if want_traces else None


@dataclass(frozen=True, eq=False)
class Rollout:
    """An autoregressive frame trajectory plus its change statistics.

    ``frames[0]`` is the prompt; ``novelty[i]`` is the fraction of patches
    that differ between ``frames[i + 1]`` and ``frames[i]``.  ``freeze_index``
    is the first index ``i >= 1`` such that every later frame equals
    ``frames[i]`` (the image stopped changing there), or None if the last
    frame still differs from its predecessor.
    """

    frames: tuple[FrameGrid, ...]
    novelty: np.ndarray
    freeze_index: int | None

    @property
    def mean_novelty(self) -> float:
        return float(self.novelty.mean())

    def to_json_dict(self) -> dict:
        return {
            "frames": [[[int(t) for t in row] for row in f] for f in self.frames],
            "novelty": [float(x) for x in self.novelty],
            "freeze_index": self.freeze_index,
        }


def _freeze_index(frames: Sequence[FrameGrid]) -> int | None:
    last = len(frames) - 1
    t = last
    while t >= 1 and np.array_equal(frames[t], frames[t - 1]):
        t -= 1
    # frames[t .. last] are all identical and t is minimal.  The freeze is
    # real only if at least one repetition actually happened (t < last);
    # index 0 is the prompt, so the earliest reportable freeze is 1.
    return max(t, 1) if t < last else None


def rollout(
    world: WorldModel,
    prompt_frame: FrameGrid,
    cfg: SamplerConfig,
    steps: int,
) -> Rollout:
    """Iterate :func:`predict_frame` ``steps`` times, feeding each output back.

    Deterministic in (world, prompt, cfg, steps): the whole trajectory uses
    one stream seeded from ``cfg.seed``.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1 (got {steps})")
    prompt_frame = _check_frame(world, prompt_frame)
    rng = RandomStream(cfg.seed)
    frames: list[FrameGrid] = [prompt_frame]
    novelty = np.empty(steps, dtype=np.float64)
    for s in range(steps):
        nxt, _ = predict_frame(world, frames[-1], cfg, rng, want_traces=False)
        novelty[s] = float(np.mean(nxt != frames[-1]))
        frames.append(nxt)
    novelty.flags.writeable = False
    return Rollout(frames=tuple(frames), novelty=novelty, freeze_index=_freeze_index(frames))


def k_sweep(
    world: WorldModel,
    prompt_frame: FrameGrid,
    base_cfg: SamplerConfig,
    ks: Sequence[int],
    steps: int,
    trials: int,
    master_seed: int,
) -> list[tuple[int, list[Rollout]]]:
    """Run ``trials`` rollouts per k, seeds derived from (master seed, k, trial).

    Each rollout seed depends only on the (k, trial) pair, not on the sweep
    position, so reordering or duplicating entries in ``ks`` reproduces the
    exact same rows and concurrent execution stays deterministic.
    """
    if len(ks) == 0:
        raise ValueError("k sweep needs at least one k value")
    if trials < 1:
        raise ValueError(f"trials must be >= 1 (got {trials})")
    entries: list[tuple[int, list[Rollout]]] = []
    for k in ks:
        k_seed = derive_seed(master_seed, int(k))
        rolls = []
        for trial in range(trials):
            cfg = replace(base_cfg, top_k=int(k), seed=derive_seed(k_seed, trial))
            rolls.append(rollout(world, prompt_frame, cfg, steps))
        entries.append((int(k), rolls))
    return entries


def novelty_curve(entries: Sequence[tuple[int, Sequence[Rollout]]]) -> list[tuple[int, float]]:
    """Mean per-frame novelty for each k of a sweep, in input order.

    All rollouts must share the prompt frame and step count (they are
    expected to differ only in sampler configuration).
    """
    if len(entries) == 0:
        raise ValueError("novelty curve needs at least one sweep entry")
    reference: Rollout | None = None
    rows: list[tuple[int, float]] = []
    for k, rolls in entries:
        if len(rolls) == 0:
            raise ValueError(f"sweep entry k={k} holds no rollouts")
        for r in rolls:
            if reference is None:
                reference = r
            elif len(r.novelty) != len(reference.novelty) or not np.array_equal(
                r.frames[0], reference.frames[0]
            ):
                raise ValueError("sweep rollouts must share prompt frame and step count")
        rows.append((int(k), float(np.concatenate([r.novelty for r in rolls]).mean())))
    return rows


def frame_to_pgm(frame: FrameGrid, vocab: int) -> bytes:
    """Render a frame as a binary PGM image, one gray level per token id.

    Token ``t`` maps to gray ``round(t * 255 / (vocab - 1))``, so token 0 is
    black and token ``vocab - 1`` is white.
    """
    f = np.asarray(frame)
    if f.ndim != 2 or not np.issubdtype(f.dtype, np.integer):
        raise ValueError("frame must be a 2-D integer array")
    if vocab < 2:
        raise ValueError(f"vocabulary must hold at least 2 tokens (got {vocab})")
    if f.size and (f.min() < 0 or f.max() >= vocab):
        raise ValueError(f"frame tokens must lie in [0, {vocab})")
    gray = np.round(f * (255.0 / (vocab - 1))).astype(np.uint8)
    h, w = f.shape
    return b"P5\n" + f"{w} {h}\n255\n".encode("ascii") + gray.tobytes()
