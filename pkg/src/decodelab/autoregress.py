"""The autoregressive generation loop with a bounded sliding context window.

Each emitted token is pushed back into the context buffer before the next
prediction, so the model always conditions on everything it has said so far
(up to the window capacity): the feedback contract that generation-level
tests pin down.  The window is a strict sliding window: pushing beyond
capacity evicts the oldest token.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .ngram import detokenize
from .probcore import TokenAlphabet, TokenId
from .sampler import RandomStream, SampleTrace, SamplerConfig, run_pipeline

#: Default context window capacity.
DEFAULT_CAPACITY = 64

STOP_EOS = "eos"
STOP_MAX_LEN = "max_len"


class NextTokenModel(Protocol):
    """Anything that can score the next token given a trailing context."""

    alphabet: TokenAlphabet

    def logits_for(self, context: Sequence[TokenId]) -> np.ndarray: ...


@dataclass(frozen=True)
class ContextBuffer:
    """Bounded token window, most recent last; immutable, push returns a new buffer."""

    capacity: int
    tokens: tuple[TokenId, ...] = ()

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1 (got {self.capacity})")
        if len(self.tokens) > self.capacity:
            raise ValueError(f"buffer holds {len(self.tokens)} tokens, over capacity {self.capacity}")

    @classmethod
    def from_tokens(cls, tokens: Sequence[TokenId], capacity: int) -> "ContextBuffer":
        """Seed a buffer with the last ``capacity`` tokens of a sequence."""
        toks = tuple(int(t) for t in tokens)
        return cls(capacity, toks[-capacity:] if len(toks) > capacity else toks)

    def push(self, token: TokenId) -> "ContextBuffer":
        """Append a token, evicting the oldest one when full."""
        toks = self.tokens + (int(token),)
        if len(toks) > self.capacity:
            toks = toks[1:]
        return ContextBuffer(self.capacity, toks)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True, eq=False)
class GenerationResult:
    """Outcome of one generation run: tokens, per-token traces, stop reason."""

    prompt_tokens: tuple[TokenId, ...]
    output_tokens: tuple[TokenId, ...]
    traces: tuple[SampleTrace, ...]
    stop_reason: str

    def to_json_dict(self, alphabet: TokenAlphabet, include_traces: bool = False) -> dict:
        doc = {
            "prompt": detokenize(self.prompt_tokens, alphabet),
            "output": detokenize(self.output_tokens, alphabet),
            "stop_reason": self.stop_reason,
        }
        if include_traces:
            doc["traces"] = [t.to_json_dict() for t in self.traces]
        return doc


def generate(
    model: NextTokenModel,
    cfg: SamplerConfig,
    prompt: Sequence[TokenId],
    max_len: int,
    capacity: int = DEFAULT_CAPACITY,
) -> GenerationResult:
    """Generate up to ``max_len`` tokens, feeding each one back into the window.

    The buffer is seeded with the prompt's trailing ``capacity`` tokens.
    Generation stops when the alphabet's EOS token is emitted (it is included
    in the output) or when ``max_len`` tokens have been produced.  The result
    is fully determined by (model, cfg incl. seed, prompt, max_len,
    capacity).
    """
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1 (got {max_len})")
    buffer = ContextBuffer.from_tokens(prompt, capacity)
    rng = RandomStream(cfg.seed)
    eos = model.alphabet.eos_index
    out: list[TokenId] = []
    traces: list[SampleTrace] = []
    stop_reason = STOP_MAX_LEN
    for _ in range(max_len):
        z = model.logits_for(buffer.tokens)
        token, trace = run_pipeline(z, cfg, rng)
        out.append(token)
        traces.append(trace)
        buffer = buffer.push(token)
        if token == eos:
            stop_reason = STOP_EOS
            break
    return GenerationResult(
        prompt_tokens=tuple(int(t) for t in prompt),
        output_tokens=tuple(out),
        traces=tuple(traces),
        stop_reason=stop_reason,
    )


def replay(
    result: GenerationResult,
    model: NextTokenModel,
    cfg: SamplerConfig,
    prompt: Sequence[TokenId],
    capacity: int = DEFAULT_CAPACITY,
) -> bool:
    """Re-run generation with identical inputs and report whether the token
    sequence reproduces exactly (the reproducibility audit)."""
    rerun = generate(model, cfg, prompt, max_len=max(1, len(result.output_tokens)), capacity=capacity)
    return rerun.output_tokens == result.output_tokens
