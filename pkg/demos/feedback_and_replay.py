"""
Closed-loop feedback and exact replay
=====================================

Two properties of the autoregressive loop worth seeing up close:

1. Feedback: the context window feeds each sampled token back into the
   model, so two prompts that differ only in their final token give the
   model different conditioning and (in general) different next-token
   distributions.

2. Replay: generation is a pure function of (model, config, prompt).
   ``replay`` re-runs the loop and checks it reproduces a recorded
   result token for token.
"""

import numpy as np

from decodelab import (
    SamplerConfig,
    detokenize,
    generate,
    replay,
    tokenize,
    train_ngram,
)

model = train_ngram(tokenize("aa bb aa bb aa"), order=2, alpha=0.0)

print("feedback: P(next | ..a) vs P(next | ..b) after shared prefix 'c'")
for prompt in ("ca", "cb"):
    dist = model.conditional(tuple(tokenize(prompt)))
    top = int(np.argmax(dist))
    print(f"  context {prompt!r}: most likely next = {detokenize((top,))!r} "
          f"(mass {dist[top]:.3f})")
print("one token of history changed, and the whole continuation changes with it.")
print()

cfg = SamplerConfig(temperature=1.0, top_k=5, top_p=1.0, min_p=0.0, seed=3)
prompt = tokenize("aa ")
res = generate(model, cfg, prompt, max_len=12)
print(f"recorded run: {detokenize(res.output_tokens)!r} (stop: {res.stop_reason})")
print("replay matches:", replay(res, model, cfg, prompt))

other = SamplerConfig(temperature=1.0, top_k=5, top_p=1.0, min_p=0.0, seed=4)
print("replay under a different seed matches:", replay(res, model, other, prompt))
