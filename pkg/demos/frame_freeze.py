"""
Frame rollouts: greedy freeze vs sampled novelty
================================================

A seeded world model predicts the next frame of a small image grid,
patch by patch.  Each patch's most likely next value is its current
value, so greedy decoding (k = 1) freezes the video on the very first
predicted frame.  Widening the survivor set with top-k restores change:
mean per-frame novelty (fraction of patches that changed) grows with k.
"""

from decodelab import (
    SamplerConfig,
    build_world,
    k_sweep,
    novelty_curve,
    random_frame,
    rollout,
)

world = build_world(height=8, width=8, vocab=16, stay_mass=0.9, seed=100)
prompt = random_frame(8, 8, 16, seed=101)
base = SamplerConfig(temperature=1.0, top_k=1, top_p=1.0, min_p=0.0, seed=0)

print("greedy rollout (k = 1), 20 steps:")
r = rollout(world, prompt, base, steps=20)
print(f"  freeze_index = {r.freeze_index} (all frames from index 1 on are identical)")
print(f"  per-step novelty: {[round(float(n), 3) for n in r.novelty[:5]]} ...")
print()

print("top-k sweep, 12 steps x 5 trials per k:")
entries = k_sweep(world, prompt, base, ks=(1, 2, 4, 8, 16), steps=12, trials=5, master_seed=9)
print(f"{'k':>4}  {'mean novelty':>12}  {'freezes':>7}")
for (k, rolls), (_, mean_nov) in zip(entries, novelty_curve(entries)):
    frozen = sum(1 for r in rolls if r.freeze_index is not None)
    print(f"{k:>4}  {mean_nov:>12.4f}  {frozen:>4}/{len(rolls)}")

print()
print("reading: k = 1 always freezes with zero novelty; every doubling of k")
print("admits more of each patch's conditional and the frames keep moving.")
