"""
One draw, stage by stage
========================

Runs a single logit vector through the full sampling pipeline with
tracing on, then prints what each stage did: how many tokens survived,
how much raw probability mass the survivors held before renormalizing,
and which token the seeded draw finally picked.

Stage order is fixed: softmax at temperature, sort descending, top-k,
renormalize, top-p (the entry that crosses the threshold is kept),
renormalize, min-p as an absolute floor on the renormalized masses,
renormalize, then one inverse-CDF draw in original token order.
"""

import numpy as np

from decodelab import RandomStream, SamplerConfig, run_pipeline, softmax

rng = np.random.default_rng(11)
z = rng.normal(0.0, 1.5, size=40)

cfg = SamplerConfig(temperature=0.8, top_k=20, top_p=0.95, min_p=0.05, seed=5)
print("config:", cfg.shorthand())

token, trace = run_pipeline(z, cfg, RandomStream(cfg.seed))

p_full = softmax(z, cfg.temperature).masses
print()
print(f"{'stage':>12}  {'survivors':>9}  {'kept raw mass':>13}  top 3 (token: mass)")
for stage in trace.stages:
    kept = p_full[stage.index_map].sum()
    top3 = ", ".join(
        f"{int(stage.index_map[i])}: {stage.masses[i]:.4f}"
        for i in np.argsort(-stage.masses)[:3]
    )
    print(f"{stage.stage:>12}  {stage.survivor_count:>9}  {kept:>13.6f}  {top3}")

print()
print(f"uniform consumed: {trace.drawn_uniform:.6f}")
print(f"drawn token: {token}")
print()
print("same seed, same draw:", run_pipeline(z, cfg, RandomStream(cfg.seed))[0] == token)

cold = SamplerConfig(temperature=0.0, top_k=40, top_p=1.0, min_p=0.0, seed=5)
t0_token, t0_trace = run_pipeline(z, cold, RandomStream(cold.seed))
print()
print("T = 0 bypasses sampling entirely (argmax mode, no uniform consumed):")
print(f"  token = {t0_token}, argmax_mode = {t0_trace.argmax_mode},",
      f"uniform = {t0_trace.drawn_uniform}")
