"""
Character n-gram generation under different truncation settings
===============================================================

Trains a small character 4-gram model on a nursery-rhyme corpus, then
generates from the same prompt and seed while varying the truncation
knobs.  Width of the survivor set changes what the model can say:

  - greedy (T = 0) repeats the most likely continuation forever,
  - a standard setting (T 0.8, k 40, top-p 0.95) stays mostly coherent,
  - raising the min-p floor prunes the long tail and steadies the text.
"""

from decodelab import SamplerConfig, detokenize, generate, tokenize, train_ngram

CORPUS = (
    "the cat sat on the mat. the cat ate the rat. "
    "the rat ran on the mat. the cat and the rat sat. "
    "a fat cat sat on a mat and a rat ran to the cat."
)

model = train_ngram(tokenize(CORPUS), order=4, alpha=0.1)
prompt = tokenize("the ")

print(f"corpus: {len(CORPUS)} chars; model order 4, alpha 0.1")
print(f"prompt: 'the '")
print()

print("greedy decoding (T = 0) locks onto one continuation:")
res = generate(model, SamplerConfig(0.0, 40, 1.0, 0.0, seed=0), prompt, max_len=60)
print(f"  {detokenize(res.output_tokens)!r}")
print()

cfg = SamplerConfig(temperature=0.8, top_k=40, top_p=0.95, min_p=0.0, seed=42)
print(f"standard sampling {cfg.shorthand()}:")
res = generate(model, cfg, prompt, max_len=60)
print(f"  {detokenize(res.output_tokens)!r}  (stop: {res.stop_reason})")
print()

print("raising the absolute min-p floor with everything else fixed:")
for min_p in (0.0, 0.06, 0.15):
    cfg = SamplerConfig(temperature=0.8, top_k=40, top_p=0.95, min_p=min_p, seed=42)
    res = generate(model, cfg, prompt, max_len=60)
    n_survivors = sum(t.final.survivor_count for t in res.traces) / len(res.traces)
    print(f"  min_p = {min_p:<5} mean final survivors = {n_survivors:5.2f}  "
          f"{detokenize(res.output_tokens)!r}")
