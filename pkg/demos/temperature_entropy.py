"""
Temperature and entropy
=======================

Softmax temperature is the single biggest knob on output randomness.
This script takes one fixed logit vector and shows how the distribution
flattens as T grows: entropy climbs monotonically, the argmax mass
shrinks, and at T -> 0 the distribution collapses onto the argmax.
"""

import numpy as np

from decodelab import entropy, softmax

rng = np.random.default_rng(7)
z = rng.normal(0.0, 2.0, size=40)

print("logit vector: 40 entries, argmax at index", int(np.argmax(z)))
print()
print(f"{'T':>6}  {'entropy (nats)':>14}  {'max mass':>9}  {'survivors > 1%':>14}")
for T in (0.25, 0.5, 1.0, 2.0, 4.0):
    p = softmax(z, T)
    m = p.masses
    print(f"{T:>6}  {entropy(p):>14.6f}  {m.max():>9.4f}  {int((m > 0.01).sum()):>14}")

print()
print("limit check: at T = 1e-6 the mass concentrates on the argmax")
p_cold = softmax(z, 1e-6).masses
print(f"  mass at argmax = {p_cold[np.argmax(z)]:.12f}")

print("uniform check: at T = 1e6 every token approaches mass 1/40 = 0.025")
p_hot = softmax(z, 1e6).masses
print(f"  min mass = {p_hot.min():.6f}, max mass = {p_hot.max():.6f}")
