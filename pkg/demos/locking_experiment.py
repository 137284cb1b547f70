"""Locking a periodic orbit of a random symbolic system.

Pipeline: sample a random window-2 potential with rational costs, find
the exact minimizing cycle, search for an orbit satisfying both class-I
inequalities, add the channel perturbation vanishing on that orbit, and
verify with exact arithmetic that it became the unique minimizing cycle.
"""

import numpy as np

from manelab.ergopt import (random_instance, min_mean_cycle, discrete_aubry,
                            class_one_search, alga_condition,
                            build_channel_discrete, verify_locking)

rng = np.random.default_rng(7)
f = random_instance(rng)
print(f"instance: {f.sft.alphabet_size} symbols, "
      f"{len(f.values)} allowed edges")

mm = min_mean_cycle(f)
print(f"minimum cycle mean: {mm.mean}  on cycle {mm.cycle.word}")

aubry = discrete_aubry(f, mm.mean)
print(f"discrete Aubry vertices: {sorted(aubry.vertices)}")

orbit = class_one_search(f, eps=0.1)
cond = alga_condition(orbit, f, aubry, eps=0.1)
print(f"class-I orbit: {orbit.word}")
print(f"  gap={cond['gap']}, distance to Aubry={cond['aubry_distance']}, "
      f"reduced action={cond['reduced_action']}, holds={cond['holds']}")

if cond["gap"] > 0:
    phi = build_channel_discrete(orbit, 0.1)
else:
    phi = build_channel_discrete(orbit, 0.1, rho=0.0625, gamma_bar=0.5)
locked, cert = verify_locking(f, phi, orbit)
print(f"locked after channel: {locked}  ({cert['reason']})")
