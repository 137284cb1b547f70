"""Pendulum tour: critical value, weak KAM solution, invariant sets.

The mechanical Lagrangian L = v^2/2 - cos x on the circle has critical
value c = max U = 1, the static point sits at the potential maximum
(x, v) = (0, 0), and the critical solution is u(x) = 4 (1 - cos(x/2)),
calibrated along the separatrix v = +- 2 sin(x/2).  Everything below is
computed from the discrete action graph and compared with those formulas.
"""

import math

import numpy as np

from manelab.lagrangian import pendulum
from manelab.weakkam import (build_action_graph, critical_value,
                             lax_oleinik, classify_and_extract_sets)

pend = pendulum()
graph = build_action_graph(pend)

cv = critical_value(pend, graph)
print(f"critical value: {cv['value']:.9f}  (truth 1, "
      f"bracket {cv['bracket']:.2e})")

u = lax_oleinik(pend, cv["value"], graph)
xs = graph.nodes
xwrap = np.mod(xs + math.pi, 2.0 * math.pi) - math.pi
truth = 4.0 * (1.0 - np.cos(xwrap / 2.0))
err = u.values - truth
print(f"weak KAM solution vs 4(1-cos(x/2)): sup error after constant "
      f"{np.max(err) - np.min(err):.2e}")
print(f"domination violations: {u.domination_violations(graph)}")

mather, aubry, mane = classify_and_extract_sets(pend, cv["value"], u, graph)
print(f"Mather set: {mather.points.tolist()}")
print(f"Aubry set:  {aubry.points.tolist()}")
print(f"Mane set:   {len(mane.points)} phase cells along the separatrix")

energies = 0.5 * mane.points[:, 1] ** 2 + np.cos(mane.points[:, 0])
print(f"Mane energies: {energies.min():.3f} .. {energies.max():.3f} "
      f"(critical level is 1)")
