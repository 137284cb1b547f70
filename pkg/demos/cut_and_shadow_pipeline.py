"""The cut-and-shadow loop on the cat-map testbed.

A two-strand specification along the reference period-7 orbit (second
strand displaced along the unstable direction with a dynamic-ball
profile) is shadowed into a periodic orbit.  Expansivity forces the
shadow onto the reference traversal, which the collapse detector folds
to a single period: the loop lands exactly on the Aubry orbit and the
class-I condition holds with both sides zero.  Across horizons the
initial period grows linearly in T, so log P_T / T decreases.
"""

import math

from manelab.orbitlab import (CatMapTestbed, build_specification,
                              horizon_sweep, measure_constants)

testbed = CatMapTestbed()

spec = build_specification(testbed, horizon=6)
print(f"specification at T=6: {spec.total_steps} steps, "
      f"max jump {spec.delta:.3e}")

rows = horizon_sweep(testbed, eps=0.1)
print(f"{'T':>3} {'P0':>5} {'final P':>8} {'action':>9} "
      f"{'c(Gamma,A)':>11} {'log P0/T':>9}")
for r in rows:
    print(f"{r['horizon']:>3} {r['initial_period']:>5} "
          f"{r['final_period']:>8} {r['final_action']:>9.1e} "
          f"{r['final_aubry_distance']:>11.1e} "
          f"{math.log(r['initial_period']) / r['horizon']:>9.3f}")

led = measure_constants(testbed, eps=0.1)
print(f"ledger: lam={led.lam:.4f}, E={led.e:.2f}, B4={led.b4:.1f} (>4), "
      f"K5={led.k5:.2f}")
