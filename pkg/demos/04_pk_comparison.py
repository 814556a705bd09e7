#!/usr/bin/env python3
"""Curve-walking singular value method vs the Lyapunov PK baseline.

Both drivers start from the same destabilized two-area parameterization.
The PK iteration drags an n_x-sized Lyapunov matrix through every step,
while the singular value method only touches small frequency-domain
blocks, which is what buys its speed.  Expect this script to run for a
few minutes because of the baseline.
"""

import time

from svtune import Alg1Config, StabilizeConfig, stabilize
from svtune.grid import build_benchmark, build_system
from svtune.pk_baseline import PKConfig, pk_stabilize

SCALE = 1.5

model, variants = build_benchmark("two-area-4")
sys_, _ = build_system(model)
K0 = variants[SCALE]
print(f"start max Re = {sys_.at(K0, check_bounds=False).poles().max_real:+.4f}")

## SINGULAR VALUE METHOD ##

t0 = time.time()
K_sv, rep = stabilize(sys_, K0, StabilizeConfig(inner=Alg1Config(k_max=10)))
t_sv = time.time() - t0
print(f"\nSV method: {rep.status} in {len(rep.outer)} outer iterations, {t_sv:.1f}s")
for r in rep.outer:
    print(f"   mu={r.mu}: max Re {r.max_re_before:+.4f} -> {r.max_re_after:+.4f}")

## PK BASELINE ##

t0 = time.time()
res = pk_stabilize(sys_, K0, PKConfig(outer_cap=50))
t_pk = time.time() - t0
print(f"\nPK baseline: {res.status} in {res.outer_iterations} outer iterations, {t_pk:.1f}s")
for r in res.iterations[:10]:
    print(f"   mu={r.mu}: beta={r.beta:+.4f} max Re {r.max_re_before:+.4f} -> "
          f"{r.max_re_after:+.4f} {'accepted' if r.accepted else 'rejected'}")
if res.outer_iterations > 10:
    print(f"   ... {res.outer_iterations - 10} more iterations")

print(f"\nsummary: SV {len(rep.outer)} outer iterations / {t_sv:.1f}s   vs   "
      f"PK {res.outer_iterations} outer iterations / {t_pk:.1f}s ({res.status})")
