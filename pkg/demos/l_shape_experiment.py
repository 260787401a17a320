"""
The desk-scale experiment on the L-shaped surface in H(2).

The unstable leaf through the (area one) L-shaped surface has two directions
beyond the horocycle.  We put a Cantor-dust measure on them, which is rich but
far from Lebesgue, push the leaf measure by the geodesic flow and compare the
average of a systole bump against its Masur-Veech integral, estimated by two
long geodesic orbits started at independent points.

This takes a few minutes.  Run:  python demos/l_shape_experiment.py
"""
from fractions import Fraction

from flatequi.equidistribution import (combined_stderr, make_test_function, reference_integral,
                                       theorem_window, translate_average)
from flatequi.foliation import period_box
from flatequi.measures import make_measure, partition_weights, phi_sup_bound, richness_check
from flatequi.norms import injectivity_proxy, make_context
from flatequi.surface import l_shape, normalize_area

x = normalize_area(l_shape())
ctx = make_context(x)
r, inside = injectivity_proxy(ctx)
box = period_box(x, r, ctx=ctx)
print(f"{x!r}: systole {ctx.systole:.4f}, chart radius {r:.4f}, d = {box.d}")

delta = Fraction(1, 81)
rho = make_measure("cantor_product", box.d, params={"dimension": 0.9})
rep = richness_check(rho, float(delta), 0.2, 4.0)
print(f"cantor dust (dimension 0.9 per factor): largest delta-ball mass {rep.max_mass:.3e}, "
      f"rich with b = 4: {rep.verdict} (any b > {rep.b_min:.3f} works)")
pw = partition_weights(rho, delta)
print(f"{len(pw.weights)} occupied cells; thickened density bound holds exactly: "
      f"{phi_sup_bound(pw, 4, Fraction(1, 5))}")

f = make_test_function("systole_bump", {"center": 0.3, "width": 0.25})
print("\nergodic references (50000 unit steps each, batch-means errors):")
refs = [reference_integral(f, "stratum", "ergodic", 50_000, s) for s in (11, 12)]
for ref in refs:
    print(f"  seed {ref.seed}: {ref.value:.5f} +- {ref.stderr:.5f}")
gap = abs(refs[0].value - refs[1].value)
print(f"  gap {gap:.5f}, 3 combined stderr {3 * combined_stderr(*refs):.5f}")

print("\ntranslates at the ends of the time window:")
ref = refs[0]
for t in theorem_window(delta):
    e = translate_average(box, rho, f, t, 10_000, seed=5)
    print(f"  t={t:.3f}: {e.value:.5f} +- {e.stderr:.5f}, |D| = {abs(e.value - ref.value):.5f} "
          f"(combined stderr {combined_stderr(e, ref):.5f})")
