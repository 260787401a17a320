"""
Rich measures and the thickening bookkeeping, all in exact arithmetic.

A measure on the non-horocyclic directions is thickened into a density phi on
the whole leaf: each cube of side delta keeps its mass but spreads it over a
small box.  The identities below hold as equalities of rationals.

Run:  python demos/rich_measures.py
"""
from fractions import Fraction

from flatequi.equidistribution import tau, theorem_window
from flatequi.measures import (folner_defect, make_measure, partition_weights, phi_integral,
                               phi_sup, phi_sup_bound, richness_check)

delta = Fraction(1, 81)
for kind, params in [("cantor_product", {"dimension": 0.9}), ("uniform", {}),
                     ("atomic_net", {"spacing": 1 / 9})]:
    rho = make_measure(kind, 2, params=params)
    pw = partition_weights(rho, delta)
    rep = richness_check(rho, float(delta), 0.2, 4.0)
    print(f"{kind:15s} cells {len(pw.weights):5d}  sum c_k = {pw.total()}  int phi = {phi_integral(pw)}"
          f"  sup phi = {float(phi_sup(pw)):.4g}  rich(b=4): {rep.verdict}"
          f"  bound: {phi_sup_bound(pw, 4, Fraction(1, 5))}")

# shifting a box along the horocycle by rho changes it by exactly 2 rho vol(B_k)
rho = make_measure("cantor_product", 2, params={"dimension": 0.9})
pw = partition_weights(rho, delta)
k = next(iter(pw.weights))
for t in theorem_window(delta):
    T = Fraction(tau(t))
    print(f"t={t:.3f} tau={float(T):.4f}: defect/vol = "
          + ", ".join(str(folner_defect(pw, k, rt) / pw.box_volume / rt) for rt in (T / 4, T / 2, T)))
