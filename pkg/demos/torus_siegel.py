"""
Expanding translates on the space of unimodular lattices.

The square torus is a single point of the space of lattices, and its
horocycle orbit closes up after time one.  Pushing that closed orbit by the
geodesic flow spreads it out, so the average of a Siegel transform over the
pushed orbit should approach the Haar integral, which has a closed form.

Run:  python demos/torus_siegel.py
"""
from flatequi.equidistribution import (correlation_decay, make_test_function, rate_fit,
                                       reference_integral, translate_average)
from flatequi.errors import InsufficientPoints
from flatequi.foliation import period_box
from flatequi.measures import make_measure
from flatequi.surface import square_torus

f = make_test_function("siegel_annulus", {"a": 1.0, "b": 2.0, "smoothing": 0.1})
ref = reference_integral(f, "torus", "siegel_formula")
print(f"Haar integral of the Siegel transform (closed form): {ref.value:.10f}")
print(f"at the square torus itself the transform is {f(square_torus()):.6f}")

# the box around the square torus has no non-horocyclic directions, so the leaf
# measure is a point mass and the average is over the horocycle segment alone
box = period_box(square_torus(), 0.4)
rho = make_measure("point_mass", 0)
print("\n   t    average     stderr    |D|")
series = []
for t in (0.5, 1.0, 2.0, 3.0, 4.0, 6.0):
    e = translate_average(box, rho, f, t, 100_000, seed=int(10 * t))
    D = abs(e.value - ref.value)
    series.append((t, D, e.stderr))
    print(f"{t:4.1f}  {e.value:9.5f}  {e.stderr:9.5f}  {D:7.4f}")

# the discrepancy drops below noise quickly, so only the early points carry a slope
try:
    fit = rate_fit(series)
    print(f"\nlog|D| ~ {fit.slope:.3f} t  over {fit.n_points} points above noise")
except InsufficientPoints as exc:  # a legitimate outcome when noise wins early
    print(f"\nno rate fit: {exc}")

# mixing: correlations of the same observable decay exponentially in t
print("\ncorrelation <f o a_t, f> - (int f)^2 from Haar samples")
corr = correlation_decay(f, f, "torus", [0.5, 1.0, 1.5, 2.0, 2.5, 3.0], 200_000, seed=7)
for c in corr:
    print(f"  t={c.t:3.1f}  {c.value:+.5f} +- {c.stderr:.5f}")
fit = rate_fit(corr)
print(f"fitted decay rate {-fit.slope:.2f} (r2 {fit.r_squared:.2f}), points below noise dropped")
