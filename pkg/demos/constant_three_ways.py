"""Sharp constant for n = 3, alpha = 2 by closed form, quadrature and fixed-point search."""
from halfspace_hls.discretization import build_ball_quadrature, build_sphere_mesh
from halfspace_hls.exponents import critical_config
from halfspace_hls.extremals import closed_form_constant_alpha2, quadrature_constant
from halfspace_hls.operators import DiscreteOperator
from halfspace_hls.optimize import classify_extremal, find_extremal, random_positive_field

cfg = critical_config(3, 2.0)
sphere, ball = build_sphere_mesh(3, 24), build_ball_quadrature(3, 16, 24)
exact = closed_form_constant_alpha2(3)
quad = quadrature_constant(3, 2.0, ball, sphere)
print(f"p = {cfg.p:.6f}  q = {cfg.q:.6f}")
print(f"closed form   {exact:.12f}")
print(f"quadrature    {quad.value:.12f}  (refinement estimate {quad.est_error:.1e})")

res = find_extremal(random_positive_field(sphere, seed=7), DiscreteOperator(sphere, ball, cfg))
print("\nfixed-point search from a random start (seed 7)")
print(" step  ratio            raw residual  orbit residual")
for k, (r, s, o) in enumerate(zip(res.ratios, res.step_residuals, res.orbit_residuals)):
    print(f" {k:>4}  {r:.12f}   {s:.3e}     {o:.3e}")
params, misfit = classify_extremal(res.field, cfg)
print(f"converged={res.converged}  rel. error {abs(res.ratios[-1] / exact - 1):.1e}")
print(f"pulled-back bubble: d = {params.d:.4f}, centre = {params.y0}, misfit {misfit:.1e}")
