"""Summability at the critical point through smoothed windowed sums.

For F = delta - mu D the total mass of G = F^{-1} (the resolvent) obeys a
sharp dichotomy: sum_x G(x) = 1/Fhat(0) is finite exactly when
Fhat(0) = 1 - mu is nonzero.  Plain partial sums see this, but their
sharp-cutoff oscillation obscures the rate; the smoothed window
(1 - (|x|/R)^2)^a is an approximate identity for a > (d-1)/2 and turns the
divergent case into a clean power law W(R) ~ R^alpha.
"""

import numpy as np

from longrange import (Field, KernelSpec, bochner_riesz, build_kernel,
                       critical_sum_demo, delta_field)


def watch(D, mu, R_grid):
    F = Field(D.box, delta_field(D.box).values - mu * D.D.values)
    rep = critical_sum_demo(F, R_grid)
    print(f"mu = {mu}: sum F = {rep['sum_F']:.3e}, "
          f"classification '{rep['classification']}'")
    for R, w in zip(rep["R_grid"], rep["W"]):
        print(f"    W({R:7.0f}) = {w:10.4f}")
    if rep["classification"] == "bounded":
        print(f"    limit 1/Fhat(0) = {rep['limit']:.4f}, relative deviation "
              f"at R_max = {rep['rel_dev_at_Rmax']:.2%}")
    else:
        print(f"    log W / log R slope = {rep['growth_slope']:.4f} "
              f"(alpha = {D.spec.alpha})")
    return rep


# ---------------------------------------------------------------------------
# the window itself is exactly normalized

box1 = build_kernel(KernelSpec(d=1, alpha=0.5, L=4, M=256, model="rw",
                               tail_mass_cap=1.0)).box
one = delta_field(box1)
vals = [bochner_riesz(one, R, 1.0, [0.4]).real for R in (2, 16, 100)]
print(f"window on the delta field (any R, any frequency): {vals}\n")

# ---------------------------------------------------------------------------
# subcritical: W(R) -> 1/(1-mu)

D = build_kernel(KernelSpec(d=1, alpha=0.5, L=4, M=2 ** 17, model="rw",
                            tail_mass_cap=1.0))
watch(D, 0.9, [2.0 ** k for k in range(7, 15)])
print()

# ---------------------------------------------------------------------------
# critical: the zero mode drops out and W grows like R^alpha

watch(D, 1.0, [2.0 ** k for k in range(5, 12)])
