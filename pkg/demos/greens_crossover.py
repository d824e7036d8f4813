"""The near/far crossover of the random-walk Green's function S_mu.

For a heavy-tailed step law with exponent alpha < d the resolvent
S_mu = sum_n mu^n D^{*n} interpolates between two power laws:

* near regime  |x| << x*(mu):  S_mu(x) ~ |x|^{-(d-alpha)}  (critical decay),
* far regime   |x| >> x*(mu):  S_mu(x) ~ |x|^{-(d+alpha)}  (one-step decay),

with the crossover at <x/L>_1^alpha (1-mu) = 1.  At mu = 1 only the near
regime survives; the partial series carries a certified remainder from the
measured heat-kernel envelope, and slope fits use certified rows only.
"""

import numpy as np

from longrange import KernelSpec, build_kernel, crossover_profile

spec = KernelSpec(d=1, alpha=0.5, L=4, M=2 ** 19, model="rw",
                  tail_mass_cap=1.0)
D = build_kernel(spec)

# quarter-decade distance ladder inside the fit window [8L, M/8]
xs = sorted(set(int(round(32 * 2 ** (k / 4))) for k in range(45)))
xs = [x for x in xs if x <= spec.M // 8]

mus = [1.0, 0.9, 0.7]
prof = crossover_profile(D, mus, xs)

# ---------------------------------------------------------------------------
# slope fits per regime

print(f"box M = 2^19, distances {xs[0]}..{xs[-1]}, mu in {mus}")
print(f"expected: near -(d-alpha) = {-(spec.d - spec.alpha)}, "
      f"far -(d+alpha) = {-(spec.d + spec.alpha)}")
for mu in mus:
    near = prof.slopes[(mu, "near")]
    far = prof.slopes[(mu, "far")]
    xstar = prof.x_star[mu]
    fmt = lambda s: "   (too few rows)" if s is None else f"{s:+.4f}"
    star = "infinite" if not np.isfinite(xstar) else f"{xstar:9.1f}"
    print(f"  mu={mu:5}: x* = {star}   near {fmt(near)}   far {fmt(far)}")

# ---------------------------------------------------------------------------
# one profile row in full

i = np.argmin(np.abs(prof.x - 1024) + np.where(prof.mu == 0.9, 0, 1e9))
print(f"\nsample row (mu=0.9, x={prof.x[i]:.0f}, {prof.regime[i]} regime):")
print(f"  S = {prof.S[i]:.6e}")
print(f"  near envelope = {prof.near_bound[i]:.6e}")
print(f"  far envelope  = {prof.far_bound[i]:.6e}")
print(f"  lower bound   = {prof.lower_bound[i]:.6e}  "
      f"(ratio S/bound = {prof.S[i] / prof.lower_bound[i]:.3f})")
print(f"  certified: {bool(prof.certified[i])}")
print("\nnote: the lower bound is asymptotic -- it absorbs an L-dependent")
print("constant, so at moderate mu the ratio can dip slightly below 1;")
print("close to criticality (mu = 0.999, say) it holds pointwise.")
