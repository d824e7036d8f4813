"""Heavy-tailed step distributions and their spectral assumption checks.

The reference family on (Z/MZ)^d is built from the floored norm

    <x>_L = (pi/2) * max(|x|, L),   |x| Euclidean,

as D(x) = Z^{-1} <x/L>_1^{-(d+alpha)} for x != 0, D(0) = 0, with Z the box
normalization.  For this exact profile the ratio D(x) <x>_L^{d+alpha} / L^alpha
is constant in x, which the assumption check verifies numerically rather than
assumes.  Each model (self-avoiding walk, Ising, percolation, plain random
walk) carries the loop order ell fixing its upper-critical dimension
d_c = (ell+1)/(ell-1) * min(alpha, 2).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .lattice import Field, fourier, is_symmetric, make_box

# loop order per model; the random walk has no loop correction but is graded
# like the three-point models by convention.
MODEL_ELL = {"saw": 3, "ising": 3, "percolation": 2, "rw": 3}


class KernelError(ValueError):
    """Invalid kernel specification or failed certification."""


def nnnorm(x, L):
    """Floored norm <x>_L = (pi/2) * max(|x|, L).

    `x` is a Euclidean length (scalar or array); L > 0 is the kernel range.
    Satisfies <x>_L = L * <x/L>_1 and log <x/L>_1 >= log(pi/2) > 0.
    """
    return 0.5 * np.pi * np.maximum(np.abs(x), L)


@dataclass(frozen=True)
class KernelSpec:
    d: int
    alpha: float
    L: float
    M: int
    model: str = "rw"
    tail_mass_cap: float = 0.1

    def __post_init__(self):
        if self.model not in MODEL_ELL:
            raise KernelError(f"unknown model {self.model!r}, know {sorted(MODEL_ELL)}")
        if not (self.alpha > 0):
            raise KernelError(f"alpha must be positive, got {self.alpha}")
        if not (self.L >= 1):
            raise KernelError(f"range L must be >= 1, got {self.L}")

    @property
    def ell(self):
        return MODEL_ELL[self.model]

    @property
    def alpha_eff(self):
        """Exponent min(alpha, 2) governing the walk scale."""
        return min(self.alpha, 2.0)

    @property
    def d_c(self):
        ell = self.ell
        return (ell + 1) / (ell - 1) * self.alpha_eff

    @property
    def log_corrected(self):
        """alpha == 2 sits on the boundary and picks up log factors."""
        return self.alpha == 2.0


@dataclass
class StepDistribution:
    """A normalized symmetric step kernel with its transform and certificates.

    tail_mass_cut bounds the relative mass of the infinite-lattice kernel
    falling outside the box (certified by a shell-sum comparison), i.e. the
    size of the truncate-and-renormalize perturbation.  renorm_factor is the
    box normalization Z.
    """

    spec: KernelSpec
    box: object
    D: Field
    Dhat: Field
    tail_mass_cut: float
    renorm_factor: float


@dataclass
class AssumptionReport:
    """Numerical certificate for the kernel decay/spectral-gap assumption.

    K_lb_hat/K_ub_hat bracket D(x) <x>_L^{d+alpha} / L^alpha over x != 0;
    Delta_hat = min over grid frequencies with |k|_inf > 1/L of (1 - Dhat(k)).
    """

    K_lb_hat: float
    K_ub_hat: float
    Delta_hat: float
    passed: bool

    def to_json(self, **extra):
        payload = {
            "K_lb_hat": self.K_lb_hat,
            "K_ub_hat": self.K_ub_hat,
            "Delta_hat": self.Delta_hat,
            "pass": self.passed,
        }
        payload.update(extra)
        return json.dumps(payload, indent=2, sort_keys=True)


def _tail_mass_bound(spec, Z):
    """Certified bound on sum_{x outside box} <x/L>_1^{-(d+alpha)} / Z.

    Sites outside the fundamental domain have |x|_inf >= M/2, so |x| >= M/2
    and the summand is at most ((pi/(2L)) m)^{-(d+alpha)} on the shell
    |x|_inf = m, which holds at most 2d (2m+1)^{d-1} <= 2d (3m)^{d-1} sites.
    An integral comparison over m >= M/2 closes the bound.
    """
    d, alpha, L, M = spec.d, spec.alpha, spec.L, spec.M
    R = M // 2
    pref = 2 * d * 3 ** (d - 1) * (2 * L / math.pi) ** (d + alpha)
    return pref * (R - 1) ** (-alpha) / alpha / Z


def build_kernel(spec, box=None):
    """Build the truncated-and-renormalized step distribution for `spec`.

    Requires M > 4L so the box resolves at least the floor region; errors if
    the certified out-of-box tail mass exceeds spec.tail_mass_cap.
    """
    if box is None:
        box = make_box(spec.d, spec.M)
    if box.d != spec.d or box.M != spec.M:
        raise KernelError(f"box {box} does not match spec {spec}")
    if spec.M <= 4 * spec.L:
        raise KernelError(f"need M > 4L, got M={spec.M}, L={spec.L}")

    r = box.radius()
    v = (nnnorm(r, spec.L) / spec.L) ** (-(spec.d + spec.alpha))
    v.flat[0] = 0.0
    Z = float(v.sum())
    tail = _tail_mass_bound(spec, Z)
    if tail > spec.tail_mass_cap:
        raise KernelError(
            f"certified tail mass {tail:.3e} exceeds cap {spec.tail_mass_cap:.3e}; "
            f"increase M or the cap"
        )
    D = Field(box, v / Z)
    Dh = fourier(D)
    imax = np.abs(Dh.values.imag).max()
    if imax > 1e-12:
        raise KernelError(f"transform not real: max imag {imax:.3e}")
    Dhat = Field(box, Dh.values.real.copy())
    return StepDistribution(spec, box, D, Dhat, tail, Z)


def check_assumption(D: StepDistribution):
    """Scan the decay-constant bracket and the high-frequency spectral gap.

    The K ratio is scanned over every x != 0; Delta_hat over every grid
    frequency with |k|_inf > 1/L.  pass requires a strictly positive gap, a
    finite positive K bracket, and |Dhat| <= 1 everywhere.
    """
    spec, box = D.spec, D.box
    r = box.radius()
    ratio = D.D.values * nnnorm(r, spec.L) ** (spec.d + spec.alpha) / spec.L ** spec.alpha
    mask = np.ones(box.shape, dtype=bool)
    mask.flat[0] = False
    K_lb = float(ratio[mask].min())
    K_ub = float(ratio[mask].max())

    kg = box.kfreqs()
    kinf = np.abs(kg[0])
    for g in kg[1:]:
        kinf = np.maximum(kinf, np.abs(g))
    high = kinf > 1.0 / spec.L
    one_minus = 1.0 - D.Dhat.values
    Delta = float(one_minus[high].min()) if high.any() else float("nan")

    ok = bool(
        np.isfinite(K_lb)
        and np.isfinite(K_ub)
        and K_lb > 0
        and 0.0 < Delta < 2.0
        and np.abs(D.Dhat.values).max() <= 1.0 + 1e-12
    )
    return AssumptionReport(K_lb, K_ub, Delta, ok)


def truncate_kernel(D: StepDistribution, radius):
    """Restrict a kernel to |x| <= radius and renormalize.

    The result is a proper StepDistribution for the finite-range model
    (useful for exhaustive enumerations); the discarded mass is recorded in
    tail_mass_cut.
    """
    box = D.box
    keep = box.radius() <= radius
    v = np.where(keep, D.D.values, 0.0)
    v.flat[0] = 0.0
    Z = float(v.sum())
    if Z <= 0:
        raise KernelError(f"no kernel mass inside radius {radius}")
    vals = v / Z
    f = Field(box, vals)
    fh = fourier(f)
    return StepDistribution(
        D.spec, box, f, Field(box, fh.values.real.copy()),
        D.tail_mass_cut + (1.0 - Z), D.renorm_factor * Z,
    )


def ising_transform(beta, J: Field):
    """Map ferromagnetic couplings J >= 0 at inverse temperature beta to the
    random-walk pair (p, D) with p = sum tanh(beta J) and D = tanh(beta J)/p.

    Returns (p, D, diagnostics); diagnostics report the relative deviation of
    D from J / sum(J) over the support of J and of p from beta * sum(J),
    both of which vanish as beta -> 0.
    """
    if np.iscomplexobj(J.values):
        raise KernelError("couplings must be real")
    if (J.values < 0).any():
        raise KernelError("couplings must be nonnegative")
    if J.values.flat[0] != 0.0:
        raise KernelError("self-coupling J(0) must vanish")
    if not is_symmetric(J):
        raise KernelError("couplings must be symmetric under x -> -x")
    t = np.tanh(beta * J.values)
    p = float(t.sum())
    if p <= 0:
        raise KernelError("total coupling mass is zero")
    D = Field(J.box, t / p)
    Jsum = float(J.values.sum())
    supp = J.values > 0
    dev_D = float(np.abs(D.values[supp] * Jsum / J.values[supp] - 1.0).max())
    dev_p = abs(p / (beta * Jsum) - 1.0)
    return p, D, {"max_rel_dev_D_vs_J": dev_D, "rel_dev_p_vs_betaJ": dev_p}
