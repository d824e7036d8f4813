"""Neumann inversion and the lace-expansion transformation.

Given a two-point function G obeying the renewal form
G = delta + (pD + Pi) * G, the off-origin part of pD + Pi renormalizes into
a step distribution

    tildeD(x) = (pD(x) + Pi(x)) / (p + sum_{y != 0} Pi(y)),   x != 0,

with killing mu_p = (p + sum_{y!=0} Pi(y)) / (1 - Pi(0)) and amplitude
A_p = 1/(1 - Pi(0)), so that G = A_p * S_{mu_p}[tildeD] identically.  This
module builds that transformation, checks its positivity and perturbation
diagnostics, inverts fields by genuine Neumann series, measures convolution
closure constants for the two-regime envelope, and evaluates the bootstrap
function b(p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import StepDistribution, nnnorm
from .lattice import Field, convolve, delta_field, fourier, symmetrize
from .greens import bound_pieces, greens


class LaceError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Neumann inversion


def neumann_inverse(h: Field, tol=1e-12, n_cap=10_000):
    """Convolution inverse of h by the Neumann series sum_n (delta - h)^{*n}.

    The contraction factor is measured spectrally as rho = max_k |1 - hhat(k)|
    and must be < 1; iteration stops once the increment's sup norm drops
    below tol*(1 - rho), which bounds the discarded tail of the geometric
    series, or fails at n_cap.
    """
    hh = fourier(h).values
    rho = float(np.abs(1.0 - hh).max())
    if rho >= 1.0:
        raise LaceError(f"not contractive: spectral proxy rho = {rho:.6f} >= 1")
    box = h.box
    r = delta_field(box).values - h.values
    rf = Field(box, r)
    g = delta_field(box)
    term = delta_field(box)
    for n in range(1, n_cap + 1):
        term = convolve(term, rf)
        g = Field(box, g.values + term.values)
        if np.abs(term.values).max() < tol * (1.0 - rho):
            return g
    raise LaceError(f"Neumann series did not reach tol={tol:g} within {n_cap} terms")


def pi_from_inverse(g: Field):
    """The lace kernel delta - g for an inverse g = h^{-1}."""
    return Field(g.box, delta_field(g.box).values - g.values)


# ---------------------------------------------------------------------------
# convolution envelope closure


def envelope_field(box, theta, phi, psi, spec):
    """E(x) = delta + L^{-(d+phi)} <x/L>_1^{-(d+theta)} (log <x/L>_1)^{-psi}."""
    L, d = spec.L, spec.d
    r = box.radius()
    y = nnnorm(r, L) / L
    vals = L ** (-(d + phi)) * y ** (-(d + theta)) * np.log(y) ** (-psi)
    vals.flat[0] += 1.0
    return Field(box, vals)


def conv_bound_check(f1, f2, theta, phi, psi, spec):
    """Smallest C with |f1*f2| <= C * envelope pointwise.

    Both inputs must obey the envelope themselves (scanned; error if not).
    theta > 0 is required for the envelope to be summable-normalizable.
    """
    if theta <= 0:
        raise LaceError(f"theta must be positive, got {theta}")
    E = envelope_field(f1.box, theta, phi, psi, spec).values
    for name, f in (("f1", f1), ("f2", f2)):
        exceed = np.abs(f.values) / E
        worst = float(exceed.max())
        if worst > 1.0 + 1e-12:
            raise LaceError(f"{name} violates the envelope: max ratio {worst:.6g}")
    conv = convolve(f1, f2).values
    C = float((np.abs(conv) / E).max())
    if not math.isfinite(C):
        raise LaceError("convolution bound not finite")
    return C


# ---------------------------------------------------------------------------
# the lace transformation


@dataclass
class LaceData:
    """Output of the renormalization pD + Pi -> (tildeD, mu_p, A_p)."""

    Pi: Field
    p: float
    Pi0: float
    mu_p: float
    A_p: float
    tildeD: StepDistribution
    positivity_margin: float
    decay_constants: dict

    def summary(self):
        return {
            "p": self.p,
            "Pi0": self.Pi0,
            "mu_p": self.mu_p,
            "A_p": self.A_p,
            "positivity_margin": self.positivity_margin,
            **{k: v for k, v in self.decay_constants.items()},
        }


def _exponent_guard(spec):
    """Mean-field exponent arithmetic: requires d >= d_c and
    alpha <= 2 + (ell-1)(d - d_c); both are refused otherwise."""
    ell = spec.ell
    if spec.d < spec.d_c:
        raise LaceError(
            f"d = {spec.d} below d_c = {spec.d_c:.4g} for model {spec.model!r}"
        )
    cap = 2.0 + (ell - 1) * (spec.d - spec.d_c)
    if spec.alpha > cap:
        raise LaceError(f"alpha = {spec.alpha} exceeds admissible cap {cap:.4g}")
    assert ell * (spec.d - spec.alpha_eff) >= spec.d + spec.alpha_eff - 1e-12


def build_tilde_D(p, D: StepDistribution, Pi: Field):
    """Renormalize pD + Pi into a step distribution plus (mu_p, A_p).

    p is accepted on (0, 1.2] (the bootstrap clamp caps the upper end; small
    subcritical activities are needed for enumeration pipelines).  Errors if
    the off-origin positivity margin min_{x!=0}(pD(x) + Pi(x)) is negative,
    reporting the violating site.
    """
    spec, box = D.spec, D.box
    if not (0.0 < p <= 1.2):
        raise LaceError(f"activity p must lie in (0, 1.2], got {p}")
    if Pi.box != box:
        raise LaceError("Pi lives on a different box than D")
    _exponent_guard(spec)

    combo = p * D.D.values + Pi.values
    off = combo.copy()
    off.flat[0] = np.inf  # origin excluded from the margin
    margin = float(off.min())
    if margin < 0.0:
        worst = int(np.argmin(off))
        coords = np.unravel_index(worst, box.shape)
        signed = [int(c if c < box.M // 2 else c - box.M) for c in coords]
        raise LaceError(
            f"positivity margin {margin:.3e} < 0 at x = {signed}; "
            f"construction refused"
        )

    Pi0 = float(Pi.values.flat[0])
    Pi_off = float(Pi.values.sum() - Pi0)
    mass = p + Pi_off
    if mass <= 0:
        raise LaceError(f"off-origin mass p + sum Pi = {mass:.3e} not positive")
    td = combo / mass
    td.flat[0] = 0.0
    td_field = Field(box, td)
    td_hat = fourier(td_field)
    tildeD = StepDistribution(
        spec, box, td_field, Field(box, td_hat.values.real.copy()), 0.0, mass
    )
    mu_p = mass / (1.0 - Pi0)
    A_p = 1.0 / (1.0 - Pi0)

    # perturbation diagnostics: tildeD is a small multiple of D pointwise and
    # spectrally when Pi is a genuine lace correction
    mask = np.ones(box.shape, dtype=bool)
    mask.flat[0] = False
    dev_pt = float(np.abs(td[mask] / D.D.values[mask] - 1.0).max())
    one_minus_ratio = (1.0 - tildeD.Dhat.values) / (1.0 - D.Dhat.values)
    ok = np.abs(1.0 - D.Dhat.values) > 1e-13
    dev_sp = float(np.abs(one_minus_ratio[ok] - 1.0).max())
    decay = {"max_rel_dev_pointwise": dev_pt, "max_rel_dev_spectral": dev_sp}

    return LaceData(Pi, float(p), Pi0, float(mu_p), float(A_p), tildeD, margin, decay)


# ---------------------------------------------------------------------------
# bootstrap function


@dataclass
class BootstrapEvaluation:
    p: float
    b_value: float
    argmax_x: tuple
    K_C_used: float


def bootstrap_b(G: Field, spec, p, K_C):
    """b(p) = max(p, sup_{x != 0} G(x) / (K_C * near-envelope(x))).

    The denominator is the static random-walk bound K_C L^{-a} <x>_L^{-(d-a)}
    (log-corrected at alpha = 2).  Ties in the argmax resolve to the
    lexicographically smallest signed coordinate tuple for reproducibility.
    """
    if K_C <= 0:
        raise LaceError(f"K_C must be positive, got {K_C}")
    box = G.box
    r = box.radius()
    near, _ = bound_pieces(spec, r, 1.0, K_C)
    ratio = G.values / near
    ratio.flat[0] = -np.inf
    best = float(ratio.max())
    ties = np.flatnonzero(ratio >= best * (1.0 - 1e-14) - 1e-300)
    coords = []
    for flat in ties:
        c = np.unravel_index(flat, box.shape)
        coords.append(tuple(int(v if v < box.M // 2 else v - box.M) for v in c))
    argmax = min(coords)
    return BootstrapEvaluation(float(p), max(float(p), best), argmax, float(K_C))


# ---------------------------------------------------------------------------
# identity verification


def renewal_defect(G: Field, D: StepDistribution, p, Pi: Field):
    """The residual field E = G - delta - (pD + Pi) * G (zero when the lace
    equation holds exactly)."""
    kernel = Field(G.box, p * D.D.values + Pi.values)
    conv = convolve(kernel, G)
    return Field(G.box, G.values - delta_field(G.box).values - conv.values)


def verify_identity(G: Field, lace: LaceData, tol=1e-10):
    """Check G = A_p * S_{mu_p}[tildeD] by rebuilding the right-hand side.

    Returns a report with the absolute sup deviation over the box and the
    relative sup deviation restricted to |x| <= M/8; PASS iff the relative
    deviation meets tol.
    """
    if lace.mu_p >= 1.0:
        raise LaceError(
            f"identity check requires mu_p < 1, got {lace.mu_p:.6f} "
            f"(critical pipelines go through the series diagnostic)"
        )
    box = G.box
    S = greens(lace.tildeD, lace.mu_p)
    recon = lace.A_p * S.values.values
    diff = np.abs(G.values - recon)
    sup_abs = float(diff.max())

    r = box.radius()
    window = r <= box.M / 8.0
    denom = np.abs(G.values[window])
    rel = float((diff[window] / np.maximum(denom, 1e-300)).max())
    return {
        "sup_abs": sup_abs,
        "sup_rel_window": rel,
        "mu_p": lace.mu_p,
        "A_p": lace.A_p,
        "pass": bool(rel <= tol),
    }


def susceptibility(G: Field):
    return float(G.values.sum())
