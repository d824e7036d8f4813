"""Random-walk Green's functions, heat-kernel constants, crossover bounds.

For a step distribution D and killing parameter mu <= 1 the walk resolvent

    S_mu = sum_{n>=0} mu^n D^{*n}

is computed two ways: `greens_series` sums the truncated series (the only
route used at mu = 1, with a certified remainder), and `greens_fourier`
inverts 1 - mu*Dhat spectrally (mu < 1 only).  Heat-kernel iterates D^{*n}
feed the sup-norm and pointwise constants

    c_sup(n) = ||D^{*n}||_inf * (L n^{1/a})^d,
    c_pt(n, x) = D^{*n}(x) * <x>_L^{d+a} / (n L^a),        a = min(alpha, 2),

with the usual extra logarithms at alpha = 2.  The crossover machinery
evaluates the two-regime envelope

    S_mu(x) <= delta_{0,x} + K_C / (L^a <x>_L^{d-a})
               * min{1, [<x/L>_1^a (1-mu)]^{-2}}

row by row and classifies each x as near- or far-field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield

import numpy as np
import scipy.fft

from .kernels import nnnorm
from .lattice import Field

# Negative values of this relative size in an inverse FFT of a nonnegative
# series are roundoff; they are clamped so downstream log-log fits are safe.
_ROUNDOFF_CLAMP = 1e-13

# Never let the series run away: protects against mu ~ 1 with tiny tol.
_SERIES_HARD_CAP = 500_000


class GreensError(ValueError):
    pass


# ---------------------------------------------------------------------------
# walk scale and wrap control


def walk_scale(spec, n):
    """Typical displacement L n^{1/min(alpha,2)} after n steps (log-corrected
    at alpha = 2)."""
    if spec.log_corrected:
        n = np.maximum(np.asarray(n, dtype=float), 1.0)
        return spec.L * np.sqrt(n * np.log(np.pi * n / 2.0 + np.e))
    return spec.L * np.asarray(n, dtype=float) ** (1.0 / spec.alpha_eff)


def wrap_horizon(spec):
    """Largest n whose walk scale stays below M/4, so that torus iterates
    still agree with their infinite-lattice counterparts to leading order."""
    target = spec.M / 4.0
    if not spec.log_corrected:
        return max(1, int((target / spec.L) ** spec.alpha_eff))
    n = 1
    while walk_scale(spec, 2 * n) <= target:
        n *= 2
    while walk_scale(spec, n + 1) <= target:
        n += 1
    return n


# ---------------------------------------------------------------------------
# heat kernel iterates


@dataclass
class HeatKernelTable:
    """Sup norms and normalized constants for D^{*n}, n = 1..n_max."""

    powers: np.ndarray
    sup_norms: np.ndarray
    constants: dict


def heat_iterates(D, n_max, xs=None):
    """Tabulate ||D^{*n}||_inf and the heat-kernel constants for n <= n_max.

    Parameters
    ----------
    D : StepDistribution
    n_max : int
    xs : optional list of distances along the first axis at which the
        pointwise constants c_pt(n, x) are recorded as well.

    The iterates are formed by running spectral powers (one inverse
    transform per n), which is exact on the torus.
    """
    spec, box = D.spec, D.box
    if n_max < 1:
        raise GreensError("n_max must be >= 1")
    a = spec.alpha_eff
    powers = np.arange(1, n_max + 1)
    sups = np.empty(n_max)
    xs = list(xs) if xs is not None else []
    idxs = [box.index_of([x] + [0] * (box.d - 1)) for x in xs]
    pt_vals = np.empty((n_max, len(xs)))

    Dh = D.Dhat.values
    term = np.ones_like(Dh)
    for i, n in enumerate(powers):
        term = term * Dh
        Pn = scipy.fft.fftn(term).real / box.n_sites
        sups[i] = np.abs(Pn).max()
        for j, flat in enumerate(idxs):
            pt_vals[i, j] = Pn.flat[flat]

    scale = walk_scale(spec, powers)
    c_sup = sups * scale ** box.d
    constants = {"c_sup": c_sup, "xs": xs}
    if xs:
        hx = nnnorm(np.array(xs, dtype=float), spec.L)
        denom = np.outer(powers.astype(float), spec.L ** a * np.ones(len(xs)))
        c_pt = pt_vals * hx ** (box.d + a) / denom
        if spec.log_corrected:
            c_pt = c_pt / np.log(hx / spec.L)
        constants["c_pt"] = c_pt
    return HeatKernelTable(powers, sups, constants)


# ---------------------------------------------------------------------------
# Green's functions


@dataclass
class GreensFunction:
    D: object
    mu: float
    values: Field = dfield(repr=False)
    method: str = "series"
    remainder_bound: float = 0.0
    N_used: int | None = None

    def total(self):
        return float(self.values.total())


def _clamp_roundoff(vals):
    m = vals.max()
    neg = vals < 0
    if neg.any():
        worst = -vals[neg].min()
        if worst > _ROUNDOFF_CLAMP * (1.0 + m):
            raise GreensError(f"negative series value {-worst:.3e} beyond roundoff")
        vals = np.where(neg, 0.0, vals)
    return vals


def _sup_envelope_constant(D, dyadic_sups):
    """Largest measured c_sup over the sampled powers (heat envelope)."""
    spec = D.spec
    best = 0.0
    for n, s in dyadic_sups:
        best = max(best, s * walk_scale(spec, n) ** D.box.d)
    return best


def _critical_tail(D, N, c_hat):
    """Model bound on sum_{n>N} ||D^{*n}||_inf from the measured envelope."""
    spec = D.spec
    d, a = spec.d, spec.alpha_eff
    if not spec.log_corrected:
        expo = d / a
        return c_hat * spec.L ** (-d) * N ** (1.0 - expo) / (expo - 1.0)
    expo = d / 2.0
    lg = math.log(math.pi * N / 2.0 + math.e)
    return c_hat * spec.L ** (-d) * lg ** (-expo) * N ** (1.0 - expo) / (expo - 1.0)


def greens_series(D, mu, tol=1e-10):
    """Partial sum S_N = sum_{n<=N} mu^n D^{*n} with a certified remainder.

    For mu < 1 the term count comes from the geometric tail
    mu^{N+1}/(1-mu) <= tol.  At mu = 1 (massless walk; requires d > alpha_eff)
    N is capped by the wrap horizon of the box and the remainder bound is the
    measured heat-kernel sup-norm envelope extrapolated by the n^{-d/a}
    profile; when tol is unreachable on this box the actual achieved bound is
    reported instead of failing.

    The partial sum is accumulated on the spectral side (a running product
    mu^n Dhat^n), which is the same truncated series transformed once; no
    resolvent division is ever performed here.
    """
    spec, box = D.spec, D.box
    if not (0.0 <= mu <= 1.0):
        raise GreensError(f"mu must be in [0, 1], got {mu}")

    if mu < 1.0:
        if mu == 0.0:
            N = 0
        else:
            N = int(math.ceil(math.log(tol * (1.0 - mu)) / math.log(mu)))
            N = max(N, 1)
        if N > _SERIES_HARD_CAP:
            raise GreensError(f"series needs {N} terms, above cap {_SERIES_HARD_CAP}")
        remainder = mu ** (N + 1) / (1.0 - mu)
    else:
        if spec.d <= spec.alpha_eff:
            raise GreensError(
                f"massless series diverges for d <= alpha_eff "
                f"(d={spec.d}, alpha_eff={spec.alpha_eff})"
            )
        N = wrap_horizon(spec)
        remainder = None  # filled after the envelope is measured

    Dh = D.Dhat.values
    zh = mu * Dh
    Shat = np.ones_like(Dh)
    term = np.ones_like(Dh)
    dyadic = []
    probe = 4
    for n in range(1, N + 1):
        term = term * zh
        Shat = Shat + term
        if mu == 1.0 and (n == probe or n == N) and n >= 4:
            Pn = scipy.fft.fftn(term).real / box.n_sites
            dyadic.append((n, np.abs(Pn).max()))
            if n == probe:
                probe *= 2
    vals = scipy.fft.fftn(Shat).real / box.n_sites
    vals = _clamp_roundoff(vals)

    if mu == 1.0:
        c_hat = _sup_envelope_constant(D, dyadic)
        remainder = _critical_tail(D, N, c_hat)

    return GreensFunction(D, mu, Field(box, vals), "series", float(remainder), N)


def greens_fourier(D, mu):
    """Resolvent S_mu via spectral inversion of 1 - mu*Dhat (mu < 1 only)."""
    spec, box = D.spec, D.box
    if not (0.0 <= mu < 1.0):
        raise GreensError(f"spectral inversion requires mu in [0, 1), got {mu}")
    denom = 1.0 - mu * D.Dhat.values
    margin = denom.min()
    if margin <= 0.0:
        raise GreensError(f"resolvent not invertible: min(1 - mu*Dhat) = {margin:.3e}")
    vals = scipy.fft.fftn(1.0 / denom).real / box.n_sites
    vals = _clamp_roundoff(vals)
    return GreensFunction(D, mu, Field(box, vals), "fourier", 0.0, None)


def greens(D, mu, tol=1e-10):
    """Series at mu = 1, spectral inversion below."""
    if mu == 1.0:
        return greens_series(D, mu, tol)
    return greens_fourier(D, mu)


# ---------------------------------------------------------------------------
# two-regime envelope and crossover profile


def crossover_scale(spec, mu):
    """Lattice distance x*(mu) where <x/L>_1^a (1-mu) = 1; infinite at mu=1."""
    if mu >= 1.0:
        return math.inf
    a = spec.alpha_eff
    return (2.0 * spec.L / math.pi) * (1.0 - mu) ** (-1.0 / a)


def bound_pieces(spec, r, mu, K_C=1.0):
    """Near and far envelope pieces at Euclidean distance r (no delta term).

    near = K_C / (L^a <x>_L^{d-a})  [alpha=2: an extra 1/log <x/L>_1]
    far  = near * [<x/L>_1^a (1-mu)]^{-2}  [alpha=2: one compensating log]
    """
    r = np.asarray(r, dtype=float)
    a = spec.alpha_eff
    hx = nnnorm(r, spec.L)
    y = hx / spec.L
    near = K_C / (spec.L ** a * hx ** (spec.d - a))
    if spec.log_corrected:
        near = near / np.log(y)
    if mu >= 1.0:
        far = np.full_like(near, np.inf)
    else:
        fac = (y ** a * (1.0 - mu)) ** (-2.0)
        if spec.log_corrected:
            fac = fac * np.log(y)
        far = near * fac
    return near, far


def footnote_lower_bound(r, mu, d, alpha):
    """Pointwise floor (2e)^{-1} |x|^{-(d-alpha)} min{1, (|x|^alpha log(1/mu))^{-2}}
    valid on the infinite lattice for x != 0 and alpha < 2."""
    r = np.asarray(r, dtype=float)
    lead = (1.0 / (2.0 * math.e)) * r ** (-(d - alpha))
    if mu >= 1.0:
        return lead
    lam = -math.log(mu)
    with np.errstate(divide="ignore"):
        fac = np.minimum(1.0, (r ** alpha * lam) ** (-2.0))
    return lead * fac


def check_upper_bound(S, K_C=1.0):
    """Scan S(x) against delta + K_C * min(near, far) over the whole box.

    Returns a report dict with the worst ratio and its location; the ratio is
    finite whenever the envelope holds with the given constant.
    """
    spec, box = S.D.spec, S.D.box
    r = box.radius()
    near, far = bound_pieces(spec, r, S.mu, K_C)
    bound = np.minimum(near, far) if S.mu < 1.0 else near
    bound.flat[0] = bound.flat[0] + 1.0  # delta term at the origin
    ratio = S.values.values / bound
    worst = int(np.argmax(ratio))
    coords = np.unravel_index(worst, box.shape)
    signed = [int(c if c < box.M // 2 else c - box.M) for c in coords]
    rmax = float(ratio.flat[worst])
    return {
        "ratio_max": rmax,
        "argmax_x": signed,
        "K_C_used": K_C,
        "finite": bool(np.isfinite(rmax)),
        "holds": bool(rmax <= 1.0),
    }


@dataclass
class CrossoverProfile:
    """Tabulated S_mu along the first axis with envelope rows and slope fits.

    rows: structured arrays over (mu, x); `regime` is "near" where
    <x/L>_1^a (1-mu) <= 1.  `certified` marks rows whose series remainder is
    below a tenth of the value (always true for spectral evaluations);
    slope fits only ever use certified rows inside [8L, M/8].
    """

    mu: np.ndarray
    x: np.ndarray
    S: np.ndarray
    near_bound: np.ndarray
    far_bound: np.ndarray
    lower_bound: np.ndarray
    regime: list
    certified: np.ndarray
    slopes: dict
    x_star: dict


def _fit_slope(xs, ys):
    lx, ly = np.log(xs), np.log(ys)
    A = np.vstack([lx, np.ones_like(lx)]).T
    sol, *_ = np.linalg.lstsq(A, ly, rcond=None)
    return float(sol[0])


def crossover_profile(D, mus, xs, tol=1e-10, certify_frac=0.1):
    """Evaluate S_mu at distances xs along the first axis for each mu.

    mu = 1 uses the certified series; mu < 1 the spectral resolvent.  Slope
    fits: `near` per mu over certified near-regime rows in [8L, M/8], `far`
    per mu over far-regime rows at least a decade beyond x*(mu) (None when
    fewer than six rows qualify).
    """
    spec, box = D.spec, D.box
    xs = np.asarray(sorted(xs), dtype=int)
    if xs.min() < 1 or xs.max() > box.M // 2 - 1:
        raise GreensError("profile distances must lie in [1, M/2)")

    rows_mu, rows_x, rows_S = [], [], []
    rows_near, rows_far, rows_low = [], [], []
    regimes, certified = [], []
    slopes, x_star = {}, {}
    lo_win, hi_win = 8 * spec.L, spec.M // 8

    for mu in mus:
        S = greens(D, mu, tol)
        idx = [box.index_of([x] + [0] * (box.d - 1)) for x in xs]
        Sx = np.array([S.values.values.flat[i] for i in idx])
        near, far = bound_pieces(spec, np.asarray(xs, float), mu)
        low = footnote_lower_bound(np.asarray(xs, float), mu, spec.d, spec.alpha)
        y = nnnorm(np.asarray(xs, float), spec.L) / spec.L
        is_near = y ** spec.alpha_eff * (1.0 - mu) <= 1.0
        cert = S.remainder_bound <= certify_frac * Sx

        rows_mu.append(np.full(len(xs), mu))
        rows_x.append(xs.astype(float))
        rows_S.append(Sx)
        rows_near.append(near)
        rows_far.append(far)
        rows_low.append(low)
        regimes.extend(["near" if b else "far" for b in is_near])
        certified.append(cert)
        x_star[mu] = crossover_scale(spec, mu)

        win = (xs >= lo_win) & (xs <= hi_win) & cert
        near_sel = win & is_near
        slopes[(mu, "near")] = (
            _fit_slope(xs[near_sel], Sx[near_sel]) if near_sel.sum() >= 6 else None
        )
        far_sel = win & ~is_near & (xs >= 10.0 * x_star[mu])
        far_sel &= Sx > 0
        slopes[(mu, "far")] = (
            _fit_slope(xs[far_sel], Sx[far_sel]) if far_sel.sum() >= 6 else None
        )

    return CrossoverProfile(
        np.concatenate(rows_mu),
        np.concatenate(rows_x),
        np.concatenate(rows_S),
        np.concatenate(rows_near),
        np.concatenate(rows_far),
        np.concatenate(rows_low),
        regimes,
        np.concatenate(certified),
        slopes,
        x_star,
    )


def profile_to_csv(path, profile, comments=()):
    """Write the documented greens CSV: mu, x_norm, S, near_bound, far_bound,
    lower_bound, regime."""
    with open(path, "w") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write("mu,x_norm,S,near_bound,far_bound,lower_bound,regime\n")
        for i in range(len(profile.x)):
            fh.write(
                f"{profile.mu[i]:.17g},{profile.x[i]:.17g},{profile.S[i]:.17g},"
                f"{profile.near_bound[i]:.17g},{profile.far_bound[i]:.17g},"
                f"{profile.lower_bound[i]:.17g},{profile.regime[i]}\n"
            )
