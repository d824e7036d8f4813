"""Monte Carlo long-range percolation: cluster growth and two-point estimates.

Bonds {x, y} are open independently with probability p D(x - y).  Clusters of
the origin are grown breadth-first; a popped site reveals its incident bond
states by skip-sampling candidate neighbours under a majorizing envelope:

  * candidate displacements are sorted by decreasing D and grouped into
    dyadic blocks; block j is proposed at the constant rate
    q_j = p_cap * max_block D >= p D, with geometric skips between proposals,
    so a site's expected work is O(open bonds + number of blocks);
  * a proposed edge opens when its edge-keyed uniform falls below
    p D / q_j (thinning to the exact Bernoulli law);
  * an edge is decided by whichever endpoint is popped first - proposals to
    already-popped sites are discarded, so each unordered pair is examined
    exactly once and revisits are consistent.

All randomness is counter-based (hashes of seed, trial, and either the
proposing site's stream position or the canonical edge key), making trials
independent, replayable, and embarrassingly parallel.  Because proposal
streams are p-independent and acceptance thresholds increase with p, clusters
are monotone-coupled across p under shared seeds: if the first-popped
endpoint of a bond at the smaller p is popped at all at the larger p it
opens the same bond there, and otherwise the far endpoint is already in the
cluster.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit


class PercError(ValueError):
    pass


DEFAULT_P_CAP = 1.2


@dataclass
class PercConfig:
    """Bond intensity p on a kernel; validates the Bernoulli range."""

    spec: object
    p: float
    box: object
    trials: int
    rng_seed: int
    D: object = None  # StepDistribution (carries the kernel values)
    p_cap: float = DEFAULT_P_CAP

    def __post_init__(self):
        if self.D is None:
            raise PercError("PercConfig needs the built StepDistribution")
        dmax = float(self.D.D.values.max())
        if self.p * dmax > 1.0:
            raise PercError(f"p*max(D) = {self.p * dmax:.3e} > 1: invalid bond law")
        if self.p > self.p_cap:
            raise PercError(f"p = {self.p} exceeds envelope cap {self.p_cap}")
        if self.p_cap * dmax >= 1.0:
            raise PercError("envelope rate would reach 1; lower p_cap")
        if self.trials < 1:
            raise PercError("need at least one trial")


@dataclass
class TwoPointEstimate:
    """Rows of (x, ghat, stderr) plus run metadata."""

    xs: list
    ghat: np.ndarray
    stderr: np.ndarray
    trials: int
    wrap_flagged: int
    p: float
    spec: object
    seed: int


# ---------------------------------------------------------------------------
# counter-based RNG (splitmix64 chain)

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_SALT_STREAM = np.uint64(0x243F6A8885A308D3)
_SALT_EDGE = np.uint64(0x13198A2E03707344)


@njit(inline="always", cache=True)
def _sm64(x):
    z = (x + _GOLD) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(inline="always", cache=True)
def _uniform(h):
    # 53-bit mantissa, shifted into (0, 1) so logs are safe
    return (np.float64(h >> np.uint64(11)) + 0.5) * 1.1102230246251565e-16


# ---------------------------------------------------------------------------
# core exploration


@njit(cache=True)
def _explore(seed, trial, p, Dsort, disp, starts, sizes, qs, log1mqs,
             Mdims, strides, d, reached, popped, queue, wrap_limit,
             abort_on_wrap):
    """Grow the cluster of the origin for one trial.

    reached/popped are stamp arrays (value == trial marks membership this
    trial); queue is a scratch FIFO.  Returns (cluster size, wrap flag,
    origin degree).  With abort_on_wrap the trial stops at the first
    wrap-contaminated pop (the cluster is discarded anyway; the origin's
    degree is already complete because the origin pops first and can never
    sit past the wrap limit).
    """
    n_blocks = starts.shape[0]
    reached[0] = trial
    queue[0] = 0
    head = np.int64(0)
    tail = np.int64(1)
    wrap = False
    deg0 = np.int64(0)
    h_trial = _sm64(np.uint64(seed) ^ _SALT_STREAM)
    h_trial = _sm64(h_trial ^ np.uint64(trial))
    e_trial = _sm64(np.uint64(seed) ^ _SALT_EDGE)
    e_trial = _sm64(e_trial ^ np.uint64(trial))
    n_sites = np.uint64(reached.shape[0])

    ucoord = np.empty(d, dtype=np.int64)
    while head < tail:
        u = queue[head]
        head += 1
        popped[u] = trial
        rem = u
        for a in range(d):
            c = rem // strides[a]
            rem -= c * strides[a]
            ucoord[a] = c
            s = c if c < Mdims[a] // 2 else c - Mdims[a]
            if s >= wrap_limit or -s >= wrap_limit:
                wrap = True
        if wrap and abort_on_wrap:
            return tail, wrap, deg0
        h_site = _sm64(h_trial ^ np.uint64(u))
        for j in range(n_blocks):
            q = qs[j]
            log1mq = log1mqs[j]
            size_j = sizes[j]
            start_j = starts[j]
            h_block = _sm64(h_site ^ np.uint64(j))
            pos = np.int64(-1)
            ctr = np.uint64(0)
            while True:
                u1 = _uniform(_sm64(h_block ^ ctr))
                ctr += np.uint64(1)
                pos += 1 + np.int64(math.log(u1) / log1mq)
                if pos >= size_j:
                    break
                sidx = start_j + pos
                # candidate target v = u + displacement (torus)
                v = np.int64(0)
                for a in range(d):
                    c = ucoord[a] + disp[sidx, a]
                    if c >= Mdims[a]:
                        c -= Mdims[a]
                    v += c * strides[a]
                if popped[v] == trial:
                    continue  # edge already decided from the other side
                if np.uint64(u) < np.uint64(v):
                    ekey = np.uint64(u) * n_sites + np.uint64(v)
                else:
                    ekey = np.uint64(v) * n_sites + np.uint64(u)
                u2 = _uniform(_sm64(e_trial ^ ekey))
                if u2 < p * Dsort[sidx] / q:
                    if u == 0:
                        deg0 += 1
                    if reached[v] != trial:
                        reached[v] = trial
                        queue[tail] = v
                        tail += 1
    return tail, wrap, deg0


@njit(cache=True)
def _run_trials(trial_base, n_trials, seed, p, Dsort, disp, starts, sizes,
                qs, log1mqs, Mdims, strides, d, reached, popped, queue,
                wrap_limit, target_flats, hits):
    kept = np.int64(0)
    flagged = np.int64(0)
    deg0_sum = np.int64(0)
    for trial in range(trial_base + 1, trial_base + n_trials + 1):
        size, wrap, deg0 = _explore(
            seed, trial, p, Dsort, disp, starts, sizes, qs, log1mqs,
            Mdims, strides, d, reached, popped, queue, wrap_limit, True,
        )
        deg0_sum += deg0
        if wrap:
            flagged += 1
            continue
        kept += 1
        for t in range(target_flats.shape[0]):
            if reached[target_flats[t]] == trial:
                hits[t] += 1
    return kept, flagged, deg0_sum


# ---------------------------------------------------------------------------
# python-side driver


class _Sampler:
    """Preprocessed sampling tables for one kernel/box (p-independent)."""

    def __init__(self, D, p_cap=DEFAULT_P_CAP):
        box = D.box
        vals = D.D.values.ravel()
        order = np.argsort(-vals, kind="stable")
        order = order[vals[order] > 0.0]
        self.Dsort = vals[order].copy()
        self.disp = np.stack(
            np.unravel_index(order, box.shape), axis=1
        ).astype(np.int64)
        S = order.size
        starts, sizes = [], []
        b = 0
        w = 1
        while b < S:
            starts.append(b)
            sizes.append(min(w, S - b))
            b += sizes[-1]
            w *= 2
        self.starts = np.array(starts, dtype=np.int64)
        self.sizes = np.array(sizes, dtype=np.int64)
        self.qs = p_cap * self.Dsort[self.starts]
        if self.qs.max() >= 1.0:
            raise PercError("envelope rate reaches 1; kernel too concentrated")
        self.log1mqs = np.log1p(-self.qs)
        self.Mdims = np.array(box.shape, dtype=np.int64)
        self.strides = np.array(
            [int(np.prod(box.shape[a + 1:])) for a in range(box.d)],
            dtype=np.int64,
        )
        self.box = box
        self.p_cap = p_cap
        # scratch (reused across trials)
        n = box.n_sites
        self.reached = np.full(n, -1, dtype=np.int64)
        self.popped = np.full(n, -1, dtype=np.int64)
        self.queue = np.empty(n, dtype=np.int64)


def _wrap_limit(box):
    """Sites with any |coordinate| >= 3M/8 mark the trial wrap-contaminated.

    Targets are restricted to |x| <= M/8, so unflagged clusters keep their
    extremities a further M/4 from the torus seam.  Flagging earlier (say at
    M/4) over-censors the near-critical ensemble: conditioning on compact
    clusters suppresses exactly the long connections under study and
    measurably steepens fitted slopes.
    """
    return 3 * box.M // 8


def sample_cluster(cfg: PercConfig, trial_index):
    """Grow and return the origin cluster of one replayable trial.

    Returns (flat site indices, wrap_flag, origin_degree); the same
    (seed, trial_index) always reproduces the same cluster.
    """
    s = _Sampler(cfg.D, cfg.p_cap)
    size, wrap, deg0 = _explore(
        np.uint64(cfg.rng_seed), np.int64(trial_index), float(cfg.p),
        s.Dsort, s.disp, s.starts, s.sizes, s.qs, s.log1mqs,
        s.Mdims, s.strides, s.box.d, s.reached, s.popped, s.queue,
        np.int64(_wrap_limit(s.box)), False,
    )
    return s.queue[:size].copy(), bool(wrap), int(deg0)


def estimate_two_point(cfg: PercConfig, targets, progress=None):
    """Estimate g(x) = P(x in cluster of 0) at the target sites.

    Targets must lie within |x| <= M/8 (Euclidean).  Wrap-flagged trials are
    excluded from the headline estimates and counted separately.  `progress`
    is an optional callable hit with (done, total) once per chunk.
    """
    box = cfg.box
    xs = [np.atleast_1d(np.asarray(t, dtype=int)) for t in targets]
    for x in xs:
        if np.sqrt(float(np.sum(x.astype(float) ** 2))) > box.M / 8.0:
            raise PercError(f"target {x.tolist()} outside |x| <= M/8")
    flats = np.array([box.index_of(x) for x in xs], dtype=np.int64)

    s = _Sampler(cfg.D, cfg.p_cap)
    hits = np.zeros(len(xs), dtype=np.int64)
    kept_total, flagged_total, deg0_total = 0, 0, 0
    chunk = max(1, min(cfg.trials, 200_000))
    done = 0
    trial_base = 0
    while done < cfg.trials:
        n = min(chunk, cfg.trials - done)
        # trials are numbered globally so replay is chunk-size independent
        kept, flagged, deg0 = _run_trials(
            np.int64(trial_base), np.int64(n), np.uint64(cfg.rng_seed),
            float(cfg.p), s.Dsort, s.disp, s.starts, s.sizes, s.qs,
            s.log1mqs, s.Mdims, s.strides, box.d, s.reached, s.popped,
            s.queue, np.int64(_wrap_limit(box)), flats, hits,
        )
        kept_total += int(kept)
        flagged_total += int(flagged)
        deg0_total += int(deg0)
        done += n
        trial_base += n
        if progress is not None:
            progress(done, cfg.trials)

    if kept_total == 0:
        raise PercError("all trials wrap-flagged; box too small for this p")
    ghat = hits / kept_total
    stderr = np.sqrt(np.maximum(ghat * (1.0 - ghat), 0.0) / kept_total)
    est = TwoPointEstimate(
        [tuple(int(v) for v in x) for x in xs], ghat, stderr,
        kept_total, flagged_total, float(cfg.p), cfg.spec, int(cfg.rng_seed),
    )
    est.origin_degree_mean = deg0_total / cfg.trials
    return est


def nesting_check(cfg_small, cfg_large, n_trials):
    """Verify cluster monotonicity in p under shared seeds.

    Runs paired trials at the two bond intensities (same seed, same trial
    index) and checks that every cluster at the smaller p is contained in
    the cluster at the larger p.  Returns the number of violations.
    """
    if cfg_small.p > cfg_large.p:
        cfg_small, cfg_large = cfg_large, cfg_small
    if cfg_small.rng_seed != cfg_large.rng_seed:
        raise PercError("nesting check needs a shared seed")
    violations = 0
    for trial in range(1, n_trials + 1):
        lo, _, _ = sample_cluster(cfg_small, trial)
        hi, _, _ = sample_cluster(cfg_large, trial)
        if not np.isin(lo, hi).all():
            violations += 1
    return violations


def _weighted_line(logx, logy, w):
    """Weighted least-squares line fit; returns (slope, intercept, slope_se)."""
    W = np.sqrt(w)
    A = np.stack([logx * W, W], axis=1)
    coef, *_ = np.linalg.lstsq(A, logy * W, rcond=None)
    resid = logy - (coef[0] * logx + coef[1])
    dof = max(logx.size - 2, 1)
    s2 = float(np.sum(w * resid**2) / dof)
    xm = np.sum(w * logx) / np.sum(w)
    sxx = float(np.sum(w * (logx - xm) ** 2))
    se = math.sqrt(s2 / sxx) if sxx > 0 else float("inf")
    return float(coef[0]), float(coef[1]), se


_FAR_FLOOR_L = 256.0


def _switch_radius(spec, eps):
    """Crossover radius at distance eps from criticality: (2L/pi) eps^{-1/a}."""
    if eps <= 0.0:
        return float("inf")
    return (2.0 * spec.L / math.pi) * eps ** (-1.0 / spec.alpha_eff)


def _clean_rows(est):
    rows = []
    for x, g, se in zip(est.xs, est.ghat, est.stderr):
        r = math.sqrt(sum(float(v) ** 2 for v in x))
        if r > 0 and se > 0 and g > 3.0 * se:
            rows.append((r, g, se))
    r = np.array([t[0] for t in rows])
    g = np.array([t[1] for t in rows])
    se = np.array([t[2] for t in rows])
    return r, g, (g / se) ** 2 if r.size else np.empty(0)


def crossover_fit(estimates, spec):
    """Fit near/far power laws and extrapolate the critical intensity.

    `estimates` is a list of TwoPointEstimate at distinct p (>= 3 of them;
    target radii must span >= 1.5 decades overall).  The two-point function
    decays like |x|^{-(d-alpha)} below the switch radius
    (2L/pi)(p_c - p)^{-1/alpha} and like |x|^{-(d+alpha)} above it.  Since
    p_c is an output of the fit, windows are assigned in two passes:

      1. far windows are cut using the provisional switch at p_c = 1;
         weighted log-log fits give the far slopes, and amplitudes at the
         fixed slope -(d+alpha) give p_c via the linear law
         amplitude^{-1/2} oc (p_c - p),
      2. near windows are re-cut using the fitted p_c, giving the near
         slopes.

    For p_c > 1 the provisional far windows are subsets of the true far
    regime, so pass 1 stays valid.  Rows with ghat <= 3 stderr are dropped;
    each window needs >= 4 surviving rows to be fit.
    """
    if len(estimates) < 3:
        raise PercError("need at least three bond intensities")
    L, M, d, a = spec.L, spec.M, spec.d, spec.alpha_eff
    radii = [math.sqrt(sum(float(v) ** 2 for v in x))
             for est in estimates for x in est.xs]
    radii = [r for r in radii if r > 0]
    if math.log10(max(radii) / min(radii)) < 1.5:
        raise PercError("target radii span less than 1.5 decades")

    out = {"per_p": [], "near_slope": None, "far_slope": None, "p_c": None}
    entries = []
    amp_rows = []
    for est in estimates:
        p = est.p
        r, g, w = _clean_rows(est)
        entry = {"p": p, "near": None, "far": None}
        x_sw0 = _switch_radius(spec, 1.0 - p)
        if r.size:
            # the far asymptote emerges at kernel scale, not switch scale:
            # exact random-walk profiles put the local slope within 0.08 of
            # -(d+alpha) only beyond ~256 L, so the window floor uses both
            m = (r >= max(6.0 * x_sw0, _FAR_FLOOR_L * L)) & (r <= M / 8.0)
            if m.sum() >= 4:
                sl, _, se_sl = _weighted_line(np.log(r[m]), np.log(g[m]), w[m])
                la = float(np.sum(w[m] * (np.log(g[m]) + (d + a) * np.log(r[m])))
                           / np.sum(w[m]))
                entry["far"] = {"slope": sl, "slope_se": se_sl,
                                "n_rows": int(m.sum()), "log_amplitude": la}
                amp_rows.append((p, la))
        entries.append((est, entry))

    if len(amp_rows) >= 2:
        ps = np.array([t[0] for t in amp_rows])
        # far amplitude is chi_p^2 p C with chi_p oc (p_c - p)^{-1}, so
        # sqrt(p / A) oc p_c - p is the linear extrapolation variable
        y = np.sqrt(ps) * np.exp(-0.5 * np.array([t[1] for t in amp_rows]))
        slope, icpt = np.polyfit(ps, y, 1)
        if slope < 0:
            out["p_c"] = float(-icpt / slope)

    p_c_eff = out["p_c"] if out["p_c"] is not None else 1.0
    for est, entry in entries:
        r, g, w = _clean_rows(est)
        x_sw = _switch_radius(spec, p_c_eff - est.p)
        entry["x_switch"] = x_sw
        if r.size:
            m = (r >= 8.0 * L) & (r <= min(M / 8.0, x_sw / 3.0))
            if m.sum() >= 4:
                sl, _, se_sl = _weighted_line(np.log(r[m]), np.log(g[m]), w[m])
                entry["near"] = {"slope": sl, "slope_se": se_sl,
                                 "n_rows": int(m.sum())}
        out["per_p"].append(entry)

    near = [e["near"]["slope"] for e in out["per_p"] if e["near"]]
    far = [e["far"]["slope"] for e in out["per_p"] if e["far"]]
    if near:
        out["near_slope"] = float(np.mean(near))
    if far:
        out["far_slope"] = float(np.mean(far))
    return out


def estimates_to_csv(path, estimates, comments=()):
    """Write (p, x, ghat, stderr, trials, wrap_flagged) rows; '#' lines first."""
    ests = estimates if isinstance(estimates, (list, tuple)) else [estimates]
    d = len(ests[0].xs[0])
    cols = ",".join(f"x{i+1}" for i in range(d))
    with open(path, "w") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(f"p,{cols},ghat,stderr,trials,wrap_flagged\n")
        for est in ests:
            for x, g, se in zip(est.xs, est.ghat, est.stderr):
                xs = ",".join(str(int(v)) for v in x)
                fh.write(f"{est.p:.17g},{xs},{g:.17g},{se:.17g},"
                         f"{est.trials},{est.wrap_flagged}\n")
