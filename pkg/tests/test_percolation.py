"""Long-range percolation sampler: law checks, determinism, coupling, fits."""

import numpy as np
import pytest

from longrange import (
    KernelSpec,
    PercConfig,
    PercError,
    build_kernel,
    crossover_fit,
    estimate_two_point,
    estimates_to_csv,
    nesting_check,
    sample_cluster,
)


def make_cfg(p, trials=1000, seed=99, M=4096, alpha=0.3, L=4, p_cap=1.2):
    spec = KernelSpec(d=1, alpha=alpha, L=L, M=M, model="percolation",
                      tail_mass_cap=1.0)
    D = build_kernel(spec)
    return PercConfig(spec=spec, p=p, box=D.box, trials=trials, rng_seed=seed,
                      D=D, p_cap=p_cap)


# ---------------------------------------------------------------------------
# configuration guards


def test_config_validation():
    with pytest.raises(PercError):
        make_cfg(0.5, trials=0)
    with pytest.raises(PercError):
        make_cfg(1.3)  # beyond the envelope cap
    with pytest.raises(PercError):
        make_cfg(0.5, M=256, p_cap=30.0)  # envelope rate reaches 1
    spec = KernelSpec(d=1, alpha=0.3, L=4, M=256, model="percolation",
                      tail_mass_cap=1.0)
    with pytest.raises(PercError):
        PercConfig(spec=spec, p=0.5, box=None, trials=10, rng_seed=1)


def test_targets_must_stay_in_core():
    cfg = make_cfg(0.3, trials=10, M=1024)
    with pytest.raises(PercError):
        estimate_two_point(cfg, [[200]])  # beyond M/8


# ---------------------------------------------------------------------------
# exact small cases and determinism


def test_zero_intensity_cluster_is_origin():
    cfg = make_cfg(0.0, trials=1)
    sites, wrapped, deg0 = sample_cluster(cfg, 1)
    assert list(sites) == [0]
    assert not wrapped and deg0 == 0


def test_cluster_replay_is_exact():
    cfg = make_cfg(0.8, trials=1, seed=5)
    for trial in (1, 7, 123):
        a = sample_cluster(cfg, trial)
        b = sample_cluster(cfg, trial)
        assert np.array_equal(a[0], b[0]) and a[1] == b[1] and a[2] == b[2]


def test_estimates_deterministic():
    targets = [[16], [64], [256]]
    e1 = estimate_two_point(make_cfg(0.6, trials=4000, seed=11), targets)
    e2 = estimate_two_point(make_cfg(0.6, trials=4000, seed=11), targets)
    assert np.array_equal(e1.ghat, e2.ghat)
    assert e1.wrap_flagged == e2.wrap_flagged
    e3 = estimate_two_point(make_cfg(0.6, trials=4000, seed=12), targets)
    assert not np.array_equal(e1.ghat, e3.ghat)


def test_origin_degree_matches_intensity():
    # E[deg(0)] = sum_x p D(x) = p; binomial-ish spread ~ sqrt(p/N)
    p, N = 0.5, 100_000
    est = estimate_two_point(make_cfg(p, trials=N, seed=17), [[8]])
    se = np.sqrt(p / N)
    assert abs(est.origin_degree_mean - p) <= 3 * se


# ---------------------------------------------------------------------------
# law checks against the bond structure


def test_single_bond_lower_bound_and_symmetry():
    cfg = make_cfg(0.5, trials=50_000, seed=23)
    targets = [[x] for x in (16, -16, 64, -64, 256, -256)]
    est = estimate_two_point(cfg, targets)
    pD = np.array([cfg.p * cfg.D.D.at(t) for t in targets])
    assert (est.ghat >= pD - 3 * est.stderr).all()
    for i in (0, 2, 4):  # x vs -x
        tol = 3 * (est.stderr[i] + est.stderr[i + 1])
        assert abs(est.ghat[i] - est.ghat[i + 1]) <= tol


def test_small_intensity_reduces_to_direct_bond():
    # at p << 1 multi-bond paths are O(p^2): ghat ~ p D(x) for |x| >= 8L
    p = 0.1
    est = estimate_two_point(make_cfg(p, trials=200_000, seed=29),
                             [[32], [128], [512]])
    D = make_cfg(p, trials=1).D
    for t, g, se in zip([[32], [128], [512]], est.ghat, est.stderr):
        bond = p * float(D.D.at(t))
        assert g >= bond - 3 * se
        assert g <= bond * (1.0 + 8 * p) + 3 * se


def test_stderr_scales_with_trials():
    targets = [[64]]
    e1 = estimate_two_point(make_cfg(0.6, trials=20_000, seed=31), targets)
    e2 = estimate_two_point(make_cfg(0.6, trials=80_000, seed=31), targets)
    ratio = e2.stderr[0] / e1.stderr[0]
    assert ratio == pytest.approx(0.5, abs=0.1)


def test_wrap_flagging_appears_when_supercritical():
    # a small box at high intensity produces clusters past 3M/8
    cfg = make_cfg(1.1, trials=2000, seed=37, M=512)
    est = estimate_two_point(cfg, [[16]])
    assert est.wrap_flagged > 0
    assert est.trials == 2000 - est.wrap_flagged


# ---------------------------------------------------------------------------
# monotone coupling


def test_monotone_nesting_shared_seed():
    lo = make_cfg(0.5, trials=1, seed=41, M=1024)
    hi = make_cfg(0.8, trials=1, seed=41, M=1024)
    assert nesting_check(lo, hi, 60) == 0


def test_nesting_requires_shared_seed():
    lo = make_cfg(0.5, trials=1, seed=41, M=1024)
    hi = make_cfg(0.8, trials=1, seed=42, M=1024)
    with pytest.raises(PercError):
        nesting_check(lo, hi, 10)


# ---------------------------------------------------------------------------
# output format and the fit guards


def test_estimates_csv_format(tmp_path):
    est = estimate_two_point(make_cfg(0.4, trials=2000, seed=43), [[16], [64]])
    path = tmp_path / "est.csv"
    estimates_to_csv(path, [est], comments=["run notes"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# run notes"
    assert lines[1] == "p,x1,ghat,stderr,trials,wrap_flagged"
    assert len(lines) == 2 + 2
    row = lines[2].split(",")
    assert float(row[0]) == 0.4 and int(row[1]) == 16


def test_crossover_fit_needs_enough_intensities():
    est = estimate_two_point(make_cfg(0.4, trials=500, seed=47), [[16], [64]])
    with pytest.raises(PercError):
        crossover_fit([est], est.spec)


def test_crossover_fit_needs_radius_span():
    ests = [estimate_two_point(make_cfg(p, trials=500, seed=53), [[16], [24], [32]])
            for p in (0.4, 0.5, 0.6)]
    with pytest.raises(PercError):
        crossover_fit(ests, ests[0].spec)
