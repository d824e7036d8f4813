"""Step-kernel construction, decay-constant bracket, spectral gap, transforms."""

import math

import numpy as np
import pytest

from longrange import (
    KernelError,
    KernelSpec,
    build_kernel,
    check_assumption,
    delta_field,
    fourier,
    ising_transform,
    is_symmetric,
    make_box,
    nnnorm,
    truncate_kernel,
    zero_field,
)
from longrange.lattice import Field


def spec1d(alpha=0.5, L=4, M=1024, model="rw", cap=1.0):
    return KernelSpec(d=1, alpha=alpha, L=L, M=M, model=model, tail_mass_cap=cap)


# ---------------------------------------------------------------------------
# the floor norm


def test_nnnorm_floor_and_scaling():
    # <x>_L = (pi/2) max(|x|, L): constant inside the floor, linear outside
    assert nnnorm(0.0, 4) == pytest.approx(math.pi / 2 * 4)
    assert nnnorm(3.0, 4) == pytest.approx(math.pi / 2 * 4)
    assert nnnorm(4.0, 4) == pytest.approx(math.pi / 2 * 4)
    assert nnnorm(10.0, 4) == pytest.approx(math.pi / 2 * 10)
    arr = nnnorm(np.array([0.0, 2.0, 8.0]), 2)
    assert arr == pytest.approx(math.pi / 2 * np.array([2.0, 2.0, 8.0]))


# ---------------------------------------------------------------------------
# spec validation


def test_spec_rejects_bad_parameters():
    with pytest.raises(KernelError):
        KernelSpec(d=1, alpha=0.0, L=4, M=64)
    with pytest.raises(KernelError):
        KernelSpec(d=1, alpha=0.5, L=0, M=64)
    with pytest.raises(KernelError):
        KernelSpec(d=1, alpha=0.5, L=4, M=64, model="bogus")


def test_spec_model_exponents():
    # ell = 3 for walk-type models, 2 for percolation; d_c = (ell+1)/(ell-1) * (alpha ^ 2)
    assert KernelSpec(1, 0.5, 4, 64, model="saw").ell == 3
    assert KernelSpec(1, 0.5, 4, 64, model="ising").ell == 3
    assert KernelSpec(1, 0.5, 4, 64, model="rw").ell == 3
    assert KernelSpec(1, 0.5, 4, 64, model="percolation").ell == 2
    assert KernelSpec(1, 0.5, 4, 64, model="saw").d_c == pytest.approx(1.0)
    assert KernelSpec(1, 0.5, 4, 64, model="percolation").d_c == pytest.approx(1.5)
    assert KernelSpec(3, 2.5, 4, 8, model="saw").d_c == pytest.approx(4.0)


def test_alpha_eff_and_log_flag():
    assert spec1d(alpha=0.5).alpha_eff == pytest.approx(0.5)
    assert spec1d(alpha=3.0).alpha_eff == pytest.approx(2.0)
    assert not spec1d(alpha=0.5).log_corrected
    assert spec1d(alpha=2.0).log_corrected


# ---------------------------------------------------------------------------
# construction invariants


def test_kernel_is_a_step_distribution():
    D = build_kernel(spec1d())
    assert D.D.values.flat[0] == 0.0  # no self-steps
    assert D.D.values.min() >= 0.0
    assert D.D.total() == pytest.approx(1.0, rel=1e-12)
    assert is_symmetric(D.D)
    # transform is real with Dhat(0) = 1, |Dhat| <= 1
    assert D.Dhat.values.flat[0] == pytest.approx(1.0, rel=1e-12)
    assert np.abs(D.Dhat.values).max() <= 1.0 + 1e-12
    assert np.abs(fourier(D.D).values.imag).max() <= 1e-12


def test_kernel_matches_stated_profile():
    spec = spec1d(M=256)
    D = build_kernel(spec)
    x = 37
    expect = (nnnorm(float(x), spec.L) / spec.L) ** (-(spec.d + spec.alpha))
    assert D.D.at([x]) * D.renorm_factor == pytest.approx(expect, rel=1e-12)


def test_decay_ratio_is_exactly_constant():
    # D(x) is exactly proportional to <x>_L^{-(d+alpha)}, so the measured
    # bracket collapses to a point
    rep = check_assumption(build_kernel(spec1d()))
    assert rep.K_lb_hat == pytest.approx(rep.K_ub_hat, rel=1e-12)
    assert rep.K_lb_hat > 0


def test_assumption_report_canonical_case():
    spec = KernelSpec(d=2, alpha=1.0, L=5, M=512, model="rw", tail_mass_cap=0.1)
    rep = check_assumption(build_kernel(spec))
    assert rep.passed
    assert 0.0 < rep.Delta_hat < 1.0


def test_assumption_report_to_json_round_trip():
    import json

    rep = check_assumption(build_kernel(spec1d(M=256)))
    d = json.loads(rep.to_json(extra_note="x"))
    assert d["pass"] is True and d["extra_note"] == "x"
    assert set(d) >= {"K_lb_hat", "K_ub_hat", "Delta_hat", "pass"}


def test_build_kernel_box_guards():
    with pytest.raises(KernelError):
        build_kernel(spec1d(L=4, M=16))  # needs M > 4L
    with pytest.raises(KernelError):
        build_kernel(spec1d(M=256), box=make_box(1, 128))  # mismatched box


def test_tail_mass_cap_enforced():
    # alpha = 0.3 on a small box leaves >10% of the infinite-lattice mass
    # outside; the default cap refuses it and a generous cap accepts it
    tight = KernelSpec(d=1, alpha=0.3, L=4, M=64, model="rw", tail_mass_cap=0.01)
    with pytest.raises(KernelError):
        build_kernel(tight)
    loose = KernelSpec(d=1, alpha=0.3, L=4, M=64, model="rw", tail_mass_cap=1.0)
    D = build_kernel(loose)
    assert D.tail_mass_cut > 0.01


def test_tail_certificate_shrinks_with_box():
    t1 = build_kernel(spec1d(M=256)).tail_mass_cut
    t2 = build_kernel(spec1d(M=1024)).tail_mass_cut
    assert 0 < t2 < t1


# ---------------------------------------------------------------------------
# truncation


def test_truncate_kernel_support_and_mass():
    D = build_kernel(spec1d(M=256))
    R = 16
    DR = truncate_kernel(D, R)
    r = DR.box.radius()
    assert DR.D.values[r > R].max() == 0.0
    assert DR.D.total() == pytest.approx(1.0, rel=1e-12)
    assert DR.D.values.flat[0] == 0.0
    # inside the support the shape is unchanged (common renormalization)
    inside = (r <= R) & (r > 0)
    ratio = DR.D.values[inside] / D.D.values[inside]
    assert ratio.max() == pytest.approx(ratio.min(), rel=1e-12)


def test_truncate_kernel_rejects_empty_support():
    D = build_kernel(spec1d(M=256))
    with pytest.raises(KernelError):
        truncate_kernel(D, 0.5)


# ---------------------------------------------------------------------------
# the Ising weight map


def test_ising_transform_small_coupling():
    # tanh(beta J) ~ beta J: for tiny couplings p -> beta * sum(J) and D -> J / sum(J)
    box = make_box(1, 32)
    J = zero_field(box)
    J.values.flat[1] = 1e-8
    J.values.flat[-1] = 1e-8
    p, D, diag = ising_transform(0.5, J)
    assert p == pytest.approx(2 * np.tanh(0.5e-8), rel=1e-12)
    assert D.total() == pytest.approx(1.0, rel=1e-12)
    assert diag["max_rel_dev_D_vs_J"] <= 1e-12
    assert diag["rel_dev_p_vs_betaJ"] <= 1e-12


def test_ising_transform_rejects_self_coupling():
    box = make_box(1, 32)
    J = delta_field(box)
    with pytest.raises(KernelError):
        ising_transform(1.0, J)
