"""Bochner-Riesz windowed sums and the bounded/diverging dichotomy."""

import numpy as np
import pytest

from longrange import (
    Field,
    KernelSpec,
    RieszError,
    RieszEvaluation,
    bochner_riesz,
    build_kernel,
    critical_sum_demo,
    default_alpha_BR,
    delta_field,
    make_box,
    verify_convergence,
    zero_field,
)


def kernel(M=4096, alpha=0.5):
    return build_kernel(KernelSpec(d=1, alpha=alpha, L=4, M=M, model="rw",
                                   tail_mass_cap=1.0))


# ---------------------------------------------------------------------------
# exactness of the window


def test_delta_exact_for_all_R():
    box = make_box(1, 256)
    f = delta_field(box)
    for R in (1, 3.5, 17, 128):
        for k0 in ([0.0], [0.7], [np.pi]):
            assert bochner_riesz(f, R, 1.0, k0) == pytest.approx(1.0, abs=1e-15)


def test_single_mode_window_formula():
    # a symmetric site pair at +-x0 picks up exactly the window weight
    box = make_box(1, 256)
    x0, amp = 20, 0.37
    f = zero_field(box)
    f.values.flat[box.index_of([x0])] = amp
    f.values.flat[box.index_of([-x0])] = amp
    for R, alpha_BR, k0 in ((25.0, 1.0, 0.3), (64.0, 2.0, 0.0), (21.0, 0.0, 1.1)):
        expect = amp * (1.0 - (x0 / R) ** 2) ** alpha_BR * 2.0 * np.cos(k0 * x0)
        got = bochner_riesz(f, R, alpha_BR, [k0])
        assert got == pytest.approx(expect, abs=1e-12)
    # beyond the window radius the pair does not contribute
    assert bochner_riesz(f, 19.0, 1.0, [0.0]) == 0.0


def test_alpha_zero_is_sharp_partial_sum():
    rng = np.random.default_rng(61)
    box = make_box(1, 128)
    f = Field(box, rng.standard_normal(box.shape))
    R = 30.0
    r = box.radius()
    expect = f.values[r <= R].sum()
    assert bochner_riesz(f, R, 0.0, [0.0]) == pytest.approx(expect, rel=1e-12)


def test_linearity():
    rng = np.random.default_rng(67)
    box = make_box(1, 128)
    f = Field(box, rng.standard_normal(box.shape))
    g = Field(box, rng.standard_normal(box.shape))
    h = Field(box, 2.0 * f.values - 3.0 * g.values)
    R, a, k0 = 40.0, 1.0, [0.9]
    lhs = bochner_riesz(h, R, a, k0)
    rhs = 2.0 * bochner_riesz(f, R, a, k0) - 3.0 * bochner_riesz(g, R, a, k0)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_window_guards():
    box = make_box(2, 32)
    f = delta_field(box)
    with pytest.raises(RieszError):
        bochner_riesz(f, 0.0, 1.0, [0.0, 0.0])
    with pytest.raises(RieszError):
        bochner_riesz(f, 20.0, 1.0, [0.0, 0.0])  # beyond inradius
    with pytest.raises(RieszError):
        bochner_riesz(f, 4.0, -0.5, [0.0, 0.0])
    with pytest.raises(RieszError):
        bochner_riesz(f, 4.0, 1.0, [0.0])  # k0 has wrong length
    with pytest.raises(RieszError):
        RieszEvaluation(4.0, 0.5, (0.0, 0.0), 0j, d=2)  # hypothesis violated


def test_default_alpha():
    assert default_alpha_BR(1) == pytest.approx(1.0)
    assert default_alpha_BR(3) == pytest.approx(2.0)


# ---------------------------------------------------------------------------
# convergence at a continuity point


def full_trig_sum(D):
    grid = D.box.coord_grids()[0].astype(float)

    def u(k):
        return complex(np.sum(D.D.values * np.exp(1j * float(np.atleast_1d(k)[0]) * grid)))

    return u


def test_convergence_to_transform_value():
    D = kernel(M=4096)
    u = full_trig_sum(D)
    R_grid = [64, 128, 256, 512, 1024]
    rep = verify_convergence(D.D, u, [np.pi / 3], R_grid)
    errs = rep["errors"]
    assert rep["decays"]
    assert errs[0] / errs[-1] >= 4.0  # at least a 4x error contraction
    assert rep["convergence_asserted"]


def test_discontinuous_reference_only_tabulates():
    D = kernel(M=1024)
    bogus = lambda k: 0.123 + 0j  # wrong limit: errors plateau
    rep = verify_convergence(D.D, bogus, [np.pi / 3], [32, 64, 128],
                            continuous_at_k0=False)
    assert not rep["convergence_asserted"]
    with pytest.raises(RieszError):
        verify_convergence(D.D, bogus, [np.pi / 3], [32, 64, 128],
                           continuous_at_k0=True)


# ---------------------------------------------------------------------------
# the dichotomy: sum G finite <=> Fhat(0) != 0


def test_subcritical_demo_converges_to_resolvent_mass():
    # F = delta - 0.5 D: sum G = 1/Fhat(0) = 2
    D = kernel(M=4096)
    F = Field(D.box, delta_field(D.box).values - 0.5 * D.D.values)
    rep = critical_sum_demo(F, [64, 128, 256, 512, 1024])
    assert rep["classification"] == "bounded"
    assert not rep["zero_mode_excluded"]
    assert rep["limit"] == pytest.approx(2.0, rel=1e-12)
    assert abs(rep["W"][-1] - 2.0) <= 0.1
    assert rep["rel_dev_at_Rmax"] <= 0.05


def test_critical_demo_diverges_with_power_law():
    # F = delta - D: the zero mode vanishes, W(R) grows like R^alpha
    D = kernel(M=2 ** 17)
    F = Field(D.box, delta_field(D.box).values - D.D.values)
    R_grid = [2.0 ** k for k in range(5, 12)]
    rep = critical_sum_demo(F, R_grid)
    assert rep["classification"] == "diverging"
    assert rep["zero_mode_excluded"]
    assert abs(rep["sum_F"]) <= 1e-12
    W = rep["W"]
    assert (np.diff(W) > 0).all()
    assert rep["growth_slope"] == pytest.approx(0.5, abs=0.1)
    # dyadic doubling ratios hover around 2^alpha
    ratios = [r for _, r in rep["doubling_ratios"]]
    assert all(1.2 < r < 1.7 for r in ratios)


def test_demo_rejects_interior_spectral_zeros():
    # a transform vanishing away from the zero mode leaves 1/Fhat undefined
    box = make_box(1, 64)
    spectrum = np.ones(box.shape)
    spectrum[10] = 0.0
    spectrum[-10] = 0.0
    import scipy.fft

    vals = scipy.fft.fftn(spectrum).real / box.n_sites
    F = Field(box, vals)
    with pytest.raises(RieszError):
        critical_sum_demo(F, [4, 8, 16])
