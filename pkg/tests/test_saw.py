"""Exact SAW enumeration, lace-kernel extraction, decay and truncation honesty."""

import numpy as np
import pytest

from longrange import (
    KernelSpec,
    SawError,
    build_kernel,
    build_tilde_D,
    check_pi_decay,
    convolve,
    delta_field,
    enumerate_saw,
    extract_pi,
    greens_fourier,
    renewal_defect,
    truncate_kernel,
)


def kernel(M=256, alpha=0.4, L=4):
    return build_kernel(KernelSpec(d=1, alpha=alpha, L=L, M=M, model="saw",
                                   tail_mass_cap=1.0))


def cut_kernel(M=256, R=16):
    return truncate_kernel(kernel(M=M), R)


def narrow_kernel():
    # 8-step support: depth-8 full enumeration stays near 8^8 ~ 2e7 nodes
    return truncate_kernel(kernel(M=256), 4)


# ---------------------------------------------------------------------------
# exact low-order coefficients


def test_one_step_enumeration_is_pD():
    D = kernel()
    E = enumerate_saw(D, 0.2, 1)
    expect = delta_field(D.box).values + 0.2 * D.D.values
    assert np.abs(E.G.values - expect).max() <= 1e-15


def test_two_step_coefficient():
    # for x != 0 the 2-step SAW count is the plain convolution (D(0) = 0
    # already forbids the revisits); at the origin self-avoidance kills the
    # return walks entirely
    D = cut_kernel()
    p = 0.2
    E = enumerate_saw(D, p, 2)
    DD = convolve(D.D, D.D)
    expect = delta_field(D.box).values + p * D.D.values + p * p * DD.values
    expect.flat[0] = 1.0  # no length-2 returns
    assert np.abs(E.G.values - expect).max() <= 1e-14


def test_random_walk_mode_matches_resolvent_series():
    # with self-avoidance off the enumeration is the truncated walk series
    D = narrow_kernel()
    p = 0.25
    E = enumerate_saw(D, p, 8, self_avoiding=False)
    S = greens_fourier(D, p)
    dev = np.abs(E.G.values - S.values.values).max()
    # the omitted tail's sup is attained at the origin, where the bound is
    # exact; leave room for FFT roundoff between the two evaluation paths
    assert dev <= E.truncation_bound * (1.0 + 1e-8) + 1e-15
    assert dev > 0  # the cut is visible at this depth


def test_saw_dominated_by_random_walk():
    D = narrow_kernel()
    E = enumerate_saw(D, 0.25, 8)
    S = greens_fourier(D, 0.25)
    assert (E.G.values <= S.values.values + 1e-14).all()


# ---------------------------------------------------------------------------
# truncation certificates


def test_truncation_bound_honest_in_depth():
    D = narrow_kernel()
    p = 0.25
    E4 = enumerate_saw(D, p, 4)
    E8 = enumerate_saw(D, p, 8)
    dev = np.abs(E4.G.values - E8.G.values).max()
    assert dev <= E4.truncation_bound
    assert E8.truncation_bound < E4.truncation_bound


def test_weight_floor_accounted():
    D = cut_kernel(R=8)
    p = 0.3
    exact = enumerate_saw(D, p, 5)
    floored = enumerate_saw(D, p, 5, weight_floor=1e-9)
    assert floored.nodes < exact.nodes
    dev = np.abs(exact.G.values - floored.G.values).max()
    assert dev <= floored.truncation_bound
    assert exact.truncation_bound < floored.truncation_bound


def test_support_cut_accounted():
    D = kernel(M=128)
    p = 0.3
    full = enumerate_saw(D, p, 3)
    cut = enumerate_saw(D, p, 3, support_cut=2e-3)
    assert cut.nodes < full.nodes
    dev = np.abs(full.G.values - cut.G.values).max()
    assert dev <= cut.truncation_bound


def test_enumeration_guards():
    D = kernel()
    with pytest.raises(SawError):
        enumerate_saw(D, 0.0, 4)
    with pytest.raises(SawError):
        enumerate_saw(D, 1.0, 4)
    with pytest.raises(SawError):
        enumerate_saw(D, 0.3, 0)
    with pytest.raises(SawError):
        enumerate_saw(D, 0.3, 13)  # needs pruning above n_max = 12
    with pytest.raises(SawError):
        enumerate_saw(D, 0.3, 6, node_budget=1000)


# ---------------------------------------------------------------------------
# lace-kernel extraction


def test_extract_pi_residual_vanishes():
    D = narrow_kernel()
    p = 0.25
    E = enumerate_saw(D, p, 8)
    Pi = extract_pi(E)
    defect = renewal_defect(E.G, D, p, Pi)
    assert np.abs(defect.values).max() <= 1e-12


def test_extract_pi_low_order():
    # Pi = -p^2 (D*D)(0) delta + O(p^3): at tiny activity the origin
    # coefficient is the return bubble and everything else is O(p^3)
    D = cut_kernel()
    B2 = float(convolve(D.D, D.D).at([0]))
    p = 1e-3
    Pi = extract_pi(enumerate_saw(D, p, 3))
    assert Pi.values.flat[0] / p ** 2 == pytest.approx(-B2, rel=5e-3)


def test_extract_pi_richardson_order_p():
    # first-order Richardson in p removes the p^3 term of Pi(0)/p^2
    D = cut_kernel()
    B2 = float(convolve(D.D, D.D).at([0]))

    def r(p):
        Pi = extract_pi(enumerate_saw(D, p, 3))
        return Pi.values.flat[0] / p ** 2

    R = 2.0 * r(1e-3) - r(2e-3)
    assert R == pytest.approx(-B2, rel=1e-5)


def test_extract_pi_refuses_large_activity():
    # a deliberately under-truncated enumeration drives Ghat near zero
    D = cut_kernel()
    E = enumerate_saw(D, 0.25, 2)
    E2 = SawishGhatBreaker(E)
    with pytest.raises(SawError):
        extract_pi(E2)


class SawishGhatBreaker:
    """Wrap an enumeration with G scaled so Ghat dips below min_spectrum."""

    def __init__(self, E):
        self.D = E.D
        self.p = E.p
        self.G = type(E.G)(E.G.box, 0.05 * E.G.values)


# ---------------------------------------------------------------------------
# decay measurement and the desk pipeline at moderate depth


def test_pi_decay_constants_finite_and_stable():
    D = kernel(M=4096)
    p = 0.3
    consts = {}
    for n_max in (8, 10):
        E = enumerate_saw(D, p, n_max, weight_floor=1e-10)
        Pi = extract_pi(E)
        consts[n_max] = check_pi_decay(Pi, D.spec)
    for key in ("sup_constant", "sum_constant"):
        a, b = consts[8][key], consts[10][key]
        assert np.isfinite(a) and np.isfinite(b) and a > 0
        assert abs(b / a - 1.0) <= 0.10


def test_desk_pipeline_positivity_and_subcriticality():
    D = kernel(M=4096)
    E = enumerate_saw(D, 0.3, 8, weight_floor=1e-10)
    lace = build_tilde_D(0.3, D, extract_pi(E))
    assert lace.positivity_margin > 0
    assert lace.mu_p < 1.0
    assert 0.9 < lace.A_p < 1.1
