"""Exact enumeration of long-range self-avoiding walks at desk scale.

The two-point function G(x) = sum over self-avoiding paths 0 -> x of
prod_j p D(omega_j - omega_{j-1}) is accumulated by depth-first search with
two certified truncations:

  * a length cut at n_max steps, charged via random-walk domination as
    sum_{n > n_max} p^n ||D^{*n}||_inf (sup norm) resp. p^{n_max+1}/(1-p)
    (total mass);
  * optional step pruning, either by a support cut (steps with D below a
    threshold are never taken) or by a path-weight floor (a branch is
    dropped once its accumulated weight cannot stay above the floor).
    Because steps are visited in decreasing-D order, a weight-floor prune
    discards a *suffix* of the step list whose exact kernel mass is known,
    so the omitted weight is accounted node by node.

Walks are enumerated over the full step set (on an even torus the
displacement M/2 is its own mirror, which breaks the usual half-space
pairing; with weight pruning the full tree is cheap enough that no symmetry
completion is needed).  The lace kernel Pi is then extracted spectrally from
the renewal form G = delta + (pD + Pi) * G.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .greens import heat_iterates
from .kernels import StepDistribution, nnnorm
from .lattice import Field, delta_field, fourier, inverse_fourier, symmetrize


class SawError(ValueError):
    pass


@dataclass
class SawEnumeration:
    """An enumerated two-point function with its truncation certificates.

    truncation_bound is the certified sup-norm bound on everything omitted
    (length cut + pruned branches + support cut); truncation_mass is the
    corresponding bound on the omitted total mass sum_x |Delta G(x)|, which
    is what propagates into spectral quantities.
    """

    D: StepDistribution
    p: float
    n_max: int
    G: Field
    truncation_bound: float
    truncation_mass: float
    nodes: int
    self_avoiding: bool = True
    support_cut: float = 0.0
    weight_floor: float = 0.0


@njit(cache=True)
def _dfs(step_coords, Dvals, tail, Mdims, strides, p, n_max,
         w_floor, node_budget, self_avoiding, G_out):
    d = step_coords.shape[1]
    S = step_coords.shape[0]
    pos = np.zeros((n_max + 1, d), dtype=np.int64)
    path = np.zeros(n_max + 1, dtype=np.int64)
    wstack = np.zeros(n_max + 1, dtype=np.float64)
    ptr = np.zeros(n_max + 1, dtype=np.int64)
    wstack[0] = 1.0
    depth = 0
    nodes = np.int64(0)
    pruned = 0.0
    while depth >= 0:
        idx = ptr[depth]
        if idx >= S:
            depth -= 1
            continue
        w = wstack[depth]
        wc = w * p * Dvals[idx]
        if wc < w_floor:
            # steps are sorted by decreasing D: every remaining child is
            # below the floor too; charge the exact suffix mass and close
            pruned += w * p * tail[idx]
            ptr[depth] = S
            continue
        ptr[depth] = idx + 1
        cf = np.int64(0)
        for a in range(d):
            c = pos[depth, a] + step_coords[idx, a]
            if c >= Mdims[a]:
                c -= Mdims[a]
            pos[depth + 1, a] = c
            cf += c * strides[a]
        if self_avoiding:
            hit = False
            for j in range(depth + 1):
                if path[j] == cf:
                    hit = True
                    break
            if hit:
                continue
        nodes += 1
        if nodes > node_budget:
            return 1, nodes, pruned
        G_out[cf] += wc
        if depth + 1 < n_max:
            depth += 1
            wstack[depth] = wc
            path[depth] = cf
            ptr[depth] = 0
    return 0, nodes, pruned


def _length_cut_bounds(D, p, n_max):
    """(sup, mass) bounds on the omitted n > n_max walks via random-walk
    domination; the sup bound uses measured ||D^{*n}||_inf, monotone in n."""
    n_top = n_max + 32
    tab = heat_iterates(D, n_top)
    sups = tab.sup_norms
    ns = np.arange(n_max + 1, n_top + 1)
    sup_part = float(np.sum(p ** ns * sups[n_max:n_top]))
    sup_part += p ** (n_top + 1) / (1.0 - p) * sups[n_top - 1]
    mass_part = p ** (n_max + 1) / (1.0 - p)
    return sup_part, mass_part


def enumerate_saw(D: StepDistribution, p, n_max, support_cut=0.0,
                  weight_floor=0.0, node_budget=600_000_000,
                  self_avoiding=True):
    """Depth-first enumeration of (self-avoiding) walks weighted by pD.

    Parameters
    ----------
    D : StepDistribution
    p : activity, 0 < p < 1 (random-walk domination controls the length cut)
    n_max : maximum walk length (<= 12 at full kernel support)
    support_cut : steps with D(step) < support_cut are never taken; their
        per-step mass is folded into the certificates
    weight_floor : branches whose accumulated weight falls below this floor
        are dropped with exact suffix-mass accounting
    self_avoiding : disable to enumerate the plain random walk (renewal test)

    Errors if the node count exceeds node_budget.
    """
    spec, box = D.spec, D.box
    if not (0.0 < p < 1.0):
        raise SawError(f"activity p must lie in (0, 1), got {p}")
    if n_max < 1:
        raise SawError(f"n_max must be >= 1, got {n_max}")
    if n_max > 12 and support_cut == 0.0 and weight_floor == 0.0:
        raise SawError("n_max > 12 needs a support cut or weight floor")

    vals = D.D.values.ravel()
    order = np.argsort(-vals, kind="stable")
    order = order[vals[order] > 0.0]
    m_cut = 0.0
    if support_cut > 0.0:
        kept = vals[order] >= support_cut
        m_cut = float(vals[order][~kept].sum())
        order = order[kept]
    if order.size == 0:
        raise SawError("support cut removed every step")

    Dvals = vals[order].copy()
    tail = np.cumsum(Dvals[::-1])[::-1].copy()
    coords = np.stack(np.unravel_index(order, box.shape), axis=1).astype(np.int64)
    Mdims = np.array(box.shape, dtype=np.int64)
    strides = np.array(
        [int(np.prod(box.shape[a + 1:])) for a in range(box.d)], dtype=np.int64
    )

    G_acc = np.zeros(box.n_sites, dtype=np.float64)
    status, nodes, pruned = _dfs(
        coords, Dvals, tail, Mdims, strides, float(p), int(n_max),
        float(weight_floor), np.int64(node_budget), self_avoiding, G_acc,
    )
    if status == 1:
        raise SawError(f"node budget {node_budget} exceeded at depth-first search")

    G = Field(box, delta_field(box).values + G_acc.reshape(box.shape))

    sup_len, mass_len = _length_cut_bounds(D, p, n_max)
    support_term = p * m_cut / (1.0 - p) ** 2
    # every pruned branch's continuations are dominated by the full walk sum
    pruned_total = pruned / (1.0 - p)
    bound_sup = sup_len + pruned_total + support_term
    bound_mass = mass_len + pruned_total + support_term
    return SawEnumeration(
        D, float(p), int(n_max), G, float(bound_sup), float(bound_mass),
        int(nodes), bool(self_avoiding), float(support_cut), float(weight_floor),
    )


# ---------------------------------------------------------------------------
# lace kernel extraction


def extract_pi(E: SawEnumeration, min_spectrum=0.1):
    """Invert the renewal form: Pi_hat = 1 - p*Dhat - 1/Ghat, symmetrized.

    Requires Ghat bounded away from zero on the grid (fails when p is too
    large for the enumeration truncation).  The lace-equation residual
    G - delta - (pD + Pi)*G vanishes to roundoff by construction.
    """
    box = E.G.box
    Gh = fourier(E.G).values
    if np.abs(Gh.imag).max() > 1e-10 * (1.0 + np.abs(Gh.real).max()):
        raise SawError("Ghat not real: enumeration output asymmetric")
    Gh = Gh.real
    low = float(np.abs(Gh).min())
    if low < min_spectrum:
        raise SawError(
            f"|Ghat| reaches {low:.3e} < {min_spectrum}; spectral extraction "
            f"unreliable at this activity/truncation"
        )
    Pih = 1.0 - E.p * E.D.Dhat.values - 1.0 / Gh
    Pi = inverse_fourier(Field(box, Pih.astype(complex)))
    if np.iscomplexobj(Pi.values):
        raise SawError("Pi came out complex; enumeration output inconsistent")
    return symmetrize(Pi)


def check_pi_decay(Pi: Field, spec):
    """Measure Pi against the ell-th power of the critical envelope.

    Reports sup_{x!=0} |Pi(x)| (L^d <x/L>_1^{d - alpha_eff})^ell and the
    summed quantity L^{(ell-1)d} sum_{x!=0} |Pi(x)|; both must be finite.
    """
    box = Pi.box
    ell = spec.ell
    r = box.radius()
    y = nnnorm(r, spec.L) / spec.L
    env = (spec.L ** spec.d * y ** (spec.d - spec.alpha_eff)) ** ell
    mask = np.ones(box.shape, dtype=bool)
    mask.flat[0] = False
    sup_c = float((np.abs(Pi.values) * env)[mask].max())
    sum_c = float(np.abs(Pi.values[mask]).sum() * spec.L ** ((ell - 1) * spec.d))
    if not (np.isfinite(sup_c) and np.isfinite(sum_c)):
        raise SawError("decay constants not finite")
    return {"sup_constant": sup_c, "sum_constant": sum_c, "ell": ell}
