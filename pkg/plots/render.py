#!/usr/bin/env python3
"""Render publication-style figures from the longrange CLI's CSV outputs.

Usage:  python3 render.py --spec figure.json

The JSON figure spec has the fields

    kind    -- one of crossover | bound_ratio | mc_fit | riesz
    inputs  -- list of CSV paths (concatenated row-wise)
    output  -- image path ending in .png or .svg
    xscale, yscale, title -- optional overrides

Each kind consumes exactly one documented CSV schema (below) and never
recomputes physics: every curve, guide line and slope label is arithmetic
on the CSV columns.  A header that does not match the declared schema
aborts before any rendering (exit 2); a CSV with no data rows exits 1.

Rendering is deterministic: figure geometry, fonts, DPI, the SVG hash salt
and the embedded metadata are all pinned, so identical inputs give
identical image bytes.

Kinds and schemas:

    crossover    mu,x_norm,S,near_bound,far_bound,lower_bound,regime
                 log-log S(x) per mu with the two power-law guides (slopes
                 measured from the bound columns) and their pointwise min
                 envelope.
    bound_ratio  same schema; plots S / min(near_bound, far_bound) per mu
                 and prints "sup ratio < 1" when every row is below one.
    mc_fit       p,x1[,x2..],ghat,stderr,trials,wrap_flagged
                 log-log ghat(x) per intensity with stderr bars and a
                 weighted straight-line fit in log space.
    riesz        R,W,classification
                 windowed sums W(R); log-log with a slope label for
                 diverging runs, log-x with the trend for bounded runs.
"""

import argparse
import json
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

matplotlib.rcParams.update({
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "svg.hashsalt": "longrange-plots",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.framealpha": 1.0,
})

KINDS = ("crossover", "bound_ratio", "mc_fit", "riesz")
CROSSOVER_HEADER = ["mu", "x_norm", "S", "near_bound", "far_bound",
                    "lower_bound", "regime"]
RIESZ_HEADER = ["R", "W", "classification"]
SPEC_KEYS = {"kind", "inputs", "output", "xscale", "yscale", "title"}

EXIT_OK, EXIT_DATA, EXIT_SPEC = 0, 1, 2


class SpecError(ValueError):
    pass


class DataError(ValueError):
    pass


def load_spec(path):
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read spec: {exc}")
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec is not valid JSON: {exc}")
    if not isinstance(spec, dict):
        raise SpecError("spec must be a JSON object")
    unknown = set(spec) - SPEC_KEYS
    if unknown:
        raise SpecError(f"unknown spec keys: {sorted(unknown)}")
    for key in ("kind", "inputs", "output"):
        if key not in spec:
            raise SpecError(f"spec key '{key}' is required")
    if spec["kind"] not in KINDS:
        raise SpecError(f"kind must be one of {KINDS}, got {spec['kind']!r}")
    if not isinstance(spec["inputs"], list) or not spec["inputs"]:
        raise SpecError("inputs must be a non-empty list of CSV paths")
    if not str(spec["output"]).endswith((".png", ".svg")):
        raise SpecError("output must end in .png or .svg")
    return spec


def read_rows(path, check_header):
    """Parse one CSV (leading '#' comments allowed), return list of dicts."""
    try:
        with open(path) as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}")
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise DataError(f"{path}: no header line")
    header = lines[0].split(",")
    check_header(path, header)
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(header):
            raise DataError(f"{path}: row with {len(parts)} fields, "
                            f"expected {len(header)}")
        rows.append(dict(zip(header, parts)))
    if not rows:
        raise DataError(f"{path}: no data rows")
    return rows


def exact_header(expected):
    def check(path, header):
        if header != expected:
            raise SpecError(f"{path}: header {header} does not match the "
                            f"declared schema {expected}")
    return check


def mc_header(path, header):
    if len(header) < 6 or header[0] != "p" \
            or header[-4:] != ["ghat", "stderr", "trials", "wrap_flagged"]:
        raise SpecError(f"{path}: header {header} does not match the "
                        f"declared schema p,x1[,..],ghat,stderr,trials,"
                        f"wrap_flagged")
    for i, name in enumerate(header[1:-4]):
        if name != f"x{i + 1}":
            raise SpecError(f"{path}: coordinate column {name!r} where "
                            f"'x{i + 1}' was expected")


def column(rows, name, cast=float):
    return np.array([cast(r[name]) for r in rows])


def loglog_slope(x, y):
    good = (x > 0) & (y > 0)
    lx, ly = np.log(x[good]), np.log(y[good])
    A = np.vstack([lx, np.ones_like(lx)]).T
    sol, *_ = np.linalg.lstsq(A, ly, rcond=None)
    return float(sol[0])


# ---------------------------------------------------------------------------
# one renderer per kind


def draw_crossover(rows, ax):
    mus = sorted(set(float(r["mu"]) for r in rows))
    for mu in mus:
        sub = [r for r in rows if float(r["mu"]) == mu]
        x, S = column(sub, "x_norm"), column(sub, "S")
        keep = S > 0
        ax.plot(x[keep], S[keep], marker="o", ms=3, lw=1,
                label=f"$\\mu$ = {mu:g}")
    # guides from the bound columns of the largest mu: both are pure power
    # laws, so their log-log slopes reproduce -(d-alpha) and -(d+alpha)
    sub = [r for r in rows if float(r["mu"]) == mus[-1]]
    x = column(sub, "x_norm")
    near, far = column(sub, "near_bound"), column(sub, "far_bound")
    ax.plot(x, near, ls="--", lw=1, color="0.35",
            label=f"near guide, slope {loglog_slope(x, near):.2f}")
    ax.plot(x, far, ls="-.", lw=1, color="0.35",
            label=f"far guide, slope {loglog_slope(x, far):.2f}")
    ax.plot(x, np.minimum(near, far), lw=2, alpha=0.35, color="0.2",
            label="min envelope")
    low = column(sub, "lower_bound")
    ax.plot(x, low, ls=":", lw=1, color="0.5", label="lower bound")
    ax.set_xlabel("|x|")
    ax.set_ylabel("$S_\\mu(x)$")
    return "log", "log"


def draw_bound_ratio(rows, ax):
    sup = -np.inf
    for mu in sorted(set(float(r["mu"]) for r in rows)):
        sub = [r for r in rows if float(r["mu"]) == mu]
        x, S = column(sub, "x_norm"), column(sub, "S")
        env = np.minimum(column(sub, "near_bound"), column(sub, "far_bound"))
        ratio = S / env
        sup = max(sup, float(ratio.max()))
        ax.plot(x, ratio, marker="o", ms=3, lw=1, label=f"$\\mu$ = {mu:g}")
    ax.axhline(1.0, color="0.2", lw=1, ls="--")
    ax.set_xlabel("|x|")
    ax.set_ylabel("S / envelope")
    if sup < 1.0:
        print("sup ratio < 1")
    else:
        print(f"sup ratio = {sup:.4f}")
    return "log", "linear"


def draw_mc_fit(rows, ax):
    for p in sorted(set(float(r["p"]) for r in rows)):
        sub = [r for r in rows if float(r["p"]) == p]
        x, g, se = column(sub, "x1"), column(sub, "ghat"), column(sub, "stderr")
        keep = g > 0
        x, g, se = x[keep], g[keep], se[keep]
        line = ax.errorbar(x, g, yerr=se, fmt="o", ms=3, lw=1, capsize=2,
                           label=f"p = {p:g}")
        # weighted straight line in log space; weights from relative errors
        w = np.where(se > 0, (g / np.maximum(se, 1e-300)) ** 2, 1.0)
        lx, ly = np.log(x), np.log(g)
        A = np.vstack([lx, np.ones_like(lx)]).T
        sol, *_ = np.linalg.lstsq(A * np.sqrt(w)[:, None],
                                  ly * np.sqrt(w), rcond=None)
        ax.plot(x, np.exp(sol[1]) * x ** sol[0], lw=1, ls="--",
                color=line.lines[0].get_color(),
                label=f"fit slope {sol[0]:.2f}")
    ax.set_xlabel("|x|")
    ax.set_ylabel("$\\hat g_p(x)$")
    return "log", "log"


def draw_riesz(rows, ax):
    R, W = column(rows, "R"), column(rows, "W")
    kind = rows[0]["classification"]
    ax.plot(R, np.abs(W), marker="o", ms=3, lw=1, label=f"W(R), {kind}")
    if kind == "diverging":
        ax.annotate(f"log-log slope {loglog_slope(R, np.abs(W)):.3f}",
                    xy=(0.05, 0.9), xycoords="axes fraction")
        scales = ("log", "log")
    else:
        ax.axhline(W[-1], color="0.4", lw=1, ls=":",
                   label=f"last value {W[-1]:.3f}")
        scales = ("log", "linear")
    ax.set_xlabel("R")
    ax.set_ylabel("W(R)")
    return scales


DRAWERS = {
    "crossover": (draw_crossover, exact_header(CROSSOVER_HEADER)),
    "bound_ratio": (draw_bound_ratio, exact_header(CROSSOVER_HEADER)),
    "mc_fit": (draw_mc_fit, mc_header),
    "riesz": (draw_riesz, exact_header(RIESZ_HEADER)),
}


def render(spec):
    draw, check = DRAWERS[spec["kind"]]
    rows = []
    for path in spec["inputs"]:
        rows.extend(read_rows(path, check))
    fig, ax = plt.subplots()
    xscale, yscale = draw(rows, ax)
    ax.set_xscale(spec.get("xscale", xscale))
    ax.set_yscale(spec.get("yscale", yscale))
    if "title" in spec:
        ax.set_title(spec["title"])
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    out = str(spec["output"])
    if out.endswith(".svg"):
        metadata = {"Date": None, "Creator": "longrange-plots"}
    else:
        metadata = {"Software": "longrange-plots"}
    fig.savefig(out, metadata=metadata)
    plt.close(fig)
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--spec", required=True, help="figure spec JSON")
    args = ap.parse_args(argv)
    try:
        spec = load_spec(args.spec)
        out = render(spec)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"wrote {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
