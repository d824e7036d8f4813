"""Batch command surface: one subcommand per module pipeline.

Each command reads a flat INI config, validates it fully before allocating
anything large, runs the corresponding pipeline, and writes machine-readable
outputs plus a run manifest.  Exit codes: 0 success, 1 validation error,
2 numeric failure (a tolerance or assumption check), 3 resource budget.

The manifest hash is computed from the run's inputs (command, resolved
config, package version, seed) before any output is written, so every CSV
can carry it as a comment line; the manifest JSON records the same hash
alongside post-run statistics.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import hashlib
import json
import resource
import sys
import time

import numpy as np

from . import __version__
from .lattice import LatticeError, delta_field, save_field, save_field_csv
from .kernels import KernelError, KernelSpec, build_kernel, check_assumption
from .greens import (GreensError, check_upper_bound, crossover_profile,
                     greens, profile_to_csv)
from .lace import LaceError, build_tilde_D, susceptibility, verify_identity
from .saw import SawError, check_pi_decay, enumerate_saw, extract_pi
from .percolation import (PercConfig, PercError, crossover_fit,
                          estimate_two_point, estimates_to_csv)
from .riesz import RieszError, critical_sum_demo, demo_to_csv

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2
EXIT_RESOURCE = 3


class ConfigError(ValueError):
    pass


@dataclasses.dataclass
class RunManifest:
    command: str
    config: dict
    version: str
    seed: int | None
    outputs: list
    manifest_hash: str
    wall_clock_s: float = 0.0
    peak_mem_bytes: int = 0

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(dataclasses.asdict(self), fh, indent=1, default=str)
            fh.write("\n")


def _manifest_hash(command, config, seed):
    blob = json.dumps({"command": command, "config": config,
                       "version": __version__, "seed": seed},
                      sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _load_config(path, section, keys, optional=()):
    """Read one INI section; missing file/section/key is a validation error."""
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    if section not in cp:
        raise ConfigError(f"config section [{section}] missing in {path}")
    sect = cp[section]
    out = {}
    for key, cast in keys.items():
        if key not in sect:
            raise ConfigError(f"config key '{key}' missing from [{section}]")
        try:
            out[key] = cast(sect[key])
        except ValueError as exc:
            raise ConfigError(f"config key '{key}': {exc}") from exc
    for key, cast in optional:
        if key in sect:
            try:
                out[key] = cast(sect[key])
            except ValueError as exc:
                raise ConfigError(f"config key '{key}': {exc}") from exc
    return out


def _float_list(text):
    vals = [float(t) for t in text.replace(",", " ").split()]
    if not vals:
        raise ValueError("empty list")
    return vals


def _int_list(text):
    vals = [int(t) for t in text.replace(",", " ").split()]
    if not vals:
        raise ValueError("empty list")
    return vals


_KERNEL_KEYS = {"d": int, "alpha": float, "L": int, "M": int}
_KERNEL_OPT = (("model", str), ("tail_mass_cap", float))


def _spec_from(cfg):
    return KernelSpec(d=cfg["d"], alpha=cfg["alpha"], L=cfg["L"], M=cfg["M"],
                      model=cfg.get("model", "rw"),
                      tail_mass_cap=cfg.get("tail_mass_cap", 0.1))


_SQRT2 = 2.0 ** 0.5


def _half_decade_targets(spec):
    lo, hi = 8 * spec.L, spec.M // 8
    out = []
    k = 0
    while True:
        r = int(round(lo * _SQRT2 ** k))
        if r > hi:
            break
        out.append(r)
        k += 1
    return sorted(set(out))


# ---------------------------------------------------------------------------
# commands


def cmd_kernel(args):
    cfg = _load_config(args.config, "kernel", _KERNEL_KEYS, _KERNEL_OPT)
    spec = _spec_from(cfg)
    mhash = _manifest_hash("kernel", cfg, None)
    t0 = time.time()
    D = build_kernel(spec)
    report = check_assumption(D)
    out_json = f"{args.out}/kernel_report.json"
    out_field = f"{args.out}/kernel_D.lrf"
    with open(out_json, "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    save_field(out_field, D.D)
    man = RunManifest("kernel", cfg, __version__, None, [out_json, out_field],
                      mhash, time.time() - t0, _peak_mem())
    man.write(f"{args.out}/kernel_manifest.json")
    print(f"kernel: pass={report.passed} Delta_hat={report.Delta_hat:.6f} "
          f"K=[{report.K_lb_hat:.6f},{report.K_ub_hat:.6f}]")
    return EXIT_OK if report.passed else EXIT_NUMERIC


def cmd_greens(args):
    cfg = _load_config(args.config, "greens", dict(_KERNEL_KEYS, mu_list=_float_list),
                       _KERNEL_OPT + (("tol", float), ("x_list", _int_list)))
    spec = _spec_from(cfg)
    for mu in cfg["mu_list"]:
        if not 0.0 <= mu <= 1.0:
            raise ConfigError(f"mu = {mu} outside [0, 1]")
    mhash = _manifest_hash("greens", cfg, None)
    t0 = time.time()
    D = build_kernel(spec)
    xs = cfg.get("x_list", _half_decade_targets(spec))
    prof = crossover_profile(D, cfg["mu_list"], xs, tol=cfg.get("tol", 1e-10))
    out_csv = f"{args.out}/greens_crossover.csv"
    profile_to_csv(out_csv, prof, comments=[f"manifest: {mhash}"])
    bound = check_upper_bound(greens(D, max(cfg["mu_list"])))
    man = RunManifest("greens", cfg, __version__, None, [out_csv], mhash,
                      time.time() - t0, _peak_mem())
    man.write(f"{args.out}/greens_manifest.json")
    print(f"greens: {len(cfg['mu_list'])} mu values, {len(xs)} radii; "
          f"upper-bound ratio_max={bound['ratio_max']:.4f} holds={bound['holds']}")
    return EXIT_OK


def cmd_saw(args):
    cfg = _load_config(args.config, "saw",
                       dict(_KERNEL_KEYS, p=float, n_max=int),
                       _KERNEL_OPT + (("weight_floor", float), ("support_cut", float)))
    spec = _spec_from(cfg)
    mhash = _manifest_hash("saw", cfg, None)
    t0 = time.time()
    D = build_kernel(spec)
    enum = enumerate_saw(D, cfg["p"], cfg["n_max"],
                         support_cut=cfg.get("support_cut", 0.0),
                         weight_floor=cfg.get("weight_floor", 0.0))
    Pi = extract_pi(enum)
    lace = build_tilde_D(cfg["p"], D, Pi)
    ver = verify_identity(enum.G, lace)
    decay = check_pi_decay(Pi, spec)
    summary = {
        "p": cfg["p"], "n_max": cfg["n_max"], "nodes": enum.nodes,
        "chi": float(susceptibility(enum.G)),
        "truncation_bound": enum.truncation_bound,
        "mu_p": lace.mu_p, "A_p": lace.A_p,
        "positivity_margin": lace.positivity_margin,
        "identity_sup_rel": ver["sup_rel_window"], "identity_pass": ver["pass"],
        "pi_decay": decay,
    }
    out_json = f"{args.out}/saw_summary.json"
    with open(out_json, "w") as fh:
        json.dump(summary, fh, indent=1, default=float)
        fh.write("\n")
    out_g = f"{args.out}/saw_G.csv"
    save_field_csv(out_g, enum.G, comments=[f"manifest: {mhash}"])
    man = RunManifest("saw", cfg, __version__, None, [out_json, out_g], mhash,
                      time.time() - t0, _peak_mem())
    man.write(f"{args.out}/saw_manifest.json")
    print(f"saw: mu_p={lace.mu_p:.6f} A_p={lace.A_p:.6f} "
          f"margin={lace.positivity_margin:.3e} identity_pass={ver['pass']}")
    return EXIT_OK if ver["pass"] else EXIT_NUMERIC


def cmd_perc(args):
    cfg = _load_config(args.config, "perc",
                       dict(_KERNEL_KEYS, p_list=_float_list, trials=int),
                       _KERNEL_OPT + (("x_list", _int_list), ("seed", int)))
    if cfg["trials"] <= 0:
        raise ConfigError("config key 'trials' must be positive")
    spec = _spec_from(cfg)
    seed = args.seed if args.seed is not None else cfg.get("seed", 1)
    mhash = _manifest_hash("perc", cfg, seed)
    t0 = time.time()
    D = build_kernel(spec)
    xs = cfg.get("x_list", _half_decade_targets(spec))
    targets = [[r] + [0] * (spec.d - 1) for r in xs]
    ests = []
    for p in cfg["p_list"]:
        pc = PercConfig(spec=spec, p=p, box=D.box, trials=cfg["trials"],
                        rng_seed=seed, D=D)

        def progress(done, total, _p=p):
            print(f"perc: p={_p} trials {done}/{total}", file=sys.stderr)

        ests.append(estimate_two_point(pc, targets, progress=progress))
    out_csv = f"{args.out}/perc_estimates.csv"
    estimates_to_csv(out_csv, ests, comments=[f"manifest: {mhash}"])
    outputs = [out_csv]
    summary_line = f"perc: {len(ests)} intensities, {len(xs)} radii"
    if len(ests) >= 3:
        fit = crossover_fit(ests, spec)
        out_fit = f"{args.out}/perc_fit.json"
        with open(out_fit, "w") as fh:
            json.dump(fit, fh, indent=1, default=float)
            fh.write("\n")
        outputs.append(out_fit)
        summary_line += (f"; near={fit['near_slope']} far={fit['far_slope']} "
                         f"p_c={fit['p_c']}")
    man = RunManifest("perc", cfg, __version__, seed, outputs, mhash,
                      time.time() - t0, _peak_mem())
    man.write(f"{args.out}/perc_manifest.json")
    print(summary_line)
    return EXIT_OK


def cmd_riesz(args):
    cfg = _load_config(args.config, "riesz", dict(_KERNEL_KEYS),
                       _KERNEL_OPT + (("mu", float), ("r_min", int), ("r_max", int)))
    spec = _spec_from(cfg)
    mu = cfg.get("mu", 1.0)
    if not 0.0 < mu <= 1.0:
        raise ConfigError(f"mu = {mu} outside (0, 1]")
    mhash = _manifest_hash("riesz", cfg, None)
    t0 = time.time()
    D = build_kernel(spec)
    F = delta_field(D.box)
    F.values[:] = F.values - mu * D.D.values
    r_min = cfg.get("r_min", max(4, 2 * spec.L))
    r_max = cfg.get("r_max", spec.M // 4)
    R_grid = []
    r = r_min
    while r <= r_max:
        R_grid.append(r)
        r *= 2
    demo = critical_sum_demo(F, R_grid)
    out_csv = f"{args.out}/riesz_demo.csv"
    demo_to_csv(out_csv, demo, comments=[f"manifest: {mhash}"])
    man = RunManifest("riesz", cfg, __version__, None, [out_csv], mhash,
                      time.time() - t0, _peak_mem())
    man.write(f"{args.out}/riesz_manifest.json")
    total = float(np.sum(F.values))
    print(f"riesz: classification={demo['classification']} sum_F={total:.3e}")
    return EXIT_OK


def _peak_mem():
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="longrange",
        description="Long-range lattice models: kernels, Green's functions, "
                    "self-avoiding walk, percolation, Riesz means.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in (("kernel", cmd_kernel), ("greens", cmd_greens),
                     ("saw", cmd_saw), ("perc", cmd_perc), ("riesz", cmd_riesz)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=".")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.set_defaults(fn=fn)
    args = ap.parse_args(argv)
    if args.threads is not None:
        try:
            import numba
            numba.set_num_threads(args.threads)
        except ValueError:
            pass
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (KernelError, GreensError, LaceError, SawError, PercError,
            RieszError) as exc:
        kind = EXIT_RESOURCE if "budget" in str(exc) else EXIT_NUMERIC
        if isinstance(exc, (KernelError, PercError)) and _is_validation(exc):
            kind = EXIT_VALIDATION
        print(f"error: {exc}", file=sys.stderr)
        return kind
    except LatticeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE if "budget" in str(exc) else EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


_VALIDATION_MARKERS = ("must be", "needs", "missing", "outside", "invalid",
                       "exceeds", "at least")


def _is_validation(exc):
    msg = str(exc)
    return any(m in msg for m in _VALIDATION_MARKERS)


if __name__ == "__main__":
    sys.exit(main())
