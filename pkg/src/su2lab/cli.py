"""Command-line front end: one subcommand per experiment, CSV reports out.

Subcommands

    curvature-scan   decay-exponent fits for |A|, |F|, |grad A|, |A ^ A|
    weyl-scan        shell-packet term norms and the total-vs-R scaling law
    spectrum         lattice low eigenvalues across growing boxes
    tail-scan        exterior L^3 tail norms of the three perturbation terms
    gauge-fix        discrete Coulomb relaxation with residual history
    kato-check       curvature-adjusted Kato constant on sampled sections

Shared flags: --config <path> (INI-style, one section per experiment, every
key below has a documented default, unknown keys are hard errors),
--out <path>, --seed <int>, --threads <int>, --assert (enable exit-code
checks).  Exit status: 0 on a clean run (and, with --assert, all checks
passing); 1 on degenerate/failed runs; 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from pathlib import Path

import numpy as np

from . import fields, gaugefix, lattice, weyl
from .curvature import QUANTITIES, decay_exponent_fit
from .errors import ConfigError, ConvergenceError, DegenerateFitError
from .quadrature import TAIL_TERMS, tail_norm_scan, tail_term_exponent
from .reports import ScanReport, config_hash

DEFAULTS = {
    "curvature-scan": {
        "field": "hedgehog",  # hedgehog | fast_decay | flat
        "kappa": "1.0",
        "extra_decay": "1.0",  # used by fast_decay only
        "r_min": "10.0",
        "r_max": "1000.0",
        "samples": "24",
        "slope_tol": "0.15",
    },
    "weyl-scan": {
        "field": "hedgehog",
        "kappa": "1.0",
        "extra_decay": "1.0",
        "r_list": "16,32,64,128,256,512,1024",
        "width_rule": "sqrt",  # sqrt | const
        "width_const": "4.0",
        "slope_threshold": "-0.9",
    },
    "spectrum": {
        "field": "hedgehog",
        "kappa": "1.0",
        "extra_decay": "1.0",
        "boxes": "8,16,32",
        "spacing": "2.0",
        "k": "2",
        "tol": "1e-6",
        "max_iter": "400",
        "flat_control": "true",
        "dump_ground": "false",
    },
    "tail-scan": {
        "field": "hedgehog",
        "kappa": "1.0",
        "extra_decay": "1.0",
        "terms": "I,II,III",
        "r_list": "8,16,32,64,128",
        "cut_factor": "64.0",
        "slope_tol": "0.2",
    },
    "gauge-fix": {
        "field": "hedgehog",
        "kappa": "1.0",
        "extra_decay": "1.0",
        "n": "8",
        "half_width": "2.0",
        "tol": "1e-6",
        "max_sweeps": "4000",
        "omega": "1.7",
        "randomize": "true",
        "random_scale": "0.7",
    },
    "kato-check": {
        "field": "hedgehog",
        "kappa": "1.0",
        "extra_decay": "1.0",
        "n_sections": "5",
        "n_points": "200",
        "spread": "4.0",
    },
}


def _load_section(config_path, experiment) -> dict:
    cfg = dict(DEFAULTS[experiment])
    if config_path is None:
        return cfg
    parser = configparser.ConfigParser()
    read = parser.read(config_path)
    if not read:
        raise ConfigError(f"config file not found: {config_path}")
    for section in parser.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown config section [{section}]")
    if parser.has_section(experiment):
        for key, value in parser.items(experiment):
            if key not in cfg:
                raise ConfigError(
                    f"unknown key {key!r} in [{experiment}]; "
                    f"allowed: {sorted(cfg)}"
                )
            cfg[key] = value
    return cfg


def _float(cfg, key):
    try:
        return float(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"{key} must be a number, got {cfg[key]!r}") from exc


def _int(cfg, key):
    try:
        return int(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"{key} must be an integer, got {cfg[key]!r}") from exc


def _bool(cfg, key):
    v = cfg[key].strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {cfg[key]!r}")


def _float_list(cfg, key):
    try:
        return [float(tok) for tok in cfg[key].split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"{key} must be a comma list of numbers") from exc


def _make_field(cfg):
    name = cfg["field"].strip()
    kappa = _float(cfg, "kappa")
    if name == "flat":
        return fields.flat(), 0.0
    if name == "hedgehog":
        return fields.hedgehog(fields.smoothed_tail_profile(kappa)), 0.0
    if name == "fast_decay":
        extra = _float(cfg, "extra_decay")
        if extra <= 0:
            raise ConfigError("fast_decay requires extra_decay > 0")
        return fields.fast_decay_family(kappa, extra), extra
    raise ConfigError(f"unknown field {cfg['field']!r}; use flat|hedgehog|fast_decay")


def _provenance(cfg, seed):
    return {"config_sha256": config_hash(cfg), "seed": seed}


# --------------------------------------------------------------------------
# runners


def run_curvature_scan(cfg, seed=0, threads=1) -> ScanReport:
    field, extra = _make_field(cfg)
    r_min, r_max = _float(cfg, "r_min"), _float(cfg, "r_max")
    samples = _int(cfg, "samples")
    tol = _float(cfg, "slope_tol")
    rep = ScanReport(
        experiment="curvature-scan",
        columns=[
            "field", "kappa", "extra_decay", "r_min", "r_max", "samples",
            "quantity", "slope", "intercept", "fit_residual", "degenerate",
            "analytic_numeric_max_rel", "flipped_sign_max_rel",
            "f_leading", "fprime_leading",
        ],
        provenance=_provenance(cfg, seed),
    )
    expected = {
        "A": -(2.0 + extra),
        "F": -(3.0 + extra),
        "gradA": -(3.0 + extra),
        "AwedgeA": -(4.0 + 2.0 * extra),
    }
    base = (field.name, _float(cfg, "kappa"), extra, r_min, r_max, samples)
    for quantity in QUANTITIES:
        check_cols = (None, None, None, None)
        if quantity == "F" and field.profile is not None:
            check_cols = _analytic_check_columns(field, seed)
        try:
            fit = decay_exponent_fit(
                field, quantity, r_min, r_max, samples, seed=seed, threads=threads
            )
        except DegenerateFitError:
            rep.add_row(*base, quantity, None, None, None, True, *check_cols)
            rep.flagged = True
            continue
        rep.add_row(
            *base, quantity, fit.slope, fit.intercept, fit.residual,
            not fit.power_law_ok, *check_cols,
        )
        if not fit.power_law_ok:
            rep.flagged = True
        rep.check(
            f"slope[{quantity}]",
            abs(fit.slope - expected[quantity]) <= tol,
            f"fit {fit.slope:.4f} vs expected {expected[quantity]:.2f} +- {tol}",
        )
    return rep


def _analytic_check_columns(field, seed):
    """Closed-form-vs-numeric curvature agreement, both commutator signs."""
    from .curvature import curvature_norm, curvature_numeric_coeffs, hedgehog_curvature_coeffs

    rng = np.random.default_rng(seed + 1)
    dirs = rng.standard_normal((40, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    pts = dirs * rng.uniform(2.0, 50.0, size=(40, 1))
    num = curvature_numeric_coeffs(field, pts, 1e-3)
    scale = np.maximum(curvature_norm(num), 1e-300)
    dev_plus = curvature_norm(num - hedgehog_curvature_coeffs(field.profile, pts, 1.0))
    dev_minus = curvature_norm(num - hedgehog_curvature_coeffs(field.profile, pts, -1.0))
    rfar = 1000.0
    f_lead = float(field.profile.shape(rfar) * rfar ** 3)
    fp_lead = float(field.profile.shape_prime(rfar) * rfar ** 4)
    return (
        float(np.max(dev_plus / scale)),
        float(np.max(dev_minus / scale)),
        f_lead,
        fp_lead,
    )


def run_weyl_scan(cfg, seed=0, threads=1) -> ScanReport:
    field, _ = _make_field(cfg)
    r_list = _float_list(cfg, "r_list")
    if len(r_list) < 4:
        raise ConfigError("weyl-scan needs an R list of at least 4 entries")
    rule_name = cfg["width_rule"].strip()
    wconst = _float(cfg, "width_const")
    if rule_name == "sqrt":
        rule = math.sqrt
    elif rule_name == "const":
        rule = lambda R: wconst  # noqa: E731
    else:
        raise ConfigError("width_rule must be sqrt or const")
    threshold = _float(cfg, "slope_threshold")
    scan = weyl.weyl_scaling_scan(
        weyl.standard_bump(), field, r_list, rule, threads=threads
    )
    rep = ScanReport(
        experiment="weyl-scan",
        columns=[
            "field", "R", "w", "norm_ratio", "lap", "cross", "div", "asq",
            "total", "pairing", "slope",
        ],
        provenance=_provenance(cfg, seed),
    )
    for row in scan.rows:
        rep.add_row(
            field.name, row.R, row.w, row.norm_ratio, row.lap, row.cross,
            row.div, row.asq, row.total, row.pairing, scan.slope,
        )
    rep.check(
        "total_slope",
        scan.slope <= threshold,
        f"slope {scan.slope:.4f} vs threshold {threshold}",
    )
    return rep


def run_spectrum(cfg, seed=0, threads=1, out_base=None) -> ScanReport:
    field, _ = _make_field(cfg)
    boxes = _float_list(cfg, "boxes")
    spacing = _float(cfg, "spacing")
    k = _int(cfg, "k")
    if k < 1:
        raise ConfigError("spectrum needs k >= 1")
    tol = _float(cfg, "tol")
    max_iter = _int(cfg, "max_iter")
    control = _bool(cfg, "flat_control")
    dump = _bool(cfg, "dump_ground")
    rep = ScanReport(
        experiment="spectrum",
        columns=[
            "field", "box_half_width", "n", "h", "eig_index", "eigenvalue",
            "residual_norm", "flat_lambda1_closed",
        ],
        provenance=_provenance(cfg, seed),
    )
    lambda1 = []
    for L in boxes:
        n = int(round(2.0 * L / spacing)) + 1
        spec = lattice.LatticeSpec(L=L, n=n)
        links = lattice.build_links(field, spec)
        flat1 = lattice.free_mode_eigenvalue(spec, (1, 1, 1)) if control else None
        try:
            pairs = lattice.lowest_eigenvalues(links, k, tol=tol, max_iter=max_iter, seed=seed)
        except ConvergenceError as exc:
            rep.flagged = True
            pairs = exc.best or []
        for idx, (ev, res) in enumerate(pairs):
            rep.add_row(field.name, L, n, spec.h, idx, ev, res, flat1)
            rep.check(f"nonneg[L={L},{idx}]", ev >= -1e-10, f"eigenvalue {ev:.3e}")
        if pairs:
            lambda1.append(pairs[0][0])
        if dump and L == boxes[-1] and out_base is not None:
            vecs = lattice.lowest_eigenvalues(
                links, 1, tol=tol, max_iter=max_iter, seed=seed, return_vectors=True
            )
            gf = lattice.GridField(vecs[0][2].reshape((n, n, n, 2)), spec)
            lattice.dump_grid_field(gf, Path(out_base).with_suffix(""), name="ground")
    if len(lambda1) > 1:
        rep.check(
            "lambda1_decreasing",
            all(b < a for a, b in zip(lambda1, lambda1[1:])),
            f"lambda1 across boxes: {lambda1}",
        )
    return rep


def run_tail_scan(cfg, seed=0, threads=1) -> ScanReport:
    field, extra = _make_field(cfg)
    terms = [t.strip() for t in cfg["terms"].split(",") if t.strip()]
    for t in terms:
        if t not in TAIL_TERMS:
            raise ConfigError(f"unknown tail term {t!r}")
    r_list = _float_list(cfg, "r_list")
    cut = _float(cfg, "cut_factor")
    tol = _float(cfg, "slope_tol")
    delta = 1.0 + extra
    rep = ScanReport(
        experiment="tail-scan",
        columns=[
            "field", "term", "R", "value", "quad_error",
            "truncation_correction", "slope", "expected_exponent",
        ],
        provenance=_provenance(cfg, seed),
    )
    for term in terms:
        points = tail_norm_scan(
            field, term, r_list, cut_factor=cut, threads=threads
        )
        vals = np.array([p.value for p in points])
        expected = tail_term_exponent(term, delta)
        if np.all(vals > 0.0):
            coef = np.polyfit(np.log(r_list), np.log(vals), 1)
            slope = float(coef[0])
        else:
            slope = None
            rep.flagged = True
        for p in points:
            rep.add_row(
                field.name, term, p.R, p.value, p.error,
                p.truncation_correction, slope, expected,
            )
        if slope is not None:
            rep.check(
                f"slope[{term}]",
                abs(slope - expected) <= tol,
                f"fit {slope:.4f} vs expected {expected:.2f} +- {tol}",
            )
            rep.check(
                f"monotone[{term}]",
                bool(np.all(np.diff(vals) <= 1e-12 * vals[:-1] + 1e-300)),
                "tail values non-increasing",
            )
    return rep


def run_gauge_fix(cfg, seed=0, threads=1) -> ScanReport:
    field, _ = _make_field(cfg)
    n = _int(cfg, "n")
    spec = lattice.LatticeSpec(L=_float(cfg, "half_width"), n=n)
    tol = _float(cfg, "tol")
    links = lattice.build_links(field, spec)
    if _bool(cfg, "randomize"):
        g_rand = lattice.random_gauge(spec, seed=seed + 101, scale=_float(cfg, "random_scale"))
        links = lattice.gauge_transform_links(links, g_rand)
    before = gaugefix.plaquette_norms(links)
    rep = ScanReport(
        experiment="gauge-fix",
        columns=["field", "n", "sweep", "residual"],
        provenance=_provenance(cfg, seed),
    )
    try:
        g, history = gaugefix.fix_coulomb(
            links, tol=tol, max_sweeps=_int(cfg, "max_sweeps"), omega=_float(cfg, "omega")
        )
    except ConvergenceError as exc:
        for i, r in enumerate(exc.history or []):
            rep.add_row(field.name, n, i, r)
        rep.flagged = True
        rep.check("converged", False, str(exc))
        return rep
    for i, r in enumerate(history):
        rep.add_row(field.name, n, i, r)
    fixed = lattice.gauge_transform_links(links, g.g)
    after = gaugefix.plaquette_norms(fixed)
    rep.check("final_residual", history[-1] <= tol, f"{history[-1]:.3e} <= {tol}")
    rep.check(
        "monotone_descent",
        all(b <= a * (1.0 + 1e-12) + 1e-300 for a, b in zip(history, history[1:])),
        "residual history non-increasing",
    )
    rep.check(
        "curvature_preserved",
        float(np.max(np.abs(after - before))) <= 1e-8,
        f"max plaquette-norm deviation {float(np.max(np.abs(after - before))):.3e}",
    )
    return rep


def run_kato_check(cfg, seed=0, threads=1) -> ScanReport:
    field, _ = _make_field(cfg)
    n_sections = _int(cfg, "n_sections")
    n_points = _int(cfg, "n_points")
    spread = _float(cfg, "spread")
    rng = np.random.default_rng(seed)
    rep = ScanReport(
        experiment="kato-check",
        columns=["field", "section", "min_c", "worst_x", "worst_y", "worst_z"],
        provenance=_provenance(cfg, seed),
    )
    flat_field = cfg["field"].strip() == "flat"
    for s in range(n_sections):
        psi = weyl.GaussianSpinorSum.random(seed=seed + s, spread=spread)
        dirs = rng.standard_normal((n_points, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pts = dirs * rng.uniform(0.5, 2.0 * spread, size=(n_points, 1))
        result = weyl.kato_deficit(field, psi, pts)
        rep.add_row(
            field.name, s, result.min_c,
            float(result.worst_point[0]), float(result.worst_point[1]),
            float(result.worst_point[2]),
        )
        rep.check(
            f"finite[{s}]",
            math.isfinite(result.min_c) and result.min_c >= 0.0,
            f"min_c {result.min_c:.4e}",
        )
        if flat_field:
            rep.check(f"flat_zero[{s}]", result.min_c == 0.0, "flat field needs no correction")
    return rep


RUNNERS = {
    "curvature-scan": run_curvature_scan,
    "weyl-scan": run_weyl_scan,
    "spectrum": run_spectrum,
    "tail-scan": run_tail_scan,
    "gauge-fix": run_gauge_fix,
    "kato-check": run_kato_check,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="su2lab", description="SU(2) connection experiments on R^3"
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--assert", dest="do_assert", action="store_true")
    args = parser.parse_args(argv)
    out = args.out or f"{args.experiment.replace('-', '_')}.csv"
    try:
        cfg = _load_section(args.config, args.experiment)
        runner = RUNNERS[args.experiment]
        if args.experiment == "spectrum":
            report = runner(cfg, seed=args.seed, threads=args.threads, out_base=out)
        else:
            report = runner(cfg, seed=args.seed, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    report.write(out)
    for a in report.assertions:
        status = "ok" if a.passed else "FAIL"
        print(f"[{status}] {a.name}: {a.detail}")
    if report.flagged:
        print("run flagged (degenerate or partial results)", file=sys.stderr)
        return 1
    if args.do_assert and not report.passed:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
