"""Command-line front end.

Grammar: kpz-exact <experiment> [--key value]... [--config file.json]
[--out dir].  A JSON config file supplies defaults; explicit flags win.
Every run writes a JSON manifest with the echoed configuration, version,
timestamps, worker count, and a machine-readable list of checks.  Exit
codes: 0 all checks pass, 1 configuration error, 2 numeric check failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from .errors import InvalidConfig, KpzExactError, NestingInfeasible

CSV_FORMAT = "CSV"
JSON_FORMAT = "JSON"


def worker_count():
    """Worker pool size: KPZ_EXACT_WORKERS env var, default 1."""
    raw = os.environ.get("KPZ_EXACT_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise InvalidConfig(f"KPZ_EXACT_WORKERS must be an integer, got {raw!r}")
    if n < 1:
        raise InvalidConfig("KPZ_EXACT_WORKERS must be >= 1")
    return n


def _positive(name, lo=None, hi=None, integer=False):
    def check(value, params):
        if integer and not float(value).is_integer():
            raise InvalidConfig(f"{name} must be an integer")
        v = float(value)
        if lo is not None and v < lo:
            raise InvalidConfig(f"{name} must be >= {lo}")
        if hi is not None and v > hi:
            raise InvalidConfig(f"{name} must be <= {hi}")
        return int(v) if integer else v
    return check


def _q_range(value, params):
    q = float(value)
    if not 0.0 < q < 1.0:
        raise InvalidConfig("q must lie in (0,1)")
    return q


def _int_list(value, params):
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    return [int(v) for v in str(value).split(",") if v != ""]


def _float_list(value, params):
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [float(v) for v in str(value).split(",") if v != ""]


def _grid(value, params):
    """a:b:step inclusive grid, or a comma list."""
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    text = str(value)
    if ":" in text:
        try:
            a, b, step = (float(v) for v in text.split(":"))
        except ValueError:
            raise InvalidConfig(f"grid must be a:b:step, got {text!r}")
        if step <= 0 or b < a:
            raise InvalidConfig("grid requires a <= b and step > 0")
        n = int(round((b - a) / step))
        return [a + i * step for i in range(n + 1)]
    return _float_list(text, params)


# Each experiment: {param: (converter, default)}.  None defaults are required.
_SCHEMAS = {
    "duality-check": {
        "N": (_positive("N", 1, 6, integer=True), 5),
        "q": (_q_range, 0.5),
        "trials": (_positive("trials", 1, integer=True), 1000),
        "max-particles": (_positive("max-particles", 1, 6, integer=True), 6),
        "tol": (_positive("tol", 0.0), 1e-13),
    },
    "moments": {
        "q": (_q_range, 0.5),
        "t": (_positive("t", 0.0), 1.0),
        "n": (_int_list, [2, 1]),
        "samples": (_positive("samples", 1, integer=True), 1_000_000),
        "tol": (_positive("tol", 0.0), 1e-8),
    },
    "qlaplace": {
        "q": (_q_range, 0.5),
        "t": (_positive("t", 0.0), 1.0),
        "n": (_positive("n", 1, 4, integer=True), 1),
        "zeta": (_float_list, [-0.05, -0.1]),
        "tol": (_positive("tol", 0.0), 1e-6),
    },
    "lyapunov": {
        "nu": (_float_list, [0.5, 1.0, 2.0]),
        "k-max": (_positive("k-max", 1, 6, integer=True), 3),
    },
    "tracy-widom": {
        "s-grid": (_grid, [-4.0 + 0.5 * i for i in range(13)]),
        "tol": (_positive("tol", 0.0), 1e-6),
    },
    "crossover": {
        "r-grid": (_grid, [-4.0 + 0.25 * i for i in range(33)]),
        "t": (_float_list, [1.0, 10.0, 100.0]),
    },
    "spectral": {
        "q": (_q_range, 0.5),
        "k": (_positive("k", 1, 3, integer=True), 2),
        "box": (_positive("box", 1, 4, integer=True), 3),
        "trials": (_positive("trials", 1, integer=True), 200),
    },
    "chaos": {
        "t": (_positive("t", 0.0), 1.0),
        "x": (lambda v, p: float(v), 0.0),
        "k": (_positive("k", 1, 8, integer=True), 3),
        "alphas": (_positive("alphas", 1, integer=True), 50),
        "samples": (_positive("samples", 1, integer=True), 1_000_000),
    },
    "polymer": {
        "N": (_positive("N", 1, integer=True), 3),
        "T": (_positive("T", 0.0), 1.0),
        "beta": (_positive("beta", 0.0), 0.7),
        "samples": (_positive("samples", 1, integer=True), 200_000),
    },
}

_COMMON = {
    "seed": (_positive("seed", 0, integer=True), 0),
    "format": (lambda v, p: str(v).upper(), CSV_FORMAT),
}


def validate_config(experiment, raw):
    """Resolve and type-check raw parameters against the schema.

    Also prechecks contour feasibility for experiments that integrate over
    nested circles, so infeasible (q, k) pairs fail before any work."""
    if experiment not in _SCHEMAS:
        raise InvalidConfig(f"unknown experiment {experiment!r}")
    schema = dict(_SCHEMAS[experiment])
    schema.update(_COMMON)
    params = {}
    for key, value in raw.items():
        if key not in schema:
            raise InvalidConfig(f"unknown key {key!r} for {experiment}")
    for key, (conv, default) in schema.items():
        if key in raw:
            params[key] = conv(raw[key], params)
        elif default is None:
            raise InvalidConfig(f"missing required key {key!r}")
        else:
            params[key] = default
    if params.get("format") not in (CSV_FORMAT, JSON_FORMAT, None):
        raise InvalidConfig("format must be CSV or JSON")
    if experiment == "moments":
        from .contours import nested_radii
        k = len(params["n"])
        try:
            nested_radii(k, params["q"])
        except NestingInfeasible as exc:
            raise InvalidConfig(f"nesting infeasible: r_1 > 1 ({exc})")
    if experiment == "spectral":
        from .contours import nested_radii
        try:
            nested_radii(params["k"], params["q"])
        except NestingInfeasible as exc:
            raise InvalidConfig(f"nesting infeasible: r_1 > 1 ({exc})")
    return params


class CheckList:
    """Accumulates named numeric checks for the manifest."""

    def __init__(self):
        self.entries = []

    def add(self, name, value, tol, ok=None):
        value = float(value)
        if ok is None:
            ok = value <= tol
        self.entries.append({"name": name, "value": value,
                             "tolerance": float(tol), "pass": bool(ok)})
        return ok

    @property
    def all_pass(self):
        return all(e["pass"] for e in self.entries)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in row])


def _write_dat(path, header_cols, columns):
    """Whitespace-delimited plot data with a #-prefixed header line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + "  ".join(header_cols) + "\n")
        for row in zip(*columns):
            fh.write("  ".join(repr(float(v)) for v in row) + "\n")


def _run_duality(params, out_dir, checks):
    from .simulate import duality_check
    from .simulate import RngStream

    worst = duality_check(
        N=params["N"], q=params["q"], n_trials=params["trials"],
        rng=RngStream(params["seed"]),
        max_particles=params["max-particles"])
    checks.add("duality_max_residual", worst, params["tol"])
    _write_csv(os.path.join(out_dir, "duality.csv"),
               ["trials", "N", "q", "max_residual"],
               [[params["trials"], params["N"], params["q"], float(worst)]])


def _run_moments(params, out_dir, checks):
    from .contours import qtasep_moment_nested, qtasep_moment_unnested
    from .simulate import RngStream, mc_qmoment

    n_vec = tuple(sorted(params["n"], reverse=True))
    q, t = params["q"], params["t"]
    nested = qtasep_moment_nested(n_vec, t, q)
    unnested = qtasep_moment_unnested(n_vec, t, q)
    est = mc_qmoment(n_vec, t, q, params["samples"], RngStream(params["seed"]))
    rel = abs(nested - unnested) / max(1e-30, abs(nested))
    checks.add("nested_vs_unnested_rel", rel, params["tol"])
    z = abs(est.mean - nested) / max(est.stderr, 1e-300)
    checks.add("mc_z_score", z, 3.0)
    _write_csv(os.path.join(out_dir, "moments.csv"),
               ["n_vec", "q", "t", "nested", "unnested", "mc_mean",
                "mc_stderr", "samples"],
               [[";".join(str(v) for v in n_vec), q, t, float(nested),
                 float(unnested), float(est.mean), float(est.stderr),
                 params["samples"]]])


def _run_qlaplace(params, out_dir, checks):
    from .fredholm import AUTO, g_series, g_series_from_moments

    q, t, n = params["q"], params["t"], params["n"]
    rows = []
    for zeta in params["zeta"]:
        det = g_series(n, t, q, complex(zeta, 0.0), method=AUTO).value
        series = complex(g_series_from_moments(n, t, q, complex(zeta, 0.0)))
        err = abs(det - series)
        checks.add(f"g_vs_det_zeta_{zeta}", err, params["tol"])
        rows.append([zeta, float(det.real), float(det.imag),
                     float(series.real), float(err)])
    _write_csv(os.path.join(out_dir, "qlaplace.csv"),
               ["zeta", "det_re", "det_im", "series_re", "abs_err"], rows)


def _run_lyapunov(params, out_dir, checks):
    from .asymptotics import intermittency_report, lyapunov_profile_csv

    k_max = params["k-max"]
    for nu in params["nu"]:
        profile = intermittency_report(nu, k_max)
        checks.add(f"weak_ordering_nu_{nu}", 0.0 if profile.weak_ordering else 1.0,
                   0.5, ok=profile.weak_ordering)
    text = lyapunov_profile_csv(params["nu"], k_max)
    with open(os.path.join(out_dir, "lyapunov.csv"), "w", newline="",
              encoding="utf-8") as fh:
        fh.write(text)


def _run_tracy_widom(params, out_dir, checks):
    from .fredholm import FREDHOLM, PAINLEVE, tracy_widom_f2

    rows = []
    worst = 0.0
    for s in params["s-grid"]:
        f_det = tracy_widom_f2(s, method=FREDHOLM)
        f_ode = tracy_widom_f2(s, method=PAINLEVE)
        delta = abs(f_det - f_ode)
        worst = max(worst, delta)
        rows.append([float(s), float(f_det), float(f_ode), float(delta)])
    checks.add("f2_two_method_max_abs", worst, params["tol"])
    _write_csv(os.path.join(out_dir, "tracy_widom.csv"),
               ["s", "F2_fredholm", "F2_painleve", "abs_delta"], rows)
    emit_plotdata(out_dir, {"fgue": (["s", "F2"],
                                     [[r[0] for r in rows],
                                      [r[2] for r in rows]])})


def _run_crossover(params, out_dir, checks):
    from .fredholm import PAINLEVE, kpz_crossover, tracy_widom_f2

    grid = params["r-grid"]
    if not grid:
        warnings.warn("empty r-grid: no plot data emitted")
        return
    curves = {}
    sup_dists = []
    for t in params["t"]:
        vals = [kpz_crossover(r, t) for r in grid]
        lo, hi = min(vals), max(vals)
        checks.add(f"range_t_{t:g}", max(-lo, hi - 1.0), 1e-8)
        steps = min(b - a for a, b in zip(vals, vals[1:])) if len(vals) > 1 else 0.0
        checks.add(f"monotone_t_{t:g}", max(0.0, -steps), 1e-10)
        f2 = [tracy_widom_f2(r, method=PAINLEVE) for r in grid]
        sup = max(abs(a - b) for a, b in zip(vals, f2))
        sup_dists.append((t, sup))
        curves[f"crossover_t{t:g}"] = (["r", "F_t"], [grid, vals])
    curves["fgue"] = (["r", "F2"],
                      [grid, [tracy_widom_f2(r, method=PAINLEVE) for r in grid]])
    decreasing = all(b[1] < a[1] for a, b in zip(sup_dists, sup_dists[1:]))
    checks.add("sup_dist_decreasing", 0.0 if decreasing else 1.0, 0.5,
               ok=decreasing)
    emit_plotdata(out_dir, curves)
    _write_csv(os.path.join(out_dir, "crossover.csv"),
               ["t", "sup_dist_to_f2"],
               [[t, float(s)] for t, s in sup_dists])


def _run_spectral(params, out_dir, checks):
    from .spectral import (biorthogonality_check, boundary_residual,
                           eigen_residual, plancherel_check,
                           pt_conjugation_residual)

    q, k, box = params["q"], params["k"], params["box"]
    rng = np.random.default_rng(params["seed"])
    we = wb = wp = 0.0
    for _ in range(params["trials"]):
        kk = int(rng.integers(1, k + 1))
        z = rng.standard_normal(kk) + 1j * rng.standard_normal(kk) + 2.0
        n = tuple(sorted(int(v) for v in rng.integers(0, box + 1, size=kk)),
                  )[::-1]
        we = max(we, eigen_residual(z, n, q))
        wp = max(wp, pt_conjugation_residual(z, n, q))
        if kk >= 2:
            i = int(rng.integers(1, kk))
            m = list(n)
            m[i] = m[i - 1]
            wb = max(wb, boundary_residual(z, tuple(m), q, i))
    checks.add("eigen_residual", we, 1e-10)
    checks.add("boundary_residual", wb, 1e-10)
    checks.add("pt_residual", wp, 1e-12)
    kp = min(k, 2)
    pl = plancherel_check(kp, min(box, 3), q)
    checks.add("plancherel", pl, 1e-7)
    bi = biorthogonality_check(kp, min(box, 3), q)
    checks.add("biorthogonality", bi, 1e-7)
    _write_csv(os.path.join(out_dir, "spectral.csv"),
               ["check", "value"],
               [[e["name"], e["value"]] for e in checks.entries])


def _run_chaos(params, out_dir, checks):
    from .chaos import (MC, SIMPLEX_MC, chaos_scaling_slope, chaos_variance,
                        dirichlet_integral, simplex_halfpower_quadrature)
    from .simulate import RngStream

    rng = np.random.default_rng(params["seed"])
    worst_z = 0.0
    n_each = max(1, params["samples"] // max(1, params["alphas"]))
    for i in range(params["alphas"]):
        kk = int(rng.integers(2, 6))
        # alpha >= 1 keeps the importance weight bounded on the simplex, so
        # the sample variance (and hence the z-score) is trustworthy
        alpha = rng.uniform(1.0, 4.0, size=kk)
        exact = dirichlet_integral(alpha)
        est = dirichlet_integral(alpha, MC, n_samples=n_each,
                                 rng=RngStream(params["seed"], i + 1))
        z = abs(est.mean - exact) / max(est.stderr, 1e-300)
        worst_z = max(worst_z, z)
    checks.add("dirichlet_worst_z", worst_z, 3.0)
    checks.add("quadrature_k2_vs_pi",
               abs(simplex_halfpower_quadrature(2) - math.pi), 1e-6)
    k = params["k"]
    checks.add("scaling_slope", abs(chaos_scaling_slope(k, params["t"],
                                                        params["x"])
                                    - (k / 2.0 - 1.0)), 1e-10)
    cf = chaos_variance(k, params["t"], params["x"])
    cm = chaos_variance(k, params["t"], params["x"], SIMPLEX_MC,
                        n_samples=params["samples"],
                        rng=RngStream(params["seed"], 997))
    z = abs(cm.value - cf.value) / max(cm.stderr, 1e-300)
    checks.add("chaos_variance_z", z, 3.0)
    _write_csv(os.path.join(out_dir, "chaos.csv"),
               ["check", "value"],
               [[e["name"], e["value"]] for e in checks.entries])


def _run_polymer(params, out_dir, checks):
    from .simulate import RngStream, oy_overlap_second_moment

    report = oy_overlap_second_moment(
        params["T"], params["N"], params["beta"], params["samples"],
        RngStream(params["seed"]))
    z = (abs(report.mean_partition.mean - report.mean_closed_form)
         / max(report.mean_partition.stderr, 1e-300))
    checks.add("mean_partition_z", z, 3.0)
    checks.add("occupancy_identity_residual", report.identity_residual, 1e-8)
    _write_csv(os.path.join(out_dir, "polymer.csv"),
               ["N", "T", "beta", "overlap_ratio", "ratio_stderr",
                "mean_partition", "mean_closed_form", "z_score"],
               [[params["N"], params["T"], params["beta"],
                 float(report.ratio.mean), float(report.ratio.stderr),
                 float(report.mean_partition.mean),
                 float(report.mean_closed_form), float(z)]])


_RUNNERS = {
    "duality-check": _run_duality,
    "moments": _run_moments,
    "qlaplace": _run_qlaplace,
    "lyapunov": _run_lyapunov,
    "tracy-widom": _run_tracy_widom,
    "crossover": _run_crossover,
    "spectral": _run_spectral,
    "chaos": _run_chaos,
    "polymer": _run_polymer,
}


def emit_plotdata(out_dir, curves):
    """Write one whitespace-delimited .dat file per named curve."""
    if not curves:
        warnings.warn("no curves to emit")
        return []
    paths = []
    for name, (header_cols, columns) in curves.items():
        path = os.path.join(out_dir, name + ".dat")
        _write_dat(path, header_cols, columns)
        paths.append(path)
    return paths


def run(experiment, params, out_dir):
    """Execute one experiment; returns (exit_code, manifest dict)."""
    os.makedirs(out_dir, exist_ok=True)
    start = datetime.datetime.now(datetime.timezone.utc).isoformat()
    checks = CheckList()
    _RUNNERS[experiment](params, out_dir, checks)
    end = datetime.datetime.now(datetime.timezone.utc).isoformat()
    manifest = {
        "checks": checks.entries,
        "config": {"experiment": experiment,
                   "params": {k: params[k] for k in sorted(params)}},
        "end": end,
        "start": start,
        "version": __version__,
        "workers": worker_count(),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return (0 if checks.all_pass else 2), manifest


def _parse_argv(argv):
    parser = argparse.ArgumentParser(
        prog="kpz-exact",
        description="Exact-formula and simulation experiments for q-TASEP "
                    "and the KPZ crossover.")
    parser.add_argument("experiment",
                        choices=sorted(_RUNNERS) + ["validate"])
    parser.add_argument("--config", default=None,
                        help="JSON file with parameter defaults")
    parser.add_argument("--out", default="out", help="output directory")
    known, rest = parser.parse_known_args(argv)
    overrides = {}
    i = 0
    while i < len(rest):
        item = rest[i]
        if not item.startswith("--") or len(item) == 2:
            raise InvalidConfig(f"unexpected argument {item!r}")
        key = item[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            i += 1
            if i >= len(rest):
                raise InvalidConfig(f"missing value for --{key}")
            value = rest[i]
        overrides[key] = value
        i += 1
    return known, overrides


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        known, overrides = _parse_argv(argv)
    except InvalidConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        raw = {}
        if known.config is not None:
            with open(known.config, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
            experiment = loaded.pop("experiment", None)
            raw.update(loaded)
        else:
            experiment = None
        raw.update(overrides)
        if known.experiment == "validate":
            if experiment is None:
                experiment = raw.pop("experiment", None)
            if experiment is None:
                raise InvalidConfig("validate requires an experiment "
                                    "in the config file")
            params = validate_config(experiment, raw)
            table = {k: params[k] for k in sorted(params)}
            print(json.dumps({"experiment": experiment, "ok": True,
                              "params": table}, indent=2, sort_keys=True,
                             default=str))
            return 0
        experiment = known.experiment
        params = validate_config(experiment, raw)
    except (InvalidConfig, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        code, manifest = run(experiment, params, known.out)
    except KpzExactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for entry in manifest["checks"]:
        status = "PASS" if entry["pass"] else "FAIL"
        print(f"{status} {entry['name']}: {entry['value']:.3e} "
              f"(tol {entry['tolerance']:g})")
    if code != 0:
        failures = [e for e in manifest["checks"] if not e["pass"]]
        print(json.dumps({"failures": failures}, sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
