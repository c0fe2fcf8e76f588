"""Command line entry point ``irbound``.

Subcommands ``table1``, ``certify``, ``scan``, ``verify`` and ``rp-check``
read an optional JSON configuration, write a JSON (or CSV) report to
``--out`` or stdout, and exit with 0 when every check passes, 1 when at
least one fails and 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__, checks
from .certificates import (
    REFERENCE_INTEGRALS,
    CertificateInput,
    ScanPoint,
    alpha_free_condition,
    general_lro_bound,
    limit_integrals,
    nn_lro_bounds,
    scan,
)
from .checks import DEFAULT_SEED, CheckResult
from .config import families_from_config, load_config, parse_beta, parse_ell, ratio_values, table_from_config
from .ed import SpinModel, SpinSystem
from .exceptions import ConfigError, IRBoundError
from .lattice import NearestNeighbour, momenta, reflection_planes, rp_check
from .suite import run_all

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
_FLOAT_DIGITS = 12


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _stable(obj):
    """Convert to plain JSON types with floats rounded to a fixed number of significant digits."""
    if isinstance(obj, dict):
        return {str(k): _stable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_stable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_stable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.{_FLOAT_DIGITS}g}")
    return obj


def dumps(report: dict) -> str:
    """Byte-stable JSON: sorted keys, rounded floats, trailing newline."""
    return json.dumps(_stable(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def check_record(res: CheckResult) -> dict:
    rec = {
        "name": res.name,
        "reference": res.reference,
        "parameters": res.parameters,
        "margin": res.margin,
        "tolerance": res.tolerance,
        "pass": None if res.skipped else res.passed,
    }
    if res.skipped:
        rec["skipped"] = res.skipped
    if res.details:
        rec["details"] = res.details
    return rec


def _summary(results: list[CheckResult]) -> dict:
    ran = [r for r in results if not r.skipped]
    failed = [r for r in ran if not r.passed]
    out = {"checks": len(results), "passed": len(ran) - len(failed), "failed": len(failed),
           "skipped": len(results) - len(ran)}
    if ran:
        out["min_margin"] = min(r.margin for r in ran)
    return out


class _Timer:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.stages: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.stages[name] = self.stages.get(name, 0.0) + time.perf_counter() - t0


def _report(command, cfg, seed, results, timer, extra=None):
    rep = {
        "tool": "irbound",
        "version": __version__,
        "command": command,
        "config": cfg,
        "seed": seed,
        "summary": _summary(results),
        "checks": [check_record(r) for r in results],
        "status": "fail" if any(not r.passed and not r.skipped for r in results) else "pass",
    }
    if extra:
        rep.update(extra)
    if timer.enabled:
        rep["timings_seconds"] = timer.stages
    return rep


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


# printed-digit tolerances for (I, I_tilde) of the reference table
_TABLE_TOL = (2e-3, 5e-4)


def cmd_table1(cfg: dict, seed: int, timer: _Timer) -> dict:
    results = []
    rows = []
    for d, (ref_I, ref_It) in sorted(REFERENCE_INTEGRALS.items()):
        with timer.stage(f"d={d}"):
            li = limit_integrals(d)
        rows.append({"d": d, "I": li.I, "I_tilde": li.I_tilde, "I_err": li.I_err, "I_tilde_err": li.I_tilde_err,
                     "levels": list(li.levels)})
        for name, val, ref, err, tol in (("I", li.I, ref_I, li.I_err, _TABLE_TOL[0]),
                                         ("I_tilde", li.I_tilde, ref_It, li.I_tilde_err, _TABLE_TOL[1])):
            margin = tol - abs(val - ref)
            results.append(CheckResult(f"limit_integral_{name}", "reference table of the limit integrals",
                                       margin >= 0 and err <= tol, margin, tol, {"d": d},
                                       {"computed": val, "reference": ref, "extrapolation_error": err}))
    return _report("table1", cfg, seed, results, timer, {"rows": rows})


def _alpha_mode(cfg):
    mode = cfg.get("alpha_mode", "worst_case")
    if isinstance(mode, dict):
        return "measured", float(mode["measured"])
    return mode, None


def _nn_couplings(cfg):
    fams = families_from_config(cfg["couplings"])
    if not all(isinstance(f, NearestNeighbour) for f in fams):
        return None
    return tuple(f.J for f in fams)


def _require(cfg, *keys):
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"configuration needs {', '.join(repr(k) for k in missing)}")


def cmd_certify(cfg: dict, seed: int, timer: _Timer) -> dict:
    _require(cfg, "dimension", "spin_times_two", "couplings")
    d, two_S = cfg["dimension"], cfg["spin_times_two"]
    beta = parse_beta(cfg.get("beta", "inf"))
    ell = parse_ell(cfg.get("ell", "inf"))
    nn = _nn_couplings(cfg)
    extra = {}
    with timer.stage("certificate"):
        if nn is not None:
            J1, J2, J3 = nn
            mode, alpha = _alpha_mode(cfg)
            try:
                inp = CertificateInput(d, two_S, J1, J2, beta, ell, mode, alpha, J3)
            except IRBoundError as exc:
                raise ConfigError(str(exc)) from None
            rep = nn_lro_bounds(inp)
            extra["path"] = "nearest_neighbour"
            if inp.ratio is not None and d in REFERENCE_INTEGRALS:
                cond = alpha_free_condition(d, two_S, inp.ratio)
                extra["alpha_free_condition"] = {"holds": cond.holds, "threshold": cond.threshold,
                                                 "lhs": cond.lhs, "rhs": cond.rhs}
        else:
            if ell is None:
                raise ConfigError("general coupling families are certified at finite ell only")
            try:
                rep = general_lro_bound(table_from_config(cfg), two_S, beta)
            except IRBoundError as exc:
                raise ConfigError(str(exc)) from None
            extra["path"] = "general"
    extra["certificate"] = rep.to_dict()
    best = max(b for b in (rep.bound1, rep.bound2) if b is not None)
    consistent = rep.lro_proven == (best > 0)
    results = [CheckResult("certificate_consistent", "certificate flag agrees with the reported bounds",
                           consistent, 0.0 if consistent else -1.0, 0.0, {}, {"max_bound": best})]
    return _report("certify", cfg, seed, results, timer, extra)


def scan_points(cfg: dict) -> list[ScanPoint]:
    grid = cfg.get("grid", {})

    def axis(key, top_key, default):
        if key in grid:
            return list(grid[key])
        if top_key in cfg:
            return [cfg[top_key]]
        return default

    dims = axis("dimension", "dimension", None)
    spins = axis("spin_times_two", "spin_times_two", None)
    if dims is None or spins is None:
        raise ConfigError("scan needs 'dimension' and 'spin_times_two' (top level or in grid)")
    betas = [parse_beta(b) for b in axis("beta", "beta", ["inf"])]
    ells = [parse_ell(e) for e in axis("ell", "ell", ["inf"])]
    J1 = 1.0
    if "ratio" in grid:
        ratios = ratio_values(grid["ratio"])
    elif "couplings" in cfg and (nn := _nn_couplings(cfg)) is not None and nn[0] > 0:
        J1, ratios = nn[0], [-nn[1] / nn[0]]
    else:
        raise ConfigError("scan needs grid.ratio or nearest-neighbour couplings with J1 > 0")
    return [ScanPoint(d, s, r, b, e, J1) for d, s, b, e, r in itertools.product(dims, spins, betas, ells, ratios)]


def cmd_scan(cfg: dict, seed: int, timer: _Timer):
    pts = scan_points(cfg)
    mode, alpha = _alpha_mode(cfg)
    tol = cfg.get("tolerances", {}).get("ratio", 1e-6)
    with timer.stage("scan"):
        res = scan(pts, mode, alpha, ratio_tol=tol)
    results = [
        CheckResult("scan_point", "certificate evaluation", err is None, 0.0 if err is None else -1.0, 0.0,
                    {"index": i}, {"error": err} if err else {})
        for i, err in enumerate(res.errors)
    ]
    return res, _report("scan", cfg, seed, results, timer, {"scan": res.to_dict()})


def _custom_model(cfg):
    _require(cfg, "dimension", "ell", "spin_times_two", "couplings")
    table = table_from_config(cfg)
    try:
        return SpinModel(SpinSystem(table.torus, cfg["spin_times_two"]), table)
    except IRBoundError as exc:
        raise ConfigError(str(exc)) from None


def _rp_results(table, rel_tol):
    rp = rp_check(table, rel_tol)
    sign = table.satisfies_sign_chain()
    return rp, [
        CheckResult("rp_check", "reflection positivity of the periodized couplings", rp.passed, rp.min_margin,
                    rel_tol, {"rel_tol": rel_tol},
                    {"failed_axes": rp.failed_axes(),
                     "kernels": [{"axis": v.axis, "direction": v.direction, "offset": v.offset,
                                  "min_eigenvalue": v.min_eigenvalue, "passed": v.passed} for v in rp.verdicts]}),
        CheckResult("sign_chain", "J3 >= J1 >= -J2 >= 0 at every displacement", sign, 0.0 if sign else -1.0, 0.0),
    ]


def cmd_rp_check(cfg: dict, seed: int, timer: _Timer) -> dict:
    _require(cfg, "dimension", "ell", "couplings")
    table = table_from_config(cfg)
    with timer.stage("rp_check"):
        _, results = _rp_results(table, cfg.get("tolerances", {}).get("rp_rel", 1e-9))
    return _report("rp-check", cfg, seed, results, timer)


def _custom_verify(cfg, seed, samples, timer):
    """Gated checks on a user-supplied model; hypothesis failures skip the dependent checks."""
    model = _custom_model(cfg)
    system, table = model.system, model.table
    beta = parse_beta(cfg.get("beta", 1.0))
    tol = cfg.get("tolerances", {}).get("check", checks.DEFAULT_TOL)
    with timer.stage("rp_check"):
        rp, results = _rp_results(table, cfg.get("tolerances", {}).get("rp_rel", 1e-9))
    params = {"d": system.torus.d, "ell": system.torus.ell, "two_S": system.two_S}
    gate = None
    try:
        checks.require_irb_hypotheses(model)
    except ConfigError as exc:
        gate = str(exc)
    dependent = ["infrared_bound_duhamel", "infrared_bound_correlation", "rp_fields", "gaussian_domination"]
    if gate is not None:
        results += [CheckResult(n, "requires reflection positivity and the sign chain", False, math.nan, tol,
                                params, {}, skipped=gate) for n in dependent]
    else:
        rng = np.random.default_rng([seed, 11])
        with timer.stage("gibbs"):
            st = model.gibbs(beta)
        with timer.stage("infrared_bounds"):
            if not math.isinf(beta):
                results.append(checks.verify_irb_duhamel(st, tol))
            results.append(checks.verify_irb_corr(st, tol))
        if not math.isinf(beta):
            planes = reflection_planes(system.torus)
            with timer.stage("reflection_positivity"):
                for _ in range(samples):
                    plane = planes[int(rng.integers(len(planes)))]
                    left, right = plane.halves(system.torus)
                    results.append(checks.verify_rp_fields(system, table, rng.standard_normal(len(left)),
                                                           rng.standard_normal(len(right)), plane, beta, tol))
                    results.append(checks.verify_gaussian_domination(system, table,
                                                                     rng.standard_normal(system.n_sites), beta, tol))
    with timer.stage("identities"):
        st = model.gibbs(beta)
        results.append(checks.magnetisation_check(st, tol))
        if not math.isinf(beta):
            ks = momenta(system.torus)
            k = ks[np.any(ks != 0, axis=1)][0] if len(ks) > 1 else ks[0]
            results.append(checks.verify_falk_bruch(st, st.fourier_s3_operator(k), tol=tol))
    return results


def cmd_verify(cfg: dict, seed: int, timer: _Timer, samples_flag: int | None = None) -> dict:
    samples = samples_flag if samples_flag is not None else cfg.get("samples", 100)
    if "couplings" in cfg:
        results = _custom_verify(cfg, seed, samples, timer)
        extra = {"suite": "custom"}
    else:
        results = []
        suites = {}
        with timer.stage("suite"):
            for name, res in run_all(samples=samples, seed=seed).items():
                suites[name] = _summary(res)
                results += res
        extra = {"suite": "default", "suites": suites}
    extra["samples"] = samples
    return _report("verify", cfg, seed, results, timer, extra)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="irbound", description="Infrared-bound certificates and exact checks.")
    p.add_argument("--version", action="version", version=f"irbound {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("table1", "limit integrals against the reference table"),
        ("certify", "lower bounds on long-range order for one configuration"),
        ("scan", "certificates over a parameter grid"),
        ("verify", "exact-diagonalization verification suite"),
        ("rp-check", "reflection positivity of a coupling table"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", type=Path, help="JSON configuration file")
        s.add_argument("--out", type=Path, help="output path (default: stdout)")
        s.add_argument("--seed", type=_u64, default=None, help="64-bit unsigned seed for random draws")
        s.add_argument("--format", choices=("json", "csv"), default=None,
                       help="report format (csv only for scan; default json, csv for scan)")
        s.add_argument("--timings", action="store_true", help="include wall-clock seconds per stage")
        if name == "verify":
            s.add_argument("--samples", type=int, default=None, help="random draws per configuration")
    return p


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def run(argv=None) -> int:
    p = _parser()
    try:
        args = p.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config) if args.config else {}
        if "command" in cfg and cfg["command"] != args.command:
            raise ConfigError(f"configuration is for '{cfg['command']}', not '{args.command}'")
        fmt = args.format or ("csv" if args.command == "scan" else "json")
        if fmt == "csv" and args.command != "scan":
            raise ConfigError("csv output is available for scan only")
        seed = args.seed if args.seed is not None else cfg.get("seed", DEFAULT_SEED)
        timer = _Timer(args.timings)
        if args.command == "table1":
            rep = cmd_table1(cfg, seed, timer)
        elif args.command == "certify":
            rep = cmd_certify(cfg, seed, timer)
        elif args.command == "scan":
            res, rep = cmd_scan(cfg, seed, timer)
        elif args.command == "verify":
            if args.samples is not None and args.samples < 0:
                raise ConfigError("--samples must be nonnegative")
            rep = cmd_verify(cfg, seed, timer, args.samples)
        else:
            rep = cmd_rp_check(cfg, seed, timer)
    except ConfigError as exc:
        sys.stderr.write(f"irbound: configuration error: {exc}\n")
        return EXIT_CONFIG
    failed = rep["status"] != "pass"
    _emit(res.to_csv() if fmt == "csv" else dumps(rep), args.out)
    if failed:
        for c in rep["checks"]:
            if c["pass"] is False:
                sys.stderr.write(f"FAIL {c['name']}: margin={_stable(c['margin'])} parameters="
                                 f"{json.dumps(_stable(c['parameters']), sort_keys=True)}\n")
    return EXIT_FAIL if failed else EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
