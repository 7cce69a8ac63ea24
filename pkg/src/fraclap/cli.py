"""Command-line driver: solve, verify and scan runs from INI configs.

Every run writes its resolved configuration next to the outputs so archived
results are reproducible; all floating-point output uses 17 significant
digits to make reports diff-stable.

Exit codes: 0 success; 1 configuration error; 2 solver non-convergence
(solve); 3 verification tolerance exceeded (verify).
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

import numpy as np

from .boundary_trace import log_singularity_fit, trace
from .geometry import DomainError, make_domain
from .operator import (AssemblyError, assemble, half_laplacian,
                       make_discretization)
from .pohozaev import (pohozaev_residual, nonexistence_scan, scan_to_csv,
                       scaling_diagnostics)
from .solver import (NonConvergence, Nonlinearity, power_seed, solve_linear,
                     solve_semilinear)


class ConfigError(ValueError):
    pass


def _floats(text):
    return [float(t) for t in text.replace(",", " ").split()]


def load_config(path):
    cp = configparser.ConfigParser()
    try:
        read = cp.read(path)
    except configparser.Error as exc:
        # configparser messages carry the offending line numbers
        raise ConfigError(str(exc)) from exc
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    return cp


def _build_domain(cp):
    if "domain" not in cp:
        raise ConfigError("missing [domain] section")
    dom = cp["domain"]
    kind = dom.get("kind", "").strip()
    kwargs = {}
    if dom.get("center"):
        kwargs["center"] = _floats(dom["center"])
    try:
        if kind == "interval":
            return make_domain("interval", a=dom.getfloat("a"),
                               b=dom.getfloat("b"), **kwargs)
        if kind == "disk":
            return make_domain(
                "disk", R=dom.getfloat("r"),
                boundary_nodes=dom.getint("boundary_nodes", 256), **kwargs)
        if kind == "star":
            return make_domain(
                "star", r0=dom.getfloat("r0"),
                cos_coeffs=_floats(dom.get("cos_coeffs", "")),
                sin_coeffs=_floats(dom.get("sin_coeffs", "")),
                boundary_nodes=dom.getint("boundary_nodes", 256), **kwargs)
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError(f"[domain] {exc}") from exc
    raise ConfigError(f"[domain] kind must be interval, disk or star, "
                      f"got {kind!r}")


def _build_nonlinearity(cp):
    if "problem" not in cp:
        raise ConfigError("missing [problem] section")
    pr = cp["problem"]
    kind = pr.get("nonlinearity", "constant").strip()
    try:
        if kind == "constant":
            return Nonlinearity.constant(pr.getfloat("c", 1.0))
        if kind == "linear":
            return Nonlinearity.linear(pr.getfloat("lam"))
        if kind == "power":
            return Nonlinearity.power(pr.getfloat("p"))
        if kind == "table":
            return Nonlinearity.table(_floats(pr["table_u"]),
                                      _floats(pr["table_f"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"[problem] nonlinearity {kind}: {exc}") from exc
    raise ConfigError(f"[problem] unknown nonlinearity {kind!r}")


def _read_s(pr):
    try:
        s = pr.getfloat("s", None)
    except ValueError as exc:
        raise ConfigError(f"[problem] s: {exc}") from exc
    if s is None or not 0.0 < s < 1.0:
        raise ConfigError(f"[problem] s must lie in (0,1), got {s}")
    return s


def _build_problem(cp):
    domain = _build_domain(cp)
    f = _build_nonlinearity(cp)
    pr = cp["problem"]
    s = _read_s(pr)
    grid = cp["grid"] if "grid" in cp else {}
    try:
        disc = make_discretization(
            domain,
            n_interior=(int(grid.get("n_interior"))
                        if grid.get("n_interior") else None),
            h=float(grid.get("h")) if grid.get("h") else None,
            L=float(grid.get("l")) if grid.get("l") else None,
            node_cap=(int(grid.get("node_cap"))
                      if grid.get("node_cap") else None))
        op = assemble(disc, s)
    except (AssemblyError, ValueError) as exc:
        raise ConfigError(f"[grid] {exc}") from exc
    return domain, f, op


def _solver_options(cp):
    so = cp["solver"] if "solver" in cp else {}
    return {
        "max_iter": int(so.get("max_iter", 50)),
        "tol": float(so.get("tol", 1e-9)),
        "damping": float(so.get("damping", 1.0)),
    }, (so.get("seed", "auto") if hasattr(so, "get") else "auto")


def _outdir(cp, config_path):
    out = cp["output"]["directory"] if ("output" in cp and
                                       cp["output"].get("directory")) else "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    resolved = path / "resolved_config.ini"
    with open(resolved, "w") as fh:
        cp.write(fh)
    return path


def _write_solution_csv(path, u):
    pts = u.disc.interior_points
    with open(path, "w") as fh:
        fh.write(",".join(f"x{i+1}" for i in range(u.disc.n)) + ",u\n")
        for p, v in zip(pts, u.values):
            coords = ",".join(f"{c:.17g}" for c in p)
            fh.write(f"{coords},{v:.17g}\n")


def _run_solve(domain, f, op, opts, seed_kind):
    if seed_kind == "auto" and f.kind == "power":
        u0 = power_seed(op, f.params["p"])
    elif seed_kind == "torsion":
        u0 = solve_linear(op, 1.0).values
    else:
        u0 = None
    return solve_semilinear(op, f, u0, **opts)


def cmd_solve(args):
    try:
        cp = load_config(args.config)
        domain, f, op = _build_problem(cp)
        opts, seed_kind = _solver_options(cp)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    out = _outdir(cp, args.config)
    try:
        u, report = _run_solve(domain, f, op, opts, seed_kind)
    except NonConvergence as exc:
        (out / "solve_report.json").write_text(exc.report.to_json() + "\n")
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 2
    _write_solution_csv(out / "u.csv", u)
    (out / "solve_report.json").write_text(report.to_json() + "\n")
    print(f"converged in {report.iterations} iterations, "
          f"residual {report.residual_norm:.17g}")
    return 0


def cmd_verify(args):
    try:
        cp = load_config(args.config)
        domain, f, op = _build_problem(cp)
        opts, seed_kind = _solver_options(cp)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    ver = cp["verify"] if "verify" in cp else {}
    rtol = float(ver.get("identity_rtol", 1e-3))
    pad = int(ver.get("pad", 4))
    origin = _floats(ver["origin"]) if ver.get("origin") else None
    out = _outdir(cp, args.config)
    try:
        u, report = _run_solve(domain, f, op, opts, seed_kind)
    except NonConvergence as exc:
        (out / "solve_report.json").write_text(exc.report.to_json() + "\n")
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 2
    _write_solution_csv(out / "u.csv", u)
    (out / "solve_report.json").write_text(report.to_json() + "\n")

    tr = trace(u, domain)
    (out / "trace.csv").write_text(tr.to_csv())
    po = pohozaev_residual(u, f, domain, origin=origin, boundary_trace=tr)
    (out / "pohozaev.json").write_text(po.to_json() + "\n")
    failures = []
    if abs(po.relative_residual) > rtol:
        failures.append(
            f"identity residual {po.relative_residual:.17g} > {rtol:.17g}")
    try:
        sc = scaling_diagnostics(u, op, domain, pad=pad, origin=origin)
        (out / "scaling.json").write_text(sc.to_json() + "\n")
        if np.any(sc.margins < -1e-8 * max(abs(sc.I_one), 1e-300)):
            failures.append("Cauchy-Schwarz margin violated")
    except ValueError as exc:
        (out / "scaling.json").write_text(
            json.dumps({"skipped": str(exc)}) + "\n")
    w = half_laplacian(u, pad=pad)
    lf = log_singularity_fit(w, u, domain)
    (out / "logfit.json").write_text(lf.to_json() + "\n")
    if failures:
        for msg in failures:
            print(f"verify failed: {msg}", file=sys.stderr)
        return 3
    print(f"verify ok: identity residual {po.relative_residual:.17g}")
    return 0


def cmd_scan(args):
    try:
        cp = load_config(args.config)
        domain = _build_domain(cp)
        if "problem" not in cp:
            raise ConfigError("missing [problem] section")
        s = _read_s(cp["problem"])
        scan = cp["scan"] if "scan" in cp else {}
        p_grid = _floats(scan.get("p_grid", ""))
        if not p_grid:
            raise ConfigError("[scan] p_grid is empty")
        grid = cp["grid"] if "grid" in cp else {}
        n_interior = int(grid.get("n_interior", 49))
        max_iter = int(cp["solver"].get("max_iter", 50)) \
            if "solver" in cp else 50
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    out = _outdir(cp, args.config)
    rows = nonexistence_scan(domain.n, s, p_grid, domain,
                             n_interior=n_interior, max_iter=max_iter)
    (out / "scan.csv").write_text(scan_to_csv(rows))
    ok = all(r["consistent"] for r in rows)
    print(f"scan wrote {len(rows)} rows; consistent: {ok}")
    return 0 if ok else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="fraclap",
        description="fractional Laplacian Dirichlet solver and "
                    "Pohozaev-identity verifier")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("solve", cmd_solve), ("verify", cmd_verify),
                     ("scan", cmd_scan)):
        p = sub.add_parser(name)
        p.add_argument("-c", "--config", required=True,
                       help="INI configuration file")
        p.set_defaults(func=fn)
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
