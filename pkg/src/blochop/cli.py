"""Command-line front end. Every report is built as a JSON document first; text output is rendered from it."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from typing import Optional

import numpy as np

from . import __version__
from .blochspace import beta
from .errors import BlochOpError
from .geometry import Domain
from .operator import AnalysisReport, SymbolTriple, analyze, analyze_boundedness
from .oracle import OracleReport, check_consistency, norm_lower_bound, sample_bloch
from .supsearch import LimitEstimate, SearchConfig, SupResult, default_shell_levels
from .symbolic import parse_expr

SCHEMA_VERSION = "report_v1"
EXIT_OK, EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_ORACLE = 0, 2, 3, 4


class InputError(BlochOpError):
    code = "invalid_arguments"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


# ------------------------------------------------------------------ JSON encoding


def num(x, diverging: bool = False):
    """Finite float, or one of the explicit strings "+inf", "-inf", "diverging", "nan"."""
    if x is None:
        return None
    if diverging:
        return "diverging"
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return x


def cnum(c) -> list:
    c = complex(c)
    return [num(c.real), num(c.imag)]


def point(z) -> Optional[list]:
    if z is None:
        return None
    return [cnum(c) for c in np.atleast_1d(np.asarray(z, dtype=complex))]


def sup_doc(res: SupResult) -> dict:
    return {
        "value": num(res.value, res.diverging),
        "status": res.status,
        "witness": point(res.witness),
        "evaluations": int(res.evaluations),
        "shell_profile": [[num(t), num(v)] for t, v in res.shell_profile],
    }


def limit_doc(lim: Optional[LimitEstimate]) -> Optional[dict]:
    if lim is None:
        return None
    return {
        "verdict": lim.verdict,
        "estimate": num(lim.estimate),
        "max_image_radius": num(lim.max_image_radius),
        "sequence": [[num(t), num(v)] for t, v in lim.sequence],
        "note": lim.note,
    }


def oracle_doc(o: Optional[OracleReport]) -> Optional[dict]:
    if o is None:
        return None
    return {
        "norm_lower_bound": num(o.norm_lower_bound),
        "best_sample": o.best_sample,
        "h_family_bound": num(o.h_family_bound),
        "h_family_point": point(o.h_family_point),
        "consistency": o.consistency,
        "details": list(o.details),
        "sample_count": len(o.sample_bounds),
    }


def report_doc(rep: AnalysisReport) -> dict:
    crit = rep.criterion
    return {
        "boundedness": rep.boundedness,
        "norm": rep.norm.to_dict(),
        "compactness": rep.compactness,
        "criterion": {
            "psi_mu_norm": sup_doc(crit.psi_mu_norm.search),
            "upsilon": crit.upsilon.to_dict(),
            "upsilon0": crit.upsilon0.to_dict(),
            "theta": sup_doc(crit.theta) if crit.theta is not None else None,
            "searches": {k: sup_doc(v) for k, v in crit.searches.items()},
            "witness_points": {k: point(v) for k, v in crit.witness_points.items()},
        },
        "limit": limit_doc(rep.limit),
        "oracle": oracle_doc(rep.oracle_crosscheck),
        "notes": list(rep.notes),
        "basis": dict(rep.basis),
    }


def strip_timing(doc: dict) -> dict:
    """Copy of a report without the fields that legitimately vary between runs."""
    out = json.loads(json.dumps(doc))
    out.get("provenance", {}).pop("wall_time", None)
    out.get("provenance", {}).pop("workers", None)
    return out


# ------------------------------------------------------------------ text rendering


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def render_text(doc: dict) -> str:
    lines = [f"blochop {doc['command']}  ({doc['schema']})"]
    job = doc.get("job") or {}
    if "domain" in job:
        lines.append(f"  domain   {job['domain']}")
    for key in ("expr", "psi", "phi", "weight"):
        if key in job:
            lines.append(f"  {key:<8} {job[key]}")
    res = doc["result"]
    if doc["command"] == "eval":
        lines.append(f"  value    {res['value']}")
        lines.append(f"  gradient {res['gradient']}")
    elif doc["command"] == "bloch":
        lines.append(f"  beta     {_fmt(res['beta'])}  [{res['status']}]")
        lines.append(f"  norm     {_fmt(res['bloch_norm'])}")
        lines.append(f"  witness  {res['beta_witness']}")
    else:
        n = res["norm"]
        tag = "exact" if n["exact"] else "interval"
        lines.append(f"  bounded  {res['boundedness']}")
        lines.append(f"  norm     [{_fmt(n['lower'])}, {_fmt(n['upper'])}] ({tag})")
        lines.append(f"  upsilon  [{_fmt(res['criterion']['upsilon']['lower'])}, "
                     f"{_fmt(res['criterion']['upsilon']['upper'])}]")
        if res["criterion"]["theta"] is not None:
            lines.append(f"  theta    {_fmt(res['criterion']['theta']['value'])}")
        if res["compactness"] is not None:
            lim = res["limit"] or {}
            lines.append(f"  compact  {res['compactness']}  (limit {lim.get('verdict')}, "
                         f"estimate {_fmt(lim.get('estimate'))})")
        if res["oracle"] is not None:
            o = res["oracle"]
            lines.append(f"  oracle   lower {_fmt(o['norm_lower_bound'])}, h-family {_fmt(o['h_family_bound'])}"
                         f"  [{o['consistency']}]")
            lines.extend(f"           ! {d}" for d in o["details"])
        lines.extend(f"  note     {s}" for s in res["notes"])
        lines.extend(f"  basis    {k}: {v}" for k, v in res["basis"].items())
    p = doc["provenance"]
    lines.append(f"  exit {doc['exit_code']}  config {p['config_hash']}  seed {p['seed']}  "
                 f"{p['wall_time']:.2f}s")
    return "\n".join(lines)


# ------------------------------------------------------------------ argument handling


def _default_workers() -> int:
    raw = os.environ.get("BLOCHOP_WORKERS")
    if raw is None:
        return 1
    try:
        w = int(raw)
    except ValueError:
        w = 0
    if w < 1:
        raise InputError(f"BLOCHOP_WORKERS must be a positive integer, got {raw!r}")
    return w


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="blochop", description="Analyze weighted composition operators from the Bloch space "
                                            "into weighted H-infinity spaces.")
    p.add_argument("--version", action="version", version=f"blochop {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, search=True):
        sp.add_argument("--domain", choices=["polydisk", "ball"], default="polydisk")
        sp.add_argument("--dim", type=int, default=1)
        sp.add_argument("--json", action="store_true", help="emit the JSON report")
        if search:
            sp.add_argument("--grid", type=int, default=24, help="initial grid nodes per parameter")
            sp.add_argument("--rounds", type=int, default=6, help="refinement rounds")
            sp.add_argument("--shells", type=int, default=20, help="shell levels 1-2^-k, k=1..SHELLS")
            sp.add_argument("--seed", type=int, default=0)
            sp.add_argument("--workers", type=int, default=None,
                            help="worker threads (default: $BLOCHOP_WORKERS or 1)")

    def symbol(sp):
        sp.add_argument("--psi", required=True)
        sp.add_argument("--phi", required=True, nargs="+")
        sp.add_argument("--weight", default="alpha:1.0")

    sp = sub.add_parser("bloch", help="Bloch seminorm and norm of one function")
    sp.add_argument("expr")
    common(sp)
    for name, helptext in (("norm", "boundedness and norm"), ("compact", "boundedness and compactness"),
                           ("analyze", "norm, compactness and oracle cross-check")):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        symbol(sp)
        if name == "analyze":
            sp.add_argument("--samples", type=int, default=200, help="random Bloch polynomials")
            sp.add_argument("--degree", type=int, default=4, help="polynomial degree per variable")
            sp.add_argument("--lambda-grid", type=int, default=16, help="λ grid nodes per parameter")
    sp = sub.add_parser("eval", help="value and gradient at a point")
    sp.add_argument("expr")
    sp.add_argument("--at", required=True, help="comma-separated complex coordinates, e.g. 0.5,0.1+0.2j")
    common(sp, search=False)
    return p


def parse_point(text: str, dim: int) -> np.ndarray:
    try:
        z = np.array([complex(s.strip().replace("i", "j")) for s in text.split(",")])
    except ValueError as exc:
        raise InputError(f"cannot parse point {text!r}: {exc}") from exc
    if len(z) != dim:
        raise InputError(f"point has {len(z)} coordinates, domain dimension is {dim}")
    return z


def make_config(args) -> SearchConfig:
    workers = args.workers if args.workers is not None else _default_workers()
    if args.shells < 1:
        raise InputError("--shells must be >= 1")
    levels = default_shell_levels()[: args.shells]
    try:
        return SearchConfig(initial_grid_per_dim=args.grid, refinement_rounds=args.rounds,
                            shell_levels=levels, seed=args.seed, parallel_workers=workers)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def make_domain(args) -> Domain:
    try:
        return Domain(args.domain, args.dim)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


# ------------------------------------------------------------------ subcommands


def _verdict_exit(rep: AnalysisReport) -> int:
    if rep.boundedness == "Inconclusive" or rep.compactness == "Inconclusive":
        return EXIT_INCONCLUSIVE
    if rep.oracle_crosscheck is not None and rep.oracle_crosscheck.consistency != "Consistent":
        return EXIT_ORACLE
    return EXIT_OK


def run(args) -> tuple:
    """Execute parsed arguments; returns (exit code, document without provenance, config)."""
    domain = make_domain(args)
    cmd = args.command
    if cmd == "eval":
        f = parse_expr(args.expr, domain.dim)
        z = domain.check_point(parse_point(args.at, domain.dim))
        r = f.eval_with_gradient(z)
        result = {"value": cnum(r.value), "gradient": [cnum(g) for g in r.gradient], "point": point(z)}
        return EXIT_OK, {"job": {"domain": str(domain), "expr": args.expr}, "result": result}, None
    cfg = make_config(args)
    if cmd == "bloch":
        f = parse_expr(args.expr, domain.dim)
        an = beta(f, domain, cfg)
        result = {
            "beta": num(an.beta, an.search.diverging),
            "bloch_norm": num(an.bloch_norm, an.search.diverging),
            "value_at_origin": cnum(an.value_at_origin),
            "status": an.status,
            "beta_witness": point(an.beta_witness),
            "little_bloch_profile": [[num(t), num(v)] for t, v in an.little_bloch_profile],
        }
        code = EXIT_INCONCLUSIVE if an.status == "MaxRefinementReached" else EXIT_OK
        return code, {"job": {"domain": str(domain), "expr": args.expr}, "result": result}, cfg

    sym = SymbolTriple.build(domain, args.psi, args.phi, args.weight, seed=args.seed)
    job = {"domain": str(domain), "psi": args.psi, "phi": list(args.phi), "weight": sym.mu.spec()}
    if cmd == "norm":
        rep = analyze_boundedness(sym, cfg)
    else:
        rep = analyze(sym, cfg)
    if cmd == "analyze":
        if args.samples < 0 or args.degree < 0 or args.lambda_grid < 2:
            raise InputError("--samples and --degree must be >= 0 and --lambda-grid >= 2")
        samples = sample_bloch(domain, args.degree, args.samples, args.seed, cfg) if args.samples else []
        extra = [rep.criterion.witness_points.get(k) for k in ("theta", "upsilon_upper", "upsilon_lower")]
        oracle = norm_lower_bound(sym, samples, args.lambda_grid, cfg, extra_lambdas=extra)
        rep.oracle_crosscheck = check_consistency(oracle, rep, sym)
        job.update(samples=args.samples, degree=args.degree, lambda_grid=args.lambda_grid)
    return _verdict_exit(rep), {"job": job, "result": report_doc(rep)}, cfg


def execute(argv) -> tuple:
    """Run the CLI on ``argv``; returns (exit code, JSON document)."""
    t0 = time.perf_counter()
    command = None
    try:
        args = build_parser().parse_args(argv)
        command = args.command
        code, doc, cfg = run(args)
    except BlochOpError as exc:
        err = exc.to_dict()
        return EXIT_INPUT, {"schema": SCHEMA_VERSION, "command": command, "exit_code": EXIT_INPUT, "error": err}
    except ValueError as exc:
        err = {"error": "invalid_input", "message": str(exc)}
        return EXIT_INPUT, {"schema": SCHEMA_VERSION, "command": command, "exit_code": EXIT_INPUT, "error": err}
    doc = {"schema": SCHEMA_VERSION, "command": command, "exit_code": code, **doc}
    doc["provenance"] = {
        "tool_version": __version__,
        "config_hash": cfg.digest() if cfg is not None else None,
        "seed": cfg.seed if cfg is not None else None,
        "workers": cfg.parallel_workers if cfg is not None else None,
        "wall_time": time.perf_counter() - t0,
    }
    return code, doc


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if any(a in ("-h", "--help", "--version") for a in argv):
        try:
            build_parser().parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
    code, doc = execute(argv)
    want_json = "--json" in argv or "error" in doc
    if want_json:
        print(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False))
    else:
        print(render_text(doc))
    return code


if __name__ == "__main__":
    sys.exit(main())
