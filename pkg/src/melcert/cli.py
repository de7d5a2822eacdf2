"""Command-line front end.

Exit codes: 0 ok / certified, 1 failed acceptance rows, 2 usage or
configuration error, 3 inconclusive (or no orbit predicted), 4 numerical
failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys

import numpy as np

from . import __version__
from .catalog import DuffingBundle, lookup, system_from_dict
from .certificate import CERTIFIED, ResonanceNotDetected, certify_family, certify_system
from .contour import ContourError, ForbiddenLineError
from .elliptic import PoleError, complete_elliptic_E, complete_elliptic_K, jacobi_sn_cn_dn
from .jsonio import dumps
from .melnikov import (NoClosedFormError, ResonanceError, closed_form_J,
                       melnikov_quadrature, resonance_at, solve_resonance)
from .model import ChartError

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_INCONCLUSIVE, EXIT_NUMERICAL = 0, 1, 2, 3, 4


class UsageError(ValueError):
    pass


_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX = re.compile(
    rf"(?P<re>[+-]?{_NUM})?(?:(?P<sign>[+-])(?P<im>{_NUM})?[ij])?|(?P<pure>[+-]?(?:{_NUM})?)[ij]"
)


def parse_complex(text: str) -> complex:
    """Parse ``a``, ``bi``, ``a+bi`` or ``a-i`` (``j`` is accepted for ``i``)."""
    t = text.strip().replace(" ", "")
    m = _COMPLEX.fullmatch(t)
    if not t or m is None:
        raise UsageError(f"malformed complex literal {text!r} at position {_first_bad(t)}: "
                         "expected <re>[+<im>i]")
    if m.group("pure") is not None:
        mag = m.group("pure")
        if mag in ("", "+", "-"):
            mag += "1"
        return complex(0.0, float(mag))
    re_part = float(m.group("re")) if m.group("re") else 0.0
    im_part = 0.0
    if m.group("sign"):
        im_part = float(m.group("im") or 1.0) * (-1.0 if m.group("sign") == "-" else 1.0)
    return complex(re_part, im_part)


def _first_bad(t: str) -> int:
    """Length of the longest prefix that can still grow into a valid literal."""
    for i in range(len(t), 0, -1):
        if re.fullmatch(rf"[+-]?(?:{_NUM})?(?:[eE][+-]?)?(?:[+-](?:{_NUM})?(?:[eE][+-]?)?[ij]?)?", t[:i]):
            return i
    return 0


def _threads(args) -> int:
    env = os.environ.get("MELCERT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"MELCERT_THREADS must be an integer, got {env!r}") from None
    return max(1, args.threads or os.cpu_count() or 1)


def _config(args) -> dict:
    cfg = {"command": args.command}
    for k, v in sorted(vars(args).items()):
        if k in ("command", "func", "action"):
            continue
        cfg[k] = v
    if getattr(args, "action", None):
        cfg["action"] = args.action
    return cfg


def _write(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _family_target(args):
    try:
        target = lookup(args.system)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    if not isinstance(target, DuffingBundle):
        raise UsageError(f"{args.system!r} is not an orbit family")
    return target


def _resonance(args, family):
    if (args.nu is None) == (args.param is None):
        raise UsageError("give exactly one of --nu or --param")
    if args.nu is not None:
        return solve_resonance(family, args.l, args.n, args.nu)
    return resonance_at(family, args.param, args.l, args.n)


# -- subcommands ---------------------------------------------------------

def cmd_elliptic(args) -> int:
    u = parse_complex(args.u)
    if not 0.0 <= args.k < 1.0:
        raise UsageError(f"--k must lie in [0, 1), got {args.k}")
    sn, cn, dn = jacobi_sn_cn_dn(u, args.k)
    K, E = complete_elliptic_K(args.k), complete_elliptic_E(args.k)
    out = {"tool_version": __version__, "config": _config(args),
           "sn": complex(sn), "cn": complex(cn), "dn": complex(dn), "K": K, "E": E}
    if args.format == "json":
        _write(dumps(out), None)
    else:
        print(f"# melcert {__version__} elliptic eval k={args.k!r} u={u!r}")
        for name in ("sn", "cn", "dn"):
            v = out[name]
            print(f"{name} = {v.real:.17g}{v.imag:+.17g}i")
        print(f"K = {K:.17g}")
        print(f"E = {E:.17g}")
    return EXIT_OK


def cmd_certify(args) -> int:
    workers = _threads(args)
    if args.system_file:
        try:
            with open(args.system_file, encoding="utf-8") as fh:
                system = system_from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read system file: {exc}") from None
        target = system
    else:
        if not args.system:
            raise UsageError("give --system or --system-file")
        params = {}
        key = args.system.strip().lower()
        if key.startswith("pendulum"):
            params = {"kappa": args.kappa}
        elif key.startswith("coupled"):
            params = {"kappa": args.kappa, "ell": args.ell, "delta": args.delta, "beta": args.beta}
        try:
            target = lookup(args.system, **params)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None

    if isinstance(target, DuffingBundle):
        if (args.nu is None) == (args.param is None):
            raise UsageError("give exactly one of --nu or --param")
        cert = certify_family(target, args.l, args.n, nu=args.nu, param=args.param, delta=args.delta,
                              beta=args.beta, phi_grid=args.phi_grid, radius=args.radius, workers=workers)
    else:
        if not args.I:
            raise UsageError("--I (resonant actions) is required for action-angle systems")
        thetas = [args.theta] if args.theta else None
        cert = certify_system(target, args.I, thetas, radius=args.radius)
    cert.config = {**cert.config, "cli": _config(args), "threads": workers}
    _write(cert.to_json(), args.out)
    if args.out:
        print(f"{cert.verdict}: min |I| = {cert.min_abs_I_hat:.6g} -> {args.out}", file=sys.stderr)
    return EXIT_OK if cert.verdict == CERTIFIED else EXIT_INCONCLUSIVE


def cmd_melnikov(args) -> int:
    bundle = _family_target(args)
    spec = _resonance(args, bundle.family)
    phis = 2 * math.pi * np.arange(args.grid) / args.grid
    quad = melnikov_quadrature(bundle.family, spec, args.delta, args.beta, phis)
    try:
        closed = closed_form_J(bundle.family, spec)(args.delta, args.beta, phis)
    except NoClosedFormError:
        closed = None
    buf = io.StringIO()
    buf.write(f"# melcert {__version__}\n")
    buf.write(f"# config: {json.dumps(_config(args), sort_keys=True)}\n")
    buf.write(f"# resonance: {json.dumps(spec.to_dict())}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["phi", "M_quad", "M_closed", "abs_err"])
    for i, phi in enumerate(phis):
        if closed is None:
            w.writerow([f"{phi:.17g}", f"{quad[i]:.17g}", "", ""])
        else:
            w.writerow([f"{phi:.17g}", f"{quad[i]:.17g}", f"{closed[i]:.17g}", f"{abs(quad[i] - closed[i]):.17g}"])
    _write(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_resonance(args) -> int:
    bundle = _family_target(args)
    spec = solve_resonance(bundle.family, args.l, args.n, args.nu)
    fam = bundle.family
    residual = spec.n * fam.period(spec.param_star) - spec.T_star
    print(f"# melcert {__version__} config: {json.dumps(_config(args), sort_keys=True)}")
    print(f"param = {fam.param_name}")
    print(f"param_star = {spec.param_star:.17g}")
    print(f"residual = {residual:.17g}")
    print(f"omega_star = {spec.omega_star:.17g}")
    print(f"T_star = {spec.T_star:.17g}")
    return EXIT_OK


def cmd_orbits(args) -> int:
    from .orbits import (NoSimpleZeroError, StroboscopicMap, find_subharmonics,
                         trajectory)

    bundle = _family_target(args)
    spec = _resonance(args, bundle.family)
    smap = StroboscopicMap.for_family(bundle, spec, args.delta, args.beta, args.eps)
    seeds = args.phi_seed or [0.0]
    report = {"tool_version": __version__, "config": _config(args), "resonance": spec.to_dict()}
    try:
        cf = closed_form_J(bundle.family, spec)
        report["melnikov"] = {"J1": cf.J1, "J2": cf.J2, "zeros": cf.zeros(args.delta, args.beta)}
    except NoClosedFormError:
        pass
    try:
        results = find_subharmonics(smap, bundle, spec, args.delta, args.beta, args.eps, seeds,
                                    workers=min(_threads(args), len(seeds)))
    except NoSimpleZeroError as exc:
        report["orbits"] = []
        report["error"] = str(exc)
        _write(dumps(report), args.out)
        print(str(exc), file=sys.stderr)
        return EXIT_INCONCLUSIVE
    report["orbits"] = [r.to_dict() for r in results]
    _write(dumps(report), args.out)
    if args.trajectory:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["orbit", "t", "x1", "x2"])
        for j, r in enumerate(results):
            t, x1, x2 = trajectory(smap, r.initial_state, r.phase, periods=args.periods)
            for row in zip(t, x1, x2):
                w.writerow([j] + [f"{v:.17g}" for v in row])
        _write(buf.getvalue(), args.trajectory)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .acceptance import format_table, run_all

    rows = run_all(set(args.criteria) if args.criteria else None)
    print(f"# melcert {__version__} verify")
    print(format_table(rows))
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAILED


# -- parser --------------------------------------------------------------

def _add_resonance_flags(p, need_nu=False):
    p.add_argument("--system", required=True, help="catalog selector, e.g. duffing:a=1")
    p.add_argument("--l", type=int, default=1)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--nu", type=float, required=need_nu)
    if not need_nu:
        p.add_argument("--param", type=float, help="family parameter; nu is then chosen to make it resonant")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="melcert", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"melcert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("elliptic", help="Jacobi elliptic functions")
    esub = p.add_subparsers(dest="action", required=True)
    e = esub.add_parser("eval", help="sn, cn, dn at complex u and K, E")
    e.add_argument("--k", type=float, required=True)
    e.add_argument("--u", required=True, help="complex literal, e.g. 0.3+0.4i")
    e.add_argument("--format", choices=("text", "json"), default="text")
    e.set_defaults(func=cmd_elliptic)

    c = sub.add_parser("certify", help="nonintegrability certificate (cert-v1 JSON)")
    c.add_argument("--system")
    c.add_argument("--system-file", help="JSON term-list system definition")
    c.add_argument("--l", type=int, default=1)
    c.add_argument("--n", type=int, default=1)
    c.add_argument("--nu", type=float)
    c.add_argument("--param", type=float)
    c.add_argument("--delta", type=float, default=0.1)
    c.add_argument("--beta", type=float, default=1.0)
    c.add_argument("--phi-grid", type=int, default=64)
    c.add_argument("--radius", type=float)
    c.add_argument("--kappa", type=float, default=0.5)
    c.add_argument("--ell", type=int, default=3)
    c.add_argument("--I", type=float, nargs="+")
    c.add_argument("--theta", type=float, nargs="+")
    c.add_argument("--out")
    c.add_argument("--threads", type=int)
    c.set_defaults(func=cmd_certify)

    m = sub.add_parser("melnikov", help="subharmonic Melnikov function")
    msub = m.add_subparsers(dest="action", required=True)
    s = msub.add_parser("sweep", help="CSV of quadrature vs closed form over a phi grid")
    _add_resonance_flags(s)
    s.add_argument("--delta", type=float, default=0.1)
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--grid", type=int, default=64)
    s.add_argument("--out")
    s.set_defaults(func=cmd_melnikov)

    r = sub.add_parser("resonance", help="resonant orbit parameter")
    rsub = r.add_subparsers(dest="action", required=True)
    rs = rsub.add_parser("solve")
    _add_resonance_flags(rs, need_nu=True)
    rs.set_defaults(func=cmd_resonance)

    o = sub.add_parser("orbits", help="subharmonic periodic orbits")
    osub = o.add_subparsers(dest="action", required=True)
    of = osub.add_parser("find")
    _add_resonance_flags(of)
    of.add_argument("--delta", type=float, default=0.0)
    of.add_argument("--beta", type=float, default=1.0)
    of.add_argument("--eps", type=float, default=0.01)
    of.add_argument("--phi-seed", type=float, nargs="+")
    of.add_argument("--periods", type=int, default=1)
    of.add_argument("--out")
    of.add_argument("--trajectory", help="CSV file for (orbit, t, x1, x2)")
    of.add_argument("--threads", type=int)
    of.set_defaults(func=cmd_orbits)

    v = sub.add_parser("verify", help="run the acceptance checks")
    v.add_argument("--criteria", type=int, nargs="+")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ResonanceError, ResonanceNotDetected, ChartError, KeyError) as exc:
        print(f"melcert: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PoleError, ContourError, ForbiddenLineError, ArithmeticError, RuntimeError) as exc:
        print(f"melcert: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"melcert: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
