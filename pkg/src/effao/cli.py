"""Command-line front end.

Every subcommand writes one result per line as space-separated
``key=value`` pairs (or bare values with ``--format compact``), sends
diagnostics to stderr and exits with 0 (completed), 2 (completed with
undecided cases), 1 (error) or 64 (usage).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

from flint import acb, arb

from .balls import format_arb, to_acb, upper_float, workprec
from .errors import EffaoError, ParseError
from .quad import TatuzawaConfig
from .varieties import MultiPoly
from .varieties import parse_poly as _parse_poly

EXIT_OK, EXIT_ERROR, EXIT_UNDECIDED, EXIT_USAGE = 0, 1, 2, 64


def parse_poly(text: str, n_vars: int | None = None) -> MultiPoly:
    """Polynomial grammar, e.g. ``x1^2*x2 - 3/2*x3 + 7``."""
    return _parse_poly(text, n_vars)


@dataclass
class Config:
    default_prec: int = 128
    size_caps: dict = field(default_factory=lambda: {"modpoly": 20, "dynamics": 200_000,
                                                     "count": 1_000_000})
    tatuzawa: TatuzawaConfig = field(default_factory=TatuzawaConfig)
    cache_dir: str | None = None

    def __post_init__(self):
        if self.default_prec < 64:
            raise ValueError("default_prec must be at least 64")
        if any(int(v) <= 0 for v in self.size_caps.values()):
            raise ValueError("size caps must be positive")

    @classmethod
    def load(cls, path) -> "Config":
        raw = json.loads(Path(path).read_text())
        base = cls()
        caps = dict(base.size_caps)
        caps.update(raw.get("size_caps", {}))
        tz = raw.get("tatuzawa", {})
        tcfg = TatuzawaConfig(Fraction(str(tz.get("epsilon_star", "1/100"))),
                              tz.get("exceptional_d"))
        return cls(int(raw.get("default_prec", base.default_prec)), caps, tcfg,
                   raw.get("cache_dir"))


# output

class Emitter:
    def __init__(self, fmt: str = "records", out=None):
        self.fmt = fmt
        self.out = out or sys.stdout

    def __call__(self, **kv) -> None:
        if self.fmt == "compact":
            line = " ".join(_fmt(v) for v in kv.values())
        else:
            line = " ".join(f"{k}={_fmt(v)}" for k, v in kv.items())
        self.out.write(line + "\n")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, arb):
        return format_arb(v, 20)
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


def _ball_fields(z: acb, digits: int = 25) -> dict:
    return {
        "re": format_arb(z.real, digits),
        "im": format_arb(z.imag, digits),
        "radius": repr(upper_float(z.real.rad() + z.imag.rad())),
    }


# input helpers

def parse_complex(text: str) -> tuple[Fraction, Fraction]:
    """Accepts ``a,b`` or ``a+bi`` / ``bi`` / ``a`` with decimal or p/q parts."""
    t = text.strip().replace(" ", "")
    if "," in t:
        a, b = t.split(",", 1)
        return Fraction(a), Fraction(b)
    if t.endswith(("i", "j")):
        body = t[:-1]
        cut = max(body.rfind("+", 1), body.rfind("-", 1))
        while cut > 0 and body[cut - 1] in "eE":
            cut = max(body.rfind("+", 1, cut), body.rfind("-", 1, cut))
        if cut <= 0:
            re_part, im_part = "0", body
        else:
            re_part, im_part = body[:cut], body[cut:]
        if im_part in ("", "+"):
            im_part = "1"
        elif im_part == "-":
            im_part = "-1"
        return Fraction(re_part), Fraction(im_part)
    return Fraction(t), Fraction(0)


def _tau_ball(text: str, prec: int) -> acb:
    re_, im_ = parse_complex(text)
    with workprec(prec):
        return to_acb((re_, im_))


def _read_poly(arg: str, n_vars: int | None = None) -> MultiPoly:
    p = Path(arg)
    text = p.read_text() if p.is_file() else arg
    return parse_poly(text.strip(), n_vars)


def _pmap(fn: Callable, items: Sequence, jobs: int) -> list:
    """Ordered map, optionally over a process pool."""
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items, chunksize=chunk))


# subcommands

def cmd_j(args, cfg, emit) -> int:
    from .jfun import j_jet

    prec = args.prec or cfg.default_prec
    if len(args.tau) > 2:
        raise ValueError("--tau takes RE IM or one complex number")
    tau = _tau_ball(",".join(args.tau) if len(args.tau) == 2 else args.tau[0], prec)
    jet = j_jet(tau, prec)
    emit(quantity="j", **_ball_fields(jet.y))
    if args.jet:
        emit(quantity="dj", **_ball_fields(jet.y_dot))
        emit(quantity="ddj", **_ball_fields(jet.y_ddot))
    return EXIT_OK


def _classnum_row(d: int) -> tuple[int, int]:
    from .quad import class_number

    return d, class_number(d)


def cmd_classnum(args, cfg, emit) -> int:
    from .quad import discriminants

    ds = discriminants(args.range[0], args.range[1])
    for d, h in _pmap(_classnum_row, ds, args.jobs):
        emit(d=d, h=h)
    return EXIT_OK


def cmd_lambda(args, cfg, emit) -> int:
    from .quad import lambda_points

    prec = args.prec or cfg.default_prec
    for P in lambda_points(args.disc, prec):
        f = P.form
        emit(d=P.d, index=P.index, a=f.a, b=f.b, c=f.c, **_ball_fields(P.tau))
    return EXIT_OK


def cmd_hcp(args, cfg, emit) -> int:
    from .oort import hilbert_class_poly

    P = hilbert_class_poly(args.disc, args.prec, cfg.cache_dir)
    emit(d=args.disc, degree=P.degree(), coeffs=[int(c) for c in reversed(P.coeffs())])
    return EXIT_OK


def cmd_phi(args, cfg, emit) -> int:
    from .modpoly import phi

    cap = cfg.size_caps.get("modpoly", 20)
    P = phi(args.N, args.prec, cap, cfg.cache_dir)
    if args.out:
        P.save(args.out)
    for (i, k), c in sorted(P.coeffs.items(), reverse=True):
        emit(i=i, j=k, c=c)
    emit(N=args.N, terms=len(P.coeffs), deg_x=P.deg_x, symmetric=P.is_symmetric())
    return EXIT_OK


def cmd_dnd(args, cfg, emit) -> int:
    from .varieties import is_dnd, is_hdnd

    F = _read_poly(args.poly)
    a, b = is_dnd(F), is_hdnd(F)
    rec = {"dnd": a.ok, "hdnd": b.ok}
    if not a.ok:
        rec["witness"] = f"x{a.witness + 1}"
    if not b.ok:
        rec["path"] = ";".join(f"x{i + 1}=x{k + 1}" for i, k in b.path) or "root"
        rec["reason"] = b.reason
    emit(**rec)
    return EXIT_OK


def cmd_search(args, cfg, emit) -> int:
    from .oort import special_points_on

    F = _read_poly(args.poly, args.n)
    res = special_points_on(F, args.bound, args.prec or cfg.default_prec)
    for P in res.points:
        emit(point=str(P), status="yes")
    for P in res.undecided:
        emit(point=str(P), status="undecided")
    emit(bound=res.bound, examined=res.examined, found=len(res.points),
         undecided=len(res.undecided))
    return EXIT_OK if res.complete else EXIT_UNDECIDED


def cmd_certify(args, cfg, emit) -> int:
    from .oort import dominance_search, verify_certificate

    F = _read_poly(args.poly, args.n)
    run = dominance_search(F, args.dfund, max(args.prec or 0, 256))
    cert = run.certificate
    for chk in cert.transcript:
        emit(f=chk.f, lhs=chk.lhs, rhs=chk.rhs, holds=chk.holds)
    emit(dfund=cert.d_fund, lead=f"x{cert.lead + 1}", c0=cert.c0, c1=cert.c1, d=cert.d,
         f0=cert.bound_f, verified=verify_certificate(cert), examined=run.examined,
         found=len(run.points), undecided=len(run.undecided))
    return EXIT_OK if not run.undecided else EXIT_UNDECIDED


def _equidist_row(arg):
    from .oort import equidist_row

    d, R = arg
    return equidist_row(d, R)


def cmd_equidist(args, cfg, emit) -> int:
    from .quad import discriminants, is_fundamental

    R = Fraction(args.R)
    if not R > 1:
        raise ValueError("R must exceed 1")
    ds = discriminants(args.range[0], args.range[1])
    if args.fundamental:
        ds = [d for d in ds if is_fundamental(d)]
    rows = _pmap(_equidist_row, [(d, R) for d in ds], args.jobs)
    bad = 0
    for r in rows:
        bad += not r.ok
        if args.all or not r.ok:
            emit(d=r.d, h=r.h, inside=r.inside, proportion=float(r.proportion), ok=r.ok)
    emit(R=R, count=len(rows), violations=bad,
         pass_rate=1 - bad / len(rows) if rows else 1.0,
         threshold=rows[0].threshold if rows else 0.0)
    return EXIT_OK


def cmd_flow(args, cfg, emit) -> int:
    from .dynamics import integrate, j_field, jet_point

    prec = args.prec or cfg.default_prec
    S = {int(s) for s in args.S.split(",") if s}
    tau = _tau_ball(getattr(args, "from"), prec)
    xi = j_field(args.n, S)
    p0 = jet_point(tau, args.n, S, prec)
    Tre, Tim = parse_complex(args.T)
    tr = integrate(xi, p0, complex(float(Tre), float(Tim)), args.step, prec)
    for k in range(0, len(tr.times), max(1, args.every)):
        rec = {"t": repr(tr.times[k])}
        for i, z in enumerate(tr.points[k]):
            rec[f"re{i}"] = format_arb(z.real, 17)
            rec[f"im{i}"] = format_arb(z.imag, 17)
        emit(**rec)
    if (len(tr.times) - 1) % max(1, args.every):
        rec = {"t": repr(tr.times[-1])}
        for i, z in enumerate(tr.endpoint):
            rec[f"re{i}"] = format_arb(z.real, 17)
            rec[f"im{i}"] = format_arb(z.imag, 17)
        emit(**rec)
    return EXIT_OK


def _scan_chunk(arg):
    from .quad import tatuzawa_scan

    lo, hi, eps = arg
    return tatuzawa_scan((lo, hi), eps)


def cmd_scan(args, cfg, emit) -> int:
    from .quad import ScanReport

    lo, hi = args.range
    eps = float(args.eps if args.eps is not None else cfg.tatuzawa.epsilon_star)
    jobs = max(1, args.jobs)
    step = max(1, (hi - lo + 1) // jobs)
    parts = [(a, min(a + step - 1, hi), eps) for a in range(lo, hi + 1, step)]
    reports = [r for r in _pmap(_scan_chunk, parts, jobs)]
    rep = ScanReport.merge(reports)
    if args.all:
        for r in rep.records:
            emit(d=r.d, h=r.h, omega=r.omega, two_torsion=r.two_torsion, ratio=r.ratio)
    emit(**rep.summary(), eps=eps)
    return EXIT_OK


def cmd_count(args, cfg, emit) -> int:
    from .oort import count_quadratic_points

    F = _read_poly(args.poly, args.n)
    res = count_quadratic_points(F, Fraction(args.R), args.H, args.prec or cfg.default_prec,
                                 cfg.size_caps.get("count", 1_000_000))
    if args.all:
        for P in res.points:
            emit(point=str(P))
    emit(count=res.count, undecided=res.undecided, examined=res.examined)
    return EXIT_OK if not res.undecided else EXIT_UNDECIDED


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--prec", type=int, default=None, help="working precision in bits")
    common.add_argument("--format", choices=("records", "compact"), default="records")
    common.add_argument("--config", default=None, help="JSON config file")
    common.add_argument("--cache-dir", default=None)
    common.add_argument("--jobs", type=int, default=1)

    p = _Parser(prog="effao", description="Special points, CM values and modular polynomials.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("j", parents=[common], help="evaluate j (and its jet) at tau")
    s.add_argument("--tau", required=True, nargs="+", metavar="TAU",
                   help="either RE IM or a single complex like 0.5+2i")
    s.add_argument("--jet", action="store_true")
    s.set_defaults(run=cmd_j)

    s = sub.add_parser("classnum", parents=[common], help="class numbers over a |d| range")
    s.add_argument("--range", nargs=2, type=int, required=True, metavar=("LO", "HI"))
    s.set_defaults(run=cmd_classnum)

    s = sub.add_parser("lambda", parents=[common], help="CM points of discriminant d in F")
    s.add_argument("--disc", type=int, required=True)
    s.set_defaults(run=cmd_lambda)

    s = sub.add_parser("hcp", parents=[common], help="Hilbert class polynomial")
    s.add_argument("--disc", type=int, required=True)
    s.set_defaults(run=cmd_hcp)

    s = sub.add_parser("phi", parents=[common], help="classical modular polynomial")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--out", default=None, help="also write 'i j c' lines to this file")
    s.set_defaults(run=cmd_phi)

    s = sub.add_parser("dnd", parents=[common], help="dnd / hdnd classification")
    s.add_argument("--poly", required=True)
    s.set_defaults(run=cmd_dnd)

    s = sub.add_parser("search", parents=[common], help="special points on F = 0")
    s.add_argument("--poly", required=True)
    s.add_argument("--bound", type=int, required=True)
    s.add_argument("--n", type=int, default=None, help="number of variables")
    s.set_defaults(run=cmd_search)

    s = sub.add_parser("certify-dominance", parents=[common], help="cusp dominance certificate")
    s.add_argument("--poly", required=True)
    s.add_argument("--dfund", type=int, required=True)
    s.add_argument("--n", type=int, default=None)
    s.set_defaults(run=cmd_certify)

    s = sub.add_parser("equidist", parents=[common], help="CM points inside Omega_R")
    s.add_argument("--range", nargs=2, type=int, required=True, metavar=("LO", "HI"))
    s.add_argument("--R", required=True)
    s.add_argument("--fundamental", action="store_true")
    s.add_argument("--all", action="store_true", help="print every row, not only violations")
    s.set_defaults(run=cmd_equidist)

    s = sub.add_parser("flow", parents=[common], help="integrate the j-field")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--S", required=True, help="comma-separated block indices")
    s.add_argument("--from", required=True, help="starting tau; blocks get the jet of j")
    s.add_argument("--T", required=True, help="complex time span")
    s.add_argument("--step", type=float, default=0.01)
    s.add_argument("--every", type=int, default=1)
    s.set_defaults(run=cmd_flow)

    s = sub.add_parser("scan-tatuzawa", parents=[common], help="h(d) / |d|^(1/2 - eps) scan")
    s.add_argument("--range", nargs=2, type=int, required=True, metavar=("LO", "HI"))
    s.add_argument("--eps", type=float, default=None)
    s.add_argument("--all", action="store_true")
    s.set_defaults(run=cmd_scan)

    s = sub.add_parser("count-points", parents=[common], help="quadratic points of bounded height")
    s.add_argument("--poly", required=True)
    s.add_argument("--R", required=True)
    s.add_argument("--H", type=int, required=True)
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--all", action="store_true")
    s.set_defaults(run=cmd_count)
    return p


def run(argv: Sequence[str] | None = None, out=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = Config.load(args.config) if args.config else Config()
        if args.cache_dir:
            cfg.cache_dir = args.cache_dir
        if args.prec is not None and args.prec < 16:
            raise ValueError("--prec must be at least 16")
        return args.run(args, cfg, Emitter(args.format, out))
    except ParseError as e:
        sys.stderr.write(f"parse error: {e}\n")
        return EXIT_USAGE
    except (EffaoError, ValueError, OSError, ArithmeticError) as e:
        sys.stderr.write(f"error: {type(e).__name__}: {e}\n")
        return EXIT_ERROR


def main() -> None:
    raise SystemExit(run())
