"""Command-line front end.

    nsaspec analyze --spec SPEC
    nsaspec eigs --spec SPEC (--rect x0,x1,y0,y1 | --radius E) [--resolution r] [--format csv|json]
    nsaspec count --spec SPEC --emax E --steps k
    nsaspec grid --spec SPEC --rect x0,x1,y0,y1 --res nx,ny
    nsaspec projnorms --spec SPEC (--indices i,j,... | --z re,im ...)
    nsaspec reconstruct --input zeros.csv --rmin r
    nsaspec probe [--spec SPEC] --psi p --n n
    nsaspec selftest

SPEC is a path to a JSON file or the JSON text itself. Exit codes: 0 ok,
1 invalid input, 2 numerical failure, 3 self-test failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import catalog
from .errors import (
    DimensionMismatch,
    NsaspecError,
    SpecParseError,
    SpecValidationError,
    SpectrumIsWholePlane,
    UnknownExample,
)
from .expsum import ExpSum, es_log_abs
from .system_model import (
    PiecewiseFirstOrderSystem,
    SecondOrderDiagonalSystem,
    build_second_order,
    expand_char_function,
)

SCHEMA_VERSION = 1
KINDS = ("first_order", "second_order", "raw_expsum", "catalog")
EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_SELFTEST = 0, 1, 2, 3

log = logging.getLogger("nsaspec")


# --- specs -------------------------------------------------------------------

def _complex(x, where: str) -> complex:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise SpecParseError(f"{where}: expected a number or [re, im] pair, got {x!r}")


def _cvector(v, where: str) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise SpecParseError(f"{where}: expected a nonempty list")
    return np.array([_complex(x, f"{where}[{k}]") for k, x in enumerate(v)])


def _cmatrix(M, where: str) -> np.ndarray:
    if not isinstance(M, list) or not M:
        raise SpecParseError(f"{where}: expected a nonempty list of rows")
    rows = [_cvector(r, f"{where}[{i}]") for i, r in enumerate(M)]
    if len({r.size for r in rows}) != 1:
        raise SpecValidationError(f"{where}: rows have different lengths")
    return np.array(rows)


def _require(d: dict, key: str, kind: str):
    if key not in d:
        raise SpecParseError(f"{kind} spec is missing field '{key}'")
    return d[key]


@dataclass
class SystemSpec:
    kind: str
    payload: dict = field(default_factory=dict)
    obj: Any = None

    def build(self):
        return self.obj

    def expsum(self) -> ExpSum:
        if isinstance(self.obj, ExpSum):
            return self.obj
        if isinstance(self.obj, SecondOrderDiagonalSystem):
            return build_second_order(self.obj).expsum
        return expand_char_function(self.obj)


def _build(kind: str, d: dict):
    if kind == "first_order":
        bp = _require(d, "breakpoints", kind)
        mats = _require(d, "matrices", kind)
        if not isinstance(bp, list) or not isinstance(mats, list):
            raise SpecParseError("breakpoints and matrices must be lists")
        mats = [_cmatrix(M, f"matrices[{k}]") for k, M in enumerate(mats)]
        S = _cmatrix(_require(d, "S", kind), "S")
        T = _cmatrix(_require(d, "T", kind), "T")
        return PiecewiseFirstOrderSystem([float(x) for x in bp], tuple(mats), S, T)
    if kind == "second_order":
        speeds = _cvector(_require(d, "speeds", kind), "speeds")
        subs = {}
        for key in ("U1", "U2", "V1", "V2"):
            vecs = d.get(key, [])
            if not isinstance(vecs, list):
                raise SpecParseError(f"{key}: expected a list of vectors")
            subs[key] = tuple(_cvector(v, f"{key}[{k}]") for k, v in enumerate(vecs))
        interval = tuple(float(x) for x in d.get("interval", (0.0, math.pi)))
        return SecondOrderDiagonalSystem(speeds=speeds, interval=interval, **subs)
    if kind == "raw_expsum":
        terms = _require(d, "terms", kind)
        if not isinstance(terms, list):
            raise SpecParseError("terms must be a list")
        pairs = []
        for k, t in enumerate(terms):
            if not isinstance(t, dict) or "mu" not in t or "delta" not in t:
                raise SpecParseError(f"terms[{k}]: need fields 'mu' and 'delta'")
            pairs.append((_complex(t["mu"], f"terms[{k}].mu"), _complex(t["delta"], f"terms[{k}].delta")))
        return ExpSum.from_terms(pairs)
    name = _require(d, "name", kind)
    params = d.get("params", {})
    if not isinstance(params, dict):
        raise SpecParseError("params must be an object")
    return catalog.example_catalog(name, **params)


def parse_spec(source: str) -> SystemSpec:
    """Parse and validate a system spec from a file path or JSON text."""
    text = source
    if not source.lstrip().startswith("{"):
        try:
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise SpecParseError(f"cannot read spec file {source!r}: {exc}") from exc
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(d, dict):
        raise SpecParseError("spec must be a JSON object")
    kind = d.get("kind")
    if kind not in KINDS:
        raise SpecParseError(f"field 'kind' must be one of {', '.join(KINDS)}; got {kind!r}")
    try:
        obj = _build(kind, d)
    except (DimensionMismatch, ValueError) as exc:
        raise SpecValidationError(str(exc)) from exc
    except TypeError as exc:
        raise SpecValidationError(f"bad parameters: {exc}") from exc
    return SystemSpec(kind, d, obj)


# --- output helpers ----------------------------------------------------------

def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".nsaspec-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, output: str | None) -> None:
    if output:
        atomic_write(output, text)
    else:
        sys.stdout.write(text)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _floats(text: str, n: int | None, what: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise SpecValidationError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise SpecValidationError(f"{what}: expected {n} numbers, got {len(vals)}")
    return vals


def _rect(text: str):
    from .rootfinder import Rect

    x0, x1, y0, y1 = _floats(text, 4, "--rect")
    try:
        return Rect(x0, x1, y0, y1)
    except ValueError as exc:
        raise SpecValidationError(str(exc)) from None


def _load(args) -> SystemSpec:
    if not args.spec:
        raise SpecValidationError(f"command '{args.command}' needs --spec")
    return parse_spec(args.spec)


# --- commands ----------------------------------------------------------------

def cmd_analyze(args) -> int:
    from .hull import analyze_exponents, classify_spectrum

    spec = _load(args)
    out: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "kind": spec.kind}
    if isinstance(spec.obj, SecondOrderDiagonalSystem):
        ch = build_second_order(spec.obj)
        F, out["z_power"] = ch.expsum, ch.z_power
    else:
        try:
            F = spec.expsum()
        except SpectrumIsWholePlane:
            out["classification"] = "whole_plane"
            emit(dumps(out), args.output)
            return EXIT_OK
    out["classification"] = classify_spectrum(F)
    out["expsum"] = F.to_json_terms()
    if out["classification"] == "discrete":
        rep = analyze_exponents(F)
        out.update(rep.to_json())
        out["lines"] = [{"normal": e["normal"], "offset": e["k"], "edge_vector": [
            e["gamma"][0] - e["gamma_minus"][0], e["gamma"][1] - e["gamma_minus"][1]]} for e in out["edges"]]
        if isinstance(spec.obj, PiecewiseFirstOrderSystem):
            from .hull import symbol_density

            out["symbol_density"] = {"hull": symbol_density(spec.obj, "hull"),
                                     "weyl": symbol_density(spec.obj, "weyl")}
    emit(dumps(out), args.output)
    return EXIT_OK


def cmd_eigs(args) -> int:
    from .rootfinder import Rect, find_zeros, zeros_in_disk

    F = _load(args).expsum()
    if args.rect:
        zs = find_zeros(F, _rect(args.rect), resolution=args.resolution, threads=args.threads)
    elif args.radius is not None:
        if args.radius <= 0:
            raise SpecValidationError("--radius must be positive")
        zs = zeros_in_disk(F, args.radius, threads=args.threads)
    else:
        raise SpecValidationError("eigs needs --rect or --radius")
    assert isinstance(zs.region, Rect)
    emit(zs.to_csv() if args.format == "csv" else dumps(zs.to_json()), args.output)
    return EXIT_OK


def cmd_count(args) -> int:
    from .hull import analyze_exponents
    from .rootfinder import count_function

    if args.emax <= 0 or args.steps < 1:
        raise SpecValidationError("--emax must be positive and --steps >= 1")
    F = _load(args).expsum()
    rep = analyze_exponents(F)
    Es = [args.emax * k / args.steps for k in range(1, args.steps + 1)]
    lines = ["E,N,predicted,difference"]
    for E, N in count_function(F, Es, threads=args.threads):
        pred = rep.b_K * E / (2 * math.pi)
        lines.append(f"{float(E)!r},{N},{float(pred)!r},{float(N - pred)!r}")
    emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_grid(args) -> int:
    F = _load(args).expsum()
    r = _rect(args.rect)
    nx, ny = (int(v) for v in _floats(args.res, 2, "--res"))
    if nx < 1 or ny < 1:
        raise SpecValidationError("--res needs positive counts")
    xs = np.linspace(r.x0, r.x1, nx)
    ys = np.linspace(r.y0, r.y1, ny)
    Z = (xs[None, :] + 1j * ys[:, None]).ravel()
    with np.errstate(divide="ignore"):
        vals = es_log_abs(F, Z) / math.log(10)
    lines = ["re,im,log10_abs_F"]
    lines += [f"{float(z.real)!r},{float(z.imag)!r},{float(v)!r}" for z, v in zip(Z, vals)]
    emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_projnorms(args) -> int:
    from .diagnostics.eigenfunctions import projection_norm
    from .rootfinder import newton, zeros_in_disk

    spec = _load(args)
    if not isinstance(spec.obj, PiecewiseFirstOrderSystem):
        raise SpecValidationError("projnorms needs a first-order system (first_order or a catalog system)")
    F = spec.expsum()
    targets: list[complex] = []
    if args.z:
        df = F.derivative()
        for item in args.z:
            re, im = _floats(item, 2, "--z")
            z, _ = newton(F, df, complex(re, im))
            targets.append(z)
    if args.indices:
        idx = [int(v) for v in _floats(args.indices, None, "--indices")]
        if min(idx) < 0:
            raise SpecValidationError("--indices must be nonnegative")
        zs = sorted(zeros_in_disk(F, args.radius, threads=args.threads).points,
                    key=lambda z: (round(abs(z), 9), z.real, z.imag))
        if max(idx) >= len(zs):
            raise SpecValidationError(f"only {len(zs)} eigenvalues within radius {args.radius}")
        targets += [zs[k] for k in idx]
    if not targets:
        raise SpecValidationError("projnorms needs --indices or --z")
    out = {"schema_version": SCHEMA_VERSION, "reports": [projection_norm(spec.obj, z).to_json() for z in targets]}
    emit(dumps(out), args.output)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    from .diagnostics.reconstruct import reconstruct_polygon
    from .rootfinder import ZeroSet

    try:
        with open(args.input, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecParseError(f"cannot read {args.input!r}: {exc}") from exc
    try:
        zs = ZeroSet.from_csv(text)
    except (KeyError, ValueError) as exc:
        raise SpecParseError(f"{args.input}: expected CSV with columns re,im[,multiplicity,residual]") from exc
    rec = reconstruct_polygon(zs, args.rmin)
    emit(dumps(rec.to_json()), args.output)
    return EXIT_OK


def cmd_probe(args) -> int:
    from .diagnostics.numerical_range import ProbeConfig, numerical_range_probe

    if args.spec:
        spec = parse_spec(args.spec)
        if not isinstance(spec.obj, SecondOrderDiagonalSystem):
            raise SpecValidationError("probe needs a second-order system")
        s = spec.obj
        A = s.speeds ** 2
        # test functions sit at either end; use the end with the stronger coupling
        cfgs = [ProbeConfig.from_subspaces(A, s.U1, s.U2), ProbeConfig.from_subspaces(A, s.V1, s.V2)]
        cfg = max(cfgs, key=lambda c: abs(c.coupling))
    else:
        cfg = ProbeConfig.rhombus()
    if args.n <= 0:
        raise SpecValidationError("--n must be positive")
    q = numerical_range_probe(cfg, args.psi, args.n)
    out = {"schema_version": SCHEMA_VERSION, "psi": args.psi, "n": args.n,
           "coupling": [cfg.coupling.real, cfg.coupling.imag], "quotient": [q.real, q.imag]}
    emit(dumps(out), args.output)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .acceptance import CRITERIA, run_criterion

    wanted = None
    if args.only:
        wanted = {int(v) for v in _floats(args.only, None, "--only")}
    results = []
    for k, _, _ in CRITERIA:
        if wanted is not None and k not in wanted:
            continue
        r = run_criterion(k)
        print(r.line(), flush=True)
        results.append(r)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed"
          + (f"; failed: {failed}" if failed else ""))
    return EXIT_SELFTEST if failed else EXIT_OK


# --- entry point -------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are input errors: exit 1
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nsaspec", description="Spectra of non-self-adjoint first-order systems.")
    p.add_argument("--json-errors", action="store_true", help="report errors as JSON on stderr")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, spec_required=True):
        sp.add_argument("--spec", required=spec_required, help="JSON spec file or inline JSON")
        sp.add_argument("-o", "--output", help="write here (atomically) instead of stdout")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (default NSASPEC_THREADS or 1)")

    common(sub.add_parser("analyze", help="exponent polygon and asymptotic lines"))
    sp = sub.add_parser("eigs", help="zeros in a rectangle or disk")
    common(sp)
    sp.add_argument("--rect")
    sp.add_argument("--radius", type=float)
    sp.add_argument("--resolution", type=float, default=1e-9)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp = sub.add_parser("count", help="counting function against b_K E / 2 pi")
    common(sp)
    sp.add_argument("--emax", type=float, required=True)
    sp.add_argument("--steps", type=int, default=10)
    sp = sub.add_parser("grid", help="log10|F| on a grid (plot data)")
    common(sp)
    sp.add_argument("--rect", required=True)
    sp.add_argument("--res", required=True, help="nx,ny")
    sp = sub.add_parser("projnorms", help="spectral projection norms")
    common(sp)
    sp.add_argument("--indices", help="positions in the list of eigenvalues sorted by modulus")
    sp.add_argument("--z", action="append", help="approximate eigenvalue re,im (repeatable)")
    sp.add_argument("--radius", type=float, default=50.0, help="search radius for --indices")
    sp = sub.add_parser("reconstruct", help="edge vectors of K from a zeros CSV")
    common(sp, spec_required=False)
    sp.add_argument("--input", required=True)
    sp.add_argument("--rmin", type=float, required=True)
    sp = sub.add_parser("probe", help="numerical-range Rayleigh quotient")
    common(sp, spec_required=False)
    sp.add_argument("--psi", type=float, default=0.0)
    sp.add_argument("--n", type=float, default=1e4)
    sp = sub.add_parser("selftest", help="run the acceptance table")
    sp.add_argument("--only", help="comma-separated criterion numbers")
    return p


COMMANDS = {
    "analyze": cmd_analyze, "eigs": cmd_eigs, "count": cmd_count, "grid": cmd_grid,
    "projnorms": cmd_projnorms, "reconstruct": cmd_reconstruct, "probe": cmd_probe, "selftest": cmd_selftest,
}


def _report(args, exc: Exception, code: int) -> int:
    if getattr(args, "json_errors", False):
        sys.stderr.write(json.dumps({"schema_version": SCHEMA_VERSION, "error": type(exc).__name__,
                                     "message": str(exc), "exit_code": code}) + "\n")
    else:
        sys.stderr.write(f"nsaspec: {type(exc).__name__}: {exc}\n")
    return code


_VALUE_OPTIONS = ("--rect", "--z", "--psi")


def _join_negative_values(argv: list[str]) -> list[str]:
    """Let '--rect -4,4,-1,1' through: argparse would take '-4,...' for an option."""
    out: list[str] = []
    it = iter(range(len(argv)))
    for k in it:
        a = argv[k]
        if a in _VALUE_OPTIONS and k + 1 < len(argv) and argv[k + 1].startswith("-") and argv[k + 1][1:2].isdigit():
            out.append(f"{a}={argv[k + 1]}")
            next(it, None)
        else:
            out.append(a)
    return out


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (SpecParseError, SpecValidationError, UnknownExample, DimensionMismatch) as exc:
        return _report(args, exc, EXIT_INVALID)
    except (NsaspecError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _report(args, exc, EXIT_NUMERIC)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
