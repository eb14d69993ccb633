"""Command-line interface: ``tamecert check | fp | trace | corpus``."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dsl import ParseError, format_map, load_map
from .piecewise import OK

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
CORPUS_ENV = "TAMECERT_CORPUS"
CHECK_FLAGS = {
    "thm1": "Clarke delta-bound (Theorem 1)",
    "thm12": "generic regularity off B plus injectivity on B",
    "ce": "extremality of kernel slices (C_e)",
    "cce": "conic semi-extremality (C_e^c)",
    "s": "no constant segment (S)",
    "thm3": "two-sided minor bounds (R_j)",
    "thm4": "minor signs (P_j) and finiteness (F_j)",
    "winding": "degree of f/|f| and winding of p(df)",
    "probe": "random-pair injectivity probe",
}


def corpus_dir() -> Path:
    env = os.environ.get(CORPUS_ENV)
    if env:
        return Path(env)
    return Path(__file__).parent / "corpus"


def resolve(path: str) -> Path:
    """Paths under ``corpus/`` fall back to the corpus directory."""
    p = Path(path)
    if p.exists():
        return p
    parts = p.parts
    if parts and parts[0] == "corpus":
        q = corpus_dir().joinpath(*parts[1:])
        if q.exists():
            return q
    return p


def _die(msg: str) -> int:
    print(f"tamecert: error: {msg}", file=sys.stderr)
    return EXIT_ERROR


def _perm(text):
    if text is None:
        return None
    return [int(t) - 1 for t in text.split(",")]


# ---------------------------------------------------------------- check

def cmd_check(args) -> int:
    from .certify import EmptySampleError
    from .report import ConfigError, RunConfig, run_checks

    try:
        base = RunConfig.load(args.config).to_dict() if args.config else {}
    except (OSError, ConfigError) as exc:
        return _die(str(exc))
    chosen = [c for c in CHECK_FLAGS if getattr(args, c)]
    if args.all:
        from .report import DEFAULT_CHECKERS

        chosen = list(dict.fromkeys(list(DEFAULT_CHECKERS) + chosen))
    overrides = {"map": args.map}
    if chosen:
        overrides["checkers"] = chosen
    for key in ("seed", "grid", "random", "boundary", "domain", "out"):
        v = getattr(args, key)
        if v is not None:
            overrides[key] = v
    if args.src_perm:
        overrides["src_perm"] = _perm(args.src_perm)
    if args.tgt_perm:
        overrides["tgt_perm"] = _perm(args.tgt_perm)
    if args.locus:
        overrides["loci"] = list(args.locus)
    tols = dict(base.get("tolerances", {}))
    for item in args.tol or []:
        name, sep, val = item.partition("=")
        if not sep:
            return _die(f"--tol expects name=value, got {item!r}")
        try:
            tols[name.strip()] = float(val)
        except ValueError:
            return _die(f"bad tolerance value {val!r}")
    overrides["tolerances"] = tols
    try:
        config = RunConfig.from_dict({**base, **overrides})
        f = load_map(resolve(config.map))
    except (OSError, ConfigError, ParseError, ValueError) as exc:
        return _die(str(exc))
    try:
        report = run_checks(f, config)
    except (EmptySampleError, ParseError, ValueError) as exc:
        return _die(str(exc))
    text = report.to_json()
    if config.out:
        Path(config.out).write_text(text, encoding="utf-8")
    elif args.json:
        sys.stdout.write(text)
    if not args.json or config.out:
        for c in report.certificates:
            extra = ""
            w = c.witnesses
            if c.theorem == "THM1":
                extra = f" delta_hat={w['delta']:.3g}"
            elif c.theorem == "WINDING" and "degree" in w:
                extra = f" degree={w['degree']} winding={w['winding']}"
            elif c.theorem == "PROBE":
                extra = f" ell_hat={w['ell_hat']}"
            conds = " ".join(f"{k}={v}" for k, v in c.conditions.items())
            print(f"{c.theorem:8s} {c.verdict:15s}{extra} {conds}".rstrip())
    return EXIT_OK if report.passed else EXIT_FAIL


# ---------------------------------------------------------------- fp

def cmd_fp(args) -> int:
    from .certify import FPSpec, FPSpecError, build_fp, check_homogeneity, verify_inverse

    try:
        spec = FPSpec.load(resolve(args.spec))
        homog = check_homogeneity(spec, seed=args.seed)
        F, G = build_fp(spec, check=False)
    except (OSError, FPSpecError, ParseError, ValueError, json.JSONDecodeError) as exc:
        return _die(str(exc))
    err = verify_inverse(F, G, count=args.probes, seed=args.seed)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = []
    for g in (F, G):
        p = outdir / f"{g.name}.tmap"
        p.write_text(format_map(g), encoding="utf-8")
        files.append(str(p))
    summary = {"spec": spec.name, "files": files, "max_composition_error": err,
               "homogeneity_error": homog, "d_prime": str(spec.d_prime)}
    print(json.dumps(summary, indent=2))
    return EXIT_OK if err <= args.max_error else EXIT_FAIL


# ---------------------------------------------------------------- trace

def _point(text: str, m: int) -> np.ndarray:
    vals = [float(t) for t in text.split(",")]
    if len(vals) != m:
        raise ValueError(f"point {text!r} needs {m} coordinates")
    return np.array(vals)


def trace_rows(f, segments, points: int = 201):
    """Rows ``(segment, t, x.., f.., df..)`` along straight segments.

    ``df`` is ``df(x) (b - a)``, the velocity of the image curve; it is NaN
    where ``f`` is not differentiable.
    """
    t = np.linspace(0.0, 1.0, points)
    rows = []
    for k, (a, b) in enumerate(segments):
        X = a + np.outer(t, b - a)
        vals, status = f.evaluate_batch(X)
        if (status != OK).any():
            raise ValueError(f"segment {k} leaves the domain or hits a pole")
        J, _ = f.jacobian_batch(X)
        vel = J @ (b - a)
        for i in range(points):
            rows.append([k, t[i], *X[i], *vals[i], *vel[i]])
    return rows


def cmd_trace(args) -> int:
    try:
        f = load_map(resolve(args.map))
        segs = []
        for s in args.segment:
            a, sep, b = s.partition(":")
            if not sep:
                raise ValueError(f"--segment expects a:b, got {s!r}")
            segs.append((_point(a, f.m), _point(b, f.m)))
        rows = trace_rows(f, segs, args.points)
    except (OSError, ParseError, ValueError) as exc:
        return _die(str(exc))
    header = (["segment", "t"] + [f"x{i + 1}" for i in range(f.m)]
              + [f"f{i + 1}" for i in range(f.n)] + [f"df{i + 1}" for i in range(f.n)])
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([r[0]] + [repr(float(v)) for v in r[1:]])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


# ---------------------------------------------------------------- corpus

def load_manifest() -> dict:
    return json.loads((corpus_dir() / "manifest.json").read_text(encoding="utf-8"))


def cmd_corpus(args) -> int:
    if args.action == "path":
        print(corpus_dir())
        return EXIT_OK
    try:
        manifest = load_manifest()
    except (OSError, json.JSONDecodeError) as exc:
        return _die(f"cannot read corpus manifest: {exc}")
    entries = manifest["maps"]
    if args.action == "list":
        for name, e in entries.items():
            print(f"{name:22s} {e['file']:26s} {e.get('description', '')}")
        return EXIT_OK
    from .report import THEOREM, RunConfig, run_checks

    names = args.names or list(entries)
    bad = 0
    for name in names:
        if name not in entries:
            return _die(f"no corpus entry {name!r}")
        e = entries[name]
        expected = e["expect"]
        cfg = RunConfig.from_dict({**e.get("config", {}), "map": e["file"],
                                   "checkers": list(expected)})
        report = run_checks(load_map(corpus_dir() / e["file"]), cfg)
        got = {k: report.certificate(THEOREM[k]).verdict for k in expected}
        for k, v in expected.items():
            ok = got[k] == v
            bad += not ok
            print(f"{'ok  ' if ok else 'FAIL'} {name:20s} {k:8s} expected={v:15s} got={got[k]}")
    return EXIT_OK if bad == 0 else EXIT_FAIL


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tamecert", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="run certificates on a .tmap file")
    c.add_argument("map", help="path to a .tmap file; corpus/NAME.tmap resolves to the corpus")
    for name, help_ in CHECK_FLAGS.items():
        c.add_argument(f"--{name}", action="store_true", help=help_)
    c.add_argument("--all", action="store_true", help="all checkers except the probe")
    c.add_argument("--seed", type=int)
    c.add_argument("--tol", action="append", metavar="NAME=VAL", help="tolerance override")
    c.add_argument("--out", help="write the JSON report here")
    c.add_argument("--json", action="store_true", help="print the report to stdout")
    c.add_argument("--config", help="JSON run config; flags override it")
    c.add_argument("--grid", type=int)
    c.add_argument("--random", type=int)
    c.add_argument("--boundary", type=int)
    c.add_argument("--domain", help="domain override, e.g. 'box [0.5, 1], [0.5, 1]'")
    c.add_argument("--src-perm", help="source coordinate order, 1-based, e.g. 2,1")
    c.add_argument("--tgt-perm", help="target coordinate order, 1-based")
    c.add_argument("--locus", action="append", help="expression whose zero set is part of B")
    c.set_defaults(func=cmd_check)

    f = sub.add_parser("fp", help="build F_P and F_Q from a spec and check F_Q o F_P = id")
    f.add_argument("spec", help="FP spec JSON")
    f.add_argument("--outdir", default=".")
    f.add_argument("--probes", type=int, default=1000)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--max-error", type=float, default=1e-8)
    f.set_defaults(func=cmd_fp)

    t = sub.add_parser("trace", help="write images of straight segments as CSV polylines")
    t.add_argument("map")
    t.add_argument("--segment", action="append", required=True, metavar="A:B",
                   help="segment from A to B, points as comma lists; write --segment=-1,0.1:1,0.1 "
                        "when A starts with a minus sign")
    t.add_argument("--points", type=int, default=201)
    t.add_argument("--out")
    t.set_defaults(func=cmd_trace)

    k = sub.add_parser("corpus", help="list, locate or verify the bundled example corpus")
    k.add_argument("action", choices=["list", "path", "verify"])
    k.add_argument("names", nargs="*")
    k.set_defaults(func=cmd_corpus)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
