"""Command-line front end: ``infnep <subcommand> [options]``.

Exit codes: 0 on success, 1 on a numerical failure, 2 on a usage error.
Options may also come from ``--config FILE``, a flat ``key = value`` file
whose keys are the long option names; command-line flags take precedence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys

import numpy as np

from . import gallery
from .errors import InfNepError
from .gallery import fem
from .infbeyn import Contour, count_eigenvalues, default_threads, refine, run
from .pseudospec import gamma_adaptive, grid, matrix_nep_grid, write_line_svg

NOISE_FLOOR = 1e-13


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing helpers


def parse_complex(text):
    try:
        return complex(str(text).strip().replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def _list(conv):
    def parse(text):
        try:
            return [conv(x) for x in str(text).split(",") if x.strip()]
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise argparse.ArgumentTypeError(f"bad list: {text!r}") from exc

    return parse


def parse_axis(text):
    parts = str(text).split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("axis spec must be lo,hi,count")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad axis spec {text!r}") from exc
    if count < 2 or not hi > lo:
        raise argparse.ArgumentTypeError("axis needs hi > lo and count >= 2")
    return lo, hi, count


def parse_indices(text):
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError("indices must be positive")
    return out


def parse_m(text):
    if str(text).lower() == "auto":
        return "auto"
    m = int(text)
    if m < 1:
        raise argparse.ArgumentTypeError("m must be >= 1 or 'auto'")
    return m


def positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def unit_tol(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("tolerance must lie in (0, 1)")
    return v


PARAM_FLAGS = {
    "acoustic1d": ("chi",),
    "acoustic2d": ("chi", "mode"),
    "damped_beam": ("alpha0", "beta", "profile"),
    "loaded_string": ("mass", "kappa"),
    "planar_waveguide": ("eta", "interfaces", "k", "mu_form"),
    "butterfly": ("c",),
}


def _add_problem_args(p):
    p.add_argument("--problem", required=True, choices=sorted(gallery.REGISTRY))
    g = p.add_argument_group("problem parameters")
    g.add_argument("--chi", type=parse_complex)
    g.add_argument("--mode", type=int)
    g.add_argument("--alpha0", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--profile", choices=sorted(gallery.problems.ALPHA_PROFILES))
    g.add_argument("--mass", type=float)
    g.add_argument("--kappa", type=float)
    g.add_argument("--eta", type=_list(float))
    g.add_argument("--interfaces", type=_list(float))
    g.add_argument("--k", type=float)
    g.add_argument("--mu-form", dest="mu_form", choices=("matched", "printed"))
    g.add_argument("--c", type=_list(parse_complex))


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="worker cap (default: INFNEP_THREADS or 1)")
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")
    p.add_argument("--config", help="flat key = value file mirroring the long options")


def _add_contour(p, radius_required=True):
    p.add_argument("--center", type=parse_complex, required=True)
    p.add_argument("--radius", type=positive_float, required=radius_required)
    p.add_argument("--nodes", type=int, default=32)


def build_parser():
    parser = argparse.ArgumentParser(prog="infnep", description="Eigenvalues and certified pseudospectra of operator NEPs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="contour eigensolver with refinement and verification")
    _add_problem_args(p)
    _add_contour(p)
    p.add_argument("--m", type=parse_m, default="auto")
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--tol", type=unit_tol, default=1e-10)
    p.add_argument("--no-refine", action="store_true")
    p.add_argument("--no-verify", action="store_true")
    p.add_argument("--no-functions", action="store_true", help="omit eigenfunction records")
    p.add_argument("--format", choices=("json",), default="json")
    _add_common(p)

    p = sub.add_parser("count", help="number of eigenvalues inside a circle")
    _add_problem_args(p)
    _add_contour(p)
    p.add_argument("--probes", type=int, default=8)
    p.add_argument("--format", choices=("text", "json"), default="text")
    _add_common(p)

    p = sub.add_parser("pseudospectra", help="certified gamma_n grid (or a discretized baseline)")
    _add_problem_args(p)
    p.add_argument("--re", type=parse_axis, required=True, help="lo,hi,count")
    p.add_argument("--im", type=parse_axis, required=True, help="lo,hi,count")
    p.add_argument("--eps", type=_list(positive_float), default=[1e-1, 1e-2, 1e-3])
    p.add_argument("--tol", type=unit_tol, default=1e-10)
    p.add_argument("--nmax", type=int, default=None)
    p.add_argument("--discretized", type=int, default=None, help="use the size-n FEM/truncation instead")
    p.add_argument("--format", choices=("csv", "svg", "json"), default="csv")
    _add_common(p)

    p = sub.add_parser("woes", help="FEM sweep: smallest eigenvalue modulus per size")
    _add_problem_args(p)
    p.add_argument("--sizes", type=_list(int), required=True)
    p.add_argument("--format", choices=("csv", "svg", "json"), default="csv")
    _add_common(p)

    p = sub.add_parser("oracle", help="reference eigenvalues")
    _add_problem_args(p)
    p.add_argument("--indices", type=parse_indices, default=[1])
    p.add_argument("--group", type=int, choices=(1, 2), default=1, help="damped beam eigenvalue group")
    p.add_argument("--format", choices=("text", "json"), default="text")
    _add_common(p)

    p = sub.add_parser("gallery", help="problem registry")
    p.add_argument("action", choices=("list",))
    p.add_argument("--format", choices=("text", "json"), default="text")
    _add_common(p)
    return parser


# ---------------------------------------------------------------------------
# config files


def read_config(path):
    """Flat ``key = value`` pairs; blank lines and ``#`` comments are skipped."""
    pairs = []
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        pairs.append((key.replace("_", "-"), value))
    return pairs


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def expand_config(argv):
    """Insert config-file flags after the subcommand so explicit flags win."""
    path = _config_path(argv)
    if path is None:
        return argv
    extra = []
    for key, value in read_config(path):
        if key == "config":
            continue
        if value.lower() in ("true", "yes", "on") and key.startswith("no-"):
            extra.append(f"--{key}")
        elif value.lower() not in ("false", "no", "off"):
            extra.append(f"--{key}={value}")
    head = 2 if argv and argv[0] == "gallery" and len(argv) > 1 else 1
    return argv[:head] + extra + argv[head:]


# ---------------------------------------------------------------------------
# commands


def make_params(args):
    allowed = PARAM_FLAGS[args.problem]
    given = {}
    for flags in PARAM_FLAGS.values():
        for name in flags:
            val = getattr(args, name, None)
            if val is None:
                continue
            if name not in allowed:
                raise UsageError(f"--{name.replace('_', '-')} does not apply to {args.problem}")
            given[name] = tuple(val) if isinstance(val, list) else val
    try:
        return gallery.make_params(args.problem, **given)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _params_record(params):
    out = {}
    for k, v in vars(params).items():
        if isinstance(v, complex):
            out[k] = {"re": v.real, "im": v.imag}
        elif isinstance(v, tuple):
            out[k] = [{"re": x.real, "im": x.imag} if isinstance(x, complex) else x for x in v]
        else:
            out[k] = v
    return out


def _emit(text, out):
    if out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out, "w") as fh:
            fh.write(text)


def cmd_solve(args):
    params = make_params(args)
    problem = gallery.make_problem(args.problem, params)
    if problem.space != "interval":
        raise UsageError(f"{args.problem} has continuous spectrum; use pseudospectra")
    contour = Contour(args.center, args.radius, args.nodes)
    m = args.m
    if m == "auto":
        m = count_eigenvalues(problem, contour, seed=args.seed, threads=args.threads)
    record = {
        "problem": args.problem,
        "params": _params_record(params),
        "contour": {"center": {"re": contour.center.real, "im": contour.center.imag}, "radius": contour.radius, "nodes": contour.nodes},
        "m": int(m),
        "seed": args.seed,
    }
    if m == 0:
        record.update({"eigenvalues": [], "sigma": [], "diagnostics": {}, "eigenfunctions": []})
    else:
        result = run(problem, contour, m, p=args.p, tol=args.tol, seed=args.seed, threads=args.threads)
        if not args.no_refine:
            result = refine(problem, result, tol=args.tol, p=args.p, seed=args.seed, threads=args.threads)
        record.update(result.to_record(with_functions=not args.no_functions))
        if result.refined is not None:
            record["refined"] = [bool(x) for x in result.refined]
        if not args.no_verify:
            checks = []
            for lam, res in zip(result.eigenvalues, result.residuals):
                g = gamma_adaptive(problem, lam)
                checks.append(
                    {
                        "gamma": g.value,
                        "n_used": g.n_used,
                        "converged": g.converged,
                        "within_10x_residual": bool(g.value <= 10 * max(res, NOISE_FLOOR)),
                    }
                )
            record["verification"] = checks
    _emit(json.dumps(record, indent=2), args.out)
    return 0


def cmd_count(args):
    params = make_params(args)
    problem = gallery.make_problem(args.problem, params)
    if problem.space != "interval":
        raise UsageError(f"{args.problem} has continuous spectrum; counting is undefined")
    contour = Contour(args.center, args.radius, args.nodes)
    m = count_eigenvalues(problem, contour, p_probe=args.probes, seed=args.seed, threads=args.threads)
    if args.format == "json":
        _emit(json.dumps({"problem": args.problem, "count": int(m)}), args.out)
    else:
        _emit(str(int(m)), args.out)
    return 0


def _discretized_family(name, params, n):
    if name == "butterfly":
        poly = fem.butterfly_truncation(params, n)
    else:
        poly = fem.fem_discretize(name, params, n)
    return poly, (lambda z: poly(z))


def cmd_pseudospectra(args):
    params = make_params(args)
    levels = tuple(args.eps)
    points = ()
    if args.discretized:
        poly, family = _discretized_family(args.problem, params, args.discretized)
        g = matrix_nep_grid(family, args.re, args.im, levels, threads=args.threads)
        points = fem.solve_matrix_nep(poly)
        title = f"{args.problem}: discretized, n = {args.discretized}"
    else:
        problem = gallery.make_problem(args.problem, params)
        g = grid(problem, args.re, args.im, levels, tol=args.tol, nmax=args.nmax, threads=args.threads)
        title = f"{args.problem}: gamma_n sublevel sets"
    if args.format == "csv":
        if args.out == "-":
            buf = io.StringIO()
            w = csv.writer(buf)
            w.writerow(["re", "im", "gamma", "n_used"])
            for i, y in enumerate(g.im):
                for j, x in enumerate(g.re):
                    w.writerow([repr(float(x)), repr(float(y)), repr(float(g.gamma[i, j])), int(g.n_used[i, j])])
            _emit(buf.getvalue(), "-")
        else:
            g.write_csv(args.out)
    elif args.format == "json":
        rec = g.to_record()
        rec["sublevel_sets"] = {repr(eps): [[z.real, z.imag] for z in g.sublevel(eps)] for eps in levels}
        _emit(json.dumps(rec), args.out)
    else:
        if args.out == "-":
            raise UsageError("svg output needs --out")
        g.write_svg(args.out, points=points, title=title)
    return 0


def woes_table(name, params, sizes, threads=None):
    """[(n, min |lam|)] for the FEM (or truncation) eigenvalues at each size."""
    from concurrent.futures import ThreadPoolExecutor

    def work(n):
        poly, _ = _discretized_family(name, params, n)
        lam = fem.solve_matrix_nep(poly)
        lam = lam[np.isfinite(lam)]
        return n, float(np.abs(lam).min()) if lam.size else float("nan")

    nthreads = default_threads(threads)
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            return list(ex.map(work, sizes))
    return [work(n) for n in sizes]


def cmd_woes(args):
    params = make_params(args)
    try:
        rows = woes_table(args.problem, params, args.sizes, args.threads)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["n", "min_abs_lambda"])
        for n, v in rows:
            w.writerow([n, repr(v)])
        _emit(buf.getvalue(), args.out)
    elif args.format == "json":
        _emit(json.dumps([{"n": n, "min_abs_lambda": v} for n, v in rows]), args.out)
    else:
        if args.out == "-":
            raise UsageError("svg output needs --out")
        write_line_svg(args.out, [r[0] for r in rows], [r[1] for r in rows], "n (log scale)", "min |lambda|", f"{args.problem}: FEM sweep", logx=True)
    return 0


def cmd_oracle(args):
    params = make_params(args)
    if args.problem == "damped_beam" and args.group == 2:
        vals = [gallery.beam_group2(k, params) for k in args.indices]
    else:
        vals = gallery.oracle_eigenvalues(args.problem, params, args.indices)
    if args.format == "json":
        _emit(json.dumps([{"k": k, "re": complex(v).real, "im": complex(v).imag} for k, v in zip(args.indices, vals)]), args.out)
    else:
        _emit("\n".join(f"{k} {complex(v).real!r} {complex(v).imag!r}" for k, v in zip(args.indices, vals)), args.out)
    return 0


def cmd_gallery(args):
    items = gallery.list_problems()
    if args.format == "json":
        _emit(json.dumps([{"name": n, "description": d, "parameters": list(PARAM_FLAGS[n])} for n, d in items]), args.out)
    else:
        _emit("\n".join(f"{n:18s} {d}" for n, d in items), args.out)
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "count": cmd_count,
    "pseudospectra": cmd_pseudospectra,
    "woes": cmd_woes,
    "oracle": cmd_oracle,
    "gallery": cmd_gallery,
}


_NEGATIVE_VALUE = re.compile(r"^-[0-9.]")


def join_negative_values(argv):
    """Rewrite ``--flag -1,2`` as ``--flag=-1,2`` so argparse accepts negative values."""
    out = []
    it = iter(range(len(argv)))
    for i in it:
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(argv) and _NEGATIVE_VALUE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            next(it, None)
        else:
            out.append(tok)
    return out


def run_cli(argv=None):
    """Run one command; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = expand_config(join_negative_values(argv))
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"infnep: usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"infnep: usage error: {exc}", file=sys.stderr)
        return 2
    except (InfNepError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"infnep: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
