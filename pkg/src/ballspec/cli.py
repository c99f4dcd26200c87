"""Command-line front end: identity checks, projections, solves and convergence studies.

Results are written as CSV with the columns
``command,d,n,e_M,e_L2,fitted_rate,wall_ms`` (floats with 17 significant
digits, ``wall_ms`` empty unless ``--timing``).  Error-vs-n plots are written
as standalone SVG.  On failure a single line ``ERROR {json}`` goes to stderr
and the exit status is nonzero.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import __version__
from .ballfun import BallPoly
from .quadrature import build_grid, error_metrics
from .sobolevbasis import SobolevParams
from .solvers import (
    EXAMPLES,
    BiharmonicProblem,
    HelmholtzProblem,
    biharmonic_coeffs,
    convergence_study,
    exam1b_exact,
    _exam1b_parts,
    fitted_rate,
    helmholtz_coeffs,
    manufactured_biharmonic,
    manufactured_helmholtz,
    solve,
)
from .transforms import (
    cutoff_eval,
    partial_sum,
    project_classical,
    project_harmonic,
    project_sobolev,
    project_sobolev_callable,
)

RESULT_COLUMNS = ["command", "d", "n", "e_M", "e_L2", "fitted_rate", "wall_ms"]
EXIT_FAIL = 1
EXIT_USAGE = 2


class CliError(Exception):
    def __init__(self, kind: str, message: str, status: int = EXIT_USAGE):
        super().__init__(message)
        self.kind = kind
        self.status = status


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.17g}"


def parse_nlist(text: str) -> list[int]:
    """``"3..10"``, ``"4..20:2"`` or ``"3,5,8"`` to a list of degrees."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            rng, _, step = part.partition(":")
            lo, hi = rng.split("..")
            out.extend(range(int(lo), int(hi) + 1, int(step) if step else 1))
        else:
            out.append(int(part))
    if not out or any(n < 0 for n in out):
        raise CliError("config", f"invalid n list {text!r}")
    return out


# problems


def _problem(args, kind: str):
    ex = args.example
    if ex == "manufactured":
        if kind == "helmholtz":
            return manufactured_helmholtz(args.d, args.degree, args.lam, args.eta, args.seed)
        return manufactured_biharmonic(args.d, args.degree, args.lambda1, args.lambda0, args.seed)
    if ex not in EXAMPLES:
        raise CliError("config", f"unknown example {ex!r}")
    prob = EXAMPLES[ex]()
    want = HelmholtzProblem if kind == "helmholtz" else BiharmonicProblem
    if not isinstance(prob, want):
        raise CliError("config", f"example {ex} is not a {kind} problem")
    return prob


def _any_problem(args):
    if args.example == "manufactured":
        return _problem(args, "helmholtz")
    if args.example not in EXAMPLES:
        raise CliError("config", f"unknown example {args.example!r}")
    return EXAMPLES[args.example]()


# output


def _write_results(path: str | None, rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in rows:
        w.writerow([r.get("command", ""), r.get("d", ""), r.get("n", "")] + [_fmt(r.get(c)) for c in RESULT_COLUMNS[3:]])
    text = buf.getvalue()
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
    return text


def render_svg(ns: Sequence[int], e_l2: Sequence[float], e_m: Sequence[float], title: str = "") -> str:
    """Two-series line chart of log10 error vs n (solid: L2, dashed: max)."""
    width, height = 640, 420
    left, right, top, bottom = 70, 20, 40, 50
    floor = 1e-17
    ys = [math.log10(max(float(e), floor)) for e in list(e_l2) + list(e_m)]
    ymin, ymax = math.floor(min(ys)), math.ceil(max(ys))
    if ymax == ymin:
        ymax += 1
    xmin, xmax = min(ns), max(ns)
    if xmax == xmin:
        xmin, xmax = xmin - 1, xmax + 1

    def px(n):
        return left + (n - xmin) / (xmax - xmin) * (width - left - right)

    def py(e):
        y = math.log10(max(float(e), floor))
        return top + (ymax - y) / (ymax - ymin) * (height - top - bottom)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{title}</text>',
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" y2="{height - bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="black"/>',
    ]
    ystep = max(1, (ymax - ymin) // 10)
    for y in range(ymin, ymax + 1, ystep):
        yy = top + (ymax - y) / (ymax - ymin) * (height - top - bottom)
        out.append(f'<line x1="{left - 4}" y1="{yy:.1f}" x2="{left}" y2="{yy:.1f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{yy + 4:.1f}" text-anchor="end" font-family="sans-serif" font-size="11">1e{y}</text>')
    xstep = max(1, (xmax - xmin) // 12)
    for n in range(xmin, xmax + 1, xstep):
        xx = px(n)
        out.append(f'<line x1="{xx:.1f}" y1="{height - bottom}" x2="{xx:.1f}" y2="{height - bottom + 4}" stroke="black"/>')
        out.append(f'<text x="{xx:.1f}" y="{height - bottom + 18}" text-anchor="middle" font-family="sans-serif" font-size="11">{n}</text>')
    out.append(f'<text x="{(left + width - right) / 2:.1f}" y="{height - 10}" text-anchor="middle" font-family="sans-serif" font-size="13">n</text>')
    for series, dash, label, color in ((e_l2, "", "L2 error", "#1f4e9c"), (e_m, ' stroke-dasharray="6,4"', "max error", "#b0301c")):
        pts = " ".join(f"{px(n):.1f},{py(e):.1f}" for n, e in zip(ns, series))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"{dash}/>')
        for n, e in zip(ns, series):
            out.append(f'<circle cx="{px(n):.1f}" cy="{py(e):.1f}" r="2.5" fill="{color}"/>')
    lx, ly = width - right - 150, top + 10
    out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 30}" y2="{ly}" stroke="#1f4e9c" stroke-width="2"/>')
    out.append(f'<text x="{lx + 36}" y="{ly + 4}" font-family="sans-serif" font-size="12">L2 error</text>')
    out.append(f'<line x1="{lx}" y1="{ly + 18}" x2="{lx + 30}" y2="{ly + 18}" stroke="#b0301c" stroke-width="2" stroke-dasharray="6,4"/>')
    out.append(f'<text x="{lx + 36}" y="{ly + 22}" font-family="sans-serif" font-size="12">max error</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _default_path(args, suffix: str) -> str:
    stem = args.command if not getattr(args, "example", None) else f"{args.command}-{args.example}"
    return str(Path(args.out_dir) / f"{stem}{suffix}")


# commands


def cmd_check(args) -> int:
    from .checks import run_all

    results = run_all(args.d, args.s, args.nmax, args.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "residual", "tol", "passed"])
    for r in results:
        print(r.line())
        w.writerow([r.name, _fmt(r.residual), _fmt(r.tol), int(r.passed)])
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise CliError("check-failed", "failed checks: " + ", ".join(failed), EXIT_FAIL)
    return 0


def _sobolev_params(args) -> SobolevParams:
    if args.lambdas:
        return SobolevParams(args.s, tuple(float(v) for v in str(args.lambdas).split(",")))
    return SobolevParams.default(args.s, args.d)


def _exam1b_sobolev(p: SobolevParams, n: int):
    half = p.s // 2
    if half == 0:
        def top(x):
            _, g1, g2 = _exam1b_parts(x)
            return np.column_stack([g1, g2, np.zeros_like(g1)])
    else:
        def top(x):
            x = np.asarray(x)
            return np.zeros(x.shape[:-1]) if p.s % 2 == 0 else np.zeros(x.shape)
    traces = [exam1b_exact] + [lambda x: np.zeros(np.asarray(x).shape[:-1])] * (p.nbnd - 1)
    return project_sobolev_callable(top, traces, p, n, 3)


def cmd_project(args) -> int:
    prob = _any_problem(args)
    d = prob.d
    args.d = d
    exact = prob.exact
    t0 = time.perf_counter()
    fam = args.family
    nproj = 2 * args.n - 1 if args.cutoff and args.n > 0 else args.n
    if fam == "classical":
        coeffs = project_classical(exact, args.mu, nproj, d) if not isinstance(exact, BallPoly) else project_classical(exact, args.mu, nproj)
    elif fam == "harmonic":
        coeffs = project_harmonic(exact, nproj, d)
    elif fam == "sobolev":
        p = _sobolev_params(args)
        if isinstance(exact, BallPoly):
            coeffs = project_sobolev(exact, p, nproj)
        elif args.example == "exam1b":
            coeffs = _exam1b_sobolev(p, nproj)
        elif args.example == "exam1a":
            from .transforms import ballpoly_from_callable

            coeffs = project_sobolev(ballpoly_from_callable(exact, d, 3), p, nproj)
        else:
            raise CliError("config", f"sobolev projection of {args.example} needs derivative data that is not built in")
    else:
        raise CliError("config", f"unknown family {fam!r}")
    approx = partial_sum(coeffs, args.n, cutoff_eval if args.cutoff else None)
    wall = (time.perf_counter() - t0) * 1e3
    coeff_path = args.coeffs or _default_path(args, "-coeffs.csv")
    with open(coeff_path, "w", newline="") as fh:
        coeffs.to_csv(fh)
    rows = []
    if fam != "harmonic":
        q = build_grid(d, args.grid_n or args.n)
        diff = approx(q.points) - np.asarray(exact(q.points), dtype=float)
        e_m, e_l2 = error_metrics(q, lambda _x: diff)
        rows.append({"command": "project", "d": d, "n": args.n, "e_M": e_m, "e_L2": e_l2, "wall_ms": wall if args.timing else None})
    _write_results(args.out or _default_path(args, ".csv"), rows)
    return 0


def _solve_rows(args, kind: str) -> int:
    prob = _problem(args, kind)
    ns = parse_nlist(args.nlist) if args.nlist else [args.n]
    grid_n = args.grid_n or max(ns)
    q = build_grid(prob.d, grid_n)
    exact_vals = np.asarray(prob.exact(q.points), dtype=float) if prob.exact is not None else None
    rows = []
    for n in ns:
        t0 = time.perf_counter()
        un = solve(prob, n, args.rhs_grid)
        wall = (time.perf_counter() - t0) * 1e3
        row = {"command": args.command, "d": prob.d, "n": n, "wall_ms": wall if args.timing else None}
        if exact_vals is not None:
            diff = un(q.points) - exact_vals
            row["e_M"], row["e_L2"] = error_metrics(q, lambda _x, v=diff: v)
        rows.append(row)
        if args.field and n == ns[-1]:
            with open(args.field, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow([f"x{i + 1}" for i in range(prob.d)] + ["u_n"])
                for x, v in zip(q.points, un(q.points)):
                    w.writerow([_fmt(c) for c in x] + [_fmt(v)])
    if args.coeffs:
        fn = helmholtz_coeffs if kind == "helmholtz" else biharmonic_coeffs
        with open(args.coeffs, "w", newline="") as fh:
            fn(prob, ns[-1], args.rhs_grid).to_csv(fh)
    if exact_vals is not None and len(rows) > 1:
        rate = fitted_rate([r["n"] for r in rows], [r["e_L2"] for r in rows], args.floor)
        for r in rows:
            r["fitted_rate"] = rate
    _write_results(args.out or _default_path(args, ".csv"), rows)
    if exact_vals is not None:
        svg = args.svg or _default_path(args, ".svg")
        Path(svg).write_text(
            render_svg([r["n"] for r in rows], [r["e_L2"] for r in rows], [r["e_M"] for r in rows], f"{prob.name}: errors vs n")
        )
    return 0


def cmd_solve_helmholtz(args) -> int:
    return _solve_rows(args, "helmholtz")


def cmd_solve_biharmonic(args) -> int:
    return _solve_rows(args, "biharmonic")


def cmd_convergence(args) -> int:
    prob = _any_problem(args) if args.example != "manufactured" else _problem(args, args.problem)
    ns = parse_nlist(args.nlist)
    t0 = time.perf_counter()
    res = convergence_study(prob, ns, args.grid_n, args.floor)
    wall = (time.perf_counter() - t0) * 1e3
    rows = [
        {"command": "convergence", "d": prob.d, "n": n, "e_M": em, "e_L2": el, "fitted_rate": res.fitted_rate,
         "wall_ms": wall if args.timing else None}
        for n, em, el in res.rows
    ]
    _write_results(args.out or _default_path(args, ".csv"), rows)
    svg = args.svg or _default_path(args, ".svg")
    Path(svg).write_text(render_svg(ns, [r[2] for r in res.rows], [r[1] for r in res.rows], f"{prob.name}: errors vs n"))
    return 0


COMMANDS = {
    "check": cmd_check,
    "project": cmd_project,
    "solve-helmholtz": cmd_solve_helmholtz,
    "solve-biharmonic": cmd_solve_biharmonic,
    "convergence": cmd_convergence,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ballspec", description="Spectral methods on the unit ball.")
    ap.add_argument("--version", action="version", version=f"ballspec {__version__}")
    ap.add_argument("--config", help="TOML file whose keys mirror the command-line flags")
    sub = ap.add_subparsers(dest="command")

    def common(p, example_default=None):
        p.add_argument("--d", type=int, default=2)
        p.add_argument("--out", help="results CSV path ('-' for stdout)")
        p.add_argument("--out-dir", default=".", help="directory for default output names")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--timing", action="store_true", help="fill the wall_ms column")
        if example_default is not None:
            p.add_argument("--example", default=example_default, choices=sorted(EXAMPLES) + ["manufactured"])
            p.add_argument("--degree", type=int, default=6, help="degree of the manufactured solution")
            p.add_argument("--lam", type=float, default=1.0)
            p.add_argument("--eta", type=float, default=1.0)
            p.add_argument("--lambda1", type=float, default=1.0)
            p.add_argument("--lambda0", type=float, default=1.0)
            p.add_argument("--grid-n", type=int, help="measuring grid size (default: largest n)")
            p.add_argument("--floor", type=float, default=1e-12, help="error floor for the fitted rate")

    p = sub.add_parser("check", help="run the identity, orthogonality and quadrature suites")
    common(p)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--nmax", type=int, default=10)

    p = sub.add_parser("project", help="project a built-in function and write coefficients")
    common(p, "exam1b")
    p.add_argument("--family", default="classical", choices=["classical", "harmonic", "sobolev"])
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--lambdas", help="comma separated boundary weights")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--cutoff", action="store_true", help="use the smooth cut-off partial sum")
    p.add_argument("--coeffs", help="coefficient CSV path")

    for name, ex in (("solve-helmholtz", "exam1a"), ("solve-biharmonic", "exam2")):
        p = sub.add_parser(name, help=f"{name.split('-')[1]} Galerkin solve")
        common(p, ex)
        p.add_argument("--n", type=int, default=8)
        p.add_argument("--nlist", help="several degrees, e.g. 4..20:2")
        p.add_argument("--rhs-grid", type=int, help="quadrature size for the load vector (default n+16)")
        p.add_argument("--coeffs", help="write solution coefficients to this CSV")
        p.add_argument("--field", help="write sampled solution on the measuring grid")
        p.add_argument("--svg", help="SVG path")

    p = sub.add_parser("convergence", help="error table and plot over several n")
    common(p, "exam1a")
    p.add_argument("--nlist", default="3..10")
    p.add_argument("--problem", default="helmholtz", choices=["helmholtz", "biharmonic"], help="for manufactured solutions")
    p.add_argument("--svg", help="SVG path")
    return ap


def _load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise CliError("config", f"cannot read config {path}: {exc}") from exc
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def _parse(argv: Sequence[str]) -> argparse.Namespace:
    ap = build_parser()
    pre, _ = ap.parse_known_args(argv)
    if not pre.config:
        args = ap.parse_args(argv)
        if args.command is None:
            raise CliError("config", "no command given")
        return args
    cfg = _load_config(pre.config)
    command = pre.command or cfg.pop("command", None)
    cfg.pop("command", None)
    if command not in COMMANDS:
        raise CliError("config", f"unknown or missing command {command!r}")
    argv = list(argv)
    if pre.command is None:
        argv.append(command)
    sub = ap._subparsers._group_actions[0].choices[command]
    known = {a.dest for a in sub._actions}
    unknown = set(cfg) - known
    if unknown:
        raise CliError("config", "unknown config keys: " + ", ".join(sorted(unknown)))
    if "nlist" in cfg and isinstance(cfg["nlist"], list):
        cfg["nlist"] = ",".join(str(v) for v in cfg["nlist"])
    sub.set_defaults(**cfg)
    return ap.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    command = None
    try:
        args = _parse(argv)
        command = args.command
        return COMMANDS[command](args)
    except CliError as exc:
        _error(command, exc.kind, str(exc))
        return exc.status
    except (ValueError, TypeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        _error(command, type(exc).__name__, str(exc))
        return EXIT_FAIL


def _error(command, kind: str, message: str) -> None:
    sys.stderr.write("ERROR " + json.dumps({"command": command, "kind": kind, "message": message}, sort_keys=True) + "\n")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
