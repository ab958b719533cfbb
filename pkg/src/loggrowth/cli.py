"""Command-line front-end.  Every subcommand prints a JSON report on stdout.

Exit codes: 0 ok, 2 malformed input, 3 infeasible configuration, 4 math-layer
error, 5 unclassified or theorem-violating result.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction

from . import __version__
from .padics import PadicContext, sparse_irreducible
from .series import LaurentSeries, LogSeries

EXIT_SCHEMA, EXIT_INFEASIBLE, EXIT_MATH, EXIT_RESULT = 2, 3, 4, 5
CONFIG_ENV = "LOGGROWTH_CONFIG"

DEFAULTS = {"p": 5, "h": 1, "N": 20, "T": 2000, "r0": "1/2", "M": 12, "tau": 0.15,
            "D": 8, "seed": 0, "budget": 50}


class SchemaError(ValueError):
    pass


class Infeasible(ValueError):
    pass


def _fmt(x):
    """Exact values as strings, floats with 12 significant digits."""
    if isinstance(x, float):
        return float(f"{x:.12g}")
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_fmt(v) for v in x]
    return x


def emit(obj) -> None:
    sys.stdout.write(json.dumps(_fmt(obj), indent=2, sort_keys=True, default=str) + "\n")


def load_json(path: str):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise SchemaError(f"{path}: {e.strerror}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e


def _parse(path, fn):
    obj = load_json(path)
    try:
        return fn(obj)
    except (ValueError, KeyError, TypeError, IndexError) as e:
        raise SchemaError(f"{path}: {e}") from e


def _fractions(text: str) -> list:
    try:
        return [Fraction(t) for t in text.split(",") if t.strip()]
    except ValueError as e:
        raise SchemaError(f"bad rational list {text!r}") from e


def make_context(cfg) -> PadicContext:
    p, h, N = int(cfg.p), int(cfg.h), int(cfg.N)
    return PadicContext(p, h, N, sparse_irreducible(p, h) if h > 1 else None)


# ---------------------------------------------------------------------------
# subcommands

def cmd_np(cfg):
    from .valuations_np import newton_polygon_ring, partial_valuation_points

    ctx = make_context(cfg)
    f = _parse(cfg.series, lambda o: LaurentSeries.from_json(ctx, o))
    poly = newton_polygon_ring(f, cfg.r)
    if cfg.csv:
        with open(cfg.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["v_n", "n"])
            w.writerows(partial_valuation_points(f))
    emit({"polygon": poly.to_json(), "slopes": [[str(s), str(m)] for s, m in poly.negated()]})


def cmd_ore(cfg):
    from . import ore

    ctx = make_context(cfg)

    def poly(path):
        return _parse(path, lambda o: ore.TwistedPoly.from_json(ctx, o))

    if cfg.action == "mul":
        emit({"product": ore.ore_mul(poly(cfg.f), poly(cfg.g)).to_json()})
    elif cfg.action == "np":
        f = poly(cfg.f)
        emit({"polygon": ore.newton_polygon_twisted(f).to_json(),
              "slopes": [str(s) for s in ore.slopes_paper(f)]})
    elif cfg.action == "star":
        emit(ore.check_condition_star(poly(cfg.f)).to_json())
    else:
        slopes = _fractions(cfg.slopes)
        f = ore.from_slope_factors(ctx, slopes)
        g = ore.closed_formula(ctx, slopes)
        emit({"product": f.to_json(), "closed_formula_agrees": f.equals(g),
              "slopes": [str(s) for s in ore.slopes_paper(f)]})


def cmd_kedlaya(cfg):
    from . import sigma_mod

    M = sigma_mod.DiagonalSigmaModule(int(cfg.p), int(cfg.h), tuple(_fractions(cfg.slopes)), cfg.base)
    if cfg.vector:
        ctx = PadicContext(int(cfg.p), 1, 30)

        def coords(o):
            if not isinstance(o, list):
                raise ValueError("vector must be a JSON array")
            if M.base == sigma_mod.CONSTANT:
                return [Fraction(str(c)) for c in o]
            return [LaurentSeries.from_json(ctx, c) for c in o]
        xs = _parse(cfg.vector, coords)
        tr = sigma_mod.kedlaya_annihilator(M, xs, seed=cfg.seed)
        out = tr.to_json()
        out["cyclic"] = sigma_mod.is_cyclic(tr)
        out["generic"] = out["cyclic"] and sigma_mod.is_generic_cyclic(tr)
        emit(out)
        return 0
    res = sigma_mod.find_generic_cyclic(M, int(cfg.budget), seed=cfg.seed)
    out = res.trace.to_json()
    out["retries"] = res.retries
    out["generic"] = True
    emit(out)
    return 0


def _twisted(ctx, path):
    from .ore import TwistedPoly
    return _parse(path, lambda o: TwistedPoly.from_json(ctx, o))


def _logseries(ctx, path):
    return _parse(path, lambda o: LogSeries.from_json(ctx, o))


def cmd_frobsolve(cfg):
    from .frobeq import solve_fixed_point, verify_solution

    ctx = make_context(cfg)
    f = _twisted(ctx, cfg.f)
    g = _parse(cfg.forcing, lambda o: LaurentSeries.from_json(ctx, o)) if cfg.forcing else None
    res = solve_fixed_point(f, Fraction(cfg.y0), int(cfg.T), g)
    out = {"y": res.y.to_json(), "constraint_ok": res.constraint_ok}
    if g is None:
        out["verified"] = verify_solution(f, res.y, int(cfg.T))
    emit(out)
    return 0 if res.constraint_ok else EXIT_RESULT


def _check_feasible(cfg, ctx, y: LogSeries):
    from .frobeq import feasible_depth

    hi = min(c.hi for c in y.comps)
    if hi == float("inf"):
        return
    r0 = Fraction(cfg.r0)
    M = feasible_depth(int(hi), r0, ctx.q)
    if M < int(cfg.M):
        raise Infeasible(f"T = {int(hi)} supports ladder depth M <= {M} (requested {cfg.M}); "
                         f"need T >= 2 q^M / r0")


def _frob_config(cfg):
    from .frobeq import Config
    return Config(r0=Fraction(cfg.r0), M=int(cfg.M), tau=float(cfg.tau), D=int(cfg.D))


def cmd_classify(cfg):
    from .frobeq import classify_log_growth

    ctx = make_context(cfg)
    f = _twisted(ctx, cfg.f)
    y = _logseries(ctx, cfg.y)
    _check_feasible(cfg, ctx, y)
    rep = classify_log_growth(f, y, _frob_config(cfg))
    emit(rep.to_json())
    return EXIT_RESULT if rep.snapped is None else 0


def cmd_ladder(cfg):
    from .frobeq import ladder_profile

    ctx = make_context(cfg)
    y = _logseries(ctx, cfg.y)
    _check_feasible(cfg, ctx, y)
    prof = ladder_profile(y, Fraction(cfg.r0), int(cfg.M), require_certified=False)
    rows = [{"m": e.m, "r": str(e.r), "exponent": float(f"{e.exponent:.12g}"),
             "error_bound": e.error_bound, "certified": e.certified} for e in prof.entries]
    if cfg.csv:
        with open(cfg.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "r", "exponent", "certified"])
            for e in prof.entries:
                w.writerow([e.m, str(e.r), f"{e.exponent:.12g}", int(e.certified)])
    emit({"r0": str(prof.r0), "q": prof.q, "rows": rows, "diagnostic": prof.diagnostic})
    return 0


def _module(cfg):
    from . import nabla

    ctx = make_context(cfg)
    if cfg.example == "nilpotent":
        return nabla.nilpotent_example(ctx)
    if cfg.example == "log":
        return nabla.log_example(ctx)
    if cfg.example == "hypergeometric":
        if cfg.residue is None:
            raise SchemaError("--residue is required for the hypergeometric example")
        res = [int(t) for t in cfg.residue.split(",")]
        return nabla.hypergeometric_module(ctx, res[0] if ctx.h == 1 else res)
    if not cfg.module:
        raise SchemaError("give --module FILE or --example NAME")
    return _parse(cfg.module, lambda o: nabla.DifferentialModule.from_json(ctx, o))


def _table(rep) -> str:
    lines = ["break  multiplicity"]
    lines += [f"{str(b):>5}  {m}" for b, m in rep.breaks]
    if rep.comparison:
        lines.append("lambda  dimV  dim_perp  status")
        lines += [f"{r['lambda']:>6}  {r['lhs']:>4}  {r['rhs']:>8}  {r['status']}" for r in rep.comparison]
    return "\n".join(lines)


def cmd_ode(cfg):
    from . import nabla

    M = _module(cfg)
    fc = nabla.FiltrationConfig(T=int(cfg.T), D=int(cfg.D), tau=float(cfg.tau),
                                min_coeffs=min(1000, int(cfg.T)))
    if cfg.action == "solve":
        sol = nabla.solve_fundamental(M, int(cfg.T))
        emit({"kind": sol.kind, "T": sol.T, "precision": sol.precision, "method": sol.method,
              "residual_ok": nabla.residual_ok(M, sol),
              "Y": [[e.to_json() for e in row] for row in sol.W]})
        return 0
    if cfg.action == "slopes":
        emit({"special_slopes": [str(s) for s in nabla.special_frobenius_slopes(M)]})
        return 0
    if cfg.action == "filtration":
        rep = nabla.special_filtration(M, fc)
    else:
        rep = nabla.compare_main_theorem(M, fc)
    if cfg.table:
        sys.stderr.write(_table(rep) + "\n")
    emit(rep.to_json())
    bad = rep.ambiguous or any(r["status"] == "violation" for r in rep.comparison)
    return EXIT_RESULT if bad else 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    # run-config flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help=f"JSON file of defaults (else ${CONFIG_ENV})")
    for k in ("p", "h", "N", "T", "M", "D", "seed", "budget"):
        common.add_argument(f"--{k}", type=int)
    common.add_argument("--r0")
    common.add_argument("--tau", type=float)
    ap = argparse.ArgumentParser(prog="loggrowth", description=__doc__.splitlines()[0],
                                 parents=[common])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **k: _add(*a, parents=[common], **k)

    s = sub.add_parser("np", help="Newton polygon of a Laurent series")
    s.add_argument("--series", required=True)
    s.add_argument("-r", type=Fraction, default=Fraction(1))
    s.add_argument("--csv")
    s.set_defaults(func=cmd_np)

    s = sub.add_parser("ore", help="twisted polynomials")
    s.add_argument("action", choices=["mul", "np", "star", "factors"])
    s.add_argument("--f")
    s.add_argument("--g")
    s.add_argument("--slopes", default="")
    s.set_defaults(func=cmd_ore)

    s = sub.add_parser("kedlaya", help="annihilator of a vector in a diagonal sigma-module")
    s.add_argument("--slopes", required=True)
    s.add_argument("--base", choices=["constant", "laurent"], default="laurent")
    s.add_argument("--vector", help="JSON array of coordinates; omitted means search")
    s.set_defaults(func=cmd_kedlaya)

    s = sub.add_parser("frobsolve", help="power-series solution of f(sigma) y + g = 0")
    s.add_argument("--f", required=True)
    s.add_argument("--y0", default="1")
    s.add_argument("--forcing")
    s.set_defaults(func=cmd_frobsolve)

    s = sub.add_parser("classify", help="log-growth class of a solution")
    s.add_argument("--f", required=True)
    s.add_argument("--y", required=True)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("ladder", help="norm profile on the radius ladder")
    s.add_argument("--y", required=True)
    s.add_argument("--csv")
    s.set_defaults(func=cmd_ladder)

    s = sub.add_parser("ode", help="differential modules with Frobenius structure")
    s.add_argument("action", choices=["solve", "filtration", "compare", "slopes"])
    s.add_argument("--module")
    s.add_argument("--example", choices=["nilpotent", "log", "hypergeometric"])
    s.add_argument("--residue", help="residue of the centre (comma-separated coordinates if h > 1)")
    s.add_argument("--table", action="store_true", help="also print a table on stderr")
    s.set_defaults(func=cmd_ode)
    return ap


def resolve_config(args) -> argparse.Namespace:
    cfg = dict(DEFAULTS)
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if path:
        extra = load_json(path)
        if not isinstance(extra, dict):
            raise SchemaError(f"{path}: config must be a JSON object")
        unknown = set(extra) - set(DEFAULTS)
        if unknown:
            raise SchemaError(f"{path}: unknown keys {sorted(unknown)}")
        cfg.update(extra)
    for k, v in vars(args).items():
        if k != "config" and (v is not None or k not in cfg):
            cfg[k] = v
    for k in ("p", "h", "N", "T", "M", "D", "budget"):
        if int(cfg[k]) <= 0:
            raise SchemaError(f"{k} must be positive")
    if Fraction(cfg["r0"]) <= 0 or float(cfg["tau"]) <= 0:
        raise SchemaError("r0 and tau must be positive")
    return argparse.Namespace(**cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        code = args.func(cfg)
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except Infeasible as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ArithmeticError, RuntimeError) as e:
        print(f"math error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_MATH
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
