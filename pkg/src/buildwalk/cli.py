"""Command line front end: ``buildwalk <subcommand> [flags]``.

Each run resolves its configuration (flags override a JSON config file,
which overrides defaults), computes one report and writes it as CSV or
JSON. Reports carry the resolved config and the library version and contain
no timestamps, so identical configs give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction

from . import __version__
from .errors import BuildwalkError, InvalidInput
from .hecke import WalkSpec, fmt_decimal, fmt_exact

SUBCOMMANDS = {
    "polygon-pn": "p^(n)(x,y) by Weyl distance via irreducible characters",
    "polygon-mix": "exact TV distance and the character bound along n",
    "quadrangle-closed-form": "closed form p^(n)(o,o) and TV bound for quadrangles",
    "feit-higman": "rationality test of all multiplicities",
    "param-check": "necessary parameter conditions for m in {3,4,6,8}",
    "c2-exact": "exact C~2 vertex walk via the generator recursion",
    "c2-spectral": "C~2 transition probabilities via Plancherel quadrature",
    "c2-llt": "C~2 simple random walk local limit: exact vs asymptote",
    "model-audit": "geometry and Weyl-distance audit of a finite model",
    "simulate": "seeded Monte Carlo run on a finite model",
    "a2-rho": "spectral radius of the A~2 chamber walk",
    "fuchsian-check": "hyperbolicity and thick-building existence for F(k1..kn)",
}

DEFAULTS = {
    "m": 4, "q": "2", "r": None, "n": 20, "grid": "200x200", "trials": 100000,
    "seed": None, "mode": None, "out": None, "format": None, "kind": None,
    "walk": "srw", "k": None, "workers": None,
}

KIND_FOR_M = {2: "complete-bipartite", 3: "projective-plane", 4: "symplectic-quadrangle"}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="buildwalk", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"buildwalk {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name, help_ in SUBCOMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--m", type=int)
        sp.add_argument("--q", type=str)
        sp.add_argument("--r", type=str)
        sp.add_argument("--n", "--steps", dest="n", type=int)
        sp.add_argument("--grid", type=str, help="quadrature grid N1xN2")
        sp.add_argument("--trials", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--mode", type=str,
                        help="rational|float for polygon commands, exact|spectral|both for c2-spectral, "
                             "exact|float|spectral for c2-llt")
        sp.add_argument("--out", type=str)
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--kind", choices=tuple(KIND_FOR_M.values()))
        sp.add_argument("--walk", choices=("srw", "uniform"))
        sp.add_argument("--k", type=str, help="comma separated k_i for fuchsian-check")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--config", type=str, help="JSON file mirroring the flags")
    return ap


def _resolve(ns: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if ns.config:
        try:
            with open(ns.config) as fh:
                filecfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInput(f"cannot read config file: {exc}") from None
        unknown = set(filecfg) - set(DEFAULTS) - {"subcommand"}
        if unknown:
            raise InvalidInput(f"unknown config keys: {sorted(unknown)}")
        cfg.update({k: v for k, v in filecfg.items() if k != "subcommand"})
    for key in DEFAULTS:
        v = getattr(ns, key, None)
        if v is not None:
            cfg[key] = v
    cfg["subcommand"] = ns.subcommand
    if cfg["r"] is None:
        cfg["r"] = cfg["q"]
    if cfg["workers"] is None:
        cfg["workers"] = int(os.environ.get("BUILDWALK_THREADS", "1"))
    return cfg


def _num(x):
    """Parse a parameter: integers and p/q stay exact, decimals become floats."""
    if isinstance(x, (int, Fraction)):
        return x
    if isinstance(x, float):
        return int(x) if x.is_integer() else x
    s = str(x).strip()
    try:
        if "/" in s:
            f = Fraction(s)
            return f.numerator if f.denominator == 1 else f
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        raise InvalidInput(f"not a number: {x!r}") from None


def _int_param(x, name):
    v = _num(x)
    if not isinstance(v, int):
        raise InvalidInput(f"--{name} must be an integer here, got {x}")
    return v


def _scalar_out(x):
    if isinstance(x, (Fraction, int)):
        return fmt_exact(Fraction(x))
    if isinstance(x, complex):
        x = x.real
    return float(x)


# options that do not influence results are left out of the echoed config,
# so outputs stay byte-identical across worker counts and destinations
_RUN_ONLY = ("out", "workers")


def _config_block(cfg: dict) -> dict:
    return {k: cfg[k] for k in sorted(cfg) if k not in _RUN_ONLY}


def _emit_csv(cfg, header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# buildwalk {__version__} config={json.dumps(_config_block(cfg), sort_keys=True)}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([fmt_decimal(v) if isinstance(v, (float, Fraction)) else v for v in row])
    return buf.getvalue()


def _emit_json(cfg, payload) -> str:
    doc = {"version": __version__, "config": _config_block(cfg)}
    doc.update(payload)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _tabular(cfg, header, rows, extra=None) -> str:
    if cfg["format"] == "json":
        conv = [[_scalar_out(v) if isinstance(v, (float, Fraction)) else v for v in row] for row in rows]
        payload = {"columns": header, "rows": conv}
        if extra:
            payload.update(extra)
        return _emit_json(cfg, payload)
    return _emit_csv(cfg, header, rows)


# --------------------------------------------------------------------------
# subcommands

def _exact_mode(cfg) -> str:
    mode = cfg["mode"] or "rational"
    if mode not in ("rational", "exact", "float"):
        raise InvalidInput(f"--mode must be rational or float here, got {mode}")
    return "float" if mode == "float" else "exact"


def _polygon_table(cfg):
    from .polygon_reps import character_table
    m = cfg["m"]
    q, r = _num(cfg["q"]), _num(cfg["r"])
    mode = _exact_mode(cfg)
    if mode == "float":
        q, r = float(q), float(r)
    return character_table(m, q, r, mode="auto" if mode == "exact" else "float")


def _walk(cfg, algebra):
    return WalkSpec.srw(algebra) if cfg["walk"] == "srw" else WalkSpec.uniform(algebra)


def cmd_polygon_pn(cfg):
    tab = _polygon_table(cfg)
    spec = _walk(cfg, tab.algebra)
    rows = []
    for n in range(cfg["n"] + 1):
        for w in tab.elements:
            rows.append([n, w.label(), tab.pn(spec, n, w)])
    return _tabular(cfg, ["n", "word", "p_w"], rows)


def cmd_polygon_mix(cfg):
    from .models import build_model, evolution_series, tv_from, weyl_distance_table
    tab = _polygon_table(cfg)
    spec = _walk(cfg, tab.algebra)
    q, r = _num(cfg["q"]), _num(cfg["r"])
    kind = cfg["kind"] or KIND_FOR_M.get(cfg["m"])
    tv = {}
    if kind is not None:
        try:
            cs = weyl_distance_table(build_model(kind, int(q), int(r)))
        except (InvalidInput, ValueError, TypeError):
            cs = None
        if cs is not None:
            from .hecke import WalkSpec as WS
            mspec = WS.srw(cs.algebra) if cfg["walk"] == "srw" else WS.uniform(cs.algebra)
            exact = _exact_mode(cfg) == "exact"
            for n, mu in evolution_series(cs, mspec, cfg["n"], exact=exact):
                tv[n] = tv_from(mu)
    rows = []
    from .coxeter import IDENTITY
    for n in range(cfg["n"] + 1):
        rows.append([n, tab.pn(spec, n, IDENTITY), tv.get(n, ""), tab.tv_bound(spec, n)])
    return _tabular(cfg, ["n", "p_n_oo", "tv_exact", "tv_bound"], rows)


def cmd_quadrangle(cfg):
    from .polygon_reps import quadrangle_srw_closed_form
    q, r = _num(cfg["q"]), _num(cfg["r"])
    rows = []
    for n in range(cfg["n"] + 1):
        p, b = quadrangle_srw_closed_form(q, r, n)
        rows.append([n, p, b])
    return _tabular(cfg, ["n", "p_n_oo", "tv_bound"], rows)


def cmd_feit_higman(cfg):
    from .polygon_reps import feit_higman_check
    q, r = _num(cfg["q"]), _num(cfg["r"])
    mode = _exact_mode(cfg)
    rep = feit_higman_check(cfg["m"], q, r, mode="auto" if mode == "exact" else "float")
    rep = {k: v for k, v in rep.items() if not k.startswith("_")}
    rep["inner_products"] = {str(k): v for k, v in rep["inner_products"].items()}
    rep["closed_forms"] = {str(k): v for k, v in rep["closed_forms"].items()}
    return _emit_json(cfg, rep)


def cmd_param_check(cfg):
    from .polygon_reps import parameter_constraints
    q, r = _int_param(cfg["q"], "q"), _int_param(cfg["r"], "r")
    res = parameter_constraints(cfg["m"], q, r)
    return _emit_json(cfg, {"constraints": [{"name": n, "pass": ok} for n, ok in res],
                            "all_pass": all(ok for _, ok in res)})


def _c2(cfg):
    from .affine_c2 import C2Params
    return C2Params(_num(cfg["q"]), _num(cfg["r"]))


def cmd_c2_exact(cfg):
    from .affine_c2 import ExactEngine, FloatEngine, LatticeDistribution, vertex_count
    p = _c2(cfg)
    walk = LatticeDistribution.srw()
    eng = ExactEngine(p, walk) if p.integral and cfg["mode"] != "float" else FloatEngine(p, walk)
    rows = []
    for n in range(cfg["n"] + 1):
        dist = eng.distribution()
        for (k, l) in sorted(dist.b):
            a = dist.b[(k, l)]
            rows.append([n, k, l, a, a / vertex_count(p, k, l)])
        if n < cfg["n"]:
            eng.step()
    return _tabular(cfg, ["n", "k", "l", "a_kl", "p"], rows)


def cmd_c2_spectral(cfg):
    from .affine_c2 import (LatticeDistribution, QuadratureGrid, orthogonality_check,
                            pn_spectral, return_series)
    p = _c2(cfg)
    grid = QuadratureGrid.parse(cfg["grid"])
    walk = LatticeDistribution.srw()
    mode = cfg["mode"] or "both"
    if mode not in ("exact", "spectral", "both"):
        raise InvalidInput("--mode must be exact, spectral or both")
    targets = [(k, l) for k in range(4) for l in range(4) if k + l <= 3]
    rows = []
    worst = 0.0
    exact_series = {}
    if mode in ("exact", "both"):
        for t in targets:
            from .affine_c2 import vertex_count
            exact_series[t] = [v / vertex_count(p, *t) for v in
                               return_series(p, walk, cfg["n"], mode="exact" if p.integral else "float", target=t)]
    for n in range(cfg["n"] + 1):
        for t in targets:
            row = {"n": n, "k": t[0], "l": t[1]}
            if mode in ("spectral", "both"):
                res = pn_spectral(p, walk, n, t, grid, workers=cfg["workers"])
                row["spectral"] = res.value
                row["error_estimate"] = res.error
            if mode in ("exact", "both"):
                row["exact"] = _scalar_out(exact_series[t][n])
            if mode == "both":
                row["difference"] = abs(float(exact_series[t][n]) - res.value)
                worst = max(worst, row["difference"])
            rows.append(row)
    payload = {"grid": grid.label(), "grid_offset": list(grid.offset), "rows": rows}
    if mode in ("spectral", "both"):
        payload["orthogonality_residual_kmax3"] = orthogonality_check(p, grid, 3)
    if mode == "both":
        payload["max_difference"] = worst
    return _emit_json(cfg, payload)


def cmd_c2_llt(cfg):
    from .affine_c2 import llt_constant, llt_ratio_table, srw_rho
    p = _c2(cfg)
    n = cfg["n"]
    ns = sorted({max(1, n // 4), max(1, n // 2), n})
    mode = cfg["mode"]
    if mode not in ("exact", "float", "spectral"):
        # rational recursion while it is cheap, scaled quadrature beyond
        mode = "exact" if p.integral and n <= 400 else "spectral"
    corrected = llt_ratio_table(p, ns, "corrected", mode)
    # the two forms differ by the factor (C_displayed / C_corrected) * n
    fac = llt_constant(p, "displayed") / llt_constant(p, "corrected")
    displayed = [dict(row, asymptote=row["asymptote"] * fac * row["n"], ratio=row["ratio"] / (fac * row["n"]))
                 for row in corrected]
    return _emit_json(cfg, {
        "rho": srw_rho(p),
        "route": mode,
        "constant": llt_constant(p, "corrected"),
        "asymptote": "C * rho^(2n) * n^-5",
        "ratios": corrected,
        "displayed_form": {"constant": llt_constant(p, "displayed"),
                           "asymptote": "C * rho^(2n) * n^-4", "ratios": displayed},
    })


def _model(cfg):
    from .models import build_model, weyl_distance_table
    kind = cfg["kind"] or KIND_FOR_M.get(cfg["m"])
    if kind is None:
        raise InvalidInput(f"no explicit model for m = {cfg['m']}")
    return weyl_distance_table(build_model(kind, _int_param(cfg["q"], "q"), _int_param(cfg["r"], "r")))


def cmd_model_audit(cfg):
    from .models import geometry_audit, is_stationary
    cs = _model(cfg)
    geo = geometry_audit(cs.model)
    qw_ok = all(cs.census(x) == {str(w): int(cs.algebra.q_w(w)) for w in cs.group.elements}
                for x in range(len(cs)))
    return _emit_json(cfg, {
        "geometry": geo, "chambers": len(cs), "census": cs.census(0),
        "sphere_sizes_equal_q_w": qw_ok,
        "srw_uniform_stationary": is_stationary(cs, WalkSpec.srw(cs.algebra)),
        "weyl_distance_consistent": True,
    })


def cmd_simulate(cfg):
    from .models import exact_evolution, simulate
    if cfg["seed"] is None:
        raise InvalidInput("simulate requires --seed")
    cs = _model(cfg)
    spec = WalkSpec.srw(cs.algebra) if cfg["walk"] == "srw" else WalkSpec.uniform(cs.algebra)
    res = simulate(cs, spec, cfg["n"], cfg["trials"], cfg["seed"], workers=cfg["workers"])
    exact = exact_evolution(cs, spec, cfg["n"], exact=False)
    rows = []
    worst = 0.0
    for i, (pt, ln) in enumerate(cs.chambers):
        p = float(exact[i])
        sd = math.sqrt(p * (1 - p) / cfg["trials"]) if 0 < p < 1 else 0.0
        z = abs(res["freq"][i] - p) / sd if sd > 0 else (0.0 if res["freq"][i] == p else math.inf)
        worst = max(worst, z)
        rows.append([i, pt, ln, float(res["freq"][i]), cs.element(cs.delta[0][i]).label(), p, z])
    header = ["chamber-id", "point", "line", "probability", "weyl-word", "exact", "z"]
    return _tabular(cfg, header, rows, {"rng": res["rng"], "max_z": worst})


def cmd_a2_rho(cfg):
    from .polygon_reps import a2_chamber_spectral_radius
    q = _num(cfg["q"])
    return _emit_json(cfg, {"q": _scalar_out(q), "rho": a2_chamber_spectral_radius(q)})


def cmd_fuchsian(cfg):
    from .coxeter import fuchsian_admissible
    if not cfg["k"]:
        raise InvalidInput("fuchsian-check needs --k, e.g. --k 3,3,4")
    ks = cfg["k"] if isinstance(cfg["k"], list) else [int(x) for x in str(cfg["k"]).split(",")]
    return _emit_json(cfg, {"k": ks, "result": fuchsian_admissible(ks)})


HANDLERS = {
    "polygon-pn": cmd_polygon_pn, "polygon-mix": cmd_polygon_mix,
    "quadrangle-closed-form": cmd_quadrangle, "feit-higman": cmd_feit_higman,
    "param-check": cmd_param_check, "c2-exact": cmd_c2_exact, "c2-spectral": cmd_c2_spectral,
    "c2-llt": cmd_c2_llt, "model-audit": cmd_model_audit, "simulate": cmd_simulate,
    "a2-rho": cmd_a2_rho, "fuchsian-check": cmd_fuchsian,
}


def run(cfg: dict) -> str:
    return HANDLERS[cfg["subcommand"]](cfg)


def main(argv=None) -> int:
    ns = _parser().parse_args(argv)
    try:
        cfg = _resolve(ns)
        text = run(cfg)
    except BuildwalkError as exc:
        err = {"error": exc.code, "message": str(exc)}
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        return 1
    if cfg["out"]:
        with open(cfg["out"], "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0
