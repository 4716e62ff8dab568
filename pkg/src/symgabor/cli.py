"""Command-line entry point: ``symgabor <subcommand> ...``.

Exit codes: 0 all checks passed / output written, 1 a verification suite
failed, 2 usage or input error.  JSON summaries use 17 significant digits
and embed the config hash, tool version and seed.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .blt import (
    QuadraticForm,
    TruncationSchedule,
    quadratic_form_product,
    truncated_dual_q_product,
    truncated_pm_product,
    truncated_q_product,
)
from .errors import SymGaborError
from .field import GridSpec, gaussian, hermite, load_sgf, save_sgf
from .gabor import (
    BoxGenerator,
    biorthogonality_residual,
    dual_generator,
    dual_residual,
    export_gram_csv,
    frame_bounds_estimate,
    gram_matrix,
    grid_system,
    load_system,
    reconstruction_residual,
    reflection_residuals,
)
from .genfourier import (
    change_rep,
    gft,
    inverse_gft,
    make_plan,
    make_tilde_plan,
    tilde_gft_v,
    tilde_gft_w,
    tilde_plan_from_basis,
)
from .suites import SUITES, Check
from .symplectic import (
    basis_from_json,
    basis_to_json,
    complete_symplectic_basis,
    make_basis,
    make_frame,
    regularize_basis,
    vectors_from_json,
)

log = logging.getLogger("symgabor")


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ JSON output


def dumps(obj, indent=0):
    """Deterministic JSON with floats pinned to 17 significant digits."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, (complex, np.complexfloating)):
        return dumps([obj.real, obj.imag], indent)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(x, (dict, list, tuple, np.ndarray)) for x in obj):
            return "[" + ", ".join(dumps(x) for x in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(x, indent + 1) for x in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _config(args):
    skip = {"func", "workers", "json", "out", "output", "gram_csv"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _envelope(args, results, failures):
    cfg = _config(args)
    digest = hashlib.sha256(dumps(cfg).encode()).hexdigest()
    return {
        "tool": "symgabor",
        "version": __version__,
        "subcommand": args.command,
        "seed": args.seed,
        "config": cfg,
        "config_hash": digest,
        "passed": not failures,
        "failures": failures,
        "results": results,
    }


def _emit(args, results, failures=()):
    text = dumps(_envelope(args, results, list(failures))) + "\n"
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 1 if failures else 0


# ------------------------------------------------------------------ parsing helpers


def _floats(text):
    try:
        return np.array([float(t) for t in text.replace(" ", "").split(",") if t])
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}")


def _pair(text):
    parts = dict(p.split("=", 1) for p in text.split(";") if "=" in p)
    if set(parts) != {"v", "w"}:
        raise UsageError(f"--pair needs 'v=...;w=...', got {text!r}")
    return _floats(parts["v"]), _floats(parts["w"])


def _form(text, d):
    if text is None:
        return QuadraticForm.euclidean(d)
    terms = []
    for chunk in text.split(";"):
        alpha, _, vec = chunk.partition(":")
        terms.append((float(alpha), _floats(vec)))
    return QuadraticForm(tuple(terms))


def _tolerances(args, defaults):
    tol = dict(defaults)
    for item in args.tol or []:
        name, _, val = item.partition("=")
        if name not in tol:
            raise UsageError(f"unknown tolerance {name!r}; known: {sorted(tol)}")
        tol[name] = float(val)
        if not tol[name] > 0:
            raise UsageError("tolerances must be positive")
    return tol


def _vw(args):
    if args.input:
        with open(args.input) as fh:
            doc = json.load(fh)
        return np.asarray(doc["v"], float), np.asarray(doc["w"], float)
    if args.v is None or args.w is None:
        raise UsageError("give --v and --w or --input")
    return _floats(args.v), _floats(args.w)


def _load_basis(path):
    with open(path) as fh:
        return basis_from_json(fh.read())


def _field_input(spec, d):
    if spec.startswith("gaussian"):
        return gaussian(GridSpec.default(d))
    if spec.startswith("hermite:"):
        return hermite(GridSpec.default(d), int(spec.split(":", 1)[1]))
    return load_sgf(spec)


def _check_paths(args):
    paths = [getattr(args, k, None) for k in ("input", "system", "basis", "frame", "second_frame", "output", "out", "json", "gram_csv")]
    paths = [os.path.abspath(p) for p in paths if p and not str(p).startswith(("gaussian", "hermite:"))]
    if len(paths) != len(set(paths)):
        raise UsageError("input and output paths must be distinct")


# ------------------------------------------------------------------ subcommands


IDENTITY_TOLS = {
    "symplectic": {"tol_example": 1e-12, "tol_random": 1e-10},
    "commutators": {"tol": 1e-6},
    "transforms": {"tol_change": 1e-5, "tol_reduce": 1e-6, "tol_diag": 1e-6},
    "covariance": {"tol_det": 1e-10, "tol_cov": 1e-5},
}


def cmd_identities(args):
    names = list(SUITES) if args.suite == "all" else [args.suite]
    flat = {f"{n}.{k}": v for n in names for k, v in IDENTITY_TOLS[n].items()}
    tol = _tolerances(args, flat)
    jobs = []
    for name in names:
        kw = {k: tol[f"{name}.{k}"] for k in IDENTITY_TOLS[name]}
        if name == "symplectic":
            kw.update(trials=args.trials, seed=args.seed)
            if args.d:
                kw["dims"] = (args.d,)
        elif name == "commutators":
            kw["seed"] = args.seed
            if args.d:
                if args.d not in (1, 2, 3):
                    raise UsageError("--d must be 1, 2 or 3")
                kw["dims"] = (args.d,)
        jobs.append((name, kw))
    with ThreadPoolExecutor(max(1, args.workers)) as ex:
        outs = list(ex.map(lambda job: SUITES[job[0]](**job[1]), jobs))
    results, failures = {}, []
    for (name, _), checks in zip(jobs, outs):
        results[name] = [c.to_dict() for c in checks]
        failures += [f"{name}: {c.name}" for c in checks if not c.passed]
    return _emit(args, results, failures)


def _basis_report(basis):
    return {
        "V": basis.V.vectors,
        "W": basis.W.vectors,
        "residuals": basis.residuals(),
        "det_B_v": basis.V.det_b,
        "det_B_w": basis.W.det_b,
    }


def cmd_complete_basis(args):
    v, w = _vw(args)
    basis = complete_symplectic_basis(v, w)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(basis_to_json(basis))
    rep = _basis_report(basis)
    fails = [] if basis.max_residual() < 1e-10 else ["symplectic relations"]
    return _emit(args, rep, fails)


def cmd_regularize(args):
    v, w = _vw(args)
    reg = regularize_basis(v, w)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(basis_to_json(reg.basis))
    rep = _basis_report(reg.basis)
    rep["transform"] = reg.transform
    rep["shear"] = None if reg.shear is None else np.asarray(reg.shear)
    fails = [] if reg.basis.nondegenerate and reg.basis.max_residual() < 1e-10 else ["regularization"]
    return _emit(args, rep, fails)


def _load_frames(path):
    """A frame JSON holds d vectors; a basis JSON holds 2d (V then W)."""
    with open(path) as fh:
        d, vecs = vectors_from_json(fh.read())
    if len(vecs) == d:
        return make_frame(vecs), None
    if len(vecs) == 2 * d:
        basis = make_basis(vecs[:d], vecs[d:])
        return basis.V, basis.W
    raise UsageError(f"{path}: expected {d} or {2 * d} vectors")


def cmd_gft(args):
    V, W = _load_frames(args.frame)
    if args.second_frame:
        W, _ = _load_frames(args.second_frame)
    f = _field_input(args.input, V.d)
    if args.tilde:
        if W is None:
            raise UsageError("--tilde needs --second-frame or a basis JSON")
        tp = make_tilde_plan(V, W, f.grid)
        out = (tilde_gft_v if args.side == "v" else tilde_gft_w)(tp, f)
        plan = tp.to_dict()
    else:
        frame = W if args.side == "w" else V
        if frame is None:
            raise UsageError("--side w needs a second frame")
        p = make_plan(frame, f.grid)
        out = inverse_gft(p, f) if args.inverse else gft(p, f)
        plan = p.to_dict()
    if args.output:
        save_sgf(args.output, out)
    rep = {"norm_in": f.norm(), "norm_out": out.norm(), "domain": out.domain, "plan": plan}
    fails = [] if abs(out.norm() - f.norm()) <= 1e-10 * max(1.0, f.norm()) else ["unitarity"]
    return _emit(args, rep, fails)


def cmd_change_rep(args):
    basis = _load_basis(args.basis)
    F = load_sgf(args.input)
    tp = tilde_plan_from_basis(basis, F.grid)
    out = change_rep(tp, F)
    if args.output:
        save_sgf(args.output, out)
    return _emit(args, {"norm_in": F.norm(), "norm_out": out.norm(), "sigma": tp.sigma})


def cmd_gabor_check(args):
    tol = _tolerances(args, {"gram": 1e-12, "identity": 1e-10})
    system = load_system(args.system, args.radius)
    G = gram_matrix(system)
    if args.gram_csv:
        export_gram_csv(args.gram_csv, G)
    gram_res = float(np.max(np.abs(G - np.eye(len(G)))))
    bounds = frame_bounds_estimate(system)
    rep = {"points": len(system.points), "symmetric": system.points.symmetric, "gram_residual": gram_res, "frame_bounds": bounds.to_dict()}
    fails = []
    if args.expect == "orthonormal":
        if gram_res >= tol["gram"]:
            fails.append("gram")
        if isinstance(system.generator, BoxGenerator):
            small = system.points.within(min(2.0, system.points.radius or 2.0))
            d = system.d
            refl = reflection_residuals(system.generator, small, np.ones(d), np.ones(d))
            rep["reflection_residuals"] = refl
            rep["biorthogonality_residual"] = biorthogonality_residual(system.generator, system.generator, small)
            fails += [k for k, val in refl.items() if val >= tol["identity"]]
            if rep["biorthogonality_residual"] >= tol["identity"]:
                fails.append("biorthogonality")
    elif bounds.A_est <= 0:
        fails.append("lower frame bound")
    return _emit(args, rep, fails)


def cmd_dual(args):
    system = load_system(args.system, args.radius)
    gs = grid_system(system)
    gd = dual_generator(gs, iters=args.iters)
    if args.output:
        save_sgf(args.output, gd)
    f = gaussian(gs.grid, center=np.full(system.d, 0.25), momentum=np.full(system.d, 0.5))
    rep = {
        "atoms": len(gs.points),
        "dual_residual": dual_residual(gs, gd),
        "reconstruction_residual": reconstruction_residual(gs, gd, f),
        "distance_to_generator": float((gd - gs.generator).norm() / gs.generator.norm()),
    }
    fails = [] if rep["dual_residual"] < 1e-6 else ["dual residual"]
    return _emit(args, rep, fails)


def cmd_blt_probe(args):
    system = load_system(args.system, args.radius)
    schedule = TruncationSchedule.parse(args.schedule)
    g = system.generator
    d = system.d
    if args.mode == "quadform":
        rep = quadratic_form_product(g, _form(args.form, d), schedule, workers=args.workers)
    else:
        if args.pair is None:
            raise UsageError("--pair is required for this mode")
        v, w = _pair(args.pair)
        if args.mode == "pm":
            rep = truncated_pm_product(g, v, w, schedule, workers=args.workers)
        elif args.mode == "q":
            rep = truncated_q_product(g, v, w, schedule, route=args.route, workers=args.workers)
        else:
            rep = truncated_dual_q_product(system, v, w, schedule)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(rep.to_csv())
    summary = rep.to_dict()
    fails = []
    if args.expect and rep.verdict != args.expect:
        fails.append(f"verdict {rep.verdict} != expected {args.expect}")
    return _emit(args, summary, fails)


# ------------------------------------------------------------------ parser


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    common.add_argument("--json", help="write the JSON summary here instead of stdout")
    common.add_argument("--tol", action="append", metavar="NAME=VALUE", help="tolerance override")

    p = argparse.ArgumentParser(prog="symgabor", description="Symplectic Gabor / Balian-Low toolkit")
    p.add_argument("--version", action="version", version=f"symgabor {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("identities", parents=[common], help="run identity verification suites")
    s.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    s.add_argument("--d", type=int)
    s.add_argument("--trials", type=int, default=100)
    s.set_defaults(func=cmd_identities)

    for name, fn in (("complete-basis", cmd_complete_basis), ("regularize", cmd_regularize)):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--v")
        s.add_argument("--w")
        s.add_argument("--input", help='JSON {"v": [...], "w": [...]}')
        s.add_argument("--output", help="basis JSON")
        s.set_defaults(func=fn)

    s = sub.add_parser("gft", parents=[common], help="generalized Fourier transform of an SGF field")
    s.add_argument("--frame", required=True, help="frame JSON (d vectors) or basis JSON (2d vectors)")
    s.add_argument("--second-frame", help="w frame for the tilde transforms")
    s.add_argument("--in", "--input", dest="input", required=True, help="SGF path, 'gaussian' or 'hermite:k'")
    s.add_argument("--out", "--output", dest="output")
    s.add_argument("--side", choices=["v", "w"], default="v")
    s.add_argument("--tilde", action="store_true")
    s.add_argument("--inverse", action="store_true")
    s.set_defaults(func=cmd_gft)

    s = sub.add_parser("change-rep", parents=[common], help="F_w(h) from an SGF of F_v(h)")
    s.add_argument("--basis", required=True)
    s.add_argument("--in", "--input", dest="input", required=True)
    s.add_argument("--out", "--output", dest="output")
    s.set_defaults(func=cmd_change_rep)

    s = sub.add_parser("gabor-check", parents=[common], help="Gram, frame bounds and identities of a system")
    s.add_argument("--system", required=True)
    s.add_argument("--radius", type=float)
    s.add_argument("--expect", choices=["orthonormal", "frame"], default="orthonormal")
    s.add_argument("--gram-csv")
    s.set_defaults(func=cmd_gabor_check)

    s = sub.add_parser("dual", parents=[common], help="canonical dual generator on the periodic grid")
    s.add_argument("--system", required=True)
    s.add_argument("--radius", type=float)
    s.add_argument("--iters", type=int, default=500)
    s.add_argument("--output")
    s.set_defaults(func=cmd_dual)

    s = sub.add_parser("blt-probe", parents=[common], help="truncated uncertainty products")
    s.add_argument("--system", required=True)
    s.add_argument("--radius", type=float)
    s.add_argument("--pair", help="'v=...;w=...'")
    s.add_argument("--mode", choices=["pm", "q", "quadform", "t13"], default="pm")
    s.add_argument("--form", help="'alpha:v;alpha:v' for quadform (default |x|^2)")
    s.add_argument("--route", choices=["auto", "grid", "closed-form"], default="auto")
    s.add_argument("--schedule", default="geometric:8:128:5")
    s.add_argument("--out", help="CSV report path")
    s.add_argument("--expect", choices=["finite", "divergent"])
    s.set_defaults(func=cmd_blt_probe)
    return p


def _setup_logging():
    level = os.environ.get("SG_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")


def run(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        _check_paths(args)
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
        log.info("running %s", args.command)
        return args.func(args)
    except (UsageError, SymGaborError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"symgabor {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
