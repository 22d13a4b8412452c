"""Command line interface: ``densegen <command> ...``.

Exit codes: 0 success, 2 best-effort miss (result still written), 1 typed error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import numkernel as nk
from .errors import DensegenError
from .generators import GeneratorPair, build_pair
from .harness import density_experiment, dependence_invariant_check, transitivity_demo
from .planner import PlanMode, plan_point, refine_plan
from .rng import SplitMix64
from .synthesis import SearchBudget, approx_matrix
from .upsilon import (
    UpsilonPoint,
    classify,
    combine_points,
    realize_combine,
    same_fiber_factor,
    split,
    upsilon_of,
)

EXIT_OK, EXIT_ERROR, EXIT_MISS = 0, 1, 2


def _scalar(text: str):
    z = complex(text.replace(" ", "").replace("i", "j"))
    return z.real if z.imag == 0 else z


def _point(text: str) -> UpsilonPoint:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'a,eta', got {text!r}")
    return UpsilonPoint(_scalar(parts[0]), _scalar(parts[1]))


def _load_json(path):
    return json.loads(Path(path).read_text())


def _load_matrix(path) -> np.ndarray:
    obj = _load_json(path)
    if isinstance(obj, dict) and "data" in obj:
        return nk.matrix_from_json(obj)
    return nk.as_matrix(obj)


def _load_pair(spec: str) -> GeneratorPair:
    """A pair JSON file, or a builtin written as ``real:3`` / ``complex:2``."""
    if ":" in spec and not Path(spec).exists():
        field, n = spec.split(":", 1)
        return build_pair(int(n), field)
    return GeneratorPair.from_json(_load_json(spec))


def _emit(args, payload: dict, text: str | None = None):
    out = getattr(args, "out", None)
    blob = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(blob + "\n")
    if args.json or text is None:
        print(blob)
    else:
        print(text)


def _budget(args) -> SearchBudget:
    return SearchBudget(int(float(args.budget)), args.max_length, args.beam)


# --- commands ---------------------------------------------------------------------

def cmd_generate(args):
    pair = build_pair(args.n, args.field)
    _emit(args, pair.to_json(), f"{pair.pair_id}: scope {pair.density_scope.value}\nA =\n{pair.A}\nB =\n{pair.B}")
    return EXIT_OK


def cmd_upsilon(args):
    B = split(_load_matrix(args.matrix))
    cls = classify(B, tol=args.tol)
    try:
        ups = upsilon_of(B)
        payload = {"upsilon": ups.to_json(), "class": cls.value}
        text = f"Υ = ({ups.a}, {ups.eta})  class {cls.value}"
    except DensegenError:
        payload = {"upsilon": None, "class": cls.value}
        text = f"Υ undefined  class {cls.value}"
    _emit(args, payload, text)
    return EXIT_OK


def cmd_factor(args):
    G1, G2 = _load_matrix(args.g1), _load_matrix(args.g2)
    L, R = same_fiber_factor(G1, G2, positive=args.positive)
    resid = float(np.linalg.norm(L @ G1 @ R - G2))
    _emit(args, {"S_L": nk.matrix_to_json(L), "S_R": nk.matrix_to_json(R), "residual": resid},
          f"S_L =\n{L}\nS_R =\n{R}\nresidual {resid:.3e}")
    return EXIT_OK


def cmd_combine(args):
    p, q, z = args.p, args.q, _scalar(args.z)
    out = combine_points(p, q, z, real_positive=args.real_positive)
    payload = {"result": out.to_json()}
    text = f"combine = ({out.a}, {out.eta})"
    if args.realize:
        r = s = np.sqrt(complex(z)) if np.iscomplexobj(np.asarray(z)) or z.real < 0 else np.sqrt(z)
        M1, M2, M = realize_combine(p, q, r, s, args.realize)
        payload["product"] = nk.matrix_to_json(M)
        payload["product_upsilon"] = upsilon_of(split(M)).to_json()
        text += f"\nrealized product =\n{M}"
    _emit(args, payload, text)
    return EXIT_OK


_MODES = {"complex": PlanMode.ComplexFull, "real+": PlanMode.RealPlus, "real-": PlanMode.RealMinus}


def cmd_plan(args):
    u, v = args.target
    plan = plan_point(u, v, _MODES[args.mode], args.t)
    if args.refine and plan.mode != PlanMode.RealMinus:
        plan = refine_plan(plan)
    end = plan.evaluate()
    _emit(args, plan.to_json(),
          f"{len(plan.steps)} steps, endpoint ({end.a}, {end.eta}), predicted error {plan.predicted_error:.3e}")
    return EXIT_OK


def cmd_approx(args):
    pair = _load_pair(args.pair)
    T = _load_matrix(args.target)
    res = approx_matrix(T, pair, args.eps, _budget(args))
    _emit(args, res.to_json(),
          f"word {res.word}\nerror {res.achieved_error:.3e} (eps {args.eps:g}), "
          f"{res.evaluations} evaluations, route {res.route}, flags {res.flags}")
    return EXIT_OK if res.achieved_error <= args.eps else EXIT_MISS


def cmd_verify_density(args):
    pair = _load_pair(args.pair)
    rep = density_experiment(pair, args.samples, args.eps, _budget(args), seed=args.seed,
                             witness_samples=args.witness, witness_eps=args.witness_eps)
    w = rep.witness
    text = f"{rep.pair_id}: random hit rate {rep.hit_rate:.3f} over {rep.samples} (eps {rep.eps:g})"
    if w is not None:
        text += f"\nwitness hit rate {w.hit_rate:.3f} over {w.samples} (eps {w.eps:g})"
    _emit(args, rep.to_json(), text)
    return EXIT_OK


def cmd_transitivity(args):
    pair = _load_pair(args.pair)
    rng = SplitMix64(args.seed)
    cplx = pair.field == nk.COMPLEX
    U = _load_matrix(args.u) if args.u else rng.normal_matrix(pair.dim, pair.dim, cplx)
    V = _load_matrix(args.v) if args.v else rng.normal_matrix(pair.dim, pair.dim, cplx)
    res = transitivity_demo(pair, U, V, args.radius, _budget(args), rng=rng)
    _emit(args, res.to_json(), f"word {res.word}\ndistance {res.distance:.3e} (radius {args.radius:g})")
    return EXIT_OK if res.success else EXIT_MISS


def cmd_check_dependence(args):
    rng = SplitMix64(args.seed)
    cplx = args.field == nk.COMPLEX
    X = [rng.normal_matrix(args.n, 1, cplx).ravel() for _ in range(args.n + 1)]
    chk = dependence_invariant_check(X, trials=args.trials, rng=rng, tol=args.tol)
    _emit(args, chk.to_json(),
          f"{'pass' if chk.passed else 'FAIL'}: max residual {chk.max_residual:.3e} over {chk.trials} maps")
    return EXIT_OK if chk.passed else EXIT_ERROR


def _pair_target(text):
    try:
        u, v = (float(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 'u,v', got {text!r}") from exc
    return u, v


def build_parser() -> argparse.ArgumentParser:
    def global_flags(parser, suppress):
        # subcommands repeat the flags with suppressed defaults so a value given
        # before the subcommand is not overwritten
        kw = {"default": argparse.SUPPRESS} if suppress else {}
        parser.add_argument("--seed", type=int, **(kw or {"default": 0}))
        parser.add_argument("--tol", type=float, **(kw or {"default": 1e-9}))
        parser.add_argument("--json", action="store_true", help="print JSON instead of a summary", **kw)
        return parser

    common = global_flags(argparse.ArgumentParser(add_help=False), suppress=True)
    p = global_flags(argparse.ArgumentParser(prog="densegen", description=__doc__.splitlines()[0]), False)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_, parents=[common])
        sp.set_defaults(func=fn)
        return sp

    def search_opts(sp, budget="1e6"):
        sp.add_argument("--budget", default=budget, help="max evaluations")
        sp.add_argument("--max-length", type=int, default=64)
        sp.add_argument("--beam", type=int, default=1024)

    sp = add("generate", cmd_generate, "build the generator pair for dimension n")
    sp.add_argument("--n", "--dim", dest="n", type=int, required=True)
    sp.add_argument("--field", choices=[nk.REAL, nk.COMPLEX], default=nk.REAL)
    sp.add_argument("--out")

    sp = add("upsilon", cmd_upsilon, "Υ invariant and class of a bordered matrix")
    sp.add_argument("--matrix", required=True)

    sp = add("factor", cmd_factor, "sandwich factors S_L G1 S_R = G2 for same-fiber matrices")
    sp.add_argument("--g1", required=True)
    sp.add_argument("--g2", required=True)
    sp.add_argument("--positive", action="store_true")
    sp.add_argument("--out")

    sp = add("combine", cmd_combine, "combine two Υ points")
    sp.add_argument("--p", type=_point, required=True)
    sp.add_argument("--q", type=_point, required=True)
    sp.add_argument("--z", required=True)
    sp.add_argument("--real-positive", action="store_true")
    sp.add_argument("--realize", type=int, default=0, metavar="N", help="also build the (N+1)x(N+1) product")

    sp = add("plan", cmd_plan, "combine plan reaching a target Υ point")
    sp.add_argument("--mode", choices=sorted(_MODES), required=True)
    sp.add_argument("--target", type=_pair_target, required=True)
    sp.add_argument("--t", type=float, default=1e-5)
    sp.add_argument("--refine", action="store_true")
    sp.add_argument("--out")

    sp = add("approx", cmd_approx, "word approximating a target matrix")
    sp.add_argument("--pair", required=True, help="pair JSON or real:N / complex:N")
    sp.add_argument("--target", required=True)
    sp.add_argument("--eps", type=float, default=1e-2)
    search_opts(sp)
    sp.add_argument("--out")

    sp = add("verify-density", cmd_verify_density, "random-target and witness density suites")
    sp.add_argument("--pair", default="real:2")
    sp.add_argument("--samples", type=int, default=10)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--witness", type=int, default=100)
    sp.add_argument("--witness-eps", type=float, default=1e-2)
    search_opts(sp, budget="1e5")
    sp.add_argument("--out")

    sp = add("transitivity", cmd_transitivity, "word moving a U-ball point into a V-ball")
    sp.add_argument("--pair", default="real:3")
    sp.add_argument("--u")
    sp.add_argument("--v")
    sp.add_argument("--radius", type=float, default=0.5)
    search_opts(sp)
    sp.add_argument("--out")

    sp = add("check-dependence", cmd_check_dependence, "linear relation among n+1 vectors survives every map")
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--field", choices=[nk.REAL, nk.COMPLEX], default=nk.REAL)
    sp.add_argument("--trials", type=int, default=100)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DensegenError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
