"""Command-line driver.

Every subcommand prints a plain-text report of ``key=value`` blocks.  Exit
status: 0 when every certificate passes, 1 when one fails, 2 on usage or
input errors.  Options are resolved as defaults < ``--config`` file <
``FROSTKIT_<OPTION>`` environment variables < command-line flags.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from .decay import DecayParams, certify_cond1, certify_cond2, constant_C_alpha_s, reweight
from .dyadic import annulus_masses, gen_four_corner_cantor, gen_full_cube, gen_random_branching, lattice_net, set_workers
from .frostman import greedy_content, greedy_frostman
from .growth import OperatorOrderParams, bp1_sup, bp2_uniform
from .io import FormatError, read_cubeset, read_measure, write_cubeset, write_field, write_measure
from .pipeline import SET_KINDS, PipelineConfig, frostman_normalized, run_pipeline, sample_centers
from .report import failed, format_block, format_table
from .symbol import BUILTINS, builtin, classify, read_symbol
from .witness import Bump, grid_points, solve_divergence, study_from_fields, weak_divergence_residual

ENV_PREFIX = "FROSTKIT_"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


def read_config(path) -> dict:
    """``key=value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (p.strip() for p in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def env_config(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    return {
        k[len(ENV_PREFIX):].lower(): v
        for k, v in environ.items()
        if k.startswith(ENV_PREFIX) and len(k) > len(ENV_PREFIX)
    }


def _coerce(action: argparse.Action, value: str):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        v = value.strip().lower()
        if v not in ("1", "0", "true", "false", "yes", "no"):
            raise UsageError(f"option {action.dest}: expected a boolean, got {value!r}")
        return v in ("1", "true", "yes")
    conv = action.type or str
    try:
        if action.nargs in ("+", "*"):
            return [conv(p) for p in value.replace(",", " ").split()]
        return conv(value)
    except (TypeError, ValueError):
        raise UsageError(f"option {action.dest}: cannot parse {value!r}") from None


def _apply_overrides(sub: argparse.ArgumentParser, values: dict, origin: str, strict: bool) -> None:
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    updates = {}
    for key, value in values.items():
        if key not in actions:
            if strict:
                raise UsageError(f"{origin}: unknown option {key!r}")
            continue
        action = actions[key]
        updates[key] = _coerce(action, value)
        action.required = False
    sub.set_defaults(**updates)


# ---------------------------------------------------------------------------
# parser


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key=value file of option defaults")
    p.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for neighbour queries (-1: all cores)")
    p.add_argument("--report", help="write the report here instead of stdout")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frostkit", description="Frostman measures, growth certificates and divergence witnesses.")
    parser.add_argument("--version", action="version", version=f"frostkit {__version__}")
    subs = parser.add_subparsers(dest="command", metavar="COMMAND")
    subs.required = True
    common = _common()

    p = subs.add_parser("gen", parents=[common], help="generate a dyadic set")
    p.add_argument("--set", dest="set_kind", choices=SET_KINDS, default="four-corner")
    p.add_argument("--ratio", type=float, default=0.35, help="contraction ratio of the corner Cantor set")
    p.add_argument("--level", type=int, default=5, help="Cantor generation, or dyadic level for the other sets")
    p.add_argument("--dyadic-level", type=int, help="override the dyadic level of the Cantor approximation")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--out", help="cube file to write")

    p = subs.add_parser("frostman", parents=[common], help="greedy Frostman measure of a cube set")
    p.add_argument("--cubes", required=True, help="input cube file")
    p.add_argument("--s", type=float, required=True, help="growth exponent, 0 < s < n")
    p.add_argument("--no-normalize", action="store_true", help="skip the ball-growth normalisation")
    p.add_argument("--rtol", type=float, default=0.0, help="relative tolerance of the ball-ratio search")
    p.add_argument("--out", help="measure file to write")

    p = subs.add_parser("reweight", parents=[common], help="annular reweighting 2**(-k alpha) on A_k")
    p.add_argument("--measure", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--out", help="measure file to write")

    p = subs.add_parser("verify", parents=[common], help="growth certificates of a measure")
    p.add_argument("--measure", required=True)
    p.add_argument("--m", type=int, required=True, help="operator order, 0 < m < n")
    p.add_argument("--alpha", type=float, help="decay exponent; enables the two decay certificates")
    p.add_argument("--s", type=float, help="growth exponent (default n - m + alpha)")
    p.add_argument("--a", type=float, default=0.5, help="ball radius fraction a|x| (default 0.5)")
    p.add_argument("--threshold", type=float, help="origin-growth threshold (default C(alpha, s))")
    p.add_argument("--dini-threshold", type=float, help="Dini threshold (default cond2 bound * 2**-alpha / alpha)")
    p.add_argument("--delta", type=float, help="covering radius of the candidate net (default r_min)")
    p.add_argument("--samples", type=int, default=100, help="Dini sample centres")
    p.add_argument("--rtol", type=float, default=0.0)

    p = subs.add_parser("symbol", parents=[common], help="ellipticity and canceling diagnostics")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--builtin", choices=sorted(BUILTINS), default="gradient")
    src.add_argument("--file", help="symbol file")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--resolution", type=int, default=16, help="lattice resolution of the sphere samples")
    p.add_argument("--random", type=int, default=1024, help="random sphere samples")
    p.add_argument("--require", action="append", choices=("elliptic", "canceling"), default=None,
                   help="exit 1 unless the property holds (repeatable)")

    p = subs.add_parser("witness", parents=[common], help="Newtonian-gradient solution of div f = mu")
    p.add_argument("--measure", required=True)
    p.add_argument("--grid", type=int, default=64, help="evaluation grid cells per axis")
    p.add_argument("--bounds", type=float, nargs=2, metavar=("LO", "HI"), help="grid box (default: atom hull + 25%%)")
    p.add_argument("--rho", type=float, help="exclusion radius around atoms (default r_min)")
    p.add_argument("--bump-radius", type=float, help="also report the weak-form residual for a bump of this radius")
    p.add_argument("--bump-center", type=float, nargs="+", help="bump centre (default origin)")
    p.add_argument("--cells", type=int, default=256, help="quadrature cells per axis for the residual")
    p.add_argument("--out", help="field CSV to write")

    p = subs.add_parser("pipeline", parents=[common], help="set -> Frostman -> reweight -> certify -> witness")
    p.add_argument("--set", dest="set_kind", choices=SET_KINDS, default="four-corner")
    p.add_argument("--ratio", type=float, default=0.35)
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--s", type=float, help="must equal n - m + alpha when given")
    p.add_argument("--level", type=int, default=6)
    p.add_argument("--levels", type=int, nargs="+", help="several levels plus a sup|f| refinement study (>= 3)")
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--witness-grid", type=int, default=64)
    p.add_argument("--rtol", type=float, default=0.0)
    return parser


def _prescan(argv):
    """Subcommand and ``--config`` path, before required options are enforced."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    ns, _ = pre.parse_known_args(argv)
    return ns.command, ns.config


def parse_args(argv, environ=None) -> argparse.Namespace:
    parser = build_parser()
    command, config = _prescan(sys.argv[1:] if argv is None else argv)
    subs = parser._subparsers._group_actions[0].choices
    if command in subs:
        layers = []
        if config:
            layers.append((read_config(config), config, True))
        layers.append((env_config(environ), "environment", False))
        for values, origin, strict in layers:
            _apply_overrides(subs[command], values, origin, strict)
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# commands


def _certs_outcome(certs) -> tuple[int, list]:
    bad = [c for c in certs if failed(c)]
    lines = [f"certificate {c.kind} failed: sup={c.sup!r} radius={c.radius!r}" for c in bad]
    return (1 if bad else 0), lines


def cmd_gen(ns) -> tuple[str, int]:
    if ns.set_kind == "four-corner":
        S = gen_four_corner_cantor(ns.ratio, ns.level, n=ns.n, dyadic_level=ns.dyadic_level)
    elif ns.set_kind == "full-cube":
        S = gen_full_cube(ns.n, ns.level)
    else:
        S = gen_random_branching(np.random.default_rng(ns.seed), ns.n, ns.level)
    if ns.out:
        write_cubeset(ns.out, S)
    return format_block("generate", [
        ("set", ns.set_kind), ("n", S.n), ("generation", ns.level if ns.set_kind == "four-corner" else None),
        ("level", S.level), ("cubes", len(S)), ("side", S.side),
        ("seed", ns.seed if ns.set_kind == "random-branching" else None), ("out", ns.out),
    ]), 0


def cmd_frostman(ns) -> tuple[str, int]:
    S = read_cubeset(ns.cubes)
    content = greedy_content(S, ns.s)
    items = [("s", ns.s), ("cubes", len(S)), ("level", S.level), ("dyadic_content", content.value),
             ("witness_cubes", len(content.witness))]
    if ns.no_normalize:
        mu = greedy_frostman(S, ns.s)
        items.append(("normalized", False))
    else:
        mu, M, res, centers, delta = frostman_normalized(S, ns.s, rtol=ns.rtol)
        items += [("normalized", True), ("normalizer", M), ("delta", delta), ("candidates", len(centers)),
                  ("worst_center", res.center), ("worst_radius", res.radius)]
    items += [("atoms", len(mu)), ("mass", mu.total_mass), ("r_min", mu.r_min), ("out", ns.out)]
    if ns.out:
        write_measure(ns.out, mu)
    return format_block("frostman", items), 0


def _annulus_table(before, after) -> str:
    ks = sorted(set(before) | set(after))
    return format_table(["k", "mass_before", "mass_after"], [(k, before.get(k, 0.0), after.get(k, 0.0)) for k in ks])


def cmd_reweight(ns) -> tuple[str, int]:
    nu = read_measure(ns.measure)
    mu = reweight(nu, ns.alpha)
    if ns.out:
        write_measure(ns.out, mu)
    block = format_block("reweight", [
        ("alpha", ns.alpha), ("atoms", len(mu)), ("mass_before", nu.total_mass), ("mass_after", mu.total_mass),
        ("out", ns.out),
    ])
    return block + _annulus_table(annulus_masses(nu), annulus_masses(mu)), 0


def cmd_verify(ns) -> tuple[str, int]:
    mu = read_measure(ns.measure)
    op = OperatorOrderParams(mu.n, ns.m)
    if len(mu) == 0:
        raise ValueError("measure has no atoms")
    certs = []
    dp = None
    if ns.alpha is not None:
        s = op.codim + ns.alpha if ns.s is None else ns.s
        dp = DecayParams(ns.alpha, s, mu.n)
    b1 = bp1_sup(mu, op)
    if ns.threshold is not None:
        b1.threshold = ns.threshold
    elif dp is not None:
        b1.threshold = constant_C_alpha_s(dp.alpha, dp.s)
    if math.isinf(b1.sup):
        b1.extra["diverging_radius"] = b1.radius
    certs.append(b1)

    delta = mu.r_min if ns.delta is None else ns.delta
    centers = np.vstack([np.zeros((1, mu.n)), lattice_net(mu.positions, delta)])
    dini_threshold = ns.dini_threshold
    if dp is not None:
        certs.append(certify_cond1(mu, dp))
        c2 = certify_cond2(mu, dp, centers, delta, a=ns.a, rtol=ns.rtol)
        certs.append(c2)
        if dini_threshold is None and math.isfinite(c2.bound):
            dini_threshold = c2.bound * 2.0**-dp.alpha / dp.alpha
    notes = []
    try:
        pts = sample_centers(centers, ns.a, mu.r_min, ns.samples, ns.seed)
    except ValueError:
        notes.append("bp2 skipped: no candidate centre with a|x| >= r_min")
    else:
        certs.append(bp2_uniform(mu, op, pts, threshold=dini_threshold, a=ns.a))

    code, lines = _certs_outcome(certs)
    head = format_block("verify", [
        ("measure", ns.measure), ("n", mu.n), ("m", ns.m), ("atoms", len(mu)), ("r_min", mu.r_min),
        ("alpha", ns.alpha), ("s", None if dp is None else dp.s), ("delta", delta), ("seed", ns.seed),
    ] + [(f"note{i}", t) for i, t in enumerate(notes)])
    summary = format_block("summary", [("pass", code == 0), ("failed", " ".join(c.kind for c in certs if failed(c)) or None)])
    for line in lines:
        print(line, file=sys.stderr)
    return head + "".join(c.to_block() for c in certs) + summary, code


def cmd_symbol(ns) -> tuple[str, int]:
    if ns.file:
        A = read_symbol(ns.file)
        name = ns.file
    else:
        A = builtin(ns.builtin, ns.n)
        name = ns.builtin
    d = classify(A, resolution=ns.resolution, n_random=ns.random, seed=ns.seed)
    items = [
        ("symbol", name), ("n", A.n), ("m", A.m), ("dimE", A.dimE), ("dimF", A.dimF),
        ("samples", d.samples), ("seed", ns.seed), ("margin", d.margin), ("witness", d.witness),
        ("elliptic", d.elliptic), ("canceling_defect", d.defect), ("indeterminate", d.indeterminate),
        ("canceling", d.canceling),
    ]
    items += [(f"note{i}", t) for i, t in enumerate(d.notes)]
    missing = [r for r in (ns.require or []) if not getattr(d, r)]
    for r in missing:
        print(f"requirement {r} not met", file=sys.stderr)
    items.append(("requirements_met", not missing))
    return format_block("symbol", items), (1 if missing else 0)


def cmd_witness(ns) -> tuple[str, int]:
    mu = read_measure(ns.measure)
    if ns.bounds:
        lo, hi = np.full(mu.n, ns.bounds[0]), np.full(mu.n, ns.bounds[1])
    elif len(mu):
        lo, hi = mu.positions.min(axis=0), mu.positions.max(axis=0)
        pad = 0.25 * max(float(np.max(hi - lo)), 1.0)
        lo, hi = lo - pad, hi + pad
    else:
        lo, hi = np.full(mu.n, -1.0), np.full(mu.n, 1.0)
    wf = solve_divergence(mu, grid_points(lo, hi, ns.grid), rho=ns.rho)
    if ns.out:
        write_field(ns.out, wf.points, wf.values)
    items = [
        ("measure", ns.measure), ("atoms", len(mu)), ("mass", mu.total_mass if len(mu) else 0.0),
        ("grid", ns.grid), ("lo", lo), ("hi", hi), ("rho", wf.rho), ("points", len(wf.points)),
        ("skipped", wf.skipped), ("sup", wf.sup_norm), ("argmax", wf.argmax), ("out", ns.out),
    ]
    items += [(f"note{i}", t) for i, t in enumerate(wf.notes)]
    out = format_block("witness", items)
    if ns.bump_radius is not None:
        center = ns.bump_center or [0.0] * mu.n
        if len(center) != mu.n:
            raise ValueError(f"bump centre needs {mu.n} coordinates")
        r = weak_divergence_residual(mu, Bump(tuple(center), ns.bump_radius), ns.cells)
        out += format_block("weak_residual", [
            ("center", center), ("radius", ns.bump_radius), ("cells", ns.cells), ("h", r.h), ("rho", r.rho),
            ("flux", r.flux), ("source", r.source), ("residual", r.residual), ("relative", r.relative),
            ("excluded_bound", r.excluded_bound),
        ])
    return out, 0


def cmd_pipeline(ns) -> tuple[str, int]:
    levels = ns.levels or [ns.level]
    if ns.levels is not None and len(levels) < 3:
        raise UsageError("--levels needs at least 3 levels for a refinement study")
    parts, results = [], []
    for lvl in levels:
        cfg = PipelineConfig(
            set_kind=ns.set_kind, ratio=ns.ratio, level=lvl, n=ns.n, m=ns.m, alpha=ns.alpha, s=ns.s,
            a=ns.a, seed=ns.seed, samples=ns.samples, witness_grid=ns.witness_grid, rtol=ns.rtol,
        )
        res = run_pipeline(cfg)
        results.append(res)
        if len(levels) > 1:
            parts.append(f"# level {lvl}\n")
        parts.append(res.report())
    code, lines = _certs_outcome([c for r in results for c in r.certificates])
    if len(levels) >= 3:
        study = study_from_fields([(lvl, r.witness) for lvl, r in zip(levels, results)])
        parts.append(format_block("study", [
            ("trend", study.trend), ("spread", study.spread), ("bounded_below", study.bounded_tol),
            ("diverging_factor", study.diverging_factor),
        ]))
        parts.append(study.to_table())
        if study.trend == "diverging":
            lines.append("witness sup grows under refinement")
            code = 1
    for line in lines:
        print(line, file=sys.stderr)
    return "".join(parts), code


COMMANDS = {
    "gen": cmd_gen,
    "frostman": cmd_frostman,
    "reweight": cmd_reweight,
    "verify": cmd_verify,
    "symbol": cmd_symbol,
    "witness": cmd_witness,
    "pipeline": cmd_pipeline,
}


def main(argv=None, environ=None) -> int:
    try:
        ns = parse_args(argv, environ)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, OSError) as exc:
        print(f"frostkit: {exc}", file=sys.stderr)
        return 2
    try:
        set_workers(ns.threads)
        text, code = COMMANDS[ns.command](ns)
    except (UsageError, FormatError, ValueError, OverflowError, OSError) as exc:
        print(f"frostkit {ns.command}: {exc}", file=sys.stderr)
        return 2
    if ns.report:
        with open(ns.report, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
