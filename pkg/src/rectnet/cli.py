"""Command-line entry point.

Every subcommand writes its outputs plus ``manifest.json`` into ``--out``.
Flags may also be set through environment variables named ``RECTNET_<FLAG>``
(``RECTNET_SEED``, ``RECTNET_T_MAX``, ...); an explicit flag wins.
Exit status: 0 success, 1 runtime failure (manifest marked failed), 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import traceback
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import io as rio

COMMANDS = ["simulate-network", "simulate-rectangles", "spine", "stick", "couple", "density",
            "pde", "stats", "converge", "validate"]
ENV_PREFIX = "RECTNET_"


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    t_max: float | None = None
    events_max: int | None = None
    replicates: int | None = None
    policy: str = "right-only"
    tol: float = 1e-12
    bins: int = 64
    out: str = "out"
    format: str = "csv"
    quick: bool = False
    extra: dict = field(default_factory=dict)


# --- parsing ---------------------------------------------------------------------------

def _grid(text: str) -> np.ndarray:
    """``a:b:step`` inclusive of ``b`` (up to rounding)."""
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be a:b:step, got {text!r}")
    if step <= 0 or b < a:
        raise argparse.ArgumentTypeError("grid needs step > 0 and b >= a")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return a + step * np.arange(n)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common(p: argparse.ArgumentParser, fmt=("csv", "jsonl")) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--format", choices=fmt, default=fmt[0])


def build_parser() -> argparse.ArgumentParser:
    from .planar import BranchPolicy

    ap = argparse.ArgumentParser(prog="rectnet", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-network", help="geometric network; branch records or SVG")
    _common(p, ("csv", "jsonl", "svg"))
    p.add_argument("--t-max", type=float)
    p.add_argument("--events-max", type=int)
    p.add_argument("--policy", choices=[b.value for b in BranchPolicy], default="right-only")
    p.add_argument("--dt", type=float, default=0.01, help="time step of the two-sided simulation")

    p = sub.add_parser("simulate-rectangles", help="rectangle process; rectangles present at t-max")
    _common(p)
    p.add_argument("--t-max", type=float, required=False)

    p = sub.add_parser("spine", help="spine diagnostics")
    _common(p)
    p.add_argument("--mode", choices=["freeze", "u", "many-to-one", "harmonic"], default="freeze")
    p.add_argument("--L", type=float, default=10.0)
    p.add_argument("--ell", type=float, default=10.0)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--t-max", type=float, default=3.0, help="horizon of the many-to-one check")
    p.add_argument("--replicates", type=int, default=100_000)
    p.add_argument("--grid", type=_grid, default=None, help="time grid a:b:step (freeze mode)")
    p.add_argument("--x-max", type=float, default=5.0)
    p.add_argument("--step", type=float, default=1e-3)

    p = sub.add_parser("stick", help="stick freezing-time survival")
    _common(p)
    p.add_argument("--L", type=float, default=10.0)
    p.add_argument("--replicates", type=int, default=100_000)
    p.add_argument("--grid", type=_grid, default=None)

    p = sub.add_parser("couple", help="coupled spine / two-stick paths")
    _common(p)
    p.add_argument("--L", type=float, default=5.0)
    p.add_argument("--ell", type=float, default=3.0)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--replicates", type=int, default=10_000)

    p = sub.add_parser("density", help="stationary density on a grid")
    _common(p)
    p.add_argument("--grid", type=_grid, required=True)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--nm", type=int, nargs=2, metavar=("N", "M"), help="evaluate g_{n,m} instead of g")

    p = sub.add_parser("pde", help="characteristics solver for the immigration layers")
    _common(p)
    p.add_argument("--which", choices=["p", "m"], default="p")
    p.add_argument("--ell", type=float, default=1.0)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--replicates", type=int, default=0, help="Monte Carlo replicates (0 skips)")

    p = sub.add_parser("stats", help="genealogy and goodness-of-fit statistics")
    _common(p)
    p.add_argument("--t-max", type=float, default=30.0)
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--bins", type=int, default=64)

    p = sub.add_parser("converge", help="L2 convergence of <Z_t,f>/t^2")
    _common(p)
    p.add_argument("--t-grid", type=_floats, default=[10.0, 20.0, 40.0, 80.0])
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--f", choices=["h", "one"], default="h")

    p = sub.add_parser("validate", help="run the acceptance suite")
    p.add_argument("--out", default="out")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--only", type=lambda s: [int(x) for x in s.split(",")], default=None,
                   help="comma-separated criterion numbers")
    return ap


def _env_defaults(parser: argparse.ArgumentParser, command: str) -> None:
    """Push RECTNET_* environment values into the subparser defaults."""
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices[command]
    for act in sub._actions:
        if not act.option_strings or act.dest == "help":
            continue
        name = ENV_PREFIX + act.dest.upper()
        if name not in os.environ:
            continue
        raw = os.environ[name]
        if isinstance(act, argparse._StoreTrueAction):
            val = raw.lower() in ("1", "true", "yes")
        else:
            try:
                val = act.type(raw) if act.type else raw
            except (ValueError, argparse.ArgumentTypeError) as e:
                raise UsageError(f"{name}: {e}")
            if act.choices is not None and val not in act.choices:
                raise UsageError(f"{name}: {raw!r} not in {list(act.choices)}")
        sub.set_defaults(**{act.dest: val})


def parse(argv) -> argparse.Namespace:
    parser = build_parser()
    ns, _ = parser.parse_known_args(argv)  # find the command first
    _env_defaults(parser, ns.command)
    return parser.parse_args(argv)


def _config(ns: argparse.Namespace) -> RunConfig:
    d = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in vars(ns).items()}
    known = {f for f in RunConfig.__dataclass_fields__ if f != "extra"}
    base = {k: d.pop(k) for k in list(d) if k in known}
    return RunConfig(**base, extra=d)


# --- commands ---------------------------------------------------------------------------

def _check_positive(name, v, allow_zero=False):
    if v is None:
        return
    if v < 0 or (v == 0 and not allow_zero):
        raise UsageError(f"--{name} must be {'>= 0' if allow_zero else '> 0'}")


def cmd_simulate_network(ns, out: Path) -> list[Path]:
    from . import planar, svg

    if ns.t_max is None and ns.events_max is None:
        raise UsageError("simulate-network needs --t-max or --events-max")
    _check_positive("t-max", ns.t_max)
    _check_positive("events-max", ns.events_max)
    policy = planar.BranchPolicy(ns.policy)
    kw = {} if policy is planar.BranchPolicy.RIGHT_ONLY else {"dt": ns.dt}
    state = planar.init(ns.seed, policy, **kw)
    planar.advance(state, n_events=ns.events_max, t_max=ns.t_max)
    t = state.horizon if ns.t_max is None else min(ns.t_max, state.horizon)
    if ns.format == "svg":
        path = out / "network.svg"
        svg.render_svg(state, t, path)
        return [path]
    recs = planar.branch_dump(state)
    if ns.format == "jsonl":
        return [rio.write_jsonl(out / "branches.jsonl", recs)]
    header = ["label", "birth", "branch_time", "inact_time", "origin_x", "origin_y", "dir"]
    rows = [[r["label"], r["birth"], r["branch_time"], "" if r["inact_time"] is None else r["inact_time"],
             r["origin"][0], r["origin"][1], r["dir"]] for r in recs]
    comments = ["units: times and coordinates in length units (unit growth speed)",
                f"policy: {ns.policy}", f"horizon: {rio.fmt(float(t))}",
                "empty inact_time: tip still active"]
    return [rio.write_csv(out / "branches.csv", header, rows, comments)]


def cmd_simulate_rectangles(ns, out: Path) -> list[Path]:
    from . import rectangles as rp

    if ns.t_max is None:
        raise UsageError("simulate-rectangles needs --t-max")
    _check_positive("t-max", ns.t_max)
    pop = rp.simulate(ns.t_max, ns.seed)
    recs = rp.rect_dump(pop, ns.t_max)
    if ns.format == "jsonl":
        return [rio.write_jsonl(out / "rectangles.jsonl", recs)]
    header = ["label", "L", "l", "birth", "freeze", "age_at_t"]
    blank = lambda v: "inf" if v is None else v
    rows = [[r["label"], blank(r["L"]), blank(r["l"]), r["birth"],
             "" if r["freeze"] is None else r["freeze"], blank(r["age_at_t"])] for r in recs]
    comments = ["units: lengths and times in length units", f"t: {rio.fmt(float(ns.t_max))}",
                "empty freeze: not frozen by t"]
    return [rio.write_csv(out / "rectangles.csv", header, rows, comments)]


def _survival_csv(path, s, comments) -> Path:
    rows = zip(s.t.tolist(), s.p.tolist(), s.lo.tolist(), s.hi.tolist())
    return rio.write_csv(path, ["t", "survival", "wilson_lo", "wilson_hi"], rows,
                         comments + [f"paths: {s.n}", "interval: Wilson 95%"])


def cmd_spine(ns, out: Path) -> list[Path]:
    from . import spine

    if ns.mode == "u":
        u = spine.volterra_u(ns.x_max, ns.step)
        rows = zip(u.x.tolist(), u.closed.tolist(), u.iterated.tolist())
        return [rio.write_csv(out / "u.csv", ["x", "u_closed", "u_series"], rows,
                              [f"step: {rio.fmt(float(ns.step))}", f"series terms: {u.iterations}",
                               f"sup difference: {rio.fmt(u.sup_diff)}"])]
    _check_positive("replicates", ns.replicates)
    if ns.mode == "freeze":
        grid = ns.grid if ns.grid is not None else np.arange(0.0, 4 * ns.L + 1e-9, 1.0)
        s = spine.freezing_tail(ns.L, grid, ns.replicates, "spine", ell=ns.ell, seed=ns.seed)
        return [_survival_csv(out / "spine_survival.csv", s,
                              [f"start: L={rio.fmt(ns.L)} l={rio.fmt(ns.ell)} a=0"])]
    if ns.mode == "harmonic":
        f = lambda x: np.ones_like(np.asarray(x, dtype=float))
        st = spine.harmonic_moment(ns.L, f, ns.replicates, seed=ns.seed)
        ch = spine.kernel_chain_moment(ns.L, f, ns.replicates, seed=ns.seed)
        return [rio.write_json(out / "harmonic.json", {"L": ns.L, "stick": asdict(st), "chain": asdict(ch)})]
    z = spine.SpineState(ns.L, ns.ell, ns.a)
    res = {}
    for name, f in [("h", lambda L, l, a, fz: L * l),
                    ("h_exp", lambda L, l, a, fz: L * l * np.exp(-L - l))]:
        r = spine.many_to_one_check(z, ns.t_max, f, ns.replicates, seed=ns.seed)
        res[name] = {**asdict(r), "pooled_se": r.pooled_se, "z": r.z, "agrees": r.agrees(3.0)}
    return [rio.write_json(out / "many_to_one.json", {"z": [ns.L, ns.ell, ns.a], "t": ns.t_max, **res})]


def cmd_stick(ns, out: Path) -> list[Path]:
    from . import spine

    _check_positive("replicates", ns.replicates)
    grid = ns.grid if ns.grid is not None else np.arange(0.0, 8 * ns.L + 1e-9, 1.0)
    s = spine.freezing_tail(ns.L, grid, ns.replicates, "stick", seed=ns.seed)
    return [_survival_csv(out / "stick_survival.csv", s, [f"start: L={rio.fmt(ns.L)} a=0"])]


def cmd_couple(ns, out: Path) -> list[Path]:
    from . import spine

    _check_positive("replicates", ns.replicates)
    r = spine.couple_many(ns.L, ns.ell, ns.a, ns.replicates, seed=ns.seed)
    return [rio.write_json(out / "coupling.json", {"start": [ns.L, ns.ell, ns.a], **r})]


def cmd_density(ns, out: Path) -> list[Path]:
    from . import series

    g = ns.grid
    LL, EE = np.meshgrid(g, g, indexing="ij")
    if ns.nm:
        vals = series.g_nm(ns.nm[0], ns.nm[1], LL, EE, tol=ns.tol)
        name = f"g_{ns.nm[0]}_{ns.nm[1]}"
    else:
        vals = series.density_g(LL, EE, tol=ns.tol)
        name = "g"
    rows = zip(LL.ravel().tolist(), EE.ravel().tolist(), np.asarray(vals).ravel().tolist())
    comments = [f"density: {name}", f"series tolerance: {rio.fmt(ns.tol)}",
                f"Pi(1): {rio.fmt(series.pi_one())}"]
    if ns.format == "jsonl":
        return [rio.write_jsonl(out / "density.jsonl", ({"L": a, "l": b, name: v} for a, b, v in rows))]
    return [rio.write_csv(out / "density.csv", ["L", "l", name], rows, comments)]


def cmd_pde(ns, out: Path) -> list[Path]:
    from . import pde

    _check_positive("t-max", ns.t_max)
    if ns.step > 1e-3 * ns.t_max:
        raise UsageError("--step must be <= 1e-3 * t-max")
    tab = pde.characteristics_solve(ns.which, ns.t_max, ns.step, ell=ns.ell if ns.which == "m" else None)
    rows = zip(tab.a.tolist(), tab.density.tolist())
    comments = [f"law: {ns.which}" + (f" at l={rio.fmt(tab.ell)}" if ns.which == "m" else ""),
                f"t: {rio.fmt(float(ns.t_max))}", f"step: {rio.fmt(tab.dt)}",
                f"atom: {'none' if tab.atom_at is None else rio.fmt(float(tab.atom_at))} "
                f"mass {rio.fmt(tab.atom_mass)}",
                f"max error vs closed form: {rio.fmt(tab.max_err)}"]
    paths = [rio.write_csv(out / f"{ns.which}_density.csv", ["a", "density"], rows, comments)]
    if ns.replicates:
        r = pde.mc_layer_validate(ns.t_max, ns.replicates, seed=ns.seed)
        paths.append(rio.write_json(out / "layers.json", asdict(r)))
    return paths


def cmd_stats(ns, out: Path) -> list[Path]:
    from . import analytics, series
    from . import rectangles as rp

    _check_positive("t-max", ns.t_max)
    _check_positive("replicates", ns.replicates)
    if ns.bins < 2:
        raise UsageError("--bins must be >= 2")
    seeds = analytics.replicate_seeds(ns.seed, ns.replicates)
    L, ell, active = analytics.pooled_frozen(ns.t_max, seeds)
    edges = series.geometric_edges(bins=ns.bins)
    ks_L = analytics.gof_test(L, series.cdf_L)
    ks_l = analytics.gof_test(ell, series.cdf_ell)
    chi = analytics.chi_square_g(L, ell, edges)
    tree = analytics.tree_stats(rp.simulate(ns.t_max, seeds[0]), ns.t_max)
    report = {
        "t": ns.t_max, "replicates": ns.replicates, "frozen": int(L.size), "active": active,
        "ks_L": asdict(ks_L), "ks_l": asdict(ks_l),
        "chi_square": {"statistic": chi.statistic, "dof": chi.dof, "pvalue": chi.pvalue,
                       "edges": edges.tolist()},
    }
    paths = [rio.write_json(out / "stats.json", report)]
    rows = zip(tree.generations.tolist(), tree.nodes.tolist(), tree.leaves.tolist())
    paths.append(rio.write_csv(out / "generations.csv", ["generation", "nodes", "leaves"], rows,
                               [f"first replicate at t={rio.fmt(float(ns.t_max))}"]))
    return paths


def cmd_converge(ns, out: Path) -> list[Path]:
    from . import analytics, series
    from . import rectangles as rp

    f, limit = (rp.h, 0.5) if ns.f == "h" else (rp.one, series.pi_one() / 2)
    rep = analytics.convergence_study(f, ns.t_grid, ns.replicates, limit, seed=ns.seed)
    rows = zip(rep.t.tolist(), rep.mean.tolist(), rep.mse.tolist(), rep.mse_se.tolist())
    return [rio.write_csv(out / "convergence.csv", ["t", "mean", "mse", "mse_se"], rows,
                          [f"f: {ns.f}", f"limit: {rio.fmt(limit)}", f"replicates: {ns.replicates}",
                           f"log-log slope: {rio.fmt(rep.slope)}"])]


def cmd_validate(ns, out: Path) -> tuple[list[Path], list]:
    from . import acceptance

    results = []
    for i, fn in enumerate(acceptance.ALL, start=1):
        if ns.quick and i not in acceptance.QUICK:
            continue
        if ns.only and i not in ns.only:
            continue
        r = fn(quick=ns.quick)
        print(r.line(), flush=True)
        results.append(r)
    path = rio.write_json(out / "validation.json",
                          [{"criterion": r.number, "title": r.title, "passed": r.passed,
                            "summary": r.summary} for r in results])
    return [path], results


HANDLERS = {
    "simulate-network": cmd_simulate_network,
    "simulate-rectangles": cmd_simulate_rectangles,
    "spine": cmd_spine,
    "stick": cmd_stick,
    "couple": cmd_couple,
    "density": cmd_density,
    "pde": cmd_pde,
    "stats": cmd_stats,
    "converge": cmd_converge,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        ns = parse(argv)
    except UsageError as e:
        print(f"rectnet: error: {e}", file=sys.stderr)
        return 2
    except SystemExit as e:  # argparse usage errors and --help
        return int(e.code or 0)
    out = Path(ns.out)
    cfg = _config(ns)
    try:
        manifest = rio.Manifest(out, asdict(cfg), __version__)
    except OSError as e:
        print(f"rectnet: cannot write to {out}: {e}", file=sys.stderr)
        return 1
    outputs: list[Path] = []
    try:
        if ns.command == "validate":
            outputs, results = cmd_validate(ns, out)
            failed = [r.number for r in results if not r.passed]
            if failed:
                manifest.finalize(outputs, "failed", f"criteria failed: {failed}")
                return 1
        else:
            outputs = HANDLERS[ns.command](ns, out)
    except UsageError as e:
        manifest.finalize(outputs, "failed", f"usage: {e}")
        print(f"rectnet: error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        manifest.finalize(outputs, "failed", "".join(traceback.format_exception_only(type(e), e)).strip())
        traceback.print_exc()
        return 1
    manifest.finalize(outputs)
    for p in outputs:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
