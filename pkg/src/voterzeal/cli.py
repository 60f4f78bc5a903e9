"""Command-line interface.

Every command writes its outputs plus ``<command>.config.json`` (the fully
resolved arguments) into ``--out``; ``voterzeal --config FILE`` replays such
a file.  Exit codes: 0 success, 2 input error, 3 convergence error, 4 size
error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, _backend
from . import io as vio
from .discord import approximation_report, discord_approx, discord_exact, sample_pairs
from .dynamics import SimConfig, brute_force_stationary, simulate
from .equilibrium import SolverConfig, random_walk_all, solve_equilibrium
from .errors import InputError, VoterError
from .evaluation import baseline_report, compare_networks, evaluate
from .network import TRANSFORM_MODES, OpinionSpace, filter_network, load_network, stats, transform

log = logging.getLogger("voterzeal")


def _solver_args(p):
    p.add_argument("--tolerance", type=float, default=1e-10, help="sup-norm residual (default 1e-10)")
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--init", choices=("uniform", "zeros"), default="uniform")


def _solver_cfg(a) -> SolverConfig:
    return SolverConfig(a.tolerance, a.max_iters, a.init)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="voterzeal", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--config", help="replay a <command>.config.json written by an earlier run")
    ap.add_argument("--threads", type=int, default=1, help="worker cap; never changes results")
    ap.add_argument("--backend", choices=("auto", "compiled", "python"), default="auto")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("ingest", help="load TSVs, filter, normalize, write network.json")
    p.add_argument("edges")
    p.add_argument("labels")
    p.add_argument("--space", help="comma-separated opinion labels (default: inferred)")
    p.add_argument("--transform", choices=TRANSFORM_MODES)
    p.add_argument("--no-filter", action="store_true", help="write the raw, unfiltered network")
    p.add_argument("--out", required=True)

    p = sub.add_parser("transform", help="unweighted/undirected counterpart of a network file")
    p.add_argument("network")
    p.add_argument("--mode", choices=TRANSFORM_MODES, required=True)
    p.add_argument("--no-filter", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("solve", help="equilibrium opinion distributions")
    p.add_argument("network")
    _solver_args(p)
    p.add_argument("--walks", type=int, default=0, help="also run N absorbing walks per user")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("discord", help="pairwise discord probabilities")
    p.add_argument("network")
    p.add_argument("opinions")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="mode", action="store_const", const="exact")
    mode.add_argument("--approx", dest="mode", action="store_const", const="approx")
    mode.add_argument("--both", dest="mode", action="store_const", const="both")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--pairs", help="TSV file of id_i<TAB>id_j")
    src.add_argument("--all", action="store_true")
    src.add_argument("--sample", type=int)
    p.add_argument("--seed", type=int, default=0)
    _solver_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo voter dynamics")
    p.add_argument("network")
    p.add_argument("--burn-in", type=int, help="default 100*N*K steps")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--thinning", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pairs")
    p.add_argument("--out", required=True)

    p = sub.add_parser("bruteforce", help="exact stationary statistics of tiny networks")
    p.add_argument("network")
    p.add_argument("--pairs")
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="metrics report for a network, opinions and discord")
    p.add_argument("network")
    p.add_argument("opinions")
    p.add_argument("discord", nargs="?")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--tie-tol", type=float, default=0.0)
    p.add_argument("--compare", nargs="+", metavar="NAME=PATH",
                   help="also emit the comparison table for these networks")
    p.add_argument("--discord-mode", choices=("approx", "exact"), default="approx")
    p.add_argument("--max-pairs", type=int, default=1_000_000)
    p.add_argument("--out", required=True)

    p = sub.add_parser("compare", help="comparison table across network variants")
    p.add_argument("variants", nargs="+", metavar="NAME=PATH")
    p.add_argument("--discord-mode", choices=("approx", "exact"), default="approx")
    p.add_argument("--max-pairs", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    _solver_args(p)
    p.add_argument("--out", required=True)
    return ap


def _out(a) -> Path:
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo(a, out: Path) -> None:
    cfg = {k: v for k, v in vars(a).items() if k not in ("config", "verbose")}
    cfg["_version"] = __version__
    (out / f"{a.command}.config.json").write_text(json.dumps(cfg, indent=1, sort_keys=True) + "\n",
                                                  encoding="utf-8")


def _ingest_net(net, mode, no_filter):
    if mode:
        net = transform(net, mode)
    if no_filter:
        return net, 0
    before = net.n_nodes
    net = filter_network(net)
    return net, before - net.n_nodes


def cmd_ingest(a):
    out = _out(a)
    space = OpinionSpace.from_string(a.space) if a.space else None
    raw = load_network(a.edges, a.labels, space)
    net, removed = _ingest_net(raw, a.transform, a.no_filter)
    vio.write_network(net, out / "network.json")
    st = stats(net)
    st["removed_by_filter"] = removed
    print(json.dumps(st, indent=1))


def cmd_transform(a):
    out = _out(a)
    net = vio.read_network(a.network)
    if net.normalized:
        log.warning("input is normalized; symmetrization will sum normalized weights")
    net, removed = _ingest_net(net, a.mode, a.no_filter)
    vio.write_network(net, out / "network.json")
    st = stats(net)
    st["removed_by_filter"] = removed
    print(json.dumps(st, indent=1))


def cmd_solve(a):
    out = _out(a)
    net = vio.read_network(a.network)
    x = solve_equilibrium(net, _solver_cfg(a))
    vio.write_opinions(x, out / "opinions.csv")
    if a.walks:
        est = random_walk_all(net, a.walks, a.seed, threads=a.threads)
        vio.write_opinions(est, out / "walks.csv", {"walks": a.walks, "seed": a.seed})
    print(f"converged in {x.iterations} sweeps, residual {x.residual:.3e}")


def _pair_set(a, x):
    if a.pairs:
        return vio.read_pairs(a.pairs)
    if a.sample is not None:
        return sample_pairs(x, a.sample, a.seed)
    return "all"


def cmd_discord(a):
    out = _out(a)
    net = vio.read_network(a.network)
    x = vio.read_opinions(a.opinions, net.space)
    if set(x.ids) != {net.ids[u] for u in net.users}:
        raise InputError("opinion file ids do not match the network's users")
    pairs = _pair_set(a, x)
    mode = a.mode or "exact"
    if mode in ("exact", "both"):
        rho = discord_exact(net, x, pairs, _solver_cfg(a))
        vio.write_discord(rho, out / "discord.csv")
    if mode in ("approx", "both"):
        approx = discord_approx(x, pairs)
        vio.write_discord(approx, out / ("discord.csv" if mode == "approx" else "discord_approx.csv"))
    if mode == "both":
        rep = approximation_report(rho, approx)
        (out / "approximation.json").write_text(json.dumps(rep, indent=1) + "\n", encoding="utf-8")
    print(f"{mode} discord for {len(approx if mode == 'approx' else rho)} pairs")


def _sim_pairs(a, net):
    if a.pairs:
        return vio.read_pairs(a.pairs)
    return "all"


def cmd_simulate(a):
    out = _out(a)
    net = vio.read_network(a.network)
    cfg = SimConfig(a.burn_in, a.samples, a.thinning, a.seed)
    st = simulate(net, cfg, _sim_pairs(a, net))
    vio.write_sim(st, net.space.labels, out / "sim_nodes.csv", out / "sim_pairs.csv")
    print(f"{st.samples} samples after {st.meta['burn_in']} burn-in steps")


def cmd_bruteforce(a):
    out = _out(a)
    net = vio.read_network(a.network)
    st = brute_force_stationary(net, _sim_pairs(a, net))
    vio.write_sim(st, net.space.labels, out / "exact_nodes.csv", out / "exact_pairs.csv")
    print(f"{st.meta['states']} states, power iteration residual {st.meta['residual']:.2e}")


def _variants(specs):
    out = []
    for spec in specs:
        name, sep, path = spec.partition("=")
        if not sep or not name or not path:
            raise InputError(f"variant must look like NAME=PATH, got {spec!r}")
        out.append((name, vio.read_network(path)))
    return out


def _write_table(rows, out: Path):
    vio.write_table(rows, out / "table.csv")
    keys = list(rows[0])
    lines = ["".join(f"{k:>16}" for k in keys)]
    for r in rows:
        lines.append("".join(f"{v:>16}" if isinstance(v, str) else
                             (f"{'-':>16}" if v is None else f"{v:16.4f}") for v in r.values()))
    (out / "table.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))


def cmd_evaluate(a):
    out = _out(a)
    net = vio.read_network(a.network)
    x = vio.read_opinions(a.opinions, net.space)
    rho = vio.read_discord(a.discord, x) if a.discord else None
    rep = evaluate(net, x, rho, a.seed, a.bins, a.tie_tol)
    doc = rep.to_dict()
    try:
        doc["zealot_baseline"] = baseline_report(net, x, a.seed)
    except VoterError as exc:
        doc["zealot_baseline"] = {"error": str(exc)}
    (out / "metrics.json").write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    (out / "metrics.txt").write_text(rep.to_text(), encoding="utf-8")
    h = rep.histograms
    vio.write_histogram(out / "hist_own.csv", h["edges"], h["own"])
    vio.write_histogram(out / "hist_other.csv", h["edges"], h["other"])
    if "discord_within" in h:
        vio.write_histogram(out / "hist_discord_within.csv", h["discord_edges"], h["discord_within"])
        vio.write_histogram(out / "hist_discord_cross.csv", h["discord_edges"], h["discord_cross"])
    print(rep.to_text(), end="")
    if a.compare:
        rows = compare_networks(_variants(a.compare), SolverConfig(), a.discord_mode,
                                a.max_pairs, a.seed)
        _write_table(rows, out)


def cmd_compare(a):
    out = _out(a)
    rows = compare_networks(_variants(a.variants), _solver_cfg(a), a.discord_mode,
                            a.max_pairs, a.seed)
    _write_table(rows, out)


COMMANDS = {
    "ingest": cmd_ingest, "transform": cmd_transform, "solve": cmd_solve,
    "discord": cmd_discord, "simulate": cmd_simulate, "bruteforce": cmd_bruteforce,
    "evaluate": cmd_evaluate, "compare": cmd_compare,
}


def _from_config(path) -> argparse.Namespace:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    cfg.pop("_version", None)
    if cfg.get("command") not in COMMANDS:
        raise InputError(f"config {path} names no known command")
    return argparse.Namespace(config=None, verbose=False, **cfg)


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if a.config:
            a = _from_config(a.config)
        elif a.command is None:
            parser.print_help()
            return 2
        if a.backend != "auto":
            _backend.use(a.backend)
        _echo(a, _out(a))
        COMMANDS[a.command](a)
    except VoterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ImportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
