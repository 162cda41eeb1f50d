"""``spdtnet`` command line."""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (config_dict, config_hash, default_output_dir, disease_params,
                     graphgen_block, graphgen_params, load_config)
from .contact import read_network, write_network


def header_meta(command: str, cfg_hash: str, seed) -> dict:
    return {"tool": "spdtnet", "version": __version__, "command": command,
            "config_hash": cfg_hash, "seed": seed}


def header(command: str, cfg_hash: str, seed) -> list[str]:
    return [f"# {k} = {v}" for k, v in header_meta(command, cfg_hash, seed).items()]


def write_table(path: Path, head: list[str], columns: list[str], rows) -> None:
    lines = list(head) + ["# columns = " + ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "" if np.isnan(v) else f"{float(v):.10g}"
    return str(v)


def _args_hash(args: argparse.Namespace, cp) -> str:
    """Hash of the resolved options; input files count by content, not by path."""
    d = {}
    for k, v in sorted(vars(args).items()):
        if k in ("func", "out", "out_dir", "jobs", "config"):
            continue
        if k in ("network", "updates") and v:
            v = _sha256(Path(v))
        d[k] = v
    return config_hash({"args": json.dumps(d, sort_keys=True, default=str), **_content_config(cp)})


def _content_config(cp) -> dict:
    """Resolved config with the input network named by content and the output dir dropped."""
    d = config_dict(cp)
    pipe = dict(d.get("pipeline", {}))
    pipe.pop("output_dir", None)
    if pipe.get("network") and Path(pipe["network"]).is_file():
        pipe["network"] = _sha256(Path(pipe["network"]))
    d["pipeline"] = pipe
    return d


def _out_dir(args, cp) -> Path:
    return Path(args.out_dir) if getattr(args, "out_dir", None) else default_output_dir(cp)


# --------------------------------------------------------------------------
# subcommands

def cmd_ingest(args, cp) -> list[Path]:
    from .ingest import VisitExtractionConfig, build_network_variants, extract_network, read_updates
    cfg = VisitExtractionConfig(args.radius_m, args.max_gap_s, args.delta_s, args.min_nbr_updates)
    base = extract_network(read_updates(args.updates), cfg)
    variants = build_network_variants(base)
    out = _out_dir(args, cp)
    out.mkdir(parents=True, exist_ok=True)
    h = _args_hash(args, cp)
    written = []
    rows = []
    for name, net in variants.items():
        p = out / f"{name}.links"
        write_network(net, p, header_meta("ingest", h, "none"))
        written.append(p)
        st = net.stats()
        rows.append((name, st["links"], st["connected_nodes"], st["isolated_nodes"],
                     st["link_density"]))
    stats = out / "variant_stats.csv"
    write_table(stats, header("ingest", h, "none"),
                ["variant", "links", "connected_nodes", "isolated_nodes", "link_density"], rows)
    return written + [stats]


def cmd_generate(args, cp) -> list[Path]:
    from .graphgen import ADNParams, generate_adn_baseline, generate_network
    h = _args_hash(args, cp)
    meta = header_meta("generate", h, args.seed)
    if args.baseline == "adn":
        params = ADNParams(N=args.N or 10_000, T_days=args.days if args.days is not None else 7,
                           m=args.adn_m)
        net = generate_adn_baseline(params, args.seed)
        meta["baseline"] = "adn"
        meta.update({f"param_{k}": v for k, v in params.__dict__.items()})
    else:
        params = graphgen_params(cp, N=args.N, T_days=args.days, degree_mode=args.mode)
        res = generate_network(params, args.seed, return_details=True)
        net = res.network
        meta.update({f"param_{k}": v for k, v in params.to_dict().items()})
        if res.attractiveness is not None:
            lam = res.attractiveness
            meta.update(lambda_min=f"{lam.min():.6g}", lambda_mean=f"{lam.mean():.6g}",
                        lambda_max=f"{lam.max():.6g}")
        meta["active_copies"] = res.copies
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_network(net, out, meta)
    return [out]


def cmd_fit(args, cp) -> list[Path]:
    from .fitting import SPDTGraphModel
    net = read_network(args.network)
    model = SPDTGraphModel(degree_mode=args.mode, paired_delays=args.paired).fit(net)
    h = _args_hash(args, cp)
    body = "\n".join(header("fit", h, "none")) + "\n"
    body += "# sample_counts = " + json.dumps(model.samples_.counts(), sort_keys=True) + "\n"
    body += graphgen_block(model.fitted_params_)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(body)
    return [out]


def _simulate(net, cp, args, vaccinated=None, hooks_factory=None):
    from .epidemic import monte_carlo
    params = disease_params(cp)
    sim = cp["simulation"]
    horizon = args.horizon_days if args.horizon_days is not None else (
        int(sim["horizon_days"]) if sim["horizon_days"] else None)
    reps = args.replicates if args.replicates is not None else sim.getint("replicates")
    count = args.seed_count if args.seed_count is not None else sim.getint("seed_count")
    jobs = args.jobs if args.jobs is not None else sim.getint("jobs")
    return params, monte_carlo(net, params, horizon, reps, args.seed, seed_count=count,
                               vaccinated=vaccinated, hooks_factory=hooks_factory, jobs=jobs)


def _write_sim_outputs(out: Path, prefix: str, head, params, mc) -> list[Path]:
    from .epidemic import reproduction_rate
    series = mc.mean_series()
    days, r_vals, mean_r = reproduction_rate(series["prevalence"], params.tau_mean)
    r_by_day = dict(zip(days.tolist(), r_vals.tolist()))
    daily = out / f"{prefix}daily.csv"
    write_table(daily, head, ["day", "I_n", "I_p", "I_a", "R_t"],
                [(d, series["new_infections"][d], series["prevalence"][d],
                  series["cumulative"][d], r_by_day.get(d, float("nan")))
                 for d in range(len(series["prevalence"]))])
    reps = out / f"{prefix}outbreaks.csv"
    write_table(reps, head, ["replicate_seed", "outbreak_size", "total_infected", "vaccinated"],
                [(r.seed, r.outbreak_size, r.total_infected, r.vaccinated) for r in mc.runs])
    summary = out / f"{prefix}summary.csv"
    q = mc.quantiles()
    write_table(summary, head, ["replicates", "mean_outbreak", "q05", "median", "q95", "mean_R"],
                [(len(mc.runs), mc.mean_outbreak, q[0], q[1], q[2], mean_r)])
    return [daily, reps, summary]


def cmd_simulate(args, cp) -> list[Path]:
    net = read_network(args.network)
    params, mc = _simulate(net, cp, args)
    out = _out_dir(args, cp)
    return _write_sim_outputs(out, "", header("simulate", _args_hash(args, cp), args.seed),
                              params, mc)


def cmd_metrics(args, cp) -> list[Path]:
    from .netmetrics import (TemporalPathConfig, daily_aggregates, degree_and_clustering,
                             log_binned_histogram, static_projection, temporal_centralities)
    from .config import exposure_params
    net = read_network(args.network)
    m = cp["metrics"]
    threshold = args.threshold if args.threshold is not None else m.getfloat("threshold")
    b = 1.0 / (60.0 * m.getfloat("r_minutes"))
    params = exposure_params(cp)
    proj = static_projection(net, params, b, threshold)
    nd = degree_and_clustering(proj)
    out = _out_dir(args, cp)
    head = header("metrics", _args_hash(args, cp), "none")
    nodes = out / "node_metrics.csv"
    write_table(nodes, head, ["node", "in_degree", "out_degree", "degree", "clustering"],
                [(v, nd.in_degree[v], nd.out_degree[v], nd.degree[v], nd.clustering[v])
                 for v in range(net.node_count)])
    edges, counts = log_binned_histogram(nd.degree)
    hist = out / "degree_histogram.csv"
    write_table(hist, head, ["bin_lo", "bin_hi", "count"],
                [(int(edges[i]), int(edges[i + 1]) - 1, counts[i]) for i in range(len(counts))])
    daily = out / "daily_metrics.csv"
    agg = daily_aggregates(net, params, b, threshold)
    write_table(daily, head, ["day", "active_nodes", "mean_degree", "mean_clustering"],
                [(a.day, a.active_nodes, a.mean_degree, a.mean_clustering) if a is not None
                 else (d, 0, float("nan"), float("nan")) for d, a in enumerate(agg)])
    written = [nodes, hist, daily]
    temporal = args.temporal or m.getboolean("temporal")
    if temporal:
        srcs = args.sources if args.sources is not None else (
            int(m["sources"]) if m["sources"] else None)
        sources = None
        if srcs is not None and srcs < net.node_count:
            sources = np.sort(np.random.default_rng(args.seed).choice(net.node_count, srcs,
                                                                      replace=False))
        tc = temporal_centralities(net, TemporalPathConfig(), sources)
        tpath = out / "temporal_centrality.csv"
        write_table(tpath, header("metrics", _args_hash(args, cp), args.seed),
                    ["node", "betweenness", "closeness"],
                    [(v, tc.betweenness[v], tc.closeness[v]) for v in range(net.node_count)])
        written.append(tpath)
    return written


def cmd_vaccinate(args, cp) -> list[Path]:
    from .vaccinate import RingVaccination, apply_mass_vaccination, efficiency, make_ranker
    net = read_network(args.network)
    v = cp["vaccination"]
    strategy = (args.strategy or v["strategy"]).lower()
    mode = args.mode or v["mode"]
    P = args.P if args.P is not None else v.getfloat("P")
    F = args.F if args.F is not None else v.getfloat("F")
    beta = args.beta if args.beta is not None else v.getfloat("beta")
    window = args.window_days if args.window_days is not None else v.getint("window_days")
    use_indirect = v.getboolean("use_indirect")
    scores = None
    if strategy != "rv":
        kw = {"window_days": window, "use_indirect": use_indirect}
        if strategy in ("imv", "imve"):
            kw["beta"] = beta
        elif strategy == "imvt":
            kw["beta0"] = beta
        elif strategy == "av":
            kw["random_state"] = args.seed
        scores = make_ranker(strategy, **kw).fit(net).scores_
    out = _out_dir(args, cp)
    head = header("vaccinate", _args_hash(args, cp), args.seed)
    _, base = _simulate(net, cp, args)
    if mode == "mass":
        plan = apply_mass_vaccination(net.node_count, scores, P, F, args.seed)
        params, mc = _simulate(net, cp, args, vaccinated=plan.vaccinated)
        vac_path = out / "vaccinated.csv"
        write_table(vac_path, head + [f"# shortfall = {plan.shortfall}"], ["node"],
                    [(int(x),) for x in plan.vaccinated])
    elif mode == "ring":
        start = v.getint("start_day")
        full = v.getboolean("full_knowledge")

        def factory(seed):
            return [RingVaccination(net, P, F, scores, start_day=start, seed=seed,
                                    full_knowledge=full)]

        params, mc = _simulate(net, cp, args, hooks_factory=factory)
        vac_path = None
    else:
        raise ValueError(f"unknown vaccination mode {mode!r}")
    written = _write_sim_outputs(out, "vaccinated_", head, params, mc)
    eff = out / "efficiency.csv"
    z_ref, z_vac = base.mean_outbreak, mc.mean_outbreak
    write_table(eff, head, ["strategy", "mode", "P", "F", "beta", "z_ref", "z_vac", "efficiency"],
                [(strategy, mode, P, F, beta, z_ref, z_vac,
                  efficiency(z_ref, z_vac) if z_ref > 0 else float("nan"))])
    return written + [eff] + ([vac_path] if vac_path else [])


# --------------------------------------------------------------------------
# pipeline

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def cmd_pipeline(args, cp) -> list[Path]:
    p = cp["pipeline"]
    stages = [s.strip() for s in p["stages"].split(",") if s.strip()]
    unknown = set(stages) - {"fit", "generate", "simulate", "metrics", "vaccinate"}
    if unknown:
        raise ValueError(f"unknown stages {sorted(unknown)}")
    seed = args.seed if args.seed is not None else p.getint("seed")
    out = Path(args.out_dir) if args.out_dir else default_output_dir(cp)
    resolved = config_dict(cp)
    if args.dry_run:
        print(f"# config_hash = {config_hash(_content_config(cp))}")
        print(f"# seed = {seed}")
        for sec, kv in resolved.items():
            print(f"[{sec}]")
            for k, val in kv.items():
                print(f"{k} = {val}")
        return []
    network = p["network"]
    written: list[Path] = []
    manifest = []

    def run(stage, fn, ns):
        try:
            paths = fn(ns, cp)
        except Exception as exc:
            raise RuntimeError(f"stage {stage} failed: {exc}") from exc
        for path in paths:
            manifest.append((stage, path.name, _sha256(path)))
        written.extend(paths)
        return paths

    def ns(**kw):
        base = dict(seed=seed, out_dir=str(out), horizon_days=None, replicates=None,
                    seed_count=None, jobs=args.jobs)
        base.update(kw)
        return argparse.Namespace(**base)

    if "fit" in stages:
        if not network:
            raise RuntimeError("stage fit failed: no [pipeline] network configured")
        fitted = run("fit", cmd_fit, ns(network=network, out=str(out / "fitted.ini"),
                                        mode=cp.get("graphgen", "degree_mode",
                                                    fallback="homogeneous"),
                                        paired=False))[0]
        cp.read_string(Path(fitted).read_text())
    if "generate" in stages:
        gen = run("generate", cmd_generate, ns(out=str(out / "generated.links"), N=None,
                                               days=None, mode=None, baseline=None, adn_m=3))[0]
        network = str(gen)
    if any(s in stages for s in ("simulate", "metrics", "vaccinate")) and not network:
        raise RuntimeError("no network: set [pipeline] network or add the generate stage")
    if "simulate" in stages:
        run("simulate", cmd_simulate, ns(network=network))
    if "metrics" in stages:
        run("metrics", cmd_metrics, ns(network=network, threshold=None, temporal=False,
                                       sources=None))
    if "vaccinate" in stages:
        run("vaccinate", cmd_vaccinate, ns(network=network, strategy=None, mode=None, P=None,
                                           F=None, beta=None, window_days=None))
    mpath = out / "manifest.csv"
    write_table(mpath, header("pipeline", config_hash(_content_config(cp)), seed),
                ["stage", "file", "sha256"],
                manifest)
    return written + [mpath]


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spdtnet", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed_required=False):
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--out-dir", help="output directory (default: $SPDTNET_OUTPUT_DIR)")
        if seed_required:
            p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("ingest", help="extract SPDT networks from location updates")
    p.add_argument("updates")
    p.add_argument("--radius-m", type=float, default=20.0)
    p.add_argument("--max-gap-s", type=int, default=1800)
    p.add_argument("--delta-s", type=int, default=10800)
    p.add_argument("--min-nbr-updates", type=int, default=2)
    common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("generate", help="generate a synthetic network")
    p.add_argument("--out", required=True)
    p.add_argument("--N", type=int)
    p.add_argument("--days", type=int)
    p.add_argument("--mode", choices=("homogeneous", "heterogeneous"))
    p.add_argument("--baseline", choices=("adn",))
    p.add_argument("--adn-m", type=int, default=3)
    common(p, seed_required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit generator parameters to a link file")
    p.add_argument("network")
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("homogeneous", "heterogeneous"), default="homogeneous")
    p.add_argument("--paired", action="store_true",
                   help="truncate each delay at its own copy's active period")
    common(p)
    p.set_defaults(func=cmd_fit)

    def sim_opts(p):
        p.add_argument("network")
        p.add_argument("--replicates", type=int)
        p.add_argument("--horizon-days", type=int)
        p.add_argument("--seed-count", type=int)
        p.add_argument("--jobs", type=int)
        common(p, seed_required=True)

    p = sub.add_parser("simulate", help="Monte Carlo SIR on a link file")
    sim_opts(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="static and temporal network metrics")
    p.add_argument("network")
    p.add_argument("--threshold", type=float)
    p.add_argument("--temporal", action="store_true")
    p.add_argument("--sources", type=int, help="sample this many BFS sources")
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("vaccinate", help="rank, vaccinate and compare against no vaccination")
    sim_opts(p)
    p.add_argument("--strategy", choices=("rv", "av", "dv", "imv", "imve", "imvt"))
    p.add_argument("--mode", choices=("mass", "ring"))
    p.add_argument("--P", type=float)
    p.add_argument("--F", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--window-days", type=int)
    p.set_defaults(func=cmd_vaccinate)

    p = sub.add_parser("pipeline", help="run configured stages and write a hash manifest")
    p.add_argument("config")
    p.add_argument("--dry-run", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_pipeline)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cp = load_config(args.config)
        paths = args.func(args, cp)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"spdtnet {args.command}: error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
