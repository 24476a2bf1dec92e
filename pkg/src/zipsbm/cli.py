"""Command-line front end: simulate | fit | estimate | analyze | validate.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 validation failure.

Config files hold ``key = value`` lines (``#`` comments allowed) whose keys
are the long option names, e.g. ``gamma = 0.3`` or ``burn-in = 5000``.
Precedence: command-line flags > config file > built-in defaults.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .gibbs import SamplerConfig, SamplerTrace, run_chains
from .likelihood import ZipHyper
from .netcore import (NetworkError, load_attributes, load_network, validate,
                      write_attributes, write_network)
from .partition import canonical, estimate_partition
from .prior import GnedinHyper, HyperError
from .simgen import ScenarioSpec, contaminate_attributes, generate, scenario_preset
from .tradeoff import build_report, rank_zero_ties, write_ranking_csv

log = logging.getLogger("zipsbm")

EXIT_USAGE, EXIT_DATA, EXIT_VALIDATION = 2, 3, 4


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


SAMPLER_DEFAULTS = {
    "gamma": 0.3,
    "a": 1.0,
    "b": 9.0,
    "a1": 1.0,
    "a2": 1.0,
    "iters": 20000,
    "burn_in": 10000,
    "thin": 1,
    "seed": 0,
    "init": "singletons",
    "chains": 1,
    "variant": "zip-sbm",
    "store_params": False,
}

_CASTS = {"gamma": float, "a": float, "b": float, "a1": float, "a2": float, "iters": int,
          "burn_in": int, "thin": int, "seed": int, "chains": int, "alpha": float, "nodes": int,
          "rounds": int, "threshold": float, "contaminate": int, "scenario": int}


def _read_config(path) -> dict:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string("[run]\n" + Path(path).read_text(encoding="utf-8"))
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    out = {}
    for key, value in parser["run"].items():
        key = key.replace("-", "_")
        cast = _CASTS.get(key)
        if key == "store_params":
            out[key] = parser["run"].getboolean(key)
        elif cast is not None:
            try:
                out[key] = cast(value)
            except ValueError:
                raise UsageError(f"config key {key}: bad value {value!r}") from None
        else:
            out[key] = value
    return out


def _effective(args, keys, defaults) -> dict:
    """Merge defaults < config file < explicit flags for the named keys."""
    merged = {k: defaults.get(k) for k in keys}
    if getattr(args, "config", None):
        cfg = _read_config(args.config)
        merged.update({k: v for k, v in cfg.items() if k in merged})
    for k in keys:
        value = getattr(args, k, None)
        if value is not None:
            merged[k] = value
    return merged


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out: Path, subcommand: str, config: dict, inputs: dict, outputs: list, started: float):
    import numba
    import scipy

    manifest = {
        "subcommand": subcommand,
        "tool_version": __version__,
        "config": config,
        "inputs": {k: {"path": str(v), "sha256": _sha256(v)} for k, v in inputs.items() if v},
        "seed": config.get("seed"),
        "outputs": [str(p) for p in outputs],
        "started_utc": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "wall_clock_seconds": round(time.time() - started, 3),
        "versions": {"python": platform.python_version(), "numpy": np.__version__,
                     "scipy": scipy.__version__, "numba": numba.__version__},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_net(path):
    try:
        return load_network(path)
    except (OSError, NetworkError) as exc:
        raise DataError(str(exc)) from None


def _load_attr(path, V):
    if not path:
        return None
    try:
        return load_attributes(path, V)
    except (OSError, NetworkError) as exc:
        raise DataError(str(exc)) from None


def _load_partition(path) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(str(exc)) from None
    if path.suffix == ".json":
        data = json.loads(text)
        labels = data["z_hat"] if isinstance(data, dict) else data
    else:
        labels = [line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")]
    codes: dict[str, int] = {}
    return np.array([codes.setdefault(str(s), len(codes)) for s in labels], dtype=np.int64)


def _sampler_config(cfg: dict) -> SamplerConfig:
    try:
        return SamplerConfig(
            total_iters=cfg["iters"],
            burn_in=cfg["burn_in"],
            thinning=cfg["thin"],
            zip_hyper=ZipHyper(cfg["a"], cfg["b"], cfg["a1"], cfg["a2"]),
            gnedin=GnedinHyper(cfg["gamma"]),
            init=cfg["init"],
            seed=cfg["seed"],
            store_block_params=bool(cfg["store_params"]),
            variant=cfg["variant"],
        )
    except (ValueError, HyperError) as exc:
        raise UsageError(str(exc)) from None


# --- subcommands ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    started = time.time()
    cfg = _effective(args, ["scenario", "spec", "seed", "contaminate", "format"],
                     {"seed": 0, "format": "dense"})
    if (cfg["scenario"] is None) == (cfg["spec"] is None):
        raise UsageError("give exactly one of --scenario or --spec")
    if cfg["spec"]:
        try:
            spec = ScenarioSpec.from_dict(json.loads(Path(cfg["spec"]).read_text(encoding="utf-8")))
        except (OSError, KeyError, ValueError) as exc:
            raise UsageError(f"bad scenario spec: {exc}") from None
    else:
        try:
            spec = scenario_preset(cfg["scenario"])
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    k = spec.contamination_count if cfg["contaminate"] is None else cfg["contaminate"]
    ss = np.random.SeedSequence(cfg["seed"])
    net_seed, attr_seed = ss.spawn(2)
    net, X, W = generate(spec, net_seed)
    try:
        attrs = contaminate_attributes(spec.z0, k, attr_seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = _out_dir(args.out)
    files = [out / "network.csv", out / "attributes.csv", out / "truth.json"]
    write_network(net, files[0], cfg["format"])
    write_attributes(attrs, files[1])
    truth = spec.to_dict() | {"X": X.tolist(), "W": W.tolist(), "contamination_count": k}
    files[2].write_text(json.dumps(truth) + "\n", encoding="utf-8")
    _write_manifest(out, "simulate", cfg, {"spec": cfg["spec"]}, files, started)
    log.info("simulated %s: V=%d, %d nonzero ties", spec.name, net.num_nodes, validate(net).num_edges)
    return 0


def cmd_fit(args) -> int:
    started = time.time()
    keys = list(SAMPLER_DEFAULTS) + ["network", "attributes", "fixed_partition"]
    cfg = _effective(args, keys, SAMPLER_DEFAULTS)
    if not cfg["network"]:
        raise UsageError("fit needs a network file")
    config = _sampler_config(cfg)
    net = _load_net(cfg["network"])
    attrs = _load_attr(cfg["attributes"], net.num_nodes)
    out = _out_dir(args.out)
    if cfg["fixed_partition"]:
        z_hat = _load_partition(cfg["fixed_partition"])
        if z_hat.size != net.num_nodes:
            raise UsageError(f"partition has {z_hat.size} labels for {net.num_nodes} nodes")
        config.variant = "fixed-partition"
        trace = run_chains(net, None, config, cfg["chains"], variant="fixed-partition", z_fixed=z_hat)
    else:
        trace = run_chains(net, attrs, config, cfg["chains"], variant=config.variant)
    files = [out / "trace.jsonl", out / "h_trace.csv"]
    trace.to_jsonl(files[0])
    with open(files[1], "w", encoding="utf-8") as fh:
        fh.write("chain,iteration,H,collapsed_loglik\n")
        per_chain = config.total_iters
        for i, (h, ll) in enumerate(zip(trace.H_trace, trace.loglik_trace)):
            fh.write(f"{i // per_chain},{i % per_chain + 1},{h},{ll:.6f}\n")
    inputs = {"network": cfg["network"], "attributes": cfg["attributes"],
              "fixed_partition": cfg["fixed_partition"]}
    _write_manifest(out, "fit", cfg, inputs, files, started)
    log.info("stored %d draws", len(trace))
    return 0


def cmd_estimate(args) -> int:
    started = time.time()
    cfg = _effective(args, ["trace", "alpha", "refine"], {"alpha": 0.05, "refine": False})
    if not 0.0 < cfg["alpha"] < 1.0:
        raise UsageError("--alpha must lie in (0, 1)")
    try:
        trace = SamplerTrace.from_jsonl(cfg["trace"])
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot read trace: {exc}") from None
    if len(trace) == 0:
        raise DataError("trace holds no stored draws")
    est, S = estimate_partition(trace.partitions, cfg["alpha"], refine=bool(cfg["refine"]))
    out = _out_dir(args.out)
    files = [out / "similarity.csv", out / "estimate.json"]
    np.savetxt(files[0], S, delimiter=",", fmt="%.6f")
    files[1].write_text(json.dumps(est.to_dict(), indent=2) + "\n", encoding="utf-8")
    _write_manifest(out, "estimate", cfg, {"trace": cfg["trace"]}, files, started)
    log.info("H_hat=%d, credible-ball radius %.4f", est.H_hat, est.ball_radius)
    return 0


def cmd_analyze(args) -> int:
    started = time.time()
    keys = list(SAMPLER_DEFAULTS) + ["network", "partition"]
    cfg = _effective(args, keys, SAMPLER_DEFAULTS)
    if not cfg["network"] or not cfg["partition"]:
        raise UsageError("analyze needs a network and a partition")
    config = _sampler_config(cfg)
    config.variant = "fixed-partition"
    net = _load_net(cfg["network"])
    z_hat = _load_partition(cfg["partition"])
    if z_hat.size != net.num_nodes:
        raise UsageError(f"partition has {z_hat.size} labels for {net.num_nodes} nodes")
    trace = run_chains(net, None, config, cfg["chains"], variant="fixed-partition", z_fixed=z_hat)
    report = build_report(net, canonical(z_hat), trace.block_params)
    out = _out_dir(args.out)
    files = [out / "report.json", out / "ranking.csv"]
    report.to_json(files[0])
    write_ranking_csv(rank_zero_ties(report), files[1], net.node_labels)
    _write_manifest(out, "analyze", cfg, {"network": cfg["network"], "partition": cfg["partition"]},
                    files, started)
    return 0


def cmd_validate(args) -> int:
    from .validation import getting_it_right

    started = time.time()
    keys = ["nodes", "rounds", "seed", "threshold", "mutate", "gamma", "a", "b", "a1", "a2", "attributes"]
    cfg = _effective(args, keys, SAMPLER_DEFAULTS | {"nodes": 5, "rounds": 100_000, "threshold": 5.0})
    try:
        zip_hyper = ZipHyper(cfg["a"], cfg["b"], cfg["a1"], cfg["a2"])
        gnedin = GnedinHyper(cfg["gamma"])
    except (ValueError, HyperError) as exc:
        raise UsageError(str(exc)) from None
    if not 1 <= cfg["nodes"] <= 8:
        raise UsageError("--nodes must be between 1 and 8")
    attrs = _load_attr(cfg["attributes"], cfg["nodes"])
    report = getting_it_right(cfg["nodes"], cfg["rounds"], attrs, zip_hyper, gnedin, cfg["seed"],
                              skip_step2=cfg["mutate"] == "skip-step-2")
    print(report.table())
    ok = report.passed(cfg["threshold"])
    print(f"max |z| = {report.max_abs_z():.2f} (threshold {cfg['threshold']}): {'PASS' if ok else 'FAIL'}")
    if args.out:
        out = _out_dir(args.out)
        path = out / "validation.json"
        path.write_text(json.dumps({
            "statistics": list(report.names), "marginal_mean": report.mc_mean.tolist(),
            "successive_mean": report.sc_mean.tolist(), "z_scores": report.z_scores.tolist(),
            "passed": ok}, indent=2) + "\n", encoding="utf-8")
        _write_manifest(out, "validate", cfg, {"attributes": cfg["attributes"]}, [path], started)
    return 0 if ok else EXIT_VALIDATION


# --- argument parsing ----------------------------------------------------------

def _add_sampler_flags(p):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--gamma", type=float, help="Gnedin hyperparameter in (0, 1) [0.3]")
    p.add_argument("--a", type=float, help="Beta prior a on zero inflation [1]")
    p.add_argument("--b", type=float, help="Beta prior b on zero inflation [9]")
    p.add_argument("--a1", type=float, help="Gamma prior shape on rates [1]")
    p.add_argument("--a2", type=float, help="Gamma prior rate on rates [1]")
    p.add_argument("--iters", type=int, help="total iterations T [20000]")
    p.add_argument("--burn-in", dest="burn_in", type=int, help="burn-in iterations [10000]")
    p.add_argument("--thin", type=int, help="thinning [1]")
    p.add_argument("--seed", type=int, help="chain seed [0]")
    p.add_argument("--init", help="singletons | all-in-one | random:K [singletons]")
    p.add_argument("--chains", type=int, help="independent chains [1]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zipsbm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--from-manifest", dest="from_manifest",
                        help="re-run a subcommand with the configuration echoed in a manifest")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("simulate", help="generate a benchmark network")
    p.add_argument("--scenario", type=int)
    p.add_argument("--spec", help="JSON scenario spec (z0, pi0, lambda0 with 1-based labels)")
    p.add_argument("--seed", type=int)
    p.add_argument("--contaminate", type=int, help="attribute labels to corrupt [20]")
    p.add_argument("--format", choices=["dense", "edge-list"])
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="run the Gibbs sampler")
    p.add_argument("network", nargs="?")
    p.add_argument("--attributes")
    p.add_argument("--variant", choices=["zip-sbm", "p-sbm"])
    p.add_argument("--fixed-partition", dest="fixed_partition")
    p.add_argument("--store-params", dest="store_params", action="store_true", default=None)
    _add_sampler_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("estimate", help="VI point estimate and credible ball from a trace")
    p.add_argument("trace", nargs="?")
    p.add_argument("--alpha", type=float)
    p.add_argument("--refine", action="store_true", default=None)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("analyze", help="plug-in block posterior and zero-tie ranking")
    p.add_argument("network", nargs="?")
    p.add_argument("--partition", help="estimate.json or one label per line")
    _add_sampler_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("validate", help="getting-it-right joint distribution check")
    p.add_argument("--nodes", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--mutate", choices=["skip-step-2"], help="test hook: run a deliberately broken sampler")
    p.add_argument("--attributes")
    p.add_argument("--gamma", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--a1", type=float)
    p.add_argument("--a2", type=float)
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)
    return parser


def _args_from_manifest(parser, path, argv_rest) -> argparse.Namespace:
    try:
        manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read manifest: {exc}") from None
    out = None
    if "--out" in argv_rest:
        out = argv_rest[argv_rest.index("--out") + 1]
    elif manifest.get("outputs"):
        out = str(Path(manifest["outputs"][0]).parent)
    ns = argparse.Namespace(**manifest["config"])
    ns.command = manifest["subcommand"]
    ns.func = {"simulate": cmd_simulate, "fit": cmd_fit, "estimate": cmd_estimate,
               "analyze": cmd_analyze, "validate": cmd_validate}[ns.command]
    ns.config = None
    ns.out = out
    return ns


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if argv and argv[0] == "--from-manifest":
            if len(argv) < 2:
                parser.error("--from-manifest needs a path")
            args = _args_from_manifest(parser, argv[1], argv[2:])
            verbose = "-v" in argv or "--verbose" in argv
        else:
            args = parser.parse_args(argv)
            verbose = args.verbose
            if args.command is None:
                parser.print_usage(sys.stderr)
                return EXIT_USAGE
        logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        return args.func(args)
    except UsageError as exc:
        print(f"zipsbm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"zipsbm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
