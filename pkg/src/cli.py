#!/usr/bin/env python3

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import yaml
from pydantic import ValidationError

import utils
from bounds import bound_by_method, torque_compensation
from embedding import (
    EmbeddedModel,
    avg_chain_break_rate,
    break_rate_by_chain_length,
    chain_length_histogram,
    coupler_corruption_stats,
    embed_model,
    embedding_ratio,
    embedding_to_dict,
    greedy_embed,
    load_embedding,
    load_sampleset,
    sampleset_to_dict,
    validate,
)
from errors import ChainGaugeError, DataIntegrityError
from ising_core import (
    gen_d_regular,
    gen_erdos_renyi,
    graph_to_dict,
    load_graph,
    load_model,
    maxcut_to_ising,
    model_to_dict,
    read_json,
)
from sampler import (
    GibbsSampler,
    ReplaySampler,
    Sampler,
    SamplerConfig,
    SimulatedAnnealingSampler,
    derive_seed,
    replay_sample,
    sample_embedded,
)
from settings import Settings
from spectral import (
    ENCODINGS,
    encode_logical_qubit,
    gap_profile,
    gap_vs_chain_strength,
    load_schedule,
    min_gap,
    min_maintaining_strength,
    profile_rows,
    refine_min_gap,
    rescaling_check,
)
from topology import chimera, chimera_clique_embedding, load_topology, remove_qubits, topology_to_dict
from tuner import (
    EmbeddedModelBuilder,
    TunerConfig,
    binary_search_chain_strength,
    chain_scan,
    evaluate_chain_strength,
    plateau_detect,
    scan_rows,
    trace_rows,
)

logger = logging.getLogger(__name__)

COMMANDS_PATH = utils.ROOT_DIR / "commands.yaml"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

COMMON_FLAGS = ("seed", "shots", "threads", "config", "log-level")
# options naming where a run writes, not what it computes
RUN_LOCAL = ("command", "output", "manifest")


class UsageError(Exception):
    """A flag combination the parser cannot express is missing or inconsistent."""


def _list_of(cast: Callable[[str], Any]) -> Callable[[str], List[Any]]:
    def parse(value: str) -> List[Any]:
        return [cast(part.strip()) for part in value.split(",") if part.strip()]

    return parse


def _seed(value: str) -> int:
    seed = int(value)
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError(f"seed {value} is not an unsigned 64 bit integer")
    return seed


PARAM_TYPES: Dict[str, Callable[[str], Any]] = {
    "string": str,
    "int": int,
    "float": float,
    "path": Path,
    "floats": _list_of(float),
    "ints": _list_of(int),
}


def load_commands(path: Path = COMMANDS_PATH) -> Dict[str, dict]:
    with open(path) as f:
        return yaml.safe_load(f)


def build_parser(commands: Dict[str, dict]) -> argparse.ArgumentParser:
    """Generate the argument parser from the command declarations."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0, help="Seed of every random choice.")
    common.add_argument("--shots", type=int, help="Number of annealing shots.")
    common.add_argument("--threads", type=int, help="Maximum number of worker threads.")
    common.add_argument("-o", "--output", type=Path, help="Output file (stdout when omitted).")
    common.add_argument(
        "--manifest", type=Path, help="Run manifest file (defaults to OUTPUT.manifest.json)."
    )
    common.add_argument("--config", type=Path, help="YAML file overriding config.yaml options.")
    common.add_argument("--log-level", help="Logging level.")

    parser = argparse.ArgumentParser(
        prog="chaingauge", description="Chain strength toolkit for minor-embedded Ising problems."
    )
    parser.add_argument("--version", action="version", version=utils.tool_version())
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True
    for name, command in commands.items():
        description = command.get("description", "")
        sub = subparsers.add_parser(name, parents=[common], help=description, description=description)
        for param, meta in (command.get("params") or {}).items():
            kwargs: Dict[str, Any] = {
                "dest": param.replace("-", "_"),
                "help": str(meta.get("description", "")).strip(),
            }
            if meta.get("type") == "boolean":
                kwargs["action"] = "store_true"
            else:
                kwargs["type"] = PARAM_TYPES[meta.get("type", "string")]
                if "choices" in meta:
                    kwargs["choices"] = meta["choices"]
                if meta.get("required"):
                    kwargs["required"] = True
                elif "default" in meta:
                    kwargs["default"] = str(meta["default"])
            sub.add_argument(f"--{param}", **kwargs)
    return parser


class ChainGaugeCli:
    """Route subcommands to their handlers; every handler writes one output and its manifest."""

    def __init__(self, commands: Optional[Dict[str, dict]] = None):
        self.commands = commands or load_commands()
        self.parser = build_parser(self.commands)
        self.handlers = {name: getattr(self, "_on_" + name) for name in self.commands}

    def run(self, argv: Sequence[str]) -> int:
        try:
            args = self.parser.parse_args(list(argv))
        except SystemExit as e:
            return EXIT_OK if e.code in (0, None) else EXIT_USAGE

        try:
            settings = self._settings(args)
        except ChainGaugeError as e:
            logging.basicConfig(level=logging.WARNING, format=LOG_FORMAT, force=True)
            logger.error("Configuration is not valid: %s", e)
            return EXIT_FAILURE
        logging.basicConfig(level=settings.log_level, format=LOG_FORMAT, force=True)

        try:
            self.handlers[args.command](args, settings)
        except UsageError as e:
            logger.error("%s: %s", args.command, e)
            sys.stderr.write(f"usage error: {e}\n")
            return EXIT_USAGE
        except (ChainGaugeError, ValidationError, OSError) as e:
            logger.error("%s failed: %s", args.command, e)
            return EXIT_FAILURE
        return EXIT_OK

    @staticmethod
    def _settings(args) -> Settings:
        return utils.resolve_settings(
            args.config, {"log_level": args.log_level, "threads": args.threads}
        )

    def _write_json(self, args, data: Any) -> None:
        if args.output is None:
            sys.stdout.write(utils.dump_json(data))
        else:
            utils.write_json(args.output, data)
        self._write_manifest(args)

    def _write_csv(self, args, header: Sequence[str], rows) -> None:
        if args.output is None:
            sys.stdout.write(utils.format_csv(header, rows))
        else:
            utils.write_csv(args.output, header, rows)
        self._write_manifest(args)

    def _write_manifest(self, args, output: Optional[Path] = None) -> None:
        """Record the run next to ``output`` (the main output by default) or in ``--manifest``.

        A stdout run without ``--manifest`` leaves no manifest.
        """
        parameters = {k: v for k, v in vars(args).items() if k not in RUN_LOCAL}
        inputs = [
            v
            for k, v in sorted(vars(args).items())
            if isinstance(v, Path) and k not in RUN_LOCAL + ("summary",) and v.exists()
        ]
        manifest = utils.RunManifest.for_run(args.command, parameters, {"seed": args.seed}, inputs)
        if output is None and args.manifest is not None:
            path = args.manifest
            utils.write_json(path, manifest.dict())
        elif output is not None or args.output is not None:
            path = utils.write_manifest(output or args.output, manifest)
        else:
            return
        logger.info("wrote manifest %s", path)

    def replay_args(self, manifest: utils.RunManifest) -> argparse.Namespace:
        """Parse the arguments a manifest records back into the namespace of its run.

        :raises DataIntegrityError: if the manifest names an unknown command or parameter, or
            an input file changed since the run.
        """
        view = manifest.replay_view()
        name = view["command"]
        command = self.commands.get(name)
        if command is None or name == "replay":
            raise DataIntegrityError(f"cannot replay command {name!r}")
        for path, digest in view["inputs"].items():
            if not Path(path).exists() or utils.file_digest(path) != digest:
                raise DataIntegrityError(f"input {path} changed since the recorded run")
        flags = {flag.replace("-", "_"): flag for flag in COMMON_FLAGS}
        flags.update({flag.replace("-", "_"): flag for flag in command.get("params") or {}})
        argv = [name]
        for dest, value in sorted(view["parameters"].items()):
            if dest not in flags:
                raise DataIntegrityError(f"{name} has no parameter {dest!r}")
            if value is None or value is False:
                continue
            if value is True:
                argv.append(f"--{flags[dest]}")
            elif isinstance(value, list):
                argv.append(f"--{flags[dest]}={','.join(str(v) for v in value)}")
            else:
                argv.append(f"--{flags[dest]}={value}")
        try:
            return self.parser.parse_args(argv)
        except SystemExit as e:
            raise DataIntegrityError(f"recorded parameters do not parse: {argv}") from e

    @staticmethod
    def _require(args, *names: str) -> None:
        missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
        if missing:
            raise UsageError(f"{args.command} needs {', '.join(missing)}")

    @staticmethod
    def _sampler(name: str, settings: Settings, replay: Optional[Path] = None) -> Sampler:
        if name == "gibbs":
            return GibbsSampler(settings.gibbs_beta, settings.gibbs_cap)
        if name == "replay":
            if replay is None:
                raise UsageError("the replay method needs --replay")
            return ReplaySampler(replay)
        return SimulatedAnnealingSampler(
            SamplerConfig(
                sweeps=settings.sa_sweeps,
                beta_hot=settings.sa_beta_hot,
                beta_cold=settings.sa_beta_cold,
                chunk_size=settings.sa_chunk_size,
                threads=settings.threads,
            )
        )

    @staticmethod
    def _builder(args, settings: Settings, model) -> EmbeddedModelBuilder:
        return EmbeddedModelBuilder(
            model,
            load_embedding(args.embedding),
            load_topology(args.topology),
            h_range=settings.h_range,
            j_range=settings.j_range,
        )

    def _on_gen(self, args, settings: Settings) -> None:
        if args.type == "er":
            g = gen_erdos_renyi(args.n, float(args.p), args.seed)
        else:
            g = gen_d_regular(args.n, int(args.d), args.seed, settings.regular_retries)
        logger.info("generated %s graph with %d vertices, %d edges", args.type, g.n, len(g.edges))
        data = graph_to_dict(g) if args.kind == "graph" else model_to_dict(maxcut_to_ising(g))
        self._write_json(args, data)

    def _on_topo(self, args, settings: Settings) -> None:
        if args.mode == "chimera":
            t = chimera(int(args.m), int(args.l))
        else:
            self._require(args, "topology")
            t = remove_qubits(load_topology(args.topology), args.dead)
        logger.info("topology with %d qubits, %d couplers", len(t.qubits), len(t.couplers))
        self._write_json(args, topology_to_dict(t))

    def _on_embed(self, args, settings: Settings) -> None:
        if args.mode == "clique":
            self._write_json(args, embedding_to_dict(chimera_clique_embedding(int(args.m))))
            return
        self._require(args, "model", "topology")
        source = load_graph(args.model)
        target = load_topology(args.topology)
        if args.mode == "greedy":
            e = greedy_embed(
                source, target, args.seed, args.tries or settings.embed_tries, args.max_qubits
            )
            self._write_json(args, embedding_to_dict(e))
            return
        self._require(args, "embedding")
        report = validate(load_embedding(args.embedding), source, target)
        if not report.valid:
            logger.warning("embedding is not valid")
        self._write_json(args, {**report.dict(), "valid": report.valid})

    def _on_bounds(self, args, settings: Settings) -> None:
        model = load_model(args.model)
        methods = ("choi", "torque", "raymond") if args.method == "all" else (args.method,)
        prefactor = args.prefactor if args.prefactor is not None else settings.torque_prefactor
        results = {}
        for method in methods:
            result = bound_by_method(model, method, prefactor, float(args.lambda0))
            logger.info("%s bound: %.6g", method, result.magnitude)
            results[method] = result.dict(exclude_none=True)
        self._write_json(args, results)

    def _on_gap(self, args, settings: Settings) -> None:
        model = load_model(args.model)
        schedule = load_schedule(args.schedule) if args.schedule is not None else None
        points = args.points or settings.gap_points
        levels = args.levels or settings.gap_levels
        cap = settings.qubit_cap

        if args.mode in ("profile", "min-gap"):
            profile = gap_profile(model, schedule, points, levels, cap, settings.threads)
            if args.mode == "profile":
                header = ["s"] + [f"E{i}" for i in range(profile.k)]
                self._write_csv(args, header, profile_rows(profile))
                return
            result = min_gap(profile, settings.degeneracy_tol)
            if settings.gap_refine:
                result = refine_min_gap(model, profile, result, schedule)
            logger.info("minimum gap %.8g at s=%.6f", result.delta_min, result.s_star)
            self._write_json(args, result.dict(exclude_none=True))
        elif args.mode == "rescale-check":
            rows = []
            for alpha in args.alpha:
                check = rescaling_check(model, alpha, points, levels, cap)
                rows.append(
                    [
                        alpha,
                        check.max_deviation,
                        check.original.delta_min,
                        check.original.s_star,
                        check.rescaled.delta_min,
                        check.rescaled.s_star,
                    ]
                )
            header = ["alpha", "max_deviation", "delta_min", "s_star", "delta_min_rescaled",
                      "s_star_rescaled"]
            self._write_csv(args, header, rows)
        elif args.mode == "encoding":
            rows = []
            for kind in ENCODINGS:
                target, e = encode_logical_qubit(model, int(args.vertex), kind, int(args.size))
                strength = min_maintaining_strength(
                    model, e, target, float(args.tol), settings.brute_force_cap
                )
                logger.info("%s encoding keeps its ground states from %.6g", kind, strength)
                rows.append([kind, int(args.size), strength])
            self._write_csv(args, ["encoding", "size", "min_strength"], rows)
        else:
            self._require(args, "embedding", "topology", "strengths")
            results = gap_vs_chain_strength(
                model,
                load_embedding(args.embedding),
                load_topology(args.topology),
                args.strengths,
                schedule,
                points,
                max(levels, 2),
                cap,
                settings.gap_refine,
            )
            rows = [[r.strength, r.delta_min, r.s_star, int(r.degenerate)] for r in results]
            self._write_csv(args, ["strength", "delta_min", "s_star", "degenerate"], rows)

    def _on_sample(self, args, settings: Settings) -> None:
        model = load_model(args.model)
        shots = args.shots or settings.shots_per_step
        sampler = self._sampler(args.method, settings, args.replay)
        if args.embedding is None:
            if args.method == "replay":
                ss = replay_sample(args.replay, model)
            else:
                ss = sampler(model, shots, args.seed)
        else:
            self._require(args, "topology")
            builder = self._builder(args, settings, model)
            cs = args.cs if args.cs is not None else builder.embedding.chain_strength
            if cs is None:
                raise UsageError("sampling an embedding needs --cs or a stored chain strength")
            em = builder(cs)
            ss = sample_embedded(sampler, em, shots, args.seed)
            logger.info("average breaking chain rate %.4g", avg_chain_break_rate(ss, em))
        self._write_json(args, sampleset_to_dict(ss))

    def _on_scan(self, args, settings: Settings) -> None:
        g = load_graph(args.graph)
        builder = self._builder(args, settings, maxcut_to_ising(g))
        if args.cs is not None:
            cs_list = list(args.cs)
        else:
            self._require(args, "cs_min", "cs_max")
            cs_list = np.linspace(args.cs_min, args.cs_max, int(args.points)).tolist()
        shots = args.shots or settings.shots_per_step
        records = chain_scan(builder, self._sampler(args.sampler, settings), cs_list, shots, g,
                             args.seed)
        if len(records) >= 3 and cs_list == sorted(set(cs_list)):
            plateau = plateau_detect(records, float(args.rel_tol))
            logger.info("best cut plateau reached at chain strength %.6g", plateau)
        header = ["cs", "best_cut", "mean_energy", "avg_break_rate", "distinct_corrupted"]
        self._write_csv(args, header, scan_rows(records))

    def _on_tune(self, args, settings: Settings) -> None:
        g = load_graph(args.graph)
        model = maxcut_to_ising(g)
        builder = self._builder(args, settings, model)
        sampler = self._sampler(args.sampler, settings)
        if args.cs_lo is not None and args.cs_hi is None:
            raise UsageError("--cs-lo needs --cs-hi")
        cs_interval = None if args.cs_hi is None else (args.cs_lo or 0.0, args.cs_hi)
        config = TunerConfig(
            cb_interval=(args.cb_lo, args.cb_hi),
            cs_interval=cs_interval,
            shots_per_step=args.shots or settings.shots_per_step,
            width_tol_rel=settings.width_tol_rel,
            max_steps=settings.max_steps,
            seed=args.seed,
        )
        trace = binary_search_chain_strength(builder, sampler, config)
        logger.info(
            "final chain strength %.6g after %d steps (converged: %s)",
            trace.final_cs,
            trace.steps,
            trace.converged,
        )
        header = ["step", "cs", "chain_break_rate", "lo", "hi", "converged"]
        self._write_csv(args, header, trace_rows(trace))

        summary: Dict[str, Any] = {
            "final_cs": trace.final_cs,
            "converged": trace.converged,
            "steps": trace.steps,
        }
        if args.compare_shots:
            seed = derive_seed(args.seed, 0)
            torque_cs = torque_compensation(model, settings.torque_prefactor)
            tuned = evaluate_chain_strength(builder, sampler, trace.final_cs, args.compare_shots,
                                            g, seed)
            torque = evaluate_chain_strength(builder, sampler, torque_cs, args.compare_shots, g,
                                             seed)
            summary["tuned"] = tuned.dict()
            summary["torque"] = torque.dict()
            if torque.best_cut > 0:
                summary["cut_improvement"] = (tuned.best_cut - torque.best_cut) / torque.best_cut
            logger.info("best cut %d tuned, %d torque compensation", tuned.best_cut,
                        torque.best_cut)
        if args.summary is not None:
            utils.write_json(args.summary, summary)
            self._write_manifest(args, args.summary)

    def _on_stats(self, args, settings: Settings) -> None:
        e = load_embedding(args.embedding)
        out: Dict[str, Any] = {"chain_lengths": chain_length_histogram(e).dict()}
        if args.samples is not None:
            self._require(args, "model", "topology")
            strength = args.cs
            if strength is None and e.chain_strength is None and e.per_chain_strength is None:
                # break metrics only read the chain structure
                strength = 1.0
            em = embed_model(load_model(args.model), e, load_topology(args.topology), strength)
            ss = load_sampleset(args.samples)
            out.update(_break_stats(ss, em))
        if args.cmr is not None or args.cme is not None:
            self._require(args, "cmr", "cme")
            out["embedding_ratio"] = embedding_ratio(args.cmr, args.cme)
        self._write_json(args, out)

    def _on_replay(self, args, settings: Settings) -> None:
        try:
            manifest = utils.RunManifest(**read_json(args.run))
        except (TypeError, ValidationError) as e:
            raise DataIntegrityError(f"{args.run} is not a run manifest: {e}") from e
        if manifest.tool_version != utils.tool_version():
            logger.warning(
                "%s was written by version %s, replaying with %s",
                args.run,
                manifest.tool_version,
                utils.tool_version(),
            )
        replayed = self.replay_args(manifest)
        replayed.output = args.output
        replayed.manifest = args.manifest
        logger.info("replaying %s from %s", manifest.command, args.run)
        self.handlers[replayed.command](replayed, self._settings(replayed))


def _break_stats(ss, em: EmbeddedModel) -> Dict[str, Any]:
    stats = coupler_corruption_stats(ss, em)
    corruption = stats.dict()
    corruption["per_edge"] = {f"{p},{q}": c for (p, q), c in sorted(stats.per_edge.items())}
    return {
        "avg_chain_break_rate": avg_chain_break_rate(ss, em),
        "break_rate_by_chain_length": break_rate_by_chain_length(ss, em),
        "corruption": corruption,
    }


def dispatch(argv: Sequence[str]) -> int:
    return ChainGaugeCli().run(argv)


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":  # pragma: nocover
    main()
