"""Command-line front end.

Subcommands: ingest, walk, train, eval, synth, pipeline, experiment.
Pipeline and experiment accept an INI config file whose keys mirror the
CLI flags; flags given on the command line override file values.

Exit codes: 0 success, 2 usage/config errors, and one code per failing
pipeline stage (see STAGE_EXIT_CODES).
"""

from __future__ import annotations

import argparse
import configparser
import sys
from dataclasses import replace

from . import evaluator, graph as graphmod, walker, weighting
from .embedder import TrainConfig, read_embeddings, train, write_embeddings
from .evaluator import EvalConfig, LabeledDataset
from .pipeline import (
    BUILTIN_CLI_NAMES,
    ExperimentSpec,
    PipelineSpec,
    StageError,
    resolve_strategy,
    run_experiment,
    run_pipeline,
)
from .synth import AffiliationSynthConfig, HierarchySynthConfig
from .walker import WalkConfig

STAGE_EXIT_CODES = {
    "config": 2,
    "ingest": 3,
    "synth": 4,
    "weighting": 5,
    "walk": 6,
    "train": 7,
    "eval": 8,
}

_DEPTH_MODES = {"uniform": "uniform_1_to_max", "fixed": "fixed"}


def _add_walk_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--walks-per-node", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--depth-mode", choices=["uniform", "fixed"], default=None)
    p.add_argument("--no-edge-labels", action="store_true", help="emit node tokens only")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=["cbow", "skipgram"], default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--negatives", type=int, default=None)
    p.add_argument("--min-count", type=int, default=None)
    p.add_argument("--lr-start", type=float, default=None)
    p.add_argument("--lr-end", type=float, default=None)
    p.add_argument("--subsample", type=float, default=None)
    p.add_argument("--fast", action="store_true", help="unsynchronized multi-worker updates")


def _add_eval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--metric", choices=["euclidean", "cosine"], default=None)


def _add_synth_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--groups", type=int, default=None)
    p.add_argument("--persons-per-group", type=int, default=None)
    p.add_argument("--projects-per-group", type=int, default=None)
    p.add_argument("--topics-per-group", type=int, default=None)
    p.add_argument("--publications", type=int, default=None)
    p.add_argument("--external-author-fraction", type=float, default=None)
    p.add_argument("--cross-group-pub-fraction", type=float, default=None)
    p.add_argument("--concept-tree-depth", type=int, default=None)
    p.add_argument("--branching", type=int, default=None)
    p.add_argument("--rock-units", type=int, default=None)
    p.add_argument("--lithogenesis-classes", type=int, default=None)
    p.add_argument("--label-from-ancestor-prob", type=float, default=None)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="walkvec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse N-Triples into a graph snapshot")
    p.add_argument("--input", required=True)
    p.add_argument("--type-predicate", action="append", default=None, metavar="IRI")
    p.add_argument("--literals", choices=["drop", "keep"], default="drop")
    p.add_argument("--lenient", action="store_true", help="skip malformed lines with a warning")
    p.add_argument("--out", required=True)

    p = sub.add_parser("walk", help="generate a weighted random-walk corpus")
    p.add_argument("--graph", required=True, help="graph snapshot from ingest")
    p.add_argument("--strategy", default="uniform", help="builtin name, rules:FILE, or fixture:NAME")
    _add_walk_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train embeddings over a corpus")
    p.add_argument("--corpus", required=True)
    _add_train_flags(p)
    p.add_argument("--deterministic", action="store_true", default=None,
                   help="single sequential update stream (default)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="k-NN classification accuracy of embeddings")
    p.add_argument("--vectors", required=True)
    p.add_argument("--train", required=True, help="train labels TSV")
    p.add_argument("--test", required=True, help="test labels TSV")
    _add_eval_flags(p)

    p = sub.add_parser("synth", help="generate a synthetic benchmark graph")
    p.add_argument("kind", choices=["affiliation", "hierarchy"])
    _add_synth_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-graph", required=True)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)

    p = sub.add_parser("pipeline", help="run ingest -> walk -> train -> eval")
    p.add_argument("--config", default=None, help="INI config; flags override file values")
    p.add_argument("--graph", default=None, help="N-Triples file or .bin snapshot")
    p.add_argument("--synth", choices=["affiliation", "hierarchy"], default=None)
    _add_synth_flags(p)
    p.add_argument("--strategy", default=None)
    p.add_argument("--train-labels", default=None)
    p.add_argument("--test-labels", default=None)
    _add_walk_flags(p)
    _add_train_flags(p)
    _add_eval_flags(p)
    p.add_argument("--literals", choices=["drop", "keep"], default=None)
    p.add_argument("--lenient", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("experiment", help="run a strategy-comparison matrix")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--repetitions", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out-dir", default=None)

    return parser


def _fail(stage: str, message: str) -> int:
    print(f"error [{stage}]: {message}", file=sys.stderr)
    return STAGE_EXIT_CODES.get(stage, 1)


def _cmd_ingest(args) -> int:
    type_preds = set(args.type_predicate) if args.type_predicate else {graphmod.RDF_TYPE}
    policy = "as-terminal-node" if args.literals == "keep" else "drop"
    try:
        with open(args.input, encoding="utf-8") as fh:
            triples = graphmod.parse_ntriples(fh, lenient=args.lenient)
            graph = graphmod.build_graph(triples, type_preds, policy)
        graphmod.save_graph(graph, args.out)
    except (OSError, ValueError) as exc:
        return _fail("ingest", str(exc))
    print(f"nodes={graph.num_nodes} edges={graph.num_edges} -> {args.out}")
    return 0


def _walk_config(args, base: WalkConfig | None = None, seed: int | None = None) -> WalkConfig:
    cfg = base or WalkConfig()
    if args.walks_per_node is not None:
        cfg = replace(cfg, walks_per_node=args.walks_per_node)
    if args.max_depth is not None:
        cfg = replace(cfg, max_depth=args.max_depth)
    if args.depth_mode is not None:
        cfg = replace(cfg, depth_mode=_DEPTH_MODES[args.depth_mode])
    if args.no_edge_labels:
        cfg = replace(cfg, emit_edge_labels=False)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    return cfg


def _train_config(args, base: TrainConfig | None = None, seed: int | None = None) -> TrainConfig:
    cfg = base or TrainConfig()
    for flag, name in [
        ("mode", "mode"), ("dim", "dim"), ("window", "window"), ("epochs", "epochs"),
        ("negatives", "negatives"), ("min_count", "min_count"), ("lr_start", "lr_start"),
        ("lr_end", "lr_end"), ("subsample", "subsample"),
    ]:
        value = getattr(args, flag)
        if value is not None:
            cfg = replace(cfg, **{name: value})
    if args.fast:
        cfg = replace(cfg, deterministic=False)
    elif getattr(args, "deterministic", None):
        cfg = replace(cfg, deterministic=True)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    return cfg


def _eval_config(args, base: EvalConfig | None = None) -> EvalConfig:
    cfg = base or EvalConfig()
    if args.k is not None:
        cfg = replace(cfg, k=args.k)
    if args.metric is not None:
        cfg = replace(cfg, metric=args.metric)
    return cfg


def _cmd_walk(args) -> int:
    try:
        graph = graphmod.load_graph(args.graph)
    except (OSError, ValueError) as exc:
        return _fail("ingest", str(exc))
    try:
        weight_fn = resolve_strategy(args.strategy, graph)
        cfg = _walk_config(args, seed=args.seed)
        corpus = walker.generate_walks(graph, weight_fn, cfg, workers=args.workers)
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            walker.write_corpus(corpus, fh)
    except StageError as exc:
        return _fail(exc.stage, str(exc.cause))
    except (OSError, ValueError) as exc:
        return _fail("walk", str(exc))
    print(f"walks={len(corpus)} -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    try:
        with open(args.corpus, encoding="utf-8") as fh:
            sentences = list(walker.read_corpus(fh))
        cfg = _train_config(args, seed=args.seed)
        matrix = train(sentences, cfg, workers=args.workers)
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            write_embeddings(matrix, fh)
    except (OSError, ValueError) as exc:
        return _fail("train", str(exc))
    print(f"vocab={len(matrix.vocab)} dim={matrix.dim} -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    try:
        with open(args.vectors, encoding="utf-8") as fh:
            matrix = read_embeddings(fh)
        with open(args.train, encoding="utf-8") as fh:
            train_rows = evaluator.read_labels_tsv(fh)
        with open(args.test, encoding="utf-8") as fh:
            test_rows = evaluator.read_labels_tsv(fh)
        dataset = LabeledDataset(tuple(train_rows), tuple(test_rows))
        preds = evaluator.predictions(matrix, dataset, _eval_config(args))
    except (OSError, ValueError) as exc:
        return _fail("eval", str(exc))
    correct = sum(1 for _, t, p in preds if t == p)
    print(f"accuracy={100.0 * correct / len(preds):.4f}")
    confusion = evaluator.confusion_summary(preds)
    labels = sorted({t for _, t, _ in preds} | {p for _, _, p in preds})
    for true in labels:
        row = ", ".join(f"{pred}:{confusion[(true, pred)]}" for pred in labels if (true, pred) in confusion)
        if row:
            print(f"  {true} -> {row}")
    return 0


def _synth_config(args, kind: str, seed: int | None = None):
    overrides = {}
    fields = (
        ("groups", "groups"), ("persons_per_group", "persons_per_group"),
        ("projects_per_group", "projects_per_group"), ("topics_per_group", "topics_per_group"),
        ("publications", "publications"), ("external_author_fraction", "external_author_fraction"),
        ("cross_group_pub_fraction", "cross_group_pub_fraction"),
    ) if kind == "affiliation" else (
        ("concept_tree_depth", "concept_tree_depth"), ("branching", "branching"),
        ("rock_units", "rock_units"), ("lithogenesis_classes", "lithogenesis_classes"),
        ("label_from_ancestor_prob", "label_from_ancestor_prob"),
    )
    for flag, name in fields:
        value = getattr(args, flag, None)
        if value is not None:
            overrides[name] = value
    if seed is not None:
        overrides["seed"] = seed
    cls = AffiliationSynthConfig if kind == "affiliation" else HierarchySynthConfig
    return cls(**overrides)


def _cmd_synth(args) -> int:
    from .synth import generate_affiliation_graph, generate_hierarchy_graph

    try:
        cfg = _synth_config(args, args.kind, seed=args.seed)
        generate = generate_affiliation_graph if args.kind == "affiliation" else generate_hierarchy_graph
        graph, dataset = generate(cfg)
        with open(args.out_graph, "w", encoding="utf-8", newline="\n") as fh:
            graphmod.write_ntriples(graphmod.graph_to_triples(graph), fh)
        with open(args.out_train, "w", encoding="utf-8", newline="\n") as fh:
            evaluator.write_labels_tsv(dataset.train, fh)
        with open(args.out_test, "w", encoding="utf-8", newline="\n") as fh:
            evaluator.write_labels_tsv(dataset.test, fh)
    except (OSError, ValueError, TypeError) as exc:
        return _fail("synth", str(exc))
    print(
        f"nodes={graph.num_nodes} edges={graph.num_edges} "
        f"train={len(dataset.train)} test={len(dataset.test)}"
    )
    return 0


# ---------------------------------------------------------------------------
# Config files. INI sections: [pipeline] or [experiment] for run-level keys,
# [synth], [walk], [eval], [train] or [train NAME] (several for experiments),
# [strategy NAME] with one of builtin=, rules=, fixture=.


def _section_walk(sec) -> WalkConfig:
    cfg = WalkConfig()
    if "walks-per-node" in sec:
        cfg = replace(cfg, walks_per_node=sec.getint("walks-per-node"))
    if "max-depth" in sec:
        cfg = replace(cfg, max_depth=sec.getint("max-depth"))
    if "depth-mode" in sec:
        cfg = replace(cfg, depth_mode=_DEPTH_MODES[sec.get("depth-mode")])
    if "edge-labels" in sec:
        cfg = replace(cfg, emit_edge_labels=sec.getboolean("edge-labels"))
    if "seed" in sec:
        cfg = replace(cfg, seed=sec.getint("seed"))
    return cfg


def _section_train(sec) -> TrainConfig:
    cfg = TrainConfig()
    ints = {"dim": "dim", "window": "window", "epochs": "epochs", "negatives": "negatives",
            "min-count": "min_count", "seed": "seed"}
    floats = {"lr-start": "lr_start", "lr-end": "lr_end", "subsample": "subsample"}
    if "mode" in sec:
        cfg = replace(cfg, mode=sec.get("mode"))
    for key, name in ints.items():
        if key in sec:
            cfg = replace(cfg, **{name: sec.getint(key)})
    for key, name in floats.items():
        if key in sec:
            cfg = replace(cfg, **{name: sec.getfloat(key)})
    if "deterministic" in sec:
        cfg = replace(cfg, deterministic=sec.getboolean("deterministic"))
    return cfg


def _section_eval(sec) -> EvalConfig:
    cfg = EvalConfig()
    if "k" in sec:
        cfg = replace(cfg, k=sec.getint("k"))
    if "metric" in sec:
        cfg = replace(cfg, metric=sec.get("metric"))
    return cfg


def _section_synth(sec, kind: str):
    cls = AffiliationSynthConfig if kind == "affiliation" else HierarchySynthConfig
    overrides = {}
    for key in sec:
        name = key.replace("-", "_")
        if name == "kind":
            continue
        if name not in cls.__dataclass_fields__:
            raise ValueError(f"unknown synth key {key!r} for kind {kind!r}")
        field_type = cls.__dataclass_fields__[name].type
        overrides[name] = sec.getfloat(key) if field_type == "float" else sec.getint(key)
    return cls(**overrides)


def _parse_config(path: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise ValueError(f"cannot read config file {path}")
    return parser


def _graph_source(cp, run_sec, args):
    synth_kind = getattr(args, "synth", None) or run_sec.get("synth", fallback=None)
    if synth_kind:
        if cp is not None and cp.has_section("synth"):
            base = _section_synth(cp["synth"], synth_kind)
        else:
            base = AffiliationSynthConfig() if synth_kind == "affiliation" else HierarchySynthConfig()
        cls = type(base)
        cli_cfg = _synth_config(args, synth_kind) if hasattr(args, "groups") else cls()
        overrides = {
            name: getattr(cli_cfg, name)
            for name in cls.__dataclass_fields__
            if getattr(cli_cfg, name) != getattr(cls(), name)
        }
        return replace(base, **overrides)
    graph = getattr(args, "graph", None) or run_sec.get("graph", fallback=None)
    if not graph:
        raise ValueError("no graph source: give --graph, --synth, or config keys graph=/synth=")
    return graph


def _cmd_pipeline(args) -> int:
    try:
        cp = _parse_config(args.config) if args.config else None
        if cp is not None and cp.has_section("pipeline"):
            run_sec = cp["pipeline"]
        else:
            run_sec = configparser.ConfigParser()["DEFAULT"]

        strategy = args.strategy
        if strategy is None and cp is not None:
            strat_secs = [s for s in cp.sections() if s == "strategy" or s.startswith("strategy ")]
            if strat_secs:
                strategy = _strategy_source(cp[strat_secs[0]])
        if strategy is None:
            strategy = "uniform"

        walk_cfg = _section_walk(cp["walk"]) if cp is not None and cp.has_section("walk") else WalkConfig()
        train_secs = (
            [s for s in cp.sections() if s == "train" or s.startswith("train ")] if cp is not None else []
        )
        train_cfg = _section_train(cp[train_secs[0]]) if train_secs else TrainConfig()
        eval_cfg = _section_eval(cp["eval"]) if cp is not None and cp.has_section("eval") else EvalConfig()

        walk_cfg = _walk_config(args, base=walk_cfg)
        train_cfg = _train_config(args, base=train_cfg)
        eval_cfg = _eval_config(args, base=eval_cfg)

        train_labels = args.train_labels or run_sec.get("train-labels", fallback=None)
        test_labels = args.test_labels or run_sec.get("test-labels", fallback=None)
        labels = (train_labels, test_labels) if train_labels and test_labels else None

        literals = args.literals or run_sec.get("literals", fallback=None) or "drop"
        out_dir = args.out_dir or run_sec.get("out-dir", fallback=None)
        workers = args.workers if args.workers is not None else (
            run_sec.getint("workers") if "workers" in run_sec else 1
        )
        seed = args.seed
        if seed is None and "seed" in run_sec:
            seed = run_sec.getint("seed")

        spec = PipelineSpec(
            graph=_graph_source(cp, run_sec, args),
            strategy=strategy,
            labels=labels,
            walk=walk_cfg,
            train=train_cfg,
            eval=eval_cfg,
            out_dir=out_dir,
            literal_policy="as-terminal-node" if literals == "keep" else "drop",
            lenient=args.lenient or (run_sec.getboolean("lenient") if "lenient" in run_sec else False),
            workers=workers,
        )
        if seed is not None:
            spec = spec.with_seed(seed)
    except (ValueError, KeyError, configparser.Error) as exc:
        return _fail("config", str(exc))

    try:
        report = run_pipeline(spec)
    except StageError as exc:
        return _fail(exc.stage, str(exc.cause))
    print(f"accuracy={report.accuracy:.4f}")
    for name, path in sorted(report.artifacts.items()):
        print(f"  {name}: {path}")
    return 0


def _strategy_source(sec) -> str:
    if "builtin" in sec:
        name = sec.get("builtin")
        if name not in BUILTIN_CLI_NAMES:
            raise ValueError(f"unknown builtin strategy {name!r}")
        return name
    if "rules" in sec:
        return "rules:" + sec.get("rules")
    if "fixture" in sec:
        return "fixture:" + sec.get("fixture")
    raise ValueError("strategy section needs one of builtin=, rules=, fixture=")


def _cmd_experiment(args) -> int:
    try:
        cp = _parse_config(args.config)
        if not cp.has_section("experiment"):
            raise ValueError("config needs an [experiment] section")
        run_sec = cp["experiment"]

        strategies = []
        for sec_name in cp.sections():
            if sec_name == "strategy" or sec_name.startswith("strategy "):
                display = sec_name.split(" ", 1)[1] if " " in sec_name else "strategy"
                strategies.append((display, _strategy_source(cp[sec_name])))
        trains = []
        for sec_name in cp.sections():
            if sec_name == "train" or sec_name.startswith("train "):
                trains.append(_section_train(cp[sec_name]))
        if not trains:
            trains = [TrainConfig()]

        train_labels = run_sec.get("train-labels", fallback=None)
        test_labels = run_sec.get("test-labels", fallback=None)
        spec = ExperimentSpec(
            graph=_graph_source(cp, run_sec, args),
            strategies=tuple(strategies),
            trains=tuple(trains),
            walk=_section_walk(cp["walk"]) if cp.has_section("walk") else WalkConfig(),
            eval=_section_eval(cp["eval"]) if cp.has_section("eval") else EvalConfig(),
            labels=(train_labels, test_labels) if train_labels and test_labels else None,
            repetitions=args.repetitions
            if args.repetitions is not None
            else run_sec.getint("repetitions", fallback=1),
            seed=args.seed if args.seed is not None else run_sec.getint("seed", fallback=0),
            out_dir=args.out_dir or run_sec.get("out-dir", fallback=None),
            workers=args.workers
            if args.workers is not None
            else run_sec.getint("workers", fallback=1),
        )
    except (ValueError, KeyError, configparser.Error) as exc:
        return _fail("config", str(exc))

    result = run_experiment(spec)
    print(result.table(), end="")
    print()
    print(result.csv(), end="")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "ingest": _cmd_ingest,
        "walk": _cmd_walk,
        "train": _cmd_train,
        "eval": _cmd_eval,
        "synth": _cmd_synth,
        "pipeline": _cmd_pipeline,
        "experiment": _cmd_experiment,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
