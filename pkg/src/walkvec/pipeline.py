"""Pipeline orchestration: ingest -> walk -> train -> eval.

Also the experiment runner, which executes a (strategy x train-config)
matrix over shared per-repetition seeds so strategies are compared
against identical walk randomness.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field, replace

from . import evaluator, graph as graphmod, walker, weighting
from .embedder import TrainConfig, train, write_embeddings
from .evaluator import EvalConfig, LabeledDataset
from .graph import PropertyGraph
from .synth import (
    AffiliationSynthConfig,
    HierarchySynthConfig,
    generate_affiliation_graph,
    generate_hierarchy_graph,
)
from .walker import WalkConfig
from .weighting import WeightFn

BUILTIN_CLI_NAMES = {
    "uniform": "uniform",
    "predicate-freq": "predicate_freq",
    "inv-predicate-freq": "inv_predicate_freq",
    "object-freq": "object_freq",
    "inv-object-freq": "inv_object_freq",
}


class StageError(RuntimeError):
    """Failure wrapped with the pipeline stage it happened in."""

    def __init__(self, stage: str, cause: BaseException | str):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage}: {cause}")


def resolve_strategy(source: str, graph: PropertyGraph) -> WeightFn:
    """Parse a strategy source string into a walker weight function.

    Accepted forms: a builtin name (``uniform``, ``predicate-freq``, ...),
    ``rules:PATH`` for a rule file, or ``fixture:NAME`` for a shipped one.
    """
    try:
        if source in BUILTIN_CLI_NAMES:
            stats = graphmod.compute_stats(graph)
            return weighting.builtin_strategy(BUILTIN_CLI_NAMES[source], stats)
        if source.startswith("rules:"):
            return weighting.load_ruleset_file(source[len("rules:"):])
        if source.startswith("fixture:"):
            return weighting.fixture_ruleset(source[len("fixture:"):])
    except (OSError, ValueError) as exc:
        raise StageError("weighting", exc) from exc
    raise StageError(
        "weighting",
        f"unknown strategy {source!r} (expected a builtin name, rules:FILE, or fixture:NAME)",
    )


@dataclass(frozen=True)
class PipelineSpec:
    graph: "str | AffiliationSynthConfig | HierarchySynthConfig"
    strategy: str = "uniform"
    labels: tuple[str, str] | None = None  # (train.tsv, test.tsv); unused for synth sources
    walk: WalkConfig = WalkConfig()
    train: TrainConfig = TrainConfig()
    eval: EvalConfig = EvalConfig()
    out_dir: str | None = None
    literal_policy: str = "drop"
    lenient: bool = False
    type_predicates: tuple[str, ...] = (graphmod.RDF_TYPE,)
    workers: int = 1

    def with_seed(self, seed: int) -> "PipelineSpec":
        """Apply one seed to every seeded stage (walk, train, synth)."""
        g = self.graph
        if isinstance(g, (AffiliationSynthConfig, HierarchySynthConfig)):
            g = replace(g, seed=seed)
        return replace(
            self,
            graph=g,
            walk=replace(self.walk, seed=seed),
            train=replace(self.train, seed=seed),
        )


@dataclass
class PipelineReport:
    accuracy: float
    predictions: list[tuple[str, str, str]]
    artifacts: dict[str, str] = field(default_factory=dict)
    corpus_size: int = 0


def _materialize_graph(spec: PipelineSpec) -> tuple[PropertyGraph, LabeledDataset | None, dict[str, str]]:
    artifacts: dict[str, str] = {}
    source = spec.graph
    dataset: LabeledDataset | None = None

    if isinstance(source, (AffiliationSynthConfig, HierarchySynthConfig)):
        try:
            if isinstance(source, AffiliationSynthConfig):
                synth_graph, dataset = generate_affiliation_graph(source)
            else:
                synth_graph, dataset = generate_hierarchy_graph(source)
        except ValueError as exc:
            raise StageError("synth", exc) from exc
        # Round-trip through the text serialization so a synth-backed run
        # exercises the same ingestion path as a file-backed one.
        buf = io.StringIO()
        graphmod.write_ntriples(graphmod.graph_to_triples(synth_graph), buf)
        text = buf.getvalue()
        if spec.out_dir:
            artifacts["graph.nt"] = _write_text(spec.out_dir, "graph.nt", text)
            with open(os.path.join(spec.out_dir, "train.tsv"), "w", encoding="utf-8") as fh:
                evaluator.write_labels_tsv(dataset.train, fh)
            with open(os.path.join(spec.out_dir, "test.tsv"), "w", encoding="utf-8") as fh:
                evaluator.write_labels_tsv(dataset.test, fh)
            artifacts["train.tsv"] = os.path.join(spec.out_dir, "train.tsv")
            artifacts["test.tsv"] = os.path.join(spec.out_dir, "test.tsv")
        try:
            triples = graphmod.parse_ntriples(text, lenient=spec.lenient)
            graph = graphmod.build_graph(triples, set(spec.type_predicates), spec.literal_policy)
        except ValueError as exc:
            raise StageError("ingest", exc) from exc
        return graph, dataset, artifacts

    try:
        if source.endswith(".bin"):
            graph = graphmod.load_graph(source)
        else:
            with open(source, encoding="utf-8") as fh:
                triples = graphmod.parse_ntriples(fh, lenient=spec.lenient)
                graph = graphmod.build_graph(triples, set(spec.type_predicates), spec.literal_policy)
    except (OSError, ValueError) as exc:
        raise StageError("ingest", exc) from exc
    return graph, None, artifacts


def _write_text(out_dir: str, name: str, text: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _load_dataset(spec: PipelineSpec, synth_dataset: LabeledDataset | None) -> LabeledDataset:
    if synth_dataset is not None:
        return synth_dataset
    if spec.labels is None:
        raise StageError("eval", "no labels: provide train/test TSV paths or a synth graph source")
    try:
        with open(spec.labels[0], encoding="utf-8") as fh:
            train_rows = evaluator.read_labels_tsv(fh)
        with open(spec.labels[1], encoding="utf-8") as fh:
            test_rows = evaluator.read_labels_tsv(fh)
        return LabeledDataset(tuple(train_rows), tuple(test_rows))
    except (OSError, ValueError) as exc:
        raise StageError("eval", exc) from exc


def run_pipeline(spec: PipelineSpec) -> PipelineReport:
    """Execute ingest -> walk -> train -> eval with shared configuration."""
    graph, synth_dataset, artifacts = _materialize_graph(spec)
    weight_fn = resolve_strategy(spec.strategy, graph)

    try:
        corpus = walker.generate_walks(graph, weight_fn, spec.walk, workers=spec.workers)
    except ValueError as exc:
        raise StageError("walk", exc) from exc
    if spec.out_dir:
        buf = io.StringIO()
        walker.write_corpus(corpus, buf)
        artifacts["corpus.txt"] = _write_text(spec.out_dir, "corpus.txt", buf.getvalue())

    try:
        matrix = train(corpus, spec.train, workers=spec.workers)
    except ValueError as exc:
        raise StageError("train", exc) from exc
    if spec.out_dir:
        buf = io.StringIO()
        write_embeddings(matrix, buf)
        artifacts["vectors.txt"] = _write_text(spec.out_dir, "vectors.txt", buf.getvalue())

    dataset = _load_dataset(spec, synth_dataset)
    try:
        preds = evaluator.predictions(matrix, dataset, spec.eval)
    except ValueError as exc:
        raise StageError("eval", exc) from exc
    correct = sum(1 for _, t, p in preds if t == p)
    return PipelineReport(100.0 * correct / len(preds), preds, artifacts, len(corpus))


@dataclass(frozen=True)
class ExperimentSpec:
    graph: "str | AffiliationSynthConfig | HierarchySynthConfig"
    strategies: tuple[tuple[str, str], ...]  # (display name, strategy source)
    trains: tuple[TrainConfig, ...]
    walk: WalkConfig = WalkConfig()
    eval: EvalConfig = EvalConfig()
    labels: tuple[str, str] | None = None
    repetitions: int = 1
    seed: int = 0
    out_dir: str | None = None
    literal_policy: str = "drop"
    lenient: bool = False
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.strategies:
            raise ValueError("at least one strategy required")
        if not self.trains:
            raise ValueError("at least one train config required")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")


@dataclass
class ExperimentResult:
    rows: list[dict]  # strategy, mode, dim, rep, accuracy (or error)

    def csv(self) -> str:
        lines = ["strategy,mode,dim,rep,accuracy"]
        for r in self.rows:
            acc = "error" if r.get("error") else f"{r['accuracy']:.4f}"
            lines.append(f"{r['strategy']},{r['mode']},{r['dim']},{r['rep']},{acc}")
        return "\n".join(lines) + "\n"

    def summary(self) -> list[dict]:
        keys: list[tuple[str, str, int]] = []
        grouped: dict[tuple[str, str, int], list[float]] = {}
        errors: dict[tuple[str, str, int], int] = {}
        for r in self.rows:
            key = (r["strategy"], r["mode"], r["dim"])
            if key not in grouped:
                keys.append(key)
                grouped[key] = []
                errors[key] = 0
            if r.get("error"):
                errors[key] += 1
            else:
                grouped[key].append(r["accuracy"])
        out = []
        for key in keys:
            accs = grouped[key]
            mean = sum(accs) / len(accs) if accs else math.nan
            sd = math.sqrt(sum((a - mean) ** 2 for a in accs) / (len(accs) - 1)) if len(accs) > 1 else 0.0
            out.append(
                {
                    "strategy": key[0],
                    "mode": key[1],
                    "dim": key[2],
                    "n": len(accs),
                    "errors": errors[key],
                    "mean": mean,
                    "sd": sd,
                }
            )
        return out

    def table(self) -> str:
        rows = self.summary()
        header = f"{'strategy':<24} {'mode':<9} {'dim':>4} {'reps':>4} {'accuracy':>16}"
        lines = [header, "-" * len(header)]
        for r in rows:
            acc = "all cells failed" if r["n"] == 0 else f"{r['mean']:7.2f} +- {r['sd']:5.2f}"
            note = f"  ({r['errors']} failed)" if r["errors"] > 0 else ""
            lines.append(f"{r['strategy']:<24} {r['mode']:<9} {r['dim']:>4} {r['n']:>4} {acc:>16}{note}")
        return "\n".join(lines) + "\n"


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run the strategy x train-config matrix.

    Repetition r uses seed (spec.seed + r) for synth, walks, and training,
    shared by every strategy, so cells differ only in their weighting.
    Cell failures are recorded and the run continues.
    """
    rows: list[dict] = []
    for rep in range(spec.repetitions):
        rep_seed = spec.seed + rep
        for strat_name, strat_source in spec.strategies:
            for train_cfg in spec.trains:
                out_dir = None
                if spec.out_dir:
                    out_dir = os.path.join(
                        spec.out_dir, f"{strat_name}-{train_cfg.mode}{train_cfg.dim}-rep{rep}"
                    )
                cell = PipelineSpec(
                    graph=spec.graph,
                    strategy=strat_source,
                    labels=spec.labels,
                    walk=spec.walk,
                    train=train_cfg,
                    eval=spec.eval,
                    out_dir=out_dir,
                    literal_policy=spec.literal_policy,
                    lenient=spec.lenient,
                    workers=spec.workers,
                ).with_seed(rep_seed)
                row = {
                    "strategy": strat_name,
                    "mode": train_cfg.mode,
                    "dim": train_cfg.dim,
                    "rep": rep,
                }
                try:
                    row["accuracy"] = run_pipeline(cell).accuracy
                except StageError as exc:
                    row["error"] = str(exc)
                rows.append(row)
    result = ExperimentResult(rows)
    if spec.out_dir:
        _write_text(spec.out_dir, "results.csv", result.csv())
        _write_text(spec.out_dir, "results.txt", result.table())
    return result
