"""walkvec: node embeddings from biased random walks on RDF-derived graphs.

Pipeline: parse N-Triples into a property graph, generate weighted
random-walk sentences under a pluggable edge-weighting strategy, train
CBOW/skip-gram embeddings with negative sampling, and evaluate them with
k-NN classification.
"""

from .embedder import (
    EmbeddingMatrix,
    TrainConfig,
    Vocabulary,
    build_vocab,
    loss_and_gradients,
    read_embeddings,
    train,
    write_embeddings,
)
from .evaluator import EvalConfig, LabeledDataset, evaluate, knn_predict
from .graph import (
    Edge,
    GraphStats,
    Literal,
    PropertyGraph,
    Triple,
    build_graph,
    compute_stats,
    graph_to_triples,
    load_graph,
    parse_ntriples,
    save_graph,
    write_ntriples,
)
from .pipeline import ExperimentSpec, PipelineSpec, StageError, run_experiment, run_pipeline
from .synth import (
    AffiliationSynthConfig,
    HierarchySynthConfig,
    generate_affiliation_graph,
    generate_hierarchy_graph,
)
from .walker import WalkConfig, WalkCorpus, generate_walks, read_corpus, sample_next_edge, write_corpus
from .weighting import (
    WeightParams,
    WeightRule,
    WeightRuleSet,
    builtin_strategy,
    builtin_weight,
    evaluate_rules,
    fixture_ruleset,
    load_ruleset,
    strategy_ruleset,
)

__version__ = "0.1.0"

__all__ = [
    "AffiliationSynthConfig",
    "Edge",
    "EmbeddingMatrix",
    "EvalConfig",
    "ExperimentSpec",
    "GraphStats",
    "HierarchySynthConfig",
    "LabeledDataset",
    "Literal",
    "PipelineSpec",
    "PropertyGraph",
    "StageError",
    "TrainConfig",
    "Triple",
    "Vocabulary",
    "WalkConfig",
    "WalkCorpus",
    "WeightParams",
    "WeightRule",
    "WeightRuleSet",
    "build_graph",
    "build_vocab",
    "builtin_strategy",
    "builtin_weight",
    "compute_stats",
    "evaluate",
    "evaluate_rules",
    "fixture_ruleset",
    "generate_affiliation_graph",
    "generate_hierarchy_graph",
    "generate_walks",
    "graph_to_triples",
    "knn_predict",
    "load_graph",
    "load_ruleset",
    "loss_and_gradients",
    "parse_ntriples",
    "read_corpus",
    "read_embeddings",
    "run_experiment",
    "run_pipeline",
    "sample_next_edge",
    "save_graph",
    "strategy_ruleset",
    "train",
    "write_corpus",
    "write_embeddings",
    "write_ntriples",
]
