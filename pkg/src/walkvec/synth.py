"""Synthetic benchmark graphs with planted ground truth.

Two desk-scale generators: an affiliation graph (people, groups,
projects, topics, publications) where the task is predicting a person's
group, and a concept-hierarchy graph (broader/narrower tree, rock units,
lithogenesis classes) where the task is predicting a unit's class.

Both withhold the label-bearing edges of test nodes from the graph, so
walks cannot read a test label directly; edge labels and node types reuse
the names the shipped rule files expect, so those fixtures apply
unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluator import LabeledDataset
from .graph import RDF_TYPE, PropertyGraph, Triple, build_graph

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class AffiliationSynthConfig:
    groups: int = 4
    persons_per_group: int = 30
    projects_per_group: int = 3
    topics_per_group: int = 3
    publications: int = 520
    external_author_fraction: float = 0.5
    cross_group_pub_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.groups < 2:
            raise ValueError("groups must be >= 2")
        if min(self.persons_per_group, self.projects_per_group, self.topics_per_group) < 1:
            raise ValueError("persons/projects/topics per group must be >= 1")
        if self.publications < 0:
            raise ValueError("publications must be >= 0")
        for frac in (self.external_author_fraction, self.cross_group_pub_fraction):
            if not 0.0 <= frac <= 1.0:
                raise ValueError("fractions must be in [0, 1]")


@dataclass(frozen=True)
class HierarchySynthConfig:
    concept_tree_depth: int = 3
    branching: int = 3
    rock_units: int = 120
    lithogenesis_classes: int = 3
    label_from_ancestor_prob: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.concept_tree_depth < 2:
            raise ValueError("concept_tree_depth must be >= 2")
        if self.branching < 2:
            raise ValueError("branching must be >= 2")
        if self.lithogenesis_classes < 2:
            raise ValueError("lithogenesis_classes must be >= 2")
        if self.lithogenesis_classes > self.branching:
            raise ValueError("need lithogenesis_classes <= branching or some class has no subtree")
        if self.rock_units < 1:
            raise ValueError("rock_units must be >= 1")
        if not 0.0 <= self.label_from_ancestor_prob <= 1.0:
            raise ValueError("label_from_ancestor_prob must be in [0, 1]")


def _split_70_30(items: list[str], rng: np.random.Generator, what: str) -> tuple[list[str], list[str]]:
    test_n = round(0.3 * len(items))
    if test_n == 0 or test_n == len(items):
        raise ValueError(f"70/30 split of {what} leaves an empty side ({len(items)} items)")
    order = rng.permutation(len(items))
    test_idx = set(order[:test_n].tolist())
    train = [x for i, x in enumerate(items) if i not in test_idx]
    test = [x for i, x in enumerate(items) if i in test_idx]
    return train, test


def generate_affiliation_graph(config: AffiliationSynthConfig) -> tuple[PropertyGraph, LabeledDataset]:
    """Planted-groups graph: group membership only reachable through
    group-local projects/topics (all persons) and affiliation edges (train
    persons only); publications add cross-group authorship noise."""
    rng = np.random.default_rng(config.seed & _SEED_MASK)
    G, P = config.groups, config.persons_per_group
    groups = [f"group{g}" for g in range(G)]
    persons = [[f"person_g{g}_{i:02d}" for i in range(P)] for g in range(G)]
    projects = [[f"project_g{g}_{k}" for k in range(config.projects_per_group)] for g in range(G)]
    topics = [[f"topic_g{g}_{k}" for k in range(config.topics_per_group)] for g in range(G)]
    n_external = max(1, (G * P) // 10)
    externals = [f"external_{e:02d}" for e in range(n_external)]

    triples: list[Triple] = []

    def t(s: str, p: str, o: str) -> None:
        triples.append(Triple(s, p, o))

    for g in range(G):
        t(groups[g], RDF_TYPE, "ResearchGroup")
        for person in persons[g]:
            t(person, RDF_TYPE, "Person")
        for proj in projects[g]:
            t(proj, RDF_TYPE, "Project")
        for topic in topics[g]:
            t(topic, RDF_TYPE, "ResearchTopic")
    for ext in externals:
        t(ext, RDF_TYPE, "Person")

    train_pairs: list[tuple[str, str]] = []
    test_pairs: list[tuple[str, str]] = []
    for g in range(G):
        train_p, test_p = _split_70_30(persons[g], rng, f"group {g} persons")
        train_pairs += [(p, groups[g]) for p in train_p]
        test_pairs += [(p, groups[g]) for p in test_p]
        for person in train_p:
            t(person, "affiliation", groups[g])
            t(groups[g], "member", person)

    n_proj = config.projects_per_group
    for g in range(G):
        for person in persons[g]:
            first = int(rng.integers(0, n_proj))
            t(person, "worksAtProject", projects[g][first])
            if n_proj > 1 and rng.random() < 0.5:
                second = (first + 1 + int(rng.integers(0, n_proj - 1))) % n_proj
                t(person, "worksAtProject", projects[g][second])
        n_top = config.topics_per_group
        for k, proj in enumerate(projects[g]):
            t(proj, "isAbout", topics[g][k % n_top])
            if n_top > 1:
                t(proj, "isAbout", topics[g][(k + 1) % n_top])

    # Publication co-authorship is a poor affiliation signal by design:
    # group-pure publications are single-author (diffusion, no pairwise
    # signal), cross-group ones blend a group evenly with its neighbor
    # (misleading), and externals belong to no group at all. Walks that
    # favor publications therefore spend their budget on clutter.
    for m in range(config.publications):
        pub = f"pub_{m:03d}"
        t(pub, RDF_TYPE, "Publication")
        home = m % G
        cross = rng.random() < config.cross_group_pub_fraction
        if cross:
            author_groups = [home, (home + 1) % G]
        else:
            author_groups = [home]
        seen: set[str] = set()
        for g in author_groups:
            person = persons[g][int(rng.integers(0, P))]
            if person not in seen:
                seen.add(person)
                t(person, "author", pub)
        if rng.random() < config.external_author_fraction:
            for _ in range(2):
                ext = externals[int(rng.integers(0, n_external))]
                if ext not in seen:
                    seen.add(ext)
                    t(ext, "author", pub)

    graph = build_graph(triples)
    dataset = LabeledDataset(tuple(train_pairs), tuple(test_pairs))
    return graph, dataset


def generate_hierarchy_graph(config: HierarchySynthConfig) -> tuple[PropertyGraph, LabeledDataset]:
    """Concept tree with reciprocal broader/narrower edges; rock units hang
    off leaf concepts. Class labels reach the graph through hasLithogenesis
    edges on train units and on internal ancestor concepts (with the
    configured probability); test units carry none."""
    rng = np.random.default_rng(config.seed & _SEED_MASK)
    depth, B, C = config.concept_tree_depth, config.branching, config.lithogenesis_classes
    classes = [f"litho_{c}" for c in range(C)]

    triples: list[Triple] = []

    def t(s: str, p: str, o: str) -> None:
        triples.append(Triple(s, p, o))

    for cls in classes:
        t(cls, RDF_TYPE, "Lithogenesis")
    t("scheme", RDF_TYPE, "ConceptScheme")

    # Concepts level by level; a concept's class comes from its depth-1
    # ancestor's position, so whole subtrees share one class.
    levels: list[list[tuple[str, int]]] = [[("concept_r", -1)]]
    t("concept_r", RDF_TYPE, "Concept")
    t("concept_r", "inScheme", "scheme")
    for d in range(1, depth + 1):
        level: list[tuple[str, int]] = []
        for parent, parent_cls in levels[d - 1]:
            for b in range(B):
                name = f"{parent}_{b}" if parent != "concept_r" else f"concept_{b}"
                cls_idx = b % C if d == 1 else parent_cls
                level.append((name, cls_idx))
                t(name, RDF_TYPE, "Concept")
                t(name, "broader", parent)
                t(parent, "narrower", name)
                t(name, "inScheme", "scheme")
                if d < depth and rng.random() < config.label_from_ancestor_prob:
                    t(name, "hasLithogenesis", classes[cls_idx])
        levels.append(level)

    # Lateral related-term links mostly cross subtree (class) boundaries;
    # they reward strategies that stick to the broader/narrower hierarchy.
    concepts = [name for level in levels for name, _ in level]
    for name in concepts:
        for _ in range(3):
            other = concepts[int(rng.integers(0, len(concepts)))]
            if other != name:
                t(name, "related", other)

    leaves = levels[depth]
    unit_labels: dict[str, int] = {}
    for r in range(config.rock_units):
        unit = f"unit_{r:03d}"
        leaf, cls_idx = leaves[int(rng.integers(0, len(leaves)))]
        unit_labels[unit] = cls_idx
        t(unit, RDF_TYPE, "RockUnit")
        t(unit, "inCategory", leaf)

    by_class: dict[int, list[str]] = {c: [] for c in range(C)}
    for unit, cls_idx in unit_labels.items():
        by_class[cls_idx].append(unit)
    train_pairs: list[tuple[str, str]] = []
    test_pairs: list[tuple[str, str]] = []
    for c in range(C):
        if not by_class[c]:
            raise ValueError(f"class {classes[c]} received no rock units; increase rock_units")
        train_u, test_u = _split_70_30(by_class[c], rng, f"class {classes[c]} units")
        train_pairs += [(u, classes[c]) for u in train_u]
        test_pairs += [(u, classes[c]) for u in test_u]
        for unit in train_u:
            t(unit, "hasLithogenesis", classes[c])

    graph = build_graph(triples)
    dataset = LabeledDataset(tuple(train_pairs), tuple(test_pairs))
    return graph, dataset
