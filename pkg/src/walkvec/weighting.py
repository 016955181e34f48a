"""Edge-weighting strategies for biased walks.

Two families are provided: structural strategies computed from graph-wide
statistics (predicate/object frequency and their inverses, plus uniform),
and declarative rule sets that assign weights from edge labels, end-node
types, or a start-node look-ahead. Rule sets evaluate first-match-wins
with a mandatory default, so every edge gets a strictly positive weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Iterable

from .graph import Edge, GraphStats, PropertyGraph

BUILTIN_STRATEGIES = (
    "uniform",
    "predicate_freq",
    "inv_predicate_freq",
    "object_freq",
    "inv_object_freq",
)

MATCHER_KEYWORDS = ("edge-label", "end-node-type", "start-has-out-edge", "always")

#: Callable the walker consumes: (edge, graph) -> positive weight.
WeightFn = Callable[[Edge, PropertyGraph], float]


class RuleSyntaxError(ValueError):
    """Invalid rule-file input, carrying the offending line number."""

    def __init__(self, lineno: int, reason: str):
        super().__init__(f"line {lineno}: {reason}")
        self.lineno = lineno


def label_matches(value: str, needles: tuple[str, ...]) -> bool:
    """True if value equals a needle or ends with one at a '#'/'/' boundary.

    The boundary rule lets short rule files written against local names
    (e.g. ``member``) match full IRIs on real datasets without matching
    accidental suffixes (``remember``).
    """
    for needle in needles:
        if value == needle or value.endswith("#" + needle) or value.endswith("/" + needle):
            return True
    return False


@dataclass(frozen=True)
class WeightParams:
    """Weight levels for the shipped strategies: low < mid < high tiers."""

    w_low: float
    w_mid: float
    w_high: float

    def __post_init__(self) -> None:
        if not (0 < self.w_low <= self.w_mid <= self.w_high):
            raise ValueError(f"require 0 < w_low <= w_mid <= w_high, got {self}")

    @classmethod
    def pair(cls, w_low: float, w_high: float) -> "WeightParams":
        """Two-level strategy params; the mid tier is unused."""
        return cls(w_low, w_high, w_high)


@dataclass(frozen=True)
class WeightRule:
    matcher: str
    args: tuple[str, ...]
    weight: float
    negate: bool = False

    def __post_init__(self) -> None:
        if self.matcher not in MATCHER_KEYWORDS:
            raise ValueError(f"unknown matcher: {self.matcher!r}")
        if not (self.weight > 0 and math.isfinite(self.weight)):
            raise ValueError(f"rule weight must be a positive finite real, got {self.weight}")
        if self.matcher == "always":
            if self.args:
                raise ValueError("'always' takes no arguments")
        elif not self.args:
            raise ValueError(f"matcher {self.matcher!r} needs at least one argument")

    def matches(self, edge: Edge, graph: PropertyGraph) -> bool:
        if self.matcher == "edge-label":
            hit = label_matches(edge.label, self.args)
        elif self.matcher == "end-node-type":
            hit = any(label_matches(t, self.args) for t in graph.types(edge.end))
        elif self.matcher == "start-has-out-edge":
            hit = any(label_matches(e.label, self.args) for e in graph.out_edges(edge.start))
        else:  # always
            hit = True
        return hit != self.negate


@dataclass(frozen=True)
class WeightRuleSet:
    rules: tuple[WeightRule, ...]
    default_weight: float

    def __post_init__(self) -> None:
        if not (self.default_weight > 0 and math.isfinite(self.default_weight)):
            raise ValueError(f"default weight must be a positive finite real, got {self.default_weight}")

    def weight(self, edge: Edge, graph: PropertyGraph) -> float:
        for rule in self.rules:
            if rule.matches(edge, graph):
                return rule.weight
        return self.default_weight

    __call__ = weight


def evaluate_rules(rules: WeightRuleSet, edge: Edge, graph: PropertyGraph) -> float:
    """Weight of the first matching rule, else the default. Pure."""
    return rules.weight(edge, graph)


def builtin_weight(strategy: str, edge: Edge, stats: GraphStats) -> float:
    """One structural weight for one edge, from precomputed graph stats."""
    if strategy == "uniform":
        return 1.0
    if strategy in ("predicate_freq", "inv_predicate_freq"):
        freq = stats.predicate_freq.get(edge.label)
        if freq is None:
            raise ValueError(f"stats/graph mismatch: unknown edge label {edge.label!r}")
        return float(freq) if strategy == "predicate_freq" else 1.0 / freq
    if strategy in ("object_freq", "inv_object_freq"):
        deg = stats.in_degree.get(edge.end)
        if deg is None:
            raise ValueError(f"stats/graph mismatch: node {edge.end} has no recorded in-degree")
        return float(deg) if strategy == "object_freq" else 1.0 / deg
    raise ValueError(f"unknown strategy: {strategy!r}")


def builtin_strategy(strategy: str, stats: GraphStats) -> WeightFn:
    """Bind a builtin strategy name to stats, yielding a walker weight fn."""
    if strategy not in BUILTIN_STRATEGIES:
        raise ValueError(f"unknown strategy: {strategy!r}")

    def weight_fn(edge: Edge, graph: PropertyGraph) -> float:
        return builtin_weight(strategy, edge, stats)

    return weight_fn


def load_ruleset(text: str | Iterable[str]) -> WeightRuleSet:
    """Parse the line-oriented rule-file format.

    Lines: ``rule <matcher> [<arg,...>] [not] weight=<float>`` in priority
    order, then a final ``default weight=<float>``. Blank lines and ``#``
    comments are ignored.
    """
    lines = text.splitlines() if isinstance(text, str) else text
    rules: list[WeightRule] = []
    default: float | None = None
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if default is not None:
            raise RuleSyntaxError(lineno, "content after the default line")
        tokens = stripped.split()
        if tokens[-1].startswith("weight="):
            try:
                weight = float(tokens[-1][len("weight="):])
            except ValueError:
                raise RuleSyntaxError(lineno, f"bad weight literal {tokens[-1]!r}") from None
        else:
            raise RuleSyntaxError(lineno, "line must end with weight=<float>")
        if not (weight > 0 and math.isfinite(weight)):
            raise RuleSyntaxError(lineno, f"weight must be a positive finite real, got {weight}")

        if tokens[0] == "default":
            if len(tokens) != 2:
                raise RuleSyntaxError(lineno, "default line is 'default weight=<float>'")
            default = weight
            continue
        if tokens[0] != "rule":
            raise RuleSyntaxError(lineno, f"expected 'rule' or 'default', got {tokens[0]!r}")
        body = tokens[1:-1]
        if not body:
            raise RuleSyntaxError(lineno, "missing matcher keyword")
        matcher = body[0]
        if matcher not in MATCHER_KEYWORDS:
            raise RuleSyntaxError(lineno, f"unknown matcher keyword {matcher!r}")
        body = body[1:]
        negate = False
        if body and body[-1] == "not":
            negate = True
            body = body[:-1]
        if matcher == "always":
            if body:
                raise RuleSyntaxError(lineno, "'always' takes no arguments")
            args: tuple[str, ...] = ()
        else:
            if len(body) != 1:
                raise RuleSyntaxError(lineno, f"matcher {matcher!r} takes one comma-separated argument list")
            args = tuple(a for a in body[0].split(",") if a)
            if not args:
                raise RuleSyntaxError(lineno, f"matcher {matcher!r} needs at least one argument")
        rules.append(WeightRule(matcher, args, weight, negate))
    if default is None:
        raise RuleSyntaxError(0, "missing final 'default weight=<float>' line")
    return WeightRuleSet(tuple(rules), default)


def load_ruleset_file(path: str) -> WeightRuleSet:
    with open(path, encoding="utf-8") as fh:
        return load_ruleset(fh.read())


FIXTURE_NAMES = (
    "aifb-1", "aifb-2", "aifb-3", "aifb-4",
    "bgs-1", "bgs-2", "bgs-3", "bgs-4", "bgs-5",
)


def fixture_ruleset(name: str) -> WeightRuleSet:
    """Load one of the shipped rule files by short name (e.g. ``aifb-4``)."""
    if name not in FIXTURE_NAMES:
        raise ValueError(f"unknown fixture {name!r}; available: {', '.join(FIXTURE_NAMES)}")
    text = resources.files("walkvec.rules").joinpath(f"{name}.rules").read_text("utf-8")
    return load_ruleset(text)


#: Default weight levels for the shipped strategies.
STRATEGY_DEFAULT_PARAMS: dict[str, WeightParams] = {
    "aifb-1": WeightParams.pair(0.1, 10),
    "aifb-2": WeightParams.pair(0.1, 10),
    "aifb-3": WeightParams.pair(0.1, 10),
    "aifb-4": WeightParams(0.1, 10, 100),
    "bgs-1": WeightParams.pair(0.1, 10),
    "bgs-2": WeightParams.pair(0.001, 1),
    "bgs-3": WeightParams(0.1, 10, 100),
    "bgs-4": WeightParams.pair(0.1, 1),
    "bgs-5": WeightParams(0.1, 10, 100),
}


def strategy_ruleset(name: str, params: WeightParams | None = None) -> WeightRuleSet:
    """Build one of the nine shipped strategies with custom weight levels.

    With default params this is equivalent to the corresponding shipped
    rule file.
    """
    if name not in STRATEGY_DEFAULT_PARAMS:
        raise ValueError(f"unknown strategy {name!r}")
    p = params if params is not None else STRATEGY_DEFAULT_PARAMS[name]

    def rule(matcher: str, args: tuple[str, ...], weight: float, negate: bool = False) -> WeightRule:
        return WeightRule(matcher, args, weight, negate)

    if name == "aifb-1":
        return WeightRuleSet((rule("edge-label", ("member", "affiliation"), p.w_high),), p.w_low)
    if name == "aifb-2":
        return WeightRuleSet(
            (rule("end-node-type", ("Person", "Project", "ResearchGroup", "ResearchTopic"), p.w_high),),
            p.w_low,
        )
    if name == "aifb-3":
        return WeightRuleSet((rule("end-node-type", ("Publication",), p.w_low),), p.w_high)
    if name == "aifb-4":
        # End-node check outranks the edge-label check.
        return WeightRuleSet(
            (
                rule("end-node-type", ("Publication",), p.w_low),
                rule("edge-label", ("affiliation", "member"), p.w_high),
            ),
            p.w_mid,
        )
    if name == "bgs-1":
        return WeightRuleSet((rule("edge-label", ("hasLithogenesis",), p.w_high),), p.w_low)
    if name == "bgs-2":
        return WeightRuleSet((rule("edge-label", ("hasLithogenesis",), p.w_low),), p.w_high)
    if name == "bgs-3":
        return WeightRuleSet(
            (
                rule("edge-label", ("hasLithogenesis",), p.w_low),
                rule("edge-label", ("broader", "narrower"), p.w_high),
            ),
            p.w_mid,
        )
    if name == "bgs-4":
        return WeightRuleSet((rule("edge-label", ("inScheme",), p.w_low),), p.w_high)
    # bgs-5: hierarchy-climbing strategy. Ordered so that after peeling off
    # broader edges and giving every non-hasLithogenesis edge the mid tier,
    # only hasLithogenesis edges reach the look-ahead rule: start nodes that
    # can still climb get the low tier, dead ends fall through to high.
    return WeightRuleSet(
        (
            rule("edge-label", ("broader",), p.w_high),
            rule("edge-label", ("hasLithogenesis",), p.w_mid, negate=True),
            rule("start-has-out-edge", ("broader",), p.w_low),
        ),
        p.w_high,
    )
