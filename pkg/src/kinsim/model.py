"""Experiment configuration and the two coupled models built from it.

``build_population_growth_model`` wires the marriage-and-births submodel:
two sources (male and female populations) feed a combiner that pairs one of
each into a marriage, a growth server whose completion trigger creates a
random number of children, and a sink that counts the new population.

``build_consanguinity_model`` extends it: a single whole-population source is
split by sex, each sex stream is split again into consanguineous and
non-consanguineous branches by path weights, and each branch runs its own
marriage combiner, growth server (whose children receive a congenital
disorder draw) and new-population sink.  Fourteen path objects carry the
traffic between stations, so every leg of the flow is individually counted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from .entities import EntityFactory
from .errors import ConfigurationError
from .genetics import ConsanguinityDegree, assign_disorder
from .kernel import Coupling, CoupledSpec, SimulationHandle
from .objects import (
    CombinerState,
    PathState,
    RouteChoice,
    ServerState,
    SinkState,
    SourceState,
    SplitterState,
    make_combiner,
    make_path,
    make_server,
    make_sink,
    make_source,
    make_splitter,
)
from .randomness import DiscreteDistribution, make_distribution, substream

MALE = "male"
FEMALE = "female"
CONSANG = "consanguineous"
NON_CONSANG = "non_consanguineous"

DYNAMIC_OBJECT = "[Dynamic Object]"
SRC_INPUT_BUFFER = "[InputBuffer]"
SRC_OUTPUT_BUFFER = "[OutputBuffer]"
SRC_PROCESSED = "[Processed]"
SRC_PARENT_BUFFER = "[ParentInputBuffer]"
SRC_MEMBER_BUFFER = "[MemberInputBuffer]"
SRC_TRAVELERS = "[Travelers]"

THROUGHPUT = "Throughput"
CONTENT = "Content"

_FRACTION_TOLERANCE = 1e-9

# Offspring-per-marriage law used by default: 10% of couples have no child,
# 20% one, 30% two, 30% three, 8% four and 2% five (cumulative form).
DEFAULT_OFFSPRING_PAIRS = [[0, 0.10], [1, 0.30], [2, 0.60], [3, 0.90], [4, 0.98], [5, 1.00]]


@dataclass
class SourceSettings:
    """Interarrival law and arrival cap for one entity source."""

    interarrival: dict = field(default_factory=lambda: {"type": "constant", "value": 1.0})
    max_arrivals: Optional[int] = None

    def to_dict(self) -> dict:
        return {"interarrival": dict(self.interarrival), "max_arrivals": self.max_arrivals}

    @classmethod
    def from_dict(cls, data: Mapping) -> "SourceSettings":
        return cls(
            interarrival=dict(data.get("interarrival", {"type": "constant", "value": 1.0})),
            max_arrivals=data.get("max_arrivals"),
        )


def _default_sources() -> dict[str, SourceSettings]:
    return {"WP": SourceSettings(), "MP": SourceSettings(), "FP": SourceSettings()}


def _default_routing() -> dict[str, dict[str, float]]:
    # Path weights per sex: consanguineous vs non-consanguineous.  The male
    # pair normalizes to 35.7/101.6 and the female pair to 35.7/99.9.
    return {
        MALE: {CONSANG: 35.7, NON_CONSANG: 65.9},
        FEMALE: {CONSANG: 35.7, NON_CONSANG: 64.2},
    }


@dataclass
class ModelConfig:
    """Every tunable of the consanguinity experiment, JSON round-trippable.

    ``sex_split`` is the (male, female) fraction pair; ``routing_weights``
    carries the per-sex path weights for the consanguineous and
    non-consanguineous branches.  ``inbreeding_f``, when set, overrides the
    coefficient implied by ``consanguinity_degree`` for the consanguineous
    branch.  ``metadata`` holds free-text experiment-frame labels (region,
    religion, commitment) that do not influence the dynamics.
    """

    run_length: float = 2000.0
    replications: int = 10
    base_seed: int = 42
    sources: dict[str, SourceSettings] = field(default_factory=_default_sources)
    sex_split: tuple[float, float] = (0.595, 0.405)
    routing_weights: dict[str, dict[str, float]] = field(default_factory=_default_routing)
    offspring_distribution: dict = field(
        default_factory=lambda: {"type": "discrete", "pairs": [list(p) for p in DEFAULT_OFFSPRING_PAIRS]}
    )
    allele_frequency: float = 0.01
    consanguinity_degree: ConsanguinityDegree = ConsanguinityDegree.FIRST_COUSIN
    inbreeding_f: Optional[float] = None
    metadata: dict[str, str] = field(
        default_factory=lambda: {"region": "", "religion": "", "commitment": ""}
    )

    @classmethod
    def default(cls) -> "ModelConfig":
        return cls()

    def to_dict(self) -> dict:
        return {
            "run_length": self.run_length,
            "replications": self.replications,
            "base_seed": self.base_seed,
            "sources": {name: s.to_dict() for name, s in self.sources.items()},
            "sex_split": {MALE: self.sex_split[0], FEMALE: self.sex_split[1]},
            "routing_weights": {sex: dict(w) for sex, w in self.routing_weights.items()},
            "offspring_distribution": dict(self.offspring_distribution),
            "allele_frequency": self.allele_frequency,
            "consanguinity_degree": self.consanguinity_degree.value,
            "inbreeding_f": self.inbreeding_f,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ModelConfig":
        config = cls()
        if "run_length" in data:
            config.run_length = float(data["run_length"])
        if "replications" in data:
            config.replications = int(data["replications"])
        if "base_seed" in data:
            config.base_seed = int(data["base_seed"])
        if "sources" in data:
            config.sources = {
                name: SourceSettings.from_dict(sub) for name, sub in data["sources"].items()
            }
        if "sex_split" in data:
            split = data["sex_split"]
            if isinstance(split, Mapping):
                config.sex_split = (float(split[MALE]), float(split[FEMALE]))
            else:
                male, female = split
                config.sex_split = (float(male), float(female))
        if "routing_weights" in data:
            config.routing_weights = {
                sex: {branch: float(w) for branch, w in entry.items()}
                for sex, entry in data["routing_weights"].items()
            }
        if "offspring_distribution" in data:
            config.offspring_distribution = dict(data["offspring_distribution"])
        if "allele_frequency" in data:
            config.allele_frequency = float(data["allele_frequency"])
        if "consanguinity_degree" in data:
            raw = data["consanguinity_degree"]
            try:
                config.consanguinity_degree = ConsanguinityDegree(raw)
            except ValueError:
                names = [d.value for d in ConsanguinityDegree]
                raise ConfigurationError(
                    f"unknown consanguinity_degree {raw!r}; expected one of {names}"
                ) from None
        if "inbreeding_f" in data:
            value = data["inbreeding_f"]
            config.inbreeding_f = None if value is None else float(value)
        if "metadata" in data:
            config.metadata = {str(k): str(v) for k, v in data["metadata"].items()}
        return config


@dataclass(frozen=True)
class Violation:
    """One config-invariant failure: which field, what rule, what was seen."""

    field: str
    constraint: str
    observed: Any

    def __str__(self) -> str:
        return f"{self.field}: {self.constraint} (got {self.observed!r})"


def validate_config(config: ModelConfig) -> list[Violation]:
    """Return every violated ModelConfig invariant; empty means valid."""
    violations: list[Violation] = []

    def check_dist(field_name: str, dist_config: Mapping) -> None:
        try:
            make_distribution(dist_config)
        except ConfigurationError as exc:
            violations.append(Violation(field_name, "must be a valid distribution", str(exc)))

    if not config.run_length > 0:
        violations.append(Violation("run_length", "must be > 0", config.run_length))
    if config.replications < 1:
        violations.append(Violation("replications", "must be >= 1", config.replications))
    male, female = config.sex_split
    for label, fraction in ((MALE, male), (FEMALE, female)):
        if not 0.0 <= fraction <= 1.0:
            violations.append(Violation(f"sex_split.{label}", "must lie in [0, 1]", fraction))
    if abs(male + female - 1.0) > _FRACTION_TOLERANCE:
        violations.append(
            Violation("sex_split", f"fractions must sum to 1 within {_FRACTION_TOLERANCE}", male + female)
        )
    for sex in (MALE, FEMALE):
        weights = config.routing_weights.get(sex)
        if weights is None:
            violations.append(Violation(f"routing_weights.{sex}", "missing", None))
            continue
        for branch in (CONSANG, NON_CONSANG):
            weight = weights.get(branch)
            if weight is None or weight <= 0:
                violations.append(
                    Violation(f"routing_weights.{sex}.{branch}", "must be > 0", weight)
                )
    for name in ("WP", "MP", "FP"):
        settings = config.sources.get(name)
        if settings is None:
            violations.append(Violation(f"sources.{name}", "missing", None))
            continue
        check_dist(f"sources.{name}.interarrival", settings.interarrival)
        if settings.max_arrivals is not None and settings.max_arrivals < 0:
            violations.append(
                Violation(f"sources.{name}.max_arrivals", "must be >= 0 or null", settings.max_arrivals)
            )
    try:
        offspring = make_distribution(config.offspring_distribution)
        if not isinstance(offspring, DiscreteDistribution):
            violations.append(
                Violation("offspring_distribution", "must be a discrete distribution",
                          config.offspring_distribution.get("type"))
            )
        elif any(v < 0 for v in offspring.values):
            violations.append(
                Violation("offspring_distribution", "offspring counts must be >= 0", offspring.values)
            )
    except ConfigurationError as exc:
        violations.append(Violation("offspring_distribution", "must be a valid distribution", str(exc)))
    if not 0.0 <= config.allele_frequency <= 1.0:
        violations.append(Violation("allele_frequency", "must lie in [0, 1]", config.allele_frequency))
    if config.inbreeding_f is not None and not 0.0 <= config.inbreeding_f <= 1.0:
        violations.append(Violation("inbreeding_f", "must lie in [0, 1] or null", config.inbreeding_f))
    return violations


def _require_valid(config: ModelConfig) -> None:
    violations = validate_config(config)
    if violations:
        summary = "; ".join(str(v) for v in violations)
        raise ConfigurationError(f"invalid model config: {summary}")


class _Wiring:
    """Accumulates components and couplings in construction order."""

    def __init__(self) -> None:
        self.components: dict[str, Any] = {}
        self.couplings: list[Coupling] = []

    def add(self, name: str, spec) -> str:
        self.components[name] = spec
        return name

    def connect(self, src: str, src_port: str, dst: str, dst_port: str) -> None:
        self.couplings.append(Coupling(src, src_port, dst, dst_port))

    def build(self) -> CoupledSpec:
        return CoupledSpec(
            components=self.components,
            couplings=self.couplings,
            select=list(self.components),
        )


def build_population_growth_model(config: ModelConfig, replication: int = 0) -> CoupledSpec:
    """Marriage and births submodel: MP + FP sources into one combiner.

    The female source feeds the combiner's parent entry and the male source
    its member entry; each marriage then passes through the growth server,
    whose trigger creates children per the offspring distribution, and ends
    in the new-population sink together with its children.
    """
    _require_valid(config)
    root = substream(config.base_seed, replication)
    factory = EntityFactory()
    offspring_dist = make_distribution(config.offspring_distribution)
    offspring_stream = root.named("offspring")

    def on_growth(parent, now):
        count = offspring_dist.sample(offspring_stream)
        children = []
        for _ in range(count):
            child = factory.create("Child", now)
            factory.count_label("Child")
            children.append(child)
        return children

    w = _Wiring()
    for name, stream_name in (("MP", "mp_interarrival"), ("FP", "fp_interarrival")):
        settings = config.sources[name]
        w.add(name, make_source(
            name,
            make_distribution(settings.interarrival),
            settings.max_arrivals,
            factory=factory,
            stream=root.named(stream_name),
        ))
    for i in range(1, 5):
        w.add(f"Path{i}", make_path(0.0))
    w.add("Marriage", make_combiner(batch_quantity=1))
    w.add("Population Growth", make_server(on_processed=on_growth))
    w.add("New Population", make_sink())

    w.connect("MP", "out", "Path1", "in")
    w.connect("Path1", "out", "Marriage", "member_in")
    w.connect("FP", "out", "Path2", "in")
    w.connect("Path2", "out", "Marriage", "parent_in")
    w.connect("Marriage", "out", "Path3", "in")
    w.connect("Path3", "out", "Population Growth", "in")
    w.connect("Population Growth", "out", "Path4", "in")
    w.connect("Path4", "out", "New Population", "in")
    return w.build()


def build_consanguinity_model(config: ModelConfig, replication: int = 0) -> CoupledSpec:
    """Full model: one whole-population source, sex and branch splits,
    two marriage combiners, two growth servers with disorder draws, two sinks.

    Flow: WP source -> sex splitter (relabels MP/FP) -> per-sex branch
    splitter -> four stream stations (MP_C, MP_NC, FP_C, FP_NC) -> marriage
    combiners (female parent, male member) -> growth servers -> sinks, with
    14 path objects carrying the traffic.
    """
    _require_valid(config)
    root = substream(config.base_seed, replication)
    factory = EntityFactory()
    offspring_dist = make_distribution(config.offspring_distribution)
    male_fraction, female_fraction = config.sex_split
    male_weights = config.routing_weights[MALE]
    female_weights = config.routing_weights[FEMALE]

    def growth_trigger(label, degree, offspring_stream, disorder_stream, override):
        def on_growth(parent, now):
            count = offspring_dist.sample(offspring_stream)
            children = []
            for _ in range(count):
                child = factory.create(label, now)
                factory.count_label(label)
                assign_disorder(
                    child, degree, config.allele_frequency, disorder_stream,
                    inbreeding_override=override,
                )
                children.append(child)
            return children
        return on_growth

    on_growth_c = growth_trigger(
        "Child_C", config.consanguinity_degree,
        root.named("offspring_consanguineous"), root.named("disorder_consanguineous"),
        config.inbreeding_f,
    )
    on_growth_nc = growth_trigger(
        "Child_NC", ConsanguinityDegree.UNRELATED,
        root.named("offspring_nonconsanguineous"), root.named("disorder_nonconsanguineous"),
        None,
    )

    wp = config.sources["WP"]
    w = _Wiring()
    w.add("WP", make_source(
        "WP",
        make_distribution(wp.interarrival),
        wp.max_arrivals,
        factory=factory,
        stream=root.named("wp_interarrival"),
    ))
    w.add("SexSplit", make_splitter(
        [
            RouteChoice(MALE, male_fraction, relabel="MP"),
            RouteChoice(FEMALE, female_fraction, relabel="FP"),
        ],
        stream=root.named("sex_split"),
        factory=factory,
    ))
    w.add("MaleBranch", make_splitter(
        [
            RouteChoice(CONSANG, male_weights[CONSANG], set_attrs={"branch": "C"}),
            RouteChoice(NON_CONSANG, male_weights[NON_CONSANG], set_attrs={"branch": "NC"}),
        ],
        stream=root.named("male_branch"),
    ))
    w.add("FemaleBranch", make_splitter(
        [
            RouteChoice(CONSANG, female_weights[CONSANG], set_attrs={"branch": "C"}),
            RouteChoice(NON_CONSANG, female_weights[NON_CONSANG], set_attrs={"branch": "NC"}),
        ],
        stream=root.named("female_branch"),
    ))
    for station, stream_tag in (("MP_C", "MP_C"), ("MP_NC", "MP_NC"),
                                ("FP_C", "FP_C"), ("FP_NC", "FP_NC")):
        w.add(station, make_splitter([RouteChoice("out", set_attrs={"stream": stream_tag})]))
    path_weights = {
        1: male_fraction, 2: female_fraction,
        3: male_weights[CONSANG], 4: male_weights[NON_CONSANG],
        5: female_weights[CONSANG], 6: female_weights[NON_CONSANG],
    }
    for i in range(1, 15):
        w.add(f"Path{i}", make_path(0.0, weight=path_weights.get(i, 1.0)))
    w.add("Marriage_C", make_combiner(batch_quantity=1))
    w.add("Marriage_NC", make_combiner(batch_quantity=1))
    w.add("PopulationG_C", make_server(on_processed=on_growth_c))
    w.add("PopulationG_NC", make_server(on_processed=on_growth_nc))
    w.add("NewPopulation_C", make_sink())
    w.add("NewPopulation_NC", make_sink())

    w.connect("WP", "out", "SexSplit", "in")
    w.connect("SexSplit", MALE, "Path1", "in")
    w.connect("Path1", "out", "MaleBranch", "in")
    w.connect("SexSplit", FEMALE, "Path2", "in")
    w.connect("Path2", "out", "FemaleBranch", "in")
    w.connect("MaleBranch", CONSANG, "Path3", "in")
    w.connect("Path3", "out", "MP_C", "in")
    w.connect("MaleBranch", NON_CONSANG, "Path4", "in")
    w.connect("Path4", "out", "MP_NC", "in")
    w.connect("FemaleBranch", CONSANG, "Path5", "in")
    w.connect("Path5", "out", "FP_C", "in")
    w.connect("FemaleBranch", NON_CONSANG, "Path6", "in")
    w.connect("Path6", "out", "FP_NC", "in")
    w.connect("MP_C", "out", "Path7", "in")
    w.connect("Path7", "out", "Marriage_C", "member_in")
    w.connect("MP_NC", "out", "Path8", "in")
    w.connect("Path8", "out", "Marriage_NC", "member_in")
    w.connect("FP_C", "out", "Path9", "in")
    w.connect("Path9", "out", "Marriage_C", "parent_in")
    w.connect("FP_NC", "out", "Path10", "in")
    w.connect("Path10", "out", "Marriage_NC", "parent_in")
    w.connect("Marriage_C", "out", "Path11", "in")
    w.connect("Path11", "out", "PopulationG_C", "in")
    w.connect("Marriage_NC", "out", "Path12", "in")
    w.connect("Path12", "out", "PopulationG_NC", "in")
    w.connect("PopulationG_C", "out", "Path13", "in")
    w.connect("Path13", "out", "NewPopulation_C", "in")
    w.connect("PopulationG_NC", "out", "Path14", "in")
    w.connect("Path14", "out", "NewPopulation_NC", "in")
    return w.build()


# ---------------------------------------------------------------------------
# Statistics harvesting


@dataclass
class RunStats:
    """Raw statistics of one finished replication.

    ``rows`` are (object name, data source, category, value) tuples in a
    stable order; the conservation fields count individuals so that
    ``created_total == destroyed_individuals + held_individuals`` holds
    exactly at any observation instant.
    """

    rows: list[tuple[str, str, str, int]] = field(default_factory=list)
    label_counts: dict[str, int] = field(default_factory=dict)
    created_total: int = 0
    destroyed_units: int = 0
    destroyed_individuals: int = 0
    held_individuals: int = 0
    destroyed_by_class: dict[str, int] = field(default_factory=dict)
    affected_by_class: dict[str, int] = field(default_factory=dict)

    def value(self, object_name: str, data_source: str) -> int:
        for name, source, _, value in self.rows:
            if name == object_name and source == data_source:
                return value
        raise KeyError((object_name, data_source))


def collect_run_stats(handle: SimulationHandle) -> RunStats:
    """Harvest object statistics and conservation totals from a finished run."""
    stats = RunStats()
    factories: dict[int, EntityFactory] = {}
    for name, state in handle.components():
        if isinstance(state, SourceState):
            factories[id(state.factory)] = state.factory
            stats.held_individuals += state.held_individuals()
        elif isinstance(state, SplitterState):
            stats.held_individuals += state.held_individuals()
        elif isinstance(state, PathState):
            stats.rows.append((name, SRC_TRAVELERS, THROUGHPUT, state.stats.buffer("Travelers").entered))
            stats.held_individuals += state.held_individuals()
        elif isinstance(state, CombinerState):
            s = state.stats
            stats.rows.append((name, SRC_MEMBER_BUFFER, CONTENT, s.buffer("MemberInputBuffer").exited))
            stats.rows.append((name, SRC_OUTPUT_BUFFER, CONTENT, s.buffer("OutputBuffer").exited))
            stats.rows.append((name, SRC_PARENT_BUFFER, CONTENT, s.buffer("ParentInputBuffer").entered))
            stats.rows.append((name, SRC_PROCESSED, THROUGHPUT, s.processed))
            stats.held_individuals += state.held_individuals()
        elif isinstance(state, ServerState):
            s = state.stats
            stats.rows.append((name, SRC_INPUT_BUFFER, CONTENT, s.buffer("InputBuffer").entered))
            stats.rows.append((name, SRC_OUTPUT_BUFFER, CONTENT, s.buffer("OutputBuffer").exited))
            stats.rows.append((name, SRC_PROCESSED, THROUGHPUT, s.processed))
            stats.held_individuals += state.held_individuals()
        elif isinstance(state, SinkState):
            s = state.stats
            stats.rows.append((name, SRC_INPUT_BUFFER, THROUGHPUT, s.buffer("InputBuffer").entered))
            stats.destroyed_units += s.destroyed
            stats.destroyed_individuals += s.destroyed_individuals
            for label, count in s.destroyed_by_class.items():
                stats.destroyed_by_class[label] = stats.destroyed_by_class.get(label, 0) + count
            for label, count in state.affected_by_class.items():
                stats.affected_by_class[label] = stats.affected_by_class.get(label, 0) + count
    for factory in factories.values():
        stats.created_total += factory.created_total
        for label, count in factory.label_counts.items():
            stats.label_counts[label] = stats.label_counts.get(label, 0) + count
    for label in sorted(stats.label_counts):
        stats.rows.append((label, DYNAMIC_OBJECT, THROUGHPUT, stats.label_counts[label]))
    return stats
