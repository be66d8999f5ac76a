"""kinsim: a Classic-DEVS kernel plus a process-object layer for studying
how consanguineous marriage shifts congenital-disorder prevalence.

Layering, bottom up:

* :mod:`kinsim.kernel` runs any Classic-DEVS model (atomic or coupled).
* :mod:`kinsim.randomness` provides seeded streams and the distribution kit.
* :mod:`kinsim.objects` realizes Source, Combiner, Server, Sink, Path and
  weighted Splitter objects as DEVS atomics.
* :mod:`kinsim.genetics` maps cousin degree to an inbreeding coefficient and
  draws per-birth disorder flags.
* :mod:`kinsim.model` wires the population-growth and consanguinity models.
* :mod:`kinsim.experiment` runs seeded replications and writes CSV reports;
  :mod:`kinsim.cli` exposes them as the ``kinsim`` command.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    ContractViolationError,
    IllegitimateModelError,
    RoutingError,
    SimulationError,
    StructuralError,
)
from .kernel import (
    INFINITY,
    AtomicSpec,
    Coupling,
    CoupledSpec,
    Message,
    SimulationHandle,
    TraceEvent,
    dump_trace,
    initialize,
    run_until,
    step,
)
from .entities import Entity, EntityFactory, ObjectStats, individual_count
from .randomness import (
    Constant,
    DiscreteDistribution,
    Exponential,
    RngStream,
    Uniform,
    make_distribution,
    mean_of,
    sample_discrete,
    substream,
)
from .objects import (
    RouteChoice,
    make_combiner,
    make_path,
    make_server,
    make_sink,
    make_source,
    make_splitter,
    route_select,
)
from .genetics import (
    ConsanguinityDegree,
    assign_disorder,
    disorder_probability,
    inbreeding_coefficient,
)
from .model import (
    ModelConfig,
    RunStats,
    SourceSettings,
    Violation,
    build_consanguinity_model,
    build_population_growth_model,
    collect_run_stats,
    validate_config,
)
from .experiment import (
    ExperimentResult,
    ReportRow,
    csv_text,
    export_csv,
    read_csv,
    run_experiment,
)

__all__ = [name for name in dir() if not name.startswith("_")]
