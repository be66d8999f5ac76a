"""Process-object library: Source, Combiner, Server, Sink, Path, Splitter.

Each object is realized as one DEVS atomic whose state carries an
:class:`~kinsim.entities.ObjectStats`.  Conventions shared by all objects:

* Zero service and travel times are the default; entities then cascade
  through an arbitrary number of objects at a single clock value, one kernel
  step per hop, in FIFO order.
* Objects track their own absolute clock (``now``) from the elapsed times the
  kernel hands to ``delta_ext``; models built from these objects are expected
  to start at t0 = 0.
* Buffer statistics distinguish arrivals (``entered``) from departures
  (``exited``); reports choose which side of a buffer to show.  A combiner's
  parent buffer reports candidates that arrived; its member buffer reports
  members actually consumed into a batch, which equals the number of
  processed batches whenever batches hold one member.
"""

from __future__ import annotations

from collections import deque
from heapq import heappop, heappush
from typing import Any, Callable, Optional, Sequence

from .entities import Entity, EntityFactory, ObjectStats, individual_count
from .errors import ConfigurationError, ContractViolationError
from .kernel import INFINITY, AtomicSpec, Message, Time
from .randomness import Distribution, RngStream

PORT_IN = "in"
PORT_OUT = "out"
PORT_PARENT_IN = "parent_in"
PORT_MEMBER_IN = "member_in"

PARENT_BUFFER = "ParentInputBuffer"
MEMBER_BUFFER = "MemberInputBuffer"
INPUT_BUFFER = "InputBuffer"
OUTPUT_BUFFER = "OutputBuffer"
TRAVELERS = "Travelers"


def route_select(outgoing: Sequence[tuple[Any, float]], u: float) -> int:
    """Pick an outgoing path index by cumulative scan over the list order.

    Entry ``i`` is selected with probability ``weight_i / sum(weights)``.
    ``u`` is a uniform sample in [0, 1).  All weights must be positive and
    the list must not be empty.
    """
    if not outgoing:
        raise ConfigurationError("route_select: no outgoing paths to choose from")
    total = 0.0
    for _, weight in outgoing:
        if weight <= 0:
            raise ConfigurationError(f"route_select: weights must be positive, got {weight}")
        total += weight
    threshold = u * total
    acc = 0.0
    last = len(outgoing) - 1
    for i, (_, weight) in enumerate(outgoing):
        acc += weight
        if threshold < acc:
            return i
    return last  # float roundoff at u ~ 1.0


# ---------------------------------------------------------------------------
# Source


class SourceState:
    __slots__ = ("class_label", "dist", "remaining", "factory", "stream", "now",
                 "next_time", "pending", "stats")

    def __init__(self, class_label, dist, max_arrivals, factory, stream):
        self.class_label = class_label
        self.dist = dist
        self.remaining = max_arrivals
        self.factory = factory
        self.stream = stream
        self.now: Time = 0.0
        self.next_time: Time = 0.0
        self.pending: Optional[Entity] = None
        self.stats = ObjectStats()
        if max_arrivals is None or max_arrivals > 0:
            self._schedule_next()

    def _schedule_next(self) -> None:
        delay = self.dist.sample(self.stream)
        if delay < 0:
            raise ContractViolationError(
                f"interarrival sample must be >= 0, got {delay} for source {self.class_label!r}"
            )
        self.next_time = self.now + delay
        self.pending = self.factory.create(self.class_label, self.next_time)

    def held_individuals(self) -> int:
        return individual_count(self.pending) if self.pending is not None else 0


def _source_ta(s: SourceState) -> Time:
    return s.next_time - s.now if s.pending is not None else INFINITY


def _source_out(s: SourceState) -> list[Message]:
    return [Message(PORT_OUT, s.pending)]


def _source_dint(s: SourceState) -> SourceState:
    s.now = s.next_time
    s.stats.created += 1
    s.factory.count_label(s.class_label)
    if s.remaining is not None:
        s.remaining -= 1
        if s.remaining == 0:
            s.pending = None
            return s
    s._schedule_next()
    return s


def make_source(
    class_label: str,
    interarrival: Distribution,
    max_arrivals: Optional[int],
    *,
    factory: EntityFactory,
    stream: RngStream,
) -> AtomicSpec:
    """Emit one fresh entity per interarrival sample, starting after the first.

    ``max_arrivals=None`` means unbounded.  Negative interarrival samples
    raise :class:`ContractViolationError`.
    """
    if max_arrivals is not None and max_arrivals < 0:
        raise ConfigurationError(f"max_arrivals must be >= 0 or None, got {max_arrivals}")
    state = SourceState(class_label, interarrival, max_arrivals, factory, stream)
    return AtomicSpec(
        initial_state=state,
        time_advance=_source_ta,
        delta_int=_source_dint,
        delta_ext=_reject_input,
        output=_source_out,
        output_ports=(PORT_OUT,),
    )


def _reject_input(state, elapsed, bag):  # sources declare no input ports
    raise AssertionError("component without input ports received input")


# ---------------------------------------------------------------------------
# Splitter (weighted routing node)


class RouteChoice:
    """One outgoing port of a splitter with its weight and entity actions."""

    __slots__ = ("port", "weight", "relabel", "set_attrs")

    def __init__(self, port: str, weight: float = 1.0,
                 relabel: Optional[str] = None, set_attrs: Optional[dict] = None):
        self.port = port
        self.weight = weight
        self.relabel = relabel
        self.set_attrs = set_attrs


class SplitterState:
    __slots__ = ("choices", "weighted", "stream", "factory", "pending", "stats")

    def __init__(self, choices, stream, factory):
        self.choices = choices
        self.weighted = [(c.port, c.weight) for c in choices]
        self.stream = stream
        self.factory = factory
        self.pending: list[tuple[str, Entity]] = []
        self.stats = ObjectStats()

    def held_individuals(self) -> int:
        return sum(individual_count(e) for _, e in self.pending)


def _splitter_ta(s: SplitterState) -> Time:
    return 0.0 if s.pending else INFINITY


def _splitter_out(s: SplitterState) -> list[Message]:
    return [Message(port, entity) for port, entity in s.pending]


def _splitter_dint(s: SplitterState) -> SplitterState:
    s.stats.exited += len(s.pending)
    s.pending.clear()
    return s


def _splitter_dext(s: SplitterState, elapsed: Time, bag) -> SplitterState:
    for msg in bag:
        entity = msg.payload
        s.stats.entered += 1
        if len(s.choices) == 1:
            choice = s.choices[0]
        else:
            choice = s.choices[route_select(s.weighted, s.stream.uniform())]
        if choice.relabel is not None:
            entity.class_label = choice.relabel
            if s.factory is not None:
                s.factory.count_label(choice.relabel)
        if choice.set_attrs:
            entity.attributes.update(choice.set_attrs)
        s.pending.append((choice.port, entity))
    return s


def make_splitter(
    choices: Sequence[RouteChoice],
    *,
    stream: Optional[RngStream] = None,
    factory: Optional[EntityFactory] = None,
) -> AtomicSpec:
    """Instantaneous routing node: each entity picks one outgoing port.

    With a single choice the splitter is a plain relay station and draws
    nothing from the stream.  A choice may relabel the entity's class (the
    relabel is counted as a dynamic-object assignment on the factory) or set
    attributes on it.
    """
    if not choices:
        raise ConfigurationError("splitter needs at least one outgoing choice")
    if len(choices) > 1 and stream is None:
        raise ConfigurationError("weighted splitter needs a random stream")
    state = SplitterState(list(choices), stream, factory)
    return AtomicSpec(
        initial_state=state,
        time_advance=_splitter_ta,
        delta_int=_splitter_dint,
        delta_ext=_splitter_dext,
        output=_splitter_out,
        input_ports=(PORT_IN,),
        output_ports=tuple(c.port for c in choices),
    )


# ---------------------------------------------------------------------------
# Path


class PathState:
    __slots__ = ("travel_time", "weight", "allow_passing", "queue", "now", "stats")

    def __init__(self, travel_time, weight, allow_passing):
        self.travel_time = travel_time
        self.weight = weight
        self.allow_passing = allow_passing
        self.queue: deque[tuple[Time, Entity]] = deque()
        self.now: Time = 0.0
        self.stats = ObjectStats()

    def held_individuals(self) -> int:
        return sum(individual_count(e) for _, e in self.queue)


def _path_ta(s: PathState) -> Time:
    return s.queue[0][0] - s.now if s.queue else INFINITY


def _path_out(s: PathState) -> list[Message]:
    due = s.queue[0][0]
    return [Message(PORT_OUT, entity) for exit_time, entity in s.queue if exit_time == due]


def _path_dint(s: PathState) -> PathState:
    due = s.queue[0][0]
    s.now = due
    travelers = s.stats.buffer(TRAVELERS)
    while s.queue and s.queue[0][0] == due:
        s.queue.popleft()
        travelers.exited += 1
        s.stats.exited += 1
    return s


def _path_dext(s: PathState, elapsed: Time, bag) -> PathState:
    s.now += elapsed
    travelers = s.stats.buffer(TRAVELERS)
    for msg in bag:
        exit_time = s.now + s.travel_time
        if s.queue and not s.allow_passing and exit_time < s.queue[-1][0]:
            exit_time = s.queue[-1][0]  # hold back: exits stay in entry order
        s.queue.append((exit_time, msg.payload))
        travelers.entered += 1
        s.stats.entered += 1
    return s


def make_path(travel_time: Time, weight: float = 1.0, allow_passing: bool = False) -> AtomicSpec:
    """Delay line between two objects; counts every traveler.

    With ``allow_passing=False`` entities exit in entry order even when
    travel times would let a later entity overtake.  ``weight`` is the
    path's share when an upstream splitter chooses among its outgoing paths.
    """
    if travel_time < 0:
        raise ConfigurationError(f"travel_time must be >= 0, got {travel_time}")
    if weight <= 0:
        raise ConfigurationError(f"path weight must be positive, got {weight}")
    state = PathState(travel_time, weight, allow_passing)
    return AtomicSpec(
        initial_state=state,
        time_advance=_path_ta,
        delta_int=_path_dint,
        delta_ext=_path_dext,
        output=_path_out,
        input_ports=(PORT_IN,),
        output_ports=(PORT_OUT,),
    )


# ---------------------------------------------------------------------------
# Combiner


class CombinerState:
    __slots__ = ("batch_quantity", "parents", "members", "ready", "stats")

    def __init__(self, batch_quantity):
        self.batch_quantity = batch_quantity
        self.parents: deque[Entity] = deque()
        self.members: deque[Entity] = deque()
        self.ready: list[Entity] = []
        self.stats = ObjectStats()

    def _match(self) -> None:
        out_buffer = self.stats.buffer(OUTPUT_BUFFER)
        parent_buffer = self.stats.buffer(PARENT_BUFFER)
        member_buffer = self.stats.buffer(MEMBER_BUFFER)
        while self.parents and len(self.members) >= self.batch_quantity:
            parent = self.parents.popleft()
            parent_buffer.exited += 1
            for _ in range(self.batch_quantity):
                parent.members.append(self.members.popleft())
                member_buffer.exited += 1
            self.ready.append(parent)
            self.stats.processed += 1
            out_buffer.entered += 1

    def held_individuals(self) -> int:
        held = sum(individual_count(e) for e in self.parents)
        held += sum(individual_count(e) for e in self.members)
        held += sum(individual_count(e) for e in self.ready)
        return held


def _combiner_ta(s: CombinerState) -> Time:
    return 0.0 if s.ready else INFINITY


def _combiner_out(s: CombinerState) -> list[Message]:
    return [Message(PORT_OUT, parent) for parent in s.ready]


def _combiner_dint(s: CombinerState) -> CombinerState:
    s.stats.buffer(OUTPUT_BUFFER).exited += len(s.ready)
    s.stats.exited += len(s.ready)
    s.ready.clear()
    return s


def _combiner_dext(s: CombinerState, elapsed: Time, bag) -> CombinerState:
    for msg in bag:
        s.stats.entered += 1
        if msg.port == PORT_PARENT_IN:
            s.parents.append(msg.payload)
            s.stats.buffer(PARENT_BUFFER).entered += 1
        else:
            s.members.append(msg.payload)
            s.stats.buffer(MEMBER_BUFFER).entered += 1
    s._match()
    return s


def make_combiner(batch_quantity: int = 1) -> AtomicSpec:
    """Attach batched members to a parent entity and emit it immediately.

    Parents and members wait in FIFO buffers; whenever at least one parent
    and ``batch_quantity`` members are available the members move onto the
    parent's member list and the parent leaves with zero service time.
    Surplus arrivals on either side stay held in their buffer.
    """
    if batch_quantity < 1:
        raise ConfigurationError(f"batch_quantity must be >= 1, got {batch_quantity}")
    state = CombinerState(batch_quantity)
    return AtomicSpec(
        initial_state=state,
        time_advance=_combiner_ta,
        delta_int=_combiner_dint,
        delta_ext=_combiner_dext,
        output=_combiner_out,
        input_ports=(PORT_PARENT_IN, PORT_MEMBER_IN),
        output_ports=(PORT_OUT,),
    )


# ---------------------------------------------------------------------------
# Server


class ServerState:
    __slots__ = ("capacity", "dist", "stream", "on_processed", "queue", "in_service",
                 "outq", "outq_serviced", "now", "_seq", "stats")

    def __init__(self, capacity, dist, stream, on_processed):
        self.capacity = capacity
        self.dist = dist
        self.stream = stream
        self.on_processed = on_processed
        self.queue: deque[Entity] = deque()
        self.in_service: list[tuple[Time, int, Entity]] = []
        self.outq: list[Entity] = []
        self.outq_serviced = 0
        self.now: Time = 0.0
        self._seq = 0
        self.stats = ObjectStats()

    def _settle(self) -> None:
        """Pull waiting entities into service and complete everything due now."""
        input_buffer = self.stats.buffer(INPUT_BUFFER)
        output_buffer = self.stats.buffer(OUTPUT_BUFFER)
        while True:
            while self.queue and len(self.in_service) < self.capacity:
                entity = self.queue.popleft()
                input_buffer.exited += 1
                duration = self.dist.sample(self.stream) if self.dist is not None else 0.0
                if duration < 0:
                    raise ContractViolationError(f"service time sample must be >= 0, got {duration}")
                heappush(self.in_service, (self.now + duration, self._seq, entity))
                self._seq += 1
            if self.in_service and self.in_service[0][0] == self.now:
                _, _, entity = heappop(self.in_service)
                self.stats.processed += 1
                output_buffer.entered += 1
                self.outq.append(entity)
                self.outq_serviced += 1
                if self.on_processed is not None:
                    created = self.on_processed(entity, self.now)
                    if created:
                        self.outq.extend(created)  # offspring leave behind their parent
                continue
            break

    def held_individuals(self) -> int:
        held = sum(individual_count(e) for e in self.queue)
        held += sum(individual_count(e) for _, _, e in self.in_service)
        held += sum(individual_count(e) for e in self.outq)
        return held


def _server_ta(s: ServerState) -> Time:
    if s.outq:
        return 0.0
    if s.in_service:
        return s.in_service[0][0] - s.now
    return INFINITY


def _server_out(s: ServerState) -> list[Message]:
    return [Message(PORT_OUT, entity) for entity in s.outq]


def _server_dint(s: ServerState) -> ServerState:
    if s.outq:
        s.stats.buffer(OUTPUT_BUFFER).exited += s.outq_serviced
        s.stats.exited += len(s.outq)
        s.outq.clear()
        s.outq_serviced = 0
        s._settle()
        return s
    s.now = s.in_service[0][0]
    s._settle()
    return s


def _server_dext(s: ServerState, elapsed: Time, bag) -> ServerState:
    s.now += elapsed
    input_buffer = s.stats.buffer(INPUT_BUFFER)
    for msg in bag:
        s.queue.append(msg.payload)
        s.stats.entered += 1
        input_buffer.entered += 1
    s._settle()
    return s


ProcessedTrigger = Callable[[Entity, Time], Optional[list[Entity]]]


def make_server(
    capacity: int = 1,
    service_time: Optional[Distribution] = None,
    on_processed: Optional[ProcessedTrigger] = None,
    *,
    stream: Optional[RngStream] = None,
) -> AtomicSpec:
    """Capacitated FIFO process with an optional completion trigger.

    Up to ``capacity`` entities are serviced concurrently; the rest wait in
    the input buffer.  On completion the trigger may create additional
    entities (offspring), which are injected into the output buffer directly
    behind the triggering entity and leave with it, in order.  Buffer
    counters track serviced entities; trigger-created entities are counted
    under their own class labels by the factory that created them.
    ``service_time=None`` means zero service time.
    """
    if capacity < 1:
        raise ConfigurationError(f"capacity must be >= 1, got {capacity}")
    state = ServerState(capacity, service_time, stream, on_processed)
    return AtomicSpec(
        initial_state=state,
        time_advance=_server_ta,
        delta_int=_server_dint,
        delta_ext=_server_dext,
        output=_server_out,
        input_ports=(PORT_IN,),
        output_ports=(PORT_OUT,),
    )


# ---------------------------------------------------------------------------
# Sink


class SinkState:
    __slots__ = ("stats", "affected_by_class")

    def __init__(self):
        self.stats = ObjectStats()
        self.affected_by_class: dict[str, int] = {}

    def held_individuals(self) -> int:
        return 0


def _sink_ta(s: SinkState) -> Time:
    return INFINITY


def _sink_out(s: SinkState) -> list[Message]:
    return []


def _sink_dint(s: SinkState) -> SinkState:
    return s


def _sink_dext(s: SinkState, elapsed: Time, bag) -> SinkState:
    input_buffer = s.stats.buffer(INPUT_BUFFER)
    for msg in bag:
        entity = msg.payload
        s.stats.entered += 1
        input_buffer.entered += 1
        s.stats.destroyed += 1
        _count_destroyed(s, entity)
    return s


def _count_destroyed(s: SinkState, entity: Entity) -> None:
    s.stats.destroyed_individuals += 1
    s.stats.destroyed_by_class[entity.class_label] += 1
    if entity.attributes.get("affected"):
        label = entity.class_label
        s.affected_by_class[label] = s.affected_by_class.get(label, 0) + 1
    for member in entity.members:
        _count_destroyed(s, member)


def make_sink() -> AtomicSpec:
    """Destroy every received entity, recording a class-label breakdown.

    Batched members riding on a parent are counted individually in the
    breakdown and in ``destroyed_individuals``; ``destroyed`` counts the
    flowing units that arrived.
    """
    state = SinkState()
    return AtomicSpec(
        initial_state=state,
        time_advance=_sink_ta,
        delta_int=_sink_dint,
        delta_ext=_sink_dext,
        output=_sink_out,
        input_ports=(PORT_IN,),
    )
