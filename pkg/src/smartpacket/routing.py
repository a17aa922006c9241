"""Stationary per-switch routing: region-path suggestion at minimal or
maximal effort, QoS-rule selection with fission, intra-region delivery,
flow-cache recycling, and courtesy appending of the backward stack.

handle_packet is a pure transition: the engine serializes invocations per
switch and no state is shared between switches, so (state, header) ->
(state, actions) may be replayed or parallelized without semantic change.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from . import defense
from .header import QosSmartSF, RegionStackSF, SmartPacketHeader
from .regions import (
    Horizon,
    LocalTopology,
    Multiplicity,
    NetworkGraph,
    PathInstance,
    QosAnnotation,
    RegionDecomposition,
    RegionGraphView,
    RegionMap,
    UnknownRidError,
    compute_region_map,
    constrained_region_paths,
    path_qos,
    resolve_rid,
)

# 4-bit QoS budget levels quantize tick and probability thresholds. A
# suggestion passes a budget when its measured value is at or below the
# level's threshold; level 15 is effectively unconstrained.
LATENCY_BUDGET_TICKS = (0, 1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128, 65535)
LOSS_BUDGET_LEVELS = (0.0, 1e-4, 5e-4, 1e-3, 5e-3, 0.01, 0.02,
                      0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 0.9, 1.0)
_LOSS_EPS = 1e-12


class RoutingError(Exception):
    pass


class UnresolvableRidError(RoutingError):
    pass


class NoPathError(RoutingError):
    pass


class AllFilteredError(RoutingError):
    pass


class ReceiverNotInRegionError(RoutingError):
    pass


class Effort(Enum):
    MINIMAL = "minimal"
    MAXIMAL = "maximal"


class RbsMode(Enum):
    APPEND = "append"
    SKIP = "skip"
    CLEAR = "clear"


@dataclass
class SwitchConfig:
    effort: Effort = Effort.MINIMAL
    rbs_mode: RbsMode = RbsMode.APPEND
    cache_ttl: int = 1000
    intra_strategy: str = "shortest"  # or "ecmp"
    map_horizon: Horizon = Horizon.GLOBAL
    map_multiplicity: Multiplicity = Multiplicity.PER_PATH
    auto_pull: bool = True
    retain_extended: bool = True
    explorer_hop_limit: int = 32


@dataclass
class CachedDecision:
    stack_snapshot: tuple[int, ...]
    selections: list["PathSuggestion"]
    expires: int


@dataclass
class EphemeralFlow:
    route: tuple[int, ...]
    deliver: bool = False
    expires: int | None = None


@dataclass
class SwitchState:
    """Everything one switch remembers. Region-graph knowledge lives in the
    routing context keyed by region (switches of a region share their map)."""

    switch_id: int
    home_regions: frozenset[int]
    config: SwitchConfig = field(default_factory=SwitchConfig)
    flow_cache: dict = field(default_factory=dict)
    alerts: list = field(default_factory=list)          # defense.DdosAlert
    ephemeral_flows: dict = field(default_factory=dict)  # fid -> EphemeralFlow
    gestures: dict = field(default_factory=dict)         # nid -> ForwardingGesture
    redirects: dict = field(default_factory=dict)        # nid -> RedirectNotice
    seen_events: set = field(default_factory=set)        # (origin, seq)
    pending_events: list = field(default_factory=list)
    recent_deliveries: dict = field(default_factory=dict)  # flow key -> tick
    counters: Counter = field(default_factory=Counter)

    @property
    def rbs_courtesy(self) -> bool:
        return self.config.rbs_mode is RbsMode.APPEND

    def region_map(self, ctx: "RoutingContext") -> RegionMap:
        owner = min(self.home_regions)
        return compute_region_map(
            owner, ctx.view_for(self), ctx.local,
            horizon=self.config.map_horizon,
            multiplicity=self.config.map_multiplicity,
        )


@dataclass
class RoutingContext:
    """Shared world the handlers consult: ground-truth topology for local
    visibility, per-region knowledge views, clock, fees, and scores."""

    graph: NetworkGraph
    decomp: RegionDecomposition
    local: LocalTopology
    knowledge: dict[int, RegionGraphView]
    now: int = 0
    fees: dict[int, float] = field(default_factory=dict)
    scores: dict[int, float] | None = None
    score_threshold: float = 0.5
    switches: dict[int, SwitchState] = field(default_factory=dict)
    counters: Counter = field(default_factory=Counter)

    def view_for(self, state: SwitchState) -> RegionGraphView:
        homes = sorted(state.home_regions)
        if len(homes) == 1:
            return self.knowledge[homes[0]]
        merged = RegionGraphView()
        for h in homes:
            merged.edges.update(self.knowledge[h].edges)
        return merged


@dataclass(frozen=True)
class PathSuggestion:
    """A candidate way onward: a single immediate region (minimal effort) or
    a full region path ending at the destination (maximal effort)."""

    region_path: tuple[int, ...]
    qos: QosAnnotation
    cost: float = 0.0
    instance: PathInstance | None = None

    def key(self):
        seq = self.instance.vertex_seq if self.instance else None
        return (self.region_path, seq)

    @property
    def first_region(self) -> int:
        return self.region_path[0]


class ActionKind(Enum):
    FORWARD = "forward"
    DELIVER = "deliver"
    REPLICATE = "replicate"
    DROP = "drop"
    SECOND_SCREEN = "second-screen"
    CONTROL = "control"


@dataclass
class ForwardAction:
    kind: ActionKind
    targets: tuple[int, ...] = ()
    routes: tuple[tuple[int, ...], ...] = ()
    header: SmartPacketHeader | None = None
    reason: str = ""
    payload: object = None


def flow_key(header: SmartPacketHeader) -> tuple | None:
    if header.ids is None:
        return None
    return (header.ids.sender_nid, header.ids.receiver_nid, header.ids.flow_fid)


def _resolve_entry(raw: int, preceding: tuple[int, ...], ctx: RoutingContext) -> frozenset[int]:
    """A stack entry names a region, possibly high level and possibly scope
    qualified by the entries stacked above it; expand to full-region raws."""
    try:
        if ctx.decomp.unique_raw_rids():
            return ctx.decomp.leaf_members(raw)
        region = resolve_rid(raw, preceding, ctx.decomp)
        return ctx.decomp.leaf_members(region.raw)
    except UnknownRidError as exc:
        raise UnresolvableRidError(str(exc)) from None


def _entry_matches_home(raw: int, homes: frozenset[int], ctx: RoutingContext) -> int | None:
    """The home region raw satisfied by this stack entry, if any."""
    try:
        members = _resolve_entry(raw, (), ctx)
    except UnresolvableRidError:
        return None
    hit = sorted(members & homes)
    return hit[0] if hit else None


def _skip_home_prefix(entries: list[int], homes: frozenset[int], ctx: RoutingContext
                      ) -> tuple[list[int], int | None]:
    """Drop leading waypoints already satisfied by standing in a home region.
    The final entry (the destination) is never skipped."""
    idx = 0
    matched = None
    while idx < len(entries) - 1:
        here = _entry_matches_home(entries[idx], homes, ctx)
        if here is None:
            break
        matched = here
        idx += 1
    return entries[idx:], matched


def suggest_region_paths(
    state: SwitchState,
    header: SmartPacketHeader,
    effort: Effort,
    ctx: RoutingContext,
    max_paths: int = 64,
) -> list[PathSuggestion]:
    """Candidate region paths for the packet's stack, from this switch's
    region. Minimal effort answers with single immediate regions; maximal
    effort resolves full paths to the destination, honoring every stacked
    waypoint in order. Ordering is deterministic: QoS, then cost, then RIDs.
    """
    entries, matched = _skip_home_prefix(list(header.region_stack.entries),
                                         state.home_regions, ctx)
    origin = matched if matched is not None else min(state.home_regions)
    view = ctx.view_for(state)

    waypoints: list[frozenset[int]] = []
    for i, raw in enumerate(entries):
        members = _resolve_entry(raw, tuple(entries[:i]), ctx)
        waypoints.append(members)

    paths = constrained_region_paths(view, origin, waypoints, max_paths)
    if not paths:
        raise NoPathError(
            f"no region path from {origin} honoring stack {entries}"
        )

    per_path = state.config.map_multiplicity is Multiplicity.PER_PATH
    out: list[PathSuggestion] = []
    if effort is Effort.MAXIMAL:
        for p in paths:
            cost = _path_fee(p, ctx)
            if per_path:
                nxt = p[1] if len(p) > 1 else None
                for inst in ctx.local.instances(origin, p[0], nxt):
                    qos = path_qos(view, origin, p, inst)
                    if qos is not None:
                        out.append(PathSuggestion(p, qos, cost, inst))
            else:
                qos = path_qos(view, origin, p)
                if qos is not None:
                    out.append(PathSuggestion(p, qos, cost))
    else:
        by_first: dict[int, list[tuple[int, ...]]] = {}
        for p in paths:
            by_first.setdefault(p[0], []).append(p)
        for first in sorted(by_first):
            lat = loss = hop_lat = hop_loss = None
            cost = None
            for p in by_first[first]:
                qos = path_qos(view, origin, p)
                if qos is None:
                    continue
                lat = qos.path_latency if lat is None else min(lat, qos.path_latency)
                loss = qos.path_loss if loss is None else min(loss, qos.path_loss)
                hop_lat = qos.hop_latency if hop_lat is None else min(hop_lat, qos.hop_latency)
                hop_loss = qos.hop_loss if hop_loss is None else min(hop_loss, qos.hop_loss)
                fee = _path_fee(p, ctx)
                cost = fee if cost is None else min(cost, fee)
            if lat is None:
                continue
            out.append(PathSuggestion((first,), QosAnnotation(lat, loss, hop_lat, hop_loss), cost))

    if not out:
        raise NoPathError(f"paths from {origin} have no usable QoS data")
    out.sort(key=_suggestion_order)
    return out


def _path_fee(path: tuple[int, ...], ctx: RoutingContext) -> float:
    return sum(ctx.fees.get(r, 0.0) for r in path)


def _suggestion_order(s: PathSuggestion):
    return (
        s.qos.path_latency,
        s.qos.path_loss,
        s.cost,
        s.first_region,
        s.region_path,
        s.instance.tag if s.instance else "",
    )


def select_paths(
    suggestions: list[PathSuggestion],
    qos: QosSmartSF | None,
    region_scores: dict[int, float] | None = None,
    score_threshold: float = 0.5,
) -> list[PathSuggestion]:
    """Filter suggestions by the packet's QoS budgets, then pick the fission
    rate's worth of best survivors. Suggestions through regions with a
    degraded score rank after clean ones; replicas prefer distinct first
    regions. If the fission rate exceeds the survivors, all survive.
    """
    if not suggestions:
        raise AllFilteredError("no suggestions to select from")
    survivors = []
    for s in suggestions:
        if qos is not None:
            if qos.path_latency is not None and s.qos.path_latency > LATENCY_BUDGET_TICKS[qos.path_latency]:
                continue
            if qos.single_hop_latency is not None and s.qos.hop_latency > LATENCY_BUDGET_TICKS[qos.single_hop_latency]:
                continue
            if qos.path_loss is not None and s.qos.path_loss > LOSS_BUDGET_LEVELS[qos.path_loss] + _LOSS_EPS:
                continue
            if qos.single_hop_loss is not None and s.qos.hop_loss > LOSS_BUDGET_LEVELS[qos.single_hop_loss] + _LOSS_EPS:
                continue
        survivors.append(s)
    if not survivors:
        raise AllFilteredError("every suggestion violates a QoS budget")

    def low_scores(s: PathSuggestion) -> int:
        if not region_scores:
            return 0
        return sum(1 for r in s.region_path if region_scores.get(r, 1.0) < score_threshold)

    survivors.sort(key=lambda s: (low_scores(s),) + _suggestion_order(s))
    fission = qos.fission_rate if qos is not None else 1
    if fission <= 1:
        return [survivors[0]]
    picked: list[PathSuggestion] = []
    seen_first: set[int] = set()
    for s in survivors:
        if s.first_region not in seen_first:
            picked.append(s)
            seen_first.add(s.first_region)
        if len(picked) == fission:
            return picked
    for s in survivors:
        if s not in picked:
            picked.append(s)
        if len(picked) == fission:
            break
    return picked


# -- intra-region handling ----------------------------------------------------


def _intra_route(
    state: SwitchState, ctx: RoutingContext, region_raw: int, target: int,
    spread_key: int = 0,
) -> tuple[int, ...]:
    region = ctx.decomp.full_by_raw(region_raw)
    allowed = set(region.members)
    found = ctx.graph.shortest_path(state.switch_id, {target}, allowed=allowed)
    if found is None:
        raise NoPathError(f"no intra-region route {state.switch_id} -> {target} in region {region_raw}")
    if state.config.intra_strategy == "ecmp":
        routes = _equal_cost_routes(state, ctx, allowed, target, found[0])
        return routes[spread_key % len(routes)]
    return found[2]


def _equal_cost_routes(state, ctx, allowed, target, best_latency):
    # small regions: enumerate simple paths up to the best latency
    out = []
    stack = [(state.switch_id, (state.switch_id,), 0)]
    while stack:
        here, path, lat = stack.pop()
        if here == target and lat == best_latency:
            out.append(path)
            continue
        for n in ctx.graph.neighbors(here):
            if n in path or (n not in allowed and n != target):
                continue
            ln = ctx.graph.link(here, n)
            if lat + ln.latency <= best_latency:
                stack.append((n, path + (n,), lat + ln.latency))
    return sorted(out) or [(state.switch_id,)]


def intra_region_resolve(
    state: SwitchState, header: SmartPacketHeader, ctx: RoutingContext
) -> list[ForwardAction]:
    """Deliver inside the destination region. With no receiver NID the packet
    goes to every node of the region exactly once. The QoS SF plays no part
    at this level."""
    front = header.region_stack.peek_front()
    home = _entry_matches_home(front, state.home_regions, ctx)
    if home is None:
        raise RoutingError(f"switch {state.switch_id} is not in destination region {front}")
    region = ctx.decomp.full_by_raw(home)
    receiver = header.ids.receiver_nid if header.ids else None
    key = flow_key(header)
    spread = hash(key) & 0x7FFFFFFF if key else 0
    if receiver is None:
        targets, routes = [], []
        for node in sorted(region.nodes):
            targets.append(node)
            routes.append(_intra_route(state, ctx, home, node, spread))
        return [ForwardAction(ActionKind.DELIVER, tuple(targets), tuple(routes), header)]
    if receiver not in region.nodes:
        raise ReceiverNotInRegionError(f"node {receiver} not in region {home}")
    route = _intra_route(state, ctx, home, receiver, spread)
    return [ForwardAction(ActionKind.DELIVER, (receiver,), (route,), header)]


# -- the full pipeline ---------------------------------------------------------


def _drop(header: SmartPacketHeader, reason: str) -> list[ForwardAction]:
    return [ForwardAction(ActionKind.DROP, header=header, reason=reason)]


def _apply_rbs(state: SwitchState, header: SmartPacketHeader, region: int) -> None:
    from .header import RbsSF

    mode = state.config.rbs_mode
    if mode is RbsMode.CLEAR:
        if header.rbs is not None:
            header.rbs.clear()
        return
    if mode is RbsMode.APPEND and header.ids is not None:
        if header.rbs is None:
            header.rbs = RbsSF()
        header.rbs.append(region)


def _locally_originated(state: SwitchState, header: SmartPacketHeader, ctx: RoutingContext) -> bool:
    # a fresh packet from a node of this region has no trace yet
    if header.rbs is not None and header.rbs.traversed:
        return False
    if header.ids is None:
        return False
    sender = header.ids.sender_nid
    for raw in state.home_regions:
        if sender in ctx.decomp.full_by_raw(raw).nodes:
            return True
    return False


def _forward_actions(
    state: SwitchState,
    header: SmartPacketHeader,
    ctx: RoutingContext,
    origin: int,
    selections: list[PathSuggestion],
) -> list[ForwardAction]:
    key = flow_key(header)
    spread = hash(key) & 0x7FFFFFFF if key else 0
    consumed = len(selections) > 1
    targets, routes, headers = [], [], []
    for sel in selections:
        first = sel.first_region
        if sel.instance is not None:
            entry = sel.instance.entry.into
        else:
            chans = ctx.local.channels(origin, first)
            if not chans:
                raise NoPathError(f"no channel from region {origin} into {first}")
            entry = chans[0].into
        region = ctx.decomp.full_by_raw(origin)
        allowed = set(region.members) | {entry}
        found = ctx.graph.shortest_path(state.switch_id, {entry}, allowed=allowed)
        if found is None:
            raise NoPathError(f"no route from switch {state.switch_id} to boundary {entry}")
        out = header.clone()
        if consumed and out.qos is not None:
            out.qos.fission_rate = 1
        targets.append(entry)
        routes.append(found[2])
        headers.append(out)
    if len(selections) > 1:
        return [
            ForwardAction(ActionKind.REPLICATE, tuple(targets), tuple(routes), headers[0],
                          payload=headers)
        ]
    return [ForwardAction(ActionKind.FORWARD, (targets[0],), (routes[0],), headers[0])]


def handle_packet(
    state: SwitchState, header: SmartPacketHeader, ctx: RoutingContext
) -> tuple[SwitchState, list[ForwardAction]]:
    """One switch handles one packet: filter, fast path, destination check,
    cache, suggest and select, backward-stack courtesy, emit."""
    now = ctx.now
    state.counters["handled"] += 1
    header = header.clone()

    # record activity for mobility informs
    key = flow_key(header)
    if key is not None:
        state.recent_deliveries[key] = now

    # 1. DDoS filter; locally originated packets have no trace to judge yet
    if not _locally_originated(state, header, ctx):
        verdict, alert = defense.filter_packet(state, header, now)
        if verdict is defense.Verdict.BLOCK:
            state.counters["blocked"] += 1
            return state, _drop(header, "blocked")
        if verdict is defense.Verdict.SECOND_SCREEN:
            state.counters["second_screened"] += 1
            return state, [ForwardAction(ActionKind.SECOND_SCREEN, header=header,
                                         reason="second-screen")]
        if verdict is defense.Verdict.DIVERT_TO_TRH:
            state.counters["diverted"] += 1
            trh = alert.trh_nid
            trh_regions = ctx.decomp.regions_of_vertex(trh)
            if trh_regions:
                header.region_stack.entries = [min(r.raw for r in trh_regions)]
                header.ids.receiver_nid = trh

    # 2. standing redirects for moved nodes
    if header.ids is not None and header.ids.receiver_nid in state.redirects:
        from .dynamics import apply_redirect

        notice = state.redirects[header.ids.receiver_nid]
        if notice.expires > now and list(header.region_stack.entries) != list(notice.new_region_stack):
            header = apply_redirect(state, notice, header)
            state.counters["redirect_applied"] += 1

    # 3. ephemeral intra-region flow: execute the formula, skip the stack
    fid = header.region_stack.intra_region_fid
    if fid is not None and fid in state.ephemeral_flows:
        flow = state.ephemeral_flows[fid]
        if flow.expires is None or flow.expires > now:
            state.counters["fastpath"] += 1
            kind = ActionKind.DELIVER if flow.deliver else ActionKind.FORWARD
            return state, [ForwardAction(kind, (flow.route[-1],), (flow.route,), header)]

    # 4. arrival pop, then destination check
    entries = header.region_stack.entries
    current = None
    while len(entries) > 1:
        hit = _entry_matches_home(entries[0], state.home_regions, ctx)
        if hit is None:
            break
        current = hit
        header.region_stack.pop_front()
    front_home = _entry_matches_home(entries[0], state.home_regions, ctx)
    if front_home is not None and len(entries) == 1:
        try:
            return state, intra_region_resolve(state, header, ctx)
        except ReceiverNotInRegionError:
            from .dynamics import transitional_deliver

            return transitional_deliver(state, header, ctx, front_home)
    origin = current if current is not None else min(state.home_regions)

    # 5. recycle a previous decision for this flow when fresh
    selections = None
    if key is not None:
        cached = state.flow_cache.get(key)
        if cached is not None and cached.expires > now and cached.stack_snapshot == tuple(entries):
            selections = cached.selections
            state.counters["cache_hits"] += 1
    if selections is None:
        try:
            suggestions = suggest_region_paths(state, header, state.config.effort, ctx)
        except UnresolvableRidError as exc:
            if state.config.auto_pull:
                from .dynamics import pull_region_maps

                try:
                    pull_region_maps(state, header.region_stack.destination, ctx)
                    suggestions = suggest_region_paths(state, header, state.config.effort, ctx)
                except (RoutingError, Exception) as inner:
                    if isinstance(inner, RoutingError):
                        state.counters["dropped_unresolvable"] += 1
                        return state, _drop(header, "unresolvable-rid")
                    raise
            else:
                state.counters["dropped_unresolvable"] += 1
                return state, _drop(header, "unresolvable-rid")
        except NoPathError:
            return state, _drop(header, "no-path")
        state.counters["suggestions_computed"] += 1
        try:
            selections = select_paths(suggestions, header.qos, ctx.scores, ctx.score_threshold)
        except AllFilteredError:
            return state, _drop(header, "qos-filtered")
        if key is not None:
            state.flow_cache[key] = CachedDecision(tuple(entries), selections,
                                                   now + state.config.cache_ttl)

    # 6. courtesy trace, then emit
    _apply_rbs(state, header, origin)
    try:
        actions = _forward_actions(state, header, ctx, origin, selections)
    except NoPathError:
        return state, _drop(header, "no-path")
    return state, actions
