"""Transitional routing and decentralized map maintenance.

When a node relocates, its old region keeps forwarding for a while (the
forwarding gesture), redirect notices flood outward from the new region so
in-flight packets get their stacks rewritten, and the old region informs
senders so later packets start out right. Region maps are kept current
without any central service through recursive pulls from boundary regions,
periodic explorer probes, and flooded change events.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from . import routing
from .defense import flood_distances
from .header import RbsSF, SmartPacketHeader
from .regions import EdgeQos, RegionMap, compute_region_map
from .routing import (
    ActionKind,
    ForwardAction,
    NoPathError,
    RoutingContext,
    RoutingError,
    SwitchState,
    select_paths,
    suggest_region_paths,
)


class DynamicsError(Exception):
    pass


class UnresolvableAfterHorizonError(DynamicsError):
    pass


@dataclass(frozen=True)
class RedirectNotice:
    moved_nid: int
    new_region_stack: tuple[int, ...]
    issued_at: int
    ttl: int

    def __post_init__(self):
        if self.ttl <= 0:
            raise DynamicsError("redirect notice ttl must be positive")
        if not self.new_region_stack:
            raise DynamicsError("redirect notice needs a region stack")

    @property
    def expires(self) -> int:
        return self.issued_at + self.ttl


@dataclass(frozen=True)
class ForwardingGesture:
    moved_nid: int
    new_region: int
    forward_until: int
    inform_until: int

    def __post_init__(self):
        if self.inform_until < self.forward_until:
            raise DynamicsError("inform window must outlast the forwarding gesture")


@dataclass
class ExplorerPacket:
    """Empty-body probe flooded to neighbor regions; each handler appends its
    region to the backward stack and sends a copy home."""

    origin_region: int
    rbs: RbsSF = field(default_factory=RbsSF)
    hop_limit: int = 32

    def clone(self) -> "ExplorerPacket":
        return ExplorerPacket(self.origin_region, self.rbs.clone(), self.hop_limit)


class ChangeKind(Enum):
    LINK_UP = "link-up"
    LINK_DOWN = "link-down"
    REGION_JOIN = "region-join"
    REGION_LEAVE = "region-leave"
    NODE_MOVED = "node-moved"


@dataclass(frozen=True)
class EventPacket:
    """Change notification flooded by the switches of the changed region.
    Carries the region's current incident adjacency so receivers can repair
    their maps in one step; seq is strictly increasing per origin."""

    changed_region: int
    change_kind: ChangeKind
    seq: int
    neighbors: tuple[tuple[tuple[int, int], EdgeQos], ...] = ()


def apply_redirect(
    state: SwitchState, notice: RedirectNotice, header: SmartPacketHeader
) -> SmartPacketHeader:
    """Rewrite the region stack of a matching packet; all other SFs are
    preserved and non-matching packets pass through untouched."""
    if header.ids is None or header.ids.receiver_nid != notice.moved_nid:
        return header
    out = header.clone()
    out.region_stack.entries = list(notice.new_region_stack)
    return out


def transitional_deliver(
    state: SwitchState, header: SmartPacketHeader, ctx: RoutingContext, region: int
) -> tuple[SwitchState, list[ForwardAction]]:
    """The receiver is gone from this region: forward under an active
    gesture (informing the sender while the inform window lasts), apply a
    standing redirect, or drop."""
    now = ctx.now
    receiver = header.ids.receiver_nid if header.ids else None
    actions: list[ForwardAction] = []
    gesture = state.gestures.get(receiver)
    rewritten = None
    if gesture is not None and gesture.forward_until > now:
        rewritten = header.clone()
        rewritten.region_stack.entries = [gesture.new_region]
        state.counters["gesture_forwards"] += 1
        if gesture.inform_until > now and header.ids is not None:
            mark = ("informed", header.ids.sender_nid, receiver)
            if mark not in state.seen_events:
                state.seen_events.add(mark)
                actions.append(
                    ForwardAction(ActionKind.CONTROL, reason="inform-sender",
                                  payload=(header.ids.sender_nid, receiver,
                                           (gesture.new_region,)))
                )
    elif receiver in state.redirects and state.redirects[receiver].expires > now:
        rewritten = apply_redirect(state, state.redirects[receiver], header)
        state.counters["redirect_applied"] += 1
    if rewritten is None:
        reason = "gesture-expired" if gesture is not None else "receiver-not-in-region"
        return state, actions + [ForwardAction(ActionKind.DROP, header=header, reason=reason)]
    try:
        suggestions = suggest_region_paths(state, rewritten, state.config.effort, ctx)
        selections = select_paths(suggestions, rewritten.qos, ctx.scores, ctx.score_threshold)
        fwd = routing._forward_actions(state, rewritten, ctx, region, selections)
    except RoutingError:
        return state, actions + [ForwardAction(ActionKind.DROP, header=header, reason="no-path")]
    return state, actions + fwd


def pull_region_maps(
    state: SwitchState, unresolved_rid: int, ctx: RoutingContext
) -> RegionMap:
    """Recursively pull boundary regions' maps until the rid resolves or the
    whole reachable knowledge is merged. Query messages are counted in
    ctx.counters. The extended view is retained or reverted per config."""
    owner = min(state.home_regions)
    view = ctx.knowledge[owner]
    if unresolved_rid == owner or unresolved_rid in view.vertices:
        return state.region_map(ctx)
    working = view.copy()
    asked = {owner}
    while unresolved_rid not in working.vertices:
        frontier = sorted(working.vertices - asked)
        if not frontier:
            raise UnresolvableAfterHorizonError(
                f"rid {unresolved_rid} unresolved after exploring {sorted(asked)}"
            )
        for other in frontier:
            asked.add(other)
            ctx.counters["pull_queries"] += 1
            remote = ctx.knowledge.get(other)
            if remote is not None:
                working.edges.update(remote.edges)
        # a full round of the frontier merges before re-checking
    if state.config.retain_extended:
        view.edges.update(working.edges)
        merged = view
    else:
        merged = working
    return compute_region_map(
        owner, merged, ctx.local,
        horizon=state.config.map_horizon if state.config.retain_extended else state.config.map_horizon,
        multiplicity=state.config.map_multiplicity,
    )


def handle_explorer(
    state: SwitchState, pkt: ExplorerPacket, ctx: RoutingContext
) -> tuple[ExplorerPacket, list[tuple[int, ExplorerPacket]]]:
    """Stamp this region onto the probe, send one copy home, and replicate
    to neighbor regions not already visited. hop_limit gates replication."""
    region = min(state.home_regions)
    stamped = pkt.clone()
    stamped.rbs.append(region)
    forwards: list[tuple[int, ExplorerPacket]] = []
    if pkt.hop_limit > 1:
        visited = set(stamped.rbs.traversed) | {pkt.origin_region}
        for neighbor in physical_neighbors(ctx, region):
            if neighbor in visited:
                continue
            copy = stamped.clone()
            copy.hop_limit = pkt.hop_limit - 1
            forwards.append((neighbor, copy))
    return stamped, forwards


def physical_neighbors(ctx: RoutingContext, region: int) -> list[int]:
    """Regions directly reachable from this one in the real topology; always
    locally observable regardless of map state."""
    out = []
    for other in sorted(r.raw for r in ctx.decomp.full_regions):
        if other != region and ctx.local.channels(region, other):
            out.append(other)
    return out


def integrate_explorer_return(
    origin: int, rbs: RbsSF, ctx: RoutingContext, truth: dict[tuple[int, int], EdgeQos]
) -> bool:
    """Fold a returned probe's visited chain into the origin's map: each
    consecutive pair along origin..chain is a region edge."""
    view = ctx.knowledge[origin]
    changed = False
    chain = [origin] + list(rbs.traversed)
    for a, b in zip(chain, chain[1:]):
        key = (a, b) if a < b else (b, a)
        qos = truth.get(key)
        if qos is not None and view.edges.get(key) != qos:
            view.edges[key] = qos
            changed = True
    return changed


def handle_event(
    state: SwitchState, pkt: EventPacket, ctx: RoutingContext
) -> list[tuple[int, EventPacket]]:
    """Apply a change notification exactly once per switch, repair entries
    touching the changed region, and forward copies to neighbor regions.
    Events about regions this map has never seen are parked until the
    region is learned."""
    dedup = (pkt.changed_region, pkt.seq)
    if dedup in state.seen_events:
        return []
    state.seen_events.add(dedup)
    region = min(state.home_regions)
    view = ctx.knowledge[region]
    known = view.vertices | {region}
    if pkt.changed_region not in known:
        state.pending_events.append(pkt)
    else:
        _apply_event(view, pkt)
        apply_pending(state, ctx)
    return [(n, pkt) for n in physical_neighbors(ctx, region)]


def _apply_event(view, pkt: EventPacket) -> None:
    view.replace_incident(pkt.changed_region, dict(pkt.neighbors))


def apply_pending(state: SwitchState, ctx: RoutingContext) -> None:
    region = min(state.home_regions)
    view = ctx.knowledge[region]
    still: list[EventPacket] = []
    for pkt in state.pending_events:
        if pkt.changed_region in view.vertices | {region}:
            _apply_event(view, pkt)
        else:
            still.append(pkt)
    state.pending_events = still


def relocate_node(sim, nid: int, from_region: int, to_region: int) -> list:
    """Move a node between regions: rewire its links, install forwarding
    gestures at the old region, flood redirect notices from the new region
    when flows are live, and inform the senders of those flows."""
    ctx: RoutingContext = sim.ctx
    now = ctx.now
    graph = ctx.graph
    if nid not in graph.vertices or not graph.is_node(nid):
        raise DynamicsError(f"unknown or non-node vertex {nid}")
    old = ctx.decomp.full_by_raw(from_region)
    new = ctx.decomp.full_by_raw(to_region)
    if nid not in old.nodes:
        raise DynamicsError(f"node {nid} is not in region {from_region}")

    from .topology import Link

    for sw in sorted(old.switches):
        if graph.link(sw, nid) is not None:
            graph.remove_link(sw, nid)
    for sw in sorted(new.switches):
        if graph.link(sw, nid) is None:
            graph.add_link(Link(sw, nid))
    sim.rebuild_regions(move=(nid, from_region, to_region))

    cfg = sim.config
    gesture = ForwardingGesture(nid, to_region, now + cfg.gesture_forward,
                                now + max(cfg.gesture_inform, cfg.gesture_forward))
    for sw in sorted(old.switches):
        ctx.switches[sw].gestures[nid] = gesture

    senders: set[int] = set()
    for sw in sorted(old.switches):
        for key in ctx.switches[sw].recent_deliveries:
            if key[1] == nid:
                senders.add(key[0])

    scheduled = []
    if senders and cfg.redirect_flood_hops > 0:
        notice = RedirectNotice(nid, (to_region,), now,
                                max(cfg.gesture_inform, cfg.gesture_forward, 1))
        dists = flood_distances(sim.true_view.edges.keys(), to_region,
                                max_hops=cfg.redirect_flood_hops)
        for region, d in sorted(dists.items()):
            scheduled.append(sim.schedule_notice_install(region, notice,
                                                         delay=d * cfg.control_latency))
    for sender in sorted(senders):
        scheduled.append(sim.schedule_sender_inform(sender, nid, (to_region,),
                                                    delay=cfg.control_latency))
    return scheduled
