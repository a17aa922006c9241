"""Region algebra for region-based routing.

A *full region* pairs a switch set with the set of nodes adjacent to every
one of those switches; it is complete when no further node can be added.
Regions may overlap. A decomposition selects full regions and may group them
recursively into high-level regions. The region graph connects regions that
share a vertex or are joined by a link, and per-region maps record, for each
visible destination, the immediate next regions with QoS annotations.
"""
from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

from .topology import NetworkGraph, VertexId

MAX_RID = 0xFFFF


class RegionError(Exception):
    pass


class ResourceLimitError(RegionError):
    pass


class HierarchyCycleError(RegionError):
    pass


class UnknownChildError(RegionError):
    pass


class UnknownOwnerError(RegionError):
    pass


class UnknownRidError(RegionError):
    pass


class AmbiguousRidError(RegionError):
    pass


@dataclass(frozen=True)
class RegionId:
    """Possibly non-unique 16-bit region id, disambiguated by its scope chain."""

    raw: int
    scope: "RegionId | None" = None

    def chain(self) -> tuple[int, ...]:
        """Raw ids from the outermost enclosing region down to this one."""
        out: list[int] = []
        rid: RegionId | None = self
        while rid is not None:
            out.append(rid.raw)
            rid = rid.scope
        return tuple(reversed(out))

    def __repr__(self):
        if self.scope is None:
            return f"RegionId({self.raw})"
        return f"RegionId({self.raw}, scope={self.scope!r})"


@dataclass(frozen=True)
class FullRegion:
    rid: RegionId
    switches: frozenset[VertexId]
    nodes: frozenset[VertexId]

    @property
    def raw(self) -> int:
        return self.rid.raw

    @property
    def members(self) -> frozenset[VertexId]:
        return self.switches | self.nodes

    def shape(self) -> tuple[tuple[VertexId, ...], tuple[VertexId, ...]]:
        return (tuple(sorted(self.switches)), tuple(sorted(self.nodes)))


@dataclass(frozen=True)
class HighLevelRegion:
    rid: RegionId
    children: frozenset[int]  # raw ids of members scoped under this region

    @property
    def raw(self) -> int:
        return self.rid.raw


@dataclass(frozen=True)
class CoverageReport:
    covered: frozenset[VertexId]
    uncovered_nodes: tuple[VertexId, ...]
    uncovered_switches: tuple[VertexId, ...]

    @property
    def complete(self) -> bool:
        return not self.uncovered_nodes and not self.uncovered_switches


def is_complete_full_region(
    graph: NetworkGraph, switches: frozenset[VertexId], nodes: frozenset[VertexId]
) -> bool:
    """Check the region laws directly: typed members, connected induced
    subgraph, every switch adjacent to every node, node set maximal."""
    if not switches or not nodes:
        return False
    if not all(graph.is_switch(s) for s in switches):
        return False
    if not all(graph.is_node(n) for n in nodes):
        return False
    for s in switches:
        adj = graph._adj[s]
        if not nodes <= adj:
            return False
    # maximality: no outside node is adjacent to all switches
    common = None
    for s in switches:
        nn = graph.node_neighbors(s)
        common = nn if common is None else common & nn
    if common != nodes:
        return False
    # connectivity of the induced subgraph
    members = switches | nodes
    start = next(iter(members))
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for n in graph._adj[v]:
            if n in members and n not in seen:
                seen.add(n)
                queue.append(n)
    return seen == members


def enumerate_full_regions(graph: NetworkGraph, cap: int = 10_000) -> list[FullRegion]:
    """All complete full regions: every non-empty switch set whose common
    node neighborhood is non-empty, paired with that neighborhood.

    Search walks switch-set extensions and prunes once the shared
    neighborhood empties (it can only shrink). ``cap`` bounds the candidate
    count; pathological graphs raise ResourceLimitError instead of hanging.
    """
    switches = graph.switches()
    neigh = {s: graph.node_neighbors(s) for s in switches}
    found: list[tuple[tuple[VertexId, ...], frozenset[VertexId]]] = []

    def extend(start: int, current: tuple[VertexId, ...], common: frozenset[VertexId]):
        for i in range(start, len(switches)):
            s = switches[i]
            nxt = common & neigh[s] if current else neigh[s]
            if not nxt:
                continue
            cand = current + (s,)
            found.append((cand, nxt))
            if len(found) > cap:
                raise ResourceLimitError(f"more than {cap} candidate regions")
            extend(i + 1, cand, nxt)

    extend(0, (), frozenset())
    found.sort(key=lambda pair: (pair[0], tuple(sorted(pair[1]))))
    out = []
    for idx, (sw, nd) in enumerate(found, start=1):
        region = FullRegion(RegionId(idx), frozenset(sw), nd)
        out.append(region)
    return out


@dataclass(frozen=True)
class RegionDecomposition:
    full_regions: tuple[FullRegion, ...]
    high_level: tuple[HighLevelRegion, ...] = ()
    coverage: CoverageReport | None = None

    def by_raw(self, raw: int) -> list[FullRegion | HighLevelRegion]:
        out: list[FullRegion | HighLevelRegion] = []
        out.extend(r for r in self.full_regions if r.raw == raw)
        out.extend(g for g in self.high_level if g.raw == raw)
        return out

    def full_by_raw(self, raw: int) -> FullRegion:
        matches = [r for r in self.full_regions if r.raw == raw]
        if not matches:
            raise UnknownRidError(f"no full region with rid {raw}")
        if len(matches) > 1:
            raise AmbiguousRidError(f"rid {raw} names {len(matches)} regions")
        return matches[0]

    def regions_of_vertex(self, vid: VertexId) -> list[FullRegion]:
        return [r for r in self.full_regions if vid in r.members]

    def leaf_members(self, raw: int) -> frozenset[int]:
        """Raw ids of the full regions reachable from ``raw`` through the
        hierarchy (a full-region rid expands to itself)."""
        groups = {g.raw: g for g in self.high_level}
        fulls = {r.raw for r in self.full_regions}
        out: set[int] = set()
        stack = [raw]
        seen: set[int] = set()
        while stack:
            r = stack.pop()
            if r in seen:
                continue
            seen.add(r)
            if r in fulls:
                out.add(r)
            if r in groups:
                stack.extend(groups[r].children)
        if not out:
            raise UnknownRidError(f"rid {raw} resolves to no full region")
        return frozenset(out)

    def unique_raw_rids(self) -> bool:
        raws = [r.raw for r in self.full_regions] + [g.raw for g in self.high_level]
        return len(raws) == len(set(raws))


def build_decomposition(
    graph: NetworkGraph,
    selection: Iterable[FullRegion],
    grouping: Iterable[HighLevelRegion] = (),
) -> RegionDecomposition:
    """Validate a selection of full regions plus hierarchy and attach a
    coverage report. Raises on invalid regions, unknown children, or cycles."""
    fulls = tuple(selection)
    groups = tuple(grouping)
    for r in fulls:
        if not is_complete_full_region(graph, r.switches, r.nodes):
            raise RegionError(
                f"region {r.raw} (switches={sorted(r.switches)}) is not a complete full region"
            )
    known_raws = {r.raw for r in fulls} | {g.raw for g in groups}
    children_of: dict[int, frozenset[int]] = {}
    for g in groups:
        if not g.children:
            raise RegionError(f"group {g.raw} has no children")
        for c in g.children:
            if c not in known_raws:
                raise UnknownChildError(f"group {g.raw} references unknown child {c}")
        children_of[g.raw] = g.children

    # cycle check over the group graph
    state: dict[int, int] = {}

    def visit(raw: int, trail: tuple[int, ...]):
        if state.get(raw) == 1:
            raise HierarchyCycleError(f"hierarchy cycle through {raw}: {trail + (raw,)}")
        if state.get(raw) == 2:
            return
        state[raw] = 1
        for c in children_of.get(raw, ()):
            visit(c, trail + (raw,))
        state[raw] = 2

    for g in groups:
        visit(g.raw, ())

    covered: set[VertexId] = set()
    for r in fulls:
        covered |= r.members
    uncovered_nodes = tuple(sorted(set(graph.nodes()) - covered))
    uncovered_switches = tuple(sorted(set(graph.switches()) - covered))
    coverage = CoverageReport(frozenset(covered), uncovered_nodes, uncovered_switches)
    return RegionDecomposition(fulls, groups, coverage)


def resolve_rid(
    rid: int,
    context: Sequence[int],
    decomp: RegionDecomposition,
) -> FullRegion | HighLevelRegion:
    """Resolve a raw id against enclosing scope context (outermost first).

    A candidate matches when the context is a subsequence of its scope
    chain. Exactly one match is required; ambiguity is an error, never a
    silent pick.
    """
    candidates = decomp.by_raw(rid)
    if not candidates:
        raise UnknownRidError(f"rid {rid} not in decomposition")

    def matches(region) -> bool:
        chain = region.rid.chain()[:-1]  # enclosing scopes only
        it = iter(chain)
        return all(any(c == want for c in it) for want in context)

    matched = [r for r in candidates if matches(r)]
    if not matched:
        raise UnknownRidError(f"rid {rid} has no region matching context {list(context)}")
    if len(matched) > 1:
        raise AmbiguousRidError(
            f"rid {rid} is ambiguous under context {list(context)}: {len(matched)} matches"
        )
    return matched[0]


# -- region graph and QoS --------------------------------------------------


@dataclass(frozen=True)
class QosAnnotation:
    path_latency: int
    path_loss: float
    hop_latency: int
    hop_loss: float


@dataclass(frozen=True)
class Channel:
    """One way to cross between two adjacent regions: either a shared vertex
    (zero cost) or a link; ``into`` is the vertex on the far region's side."""

    latency: int
    loss: float
    out_of: VertexId
    into: VertexId
    shared: bool

    def sort_key(self):
        return (self.latency, self.loss, self.into, self.out_of)


@dataclass(frozen=True)
class PathInstance:
    """A node-path instance inside an immediate region: the entry vertex and
    the crossing it realizes toward the continuation of the region path."""

    region: int
    entry: Channel
    vertex_seq: tuple[VertexId, ...]
    crossing_latency: int
    crossing_loss: float

    @property
    def tag(self) -> str:
        digest = hashlib.sha256(",".join(map(str, self.vertex_seq)).encode()).hexdigest()
        return digest[:8]


@dataclass(frozen=True)
class RegionGraph:
    vertices: frozenset[int]
    edges: frozenset[tuple[int, int]]

    def neighbors(self, raw: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == raw:
                out.append(b)
            elif b == raw:
                out.append(a)
        return sorted(out)

    def has_edge(self, a: int, b: int) -> bool:
        key = (a, b) if a < b else (b, a)
        return key in self.edges


def _edge_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def region_channels(
    decomp: RegionDecomposition, graph: NetworkGraph, a: int, b: int
) -> list[Channel]:
    """All crossings from region a into region b, best first."""
    ra = decomp.full_by_raw(a)
    rb = decomp.full_by_raw(b)
    out = []
    for shared in sorted(ra.members & rb.members):
        out.append(Channel(0, 0.0, shared, shared, True))
    for u in sorted(ra.members):
        for v in graph.neighbors(u):
            if v in rb.members and v not in ra.members:
                ln = graph.link(u, v)
                out.append(Channel(ln.latency, ln.loss, u, v, False))
    return sorted(out, key=Channel.sort_key)


def build_region_graph(decomp: RegionDecomposition, graph: NetworkGraph) -> RegionGraph:
    """Adjacency over the decomposition's full regions: two regions are
    adjacent when they share a vertex or a link joins them."""
    raws = sorted(r.raw for r in decomp.full_regions)
    edges: set[tuple[int, int]] = set()
    for i, a in enumerate(raws):
        for b in raws[i + 1:]:
            if region_channels(decomp, graph, a, b):
                edges.add(_edge_key(a, b))
    return RegionGraph(frozenset(raws), frozenset(edges))


@dataclass(frozen=True)
class EdgeQos:
    latency: int
    loss: float


class RegionGraphView:
    """A (possibly partial or stale) weighted view of the region graph, the
    unit of knowledge a region maintains about the wider network."""

    def __init__(self, edges: dict[tuple[int, int], EdgeQos] | None = None):
        self.edges: dict[tuple[int, int], EdgeQos] = dict(edges or {})

    def copy(self) -> "RegionGraphView":
        return RegionGraphView(self.edges)

    @property
    def vertices(self) -> set[int]:
        out: set[int] = set()
        for a, b in self.edges:
            out.add(a)
            out.add(b)
        return out

    def neighbors(self, raw: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == raw:
                out.append(b)
            elif b == raw:
                out.append(a)
        return sorted(out)

    def qos(self, a: int, b: int) -> EdgeQos | None:
        return self.edges.get(_edge_key(a, b))

    def set_edge(self, a: int, b: int, qos: EdgeQos) -> None:
        self.edges[_edge_key(a, b)] = qos

    def drop_edge(self, a: int, b: int) -> None:
        self.edges.pop(_edge_key(a, b), None)

    def replace_incident(self, raw: int, edges: dict[tuple[int, int], EdgeQos]) -> None:
        """Swap every edge touching ``raw`` for the advertised set."""
        for key in [k for k in self.edges if raw in k]:
            del self.edges[key]
        for key, qos in edges.items():
            if raw in key:
                self.edges[key] = qos

    def incident(self, raw: int) -> dict[tuple[int, int], EdgeQos]:
        return {k: v for k, v in self.edges.items() if raw in k}

    def __eq__(self, other):
        return isinstance(other, RegionGraphView) and self.edges == other.edges


def true_region_view(decomp: RegionDecomposition, graph: NetworkGraph) -> RegionGraphView:
    """Ground-truth weighted view: each region edge carries its best channel."""
    rgraph = build_region_graph(decomp, graph)
    view = RegionGraphView()
    for a, b in sorted(rgraph.edges):
        best = region_channels(decomp, graph, a, b)[0]
        view.set_edge(a, b, EdgeQos(best.latency, best.loss))
    return view


class LocalTopology:
    """Gives a region exact visibility into its own surroundings: channels
    into its immediate neighbors and the node-path instances across them."""

    def __init__(self, decomp: RegionDecomposition, graph: NetworkGraph):
        self.decomp = decomp
        self.graph = graph

    def channels(self, a: int, b: int) -> list[Channel]:
        return region_channels(self.decomp, self.graph, a, b)

    def instances(self, owner: int, immediate: int, nxt: int | None) -> list[PathInstance]:
        """Node-path instances for crossing ``immediate`` coming from
        ``owner`` and continuing toward ``nxt`` (None when the immediate
        region is the destination: the crossing ends at delivery).

        One instance per distinct entry vertex; each is realized by that
        entry's cheapest intra-region continuation to the exit boundary.
        """
        chans = self.channels(owner, immediate)
        if not chans:
            return []
        imm = self.decomp.full_by_raw(immediate)
        if nxt is None:
            exits: frozenset[VertexId] = frozenset()
        else:
            exits = frozenset(c.out_of for c in self.channels(immediate, nxt))
        best_entry: dict[VertexId, Channel] = {}
        for c in chans:
            if c.into not in best_entry:
                best_entry[c.into] = c  # channels are pre-sorted best-first
        out = []
        for entry_vertex in sorted(best_entry):
            chan = best_entry[entry_vertex]
            if not exits:
                seq: tuple[VertexId, ...] = (entry_vertex,)
                lat, loss = 0, 0.0
            else:
                found = self.graph.shortest_path(entry_vertex, exits, allowed=set(imm.members))
                if found is None:
                    continue
                lat, loss, seq = found
            out.append(PathInstance(immediate, chan, seq, lat, loss))
        return out


@dataclass(frozen=True)
class RegionMapEntry:
    destination: int
    immediate: int
    instance: PathInstance | None
    qos: QosAnnotation


class Horizon(Enum):
    NEIGHBORS_ONLY = "neighbors"
    EXTENDED = "extended"
    GLOBAL = "global"


class Multiplicity(Enum):
    AGGREGATE = "aggregate"
    PER_PATH = "perpath"


@dataclass(frozen=True)
class RegionMap:
    owner: int
    entries: tuple[RegionMapEntry, ...]
    horizon: Horizon

    def toward(self, destination: int) -> list[RegionMapEntry]:
        return [e for e in self.entries if e.destination == destination]


def all_shortest_region_paths(
    view: RegionGraphView, src: int, dst: int, max_paths: int = 64
) -> list[tuple[int, ...]]:
    """Every minimum-hop region path src -> dst, excluding src, in sorted
    order. Empty when unreachable; [()] when src == dst."""
    if src == dst:
        return [()]
    dist = {src: 0}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        for n in view.neighbors(v):
            if n not in dist:
                dist[n] = dist[v] + 1
                queue.append(n)
    if dst not in dist:
        return []
    paths: list[tuple[int, ...]] = []

    def back(v: int, suffix: tuple[int, ...]):
        if len(paths) >= max_paths:
            return
        if v == src:
            paths.append(suffix)
            return
        for p in view.neighbors(v):
            if dist.get(p) == dist[v] - 1:
                back(p, (v,) + suffix)

    back(dst, ())
    return sorted(paths)


def constrained_region_paths(
    view: RegionGraphView,
    src: int,
    waypoints: Sequence[frozenset[int] | int],
    max_paths: int = 64,
) -> list[tuple[int, ...]]:
    """Minimum-hop region paths from src that visit each waypoint in order.

    A waypoint may be a set of acceptable regions (a high-level region is
    satisfied by any of its members). Returned paths exclude src, end at the
    final waypoint, and are simple; segment shortest paths are concatenated
    and non-simple combinations discarded.
    """
    prefixes: list[tuple[int, ...]] = [()]
    here = src
    for wp in waypoints:
        targets = frozenset([wp]) if isinstance(wp, int) else frozenset(wp)
        nxt: list[tuple[int, ...]] = []
        for prefix in prefixes:
            start = prefix[-1] if prefix else src
            if start in targets:
                nxt.append(prefix)
                continue
            best: list[tuple[int, ...]] = []
            best_len: int | None = None
            for t in sorted(targets):
                for seg in all_shortest_region_paths(view, start, t, max_paths):
                    if best_len is None or len(seg) < best_len:
                        best, best_len = [seg], len(seg)
                    elif len(seg) == best_len:
                        best.append(seg)
            for seg in sorted(best):
                cand = prefix + seg
                if len(set(cand)) == len(cand) and src not in cand:
                    nxt.append(cand)
                if len(nxt) >= max_paths:
                    break
            if len(nxt) >= max_paths:
                break
        prefixes = sorted(set(nxt))[:max_paths]
        if not prefixes:
            return []
        here = None  # segments now start from each prefix end
    return prefixes


def path_qos(
    view: RegionGraphView,
    owner: int,
    path: tuple[int, ...],
    instance: PathInstance | None = None,
) -> QosAnnotation | None:
    """QoS along a region path, measured region-to-region.

    The first hop uses the given node-path instance when supplied (entry
    channel plus intra-region crossing), otherwise the view's edge weight.
    Downstream hops use view edge weights; remote crossings contribute zero.
    """
    if not path:
        return None
    if instance is not None:
        hop_lat, hop_loss = instance.entry.latency, instance.entry.loss
        lat = instance.entry.latency + instance.crossing_latency
        surv = (1.0 - instance.entry.loss) * (1.0 - instance.crossing_loss)
    else:
        first = view.qos(owner, path[0])
        if first is None:
            return None
        hop_lat, hop_loss = first.latency, first.loss
        lat = first.latency
        surv = 1.0 - first.loss
    for i in range(len(path) - 1):
        edge = view.qos(path[i], path[i + 1])
        if edge is None:
            return None
        lat += edge.latency
        surv *= 1.0 - edge.loss
    return QosAnnotation(lat, 1.0 - surv, hop_lat, hop_loss)


def compute_region_map(
    owner: int,
    view: RegionGraphView,
    local: LocalTopology | None = None,
    horizon: Horizon = Horizon.GLOBAL,
    multiplicity: Multiplicity = Multiplicity.AGGREGATE,
    radius: int = 2,
    max_paths: int = 64,
) -> RegionMap:
    """Build the owner's region map from its knowledge view.

    PER_PATH multiplicates an immediate region into one entry per node-path
    instance (requires ``local``); AGGREGATE folds alternatives per immediate
    by taking the minimum latency and the minimum loss independently.
    """
    vertices = view.vertices | {owner}
    if owner not in vertices:
        raise UnknownOwnerError(f"region {owner} not in view")
    if horizon is Horizon.NEIGHBORS_ONLY:
        dests = view.neighbors(owner)
    else:
        dests = []
        dist = {owner: 0}
        queue = deque([owner])
        while queue:
            v = queue.popleft()
            for n in view.neighbors(v):
                if n not in dist:
                    dist[n] = dist[v] + 1
                    queue.append(n)
        limit = radius if horizon is Horizon.EXTENDED else None
        dests = sorted(d for d, k in dist.items() if d != owner and (limit is None or k <= limit))

    entries: list[RegionMapEntry] = []
    for dest in dests:
        paths = all_shortest_region_paths(view, owner, dest, max_paths)
        by_immediate: dict[int, list[tuple[int, ...]]] = {}
        for p in paths:
            by_immediate.setdefault(p[0], []).append(p)
        for imm in sorted(by_immediate):
            if multiplicity is Multiplicity.PER_PATH and local is not None:
                seen_tags: set[str] = set()
                for p in by_immediate[imm]:
                    nxt = p[1] if len(p) > 1 else None
                    for inst in local.instances(owner, imm, nxt):
                        if inst.tag in seen_tags:
                            continue
                        qos = path_qos(view, owner, p, inst)
                        if qos is None:
                            continue
                        seen_tags.add(inst.tag)
                        entries.append(RegionMapEntry(dest, imm, inst, qos))
            else:
                best_lat: int | None = None
                best_loss: float | None = None
                hop_lat: int | None = None
                hop_loss: float | None = None
                for p in by_immediate[imm]:
                    qos = path_qos(view, owner, p)
                    if qos is None:
                        continue
                    best_lat = qos.path_latency if best_lat is None else min(best_lat, qos.path_latency)
                    best_loss = qos.path_loss if best_loss is None else min(best_loss, qos.path_loss)
                    hop_lat = qos.hop_latency if hop_lat is None else min(hop_lat, qos.hop_latency)
                    hop_loss = qos.hop_loss if hop_loss is None else min(hop_loss, qos.hop_loss)
                if best_lat is None:
                    continue
                entries.append(
                    RegionMapEntry(dest, imm, None, QosAnnotation(best_lat, best_loss, hop_lat, hop_loss))
                )
    entries.sort(key=lambda e: (e.destination, e.immediate, e.instance.tag if e.instance else ""))
    return RegionMap(owner, tuple(entries), horizon)


# -- decomposition file I/O --------------------------------------------------


def load_decomposition(source, graph: NetworkGraph) -> RegionDecomposition:
    """Parse `region <rid> [scope=<rid>] switches=<ids> nodes=<ids>` and
    `group <rid> children=<rids>` lines and validate against the graph."""
    from .topology import TopologyParseError, _iter_lines, _parse_int

    fulls: list[FullRegion] = []
    groups: list[HighLevelRegion] = []
    scoped: dict[int, RegionId] = {}

    def parse_ids(token: str, lineno: int) -> frozenset[int]:
        if not token:
            return frozenset()
        return frozenset(_parse_int(t, lineno) for t in token.split(","))

    rows = list(_iter_lines(source))
    group_rids: dict[int, RegionId] = {}
    for lineno, line in rows:
        parts = line.split()
        if parts[0] == "group":
            raw = _parse_int(parts[1], lineno)
            group_rids[raw] = RegionId(raw)
    for lineno, line in rows:
        parts = line.split()
        verb = parts[0]
        opts = {}
        for tok in parts[2:]:
            if "=" not in tok:
                raise TopologyParseError(f"bad token {tok!r}", lineno)
            k, v = tok.split("=", 1)
            opts[k] = v
        if verb == "region":
            raw = _parse_int(parts[1], lineno)
            scope = None
            if "scope" in opts:
                parent = _parse_int(opts["scope"], lineno)
                scope = group_rids.get(parent, RegionId(parent))
            rid = RegionId(raw, scope)
            fulls.append(
                FullRegion(rid, parse_ids(opts.get("switches", ""), lineno),
                           parse_ids(opts.get("nodes", ""), lineno))
            )
        elif verb == "group":
            raw = _parse_int(parts[1], lineno)
            groups.append(HighLevelRegion(group_rids[raw], parse_ids(opts.get("children", ""), lineno)))
        else:
            raise TopologyParseError(f"unknown directive {verb!r}", lineno)
    return build_decomposition(graph, fulls, groups)


def serialize_decomposition(decomp: RegionDecomposition) -> str:
    lines = []
    for r in sorted(decomp.full_regions, key=lambda r: (r.raw, r.shape())):
        sw = ",".join(map(str, sorted(r.switches)))
        nd = ",".join(map(str, sorted(r.nodes)))
        scope = f" scope={r.rid.scope.raw}" if r.rid.scope else ""
        lines.append(f"region {r.raw}{scope} switches={sw} nodes={nd}")
    for g in sorted(decomp.high_level, key=lambda g: g.raw):
        ch = ",".join(map(str, sorted(g.children)))
        lines.append(f"group {g.raw} children={ch}")
    return "\n".join(lines) + "\n"
