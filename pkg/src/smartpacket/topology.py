"""Network graph model: typed vertices (nodes vs. switches), undirected links
with latency/loss attributes, text and JSON file formats, and validation.

The topology text format is line oriented:

    # comment
    node <id> [label]
    switch <id> [label]
    link <idA> <idB> latency=<ticks> loss=<p>

Latency is in integer simulator ticks, loss a probability in [0, 1].
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator

VertexId = int

MAX_VERTEX_ID = 0xFFFF


class TopologyError(Exception):
    """Base for topology construction and parsing failures."""


class TopologyParseError(TopologyError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateIdError(TopologyError):
    pass


class DanglingLinkError(TopologyError):
    pass


class UnknownFixtureError(TopologyError):
    pass


class VertexKind(Enum):
    NODE = "node"
    SWITCH = "switch"


class TopoFormat(Enum):
    TEXT = "text"
    JSON = "json"


@dataclass(frozen=True)
class Vertex:
    id: VertexId
    kind: VertexKind
    label: str = ""


@dataclass(frozen=True)
class Link:
    """Undirected link; endpoints are stored in canonical (low, high) order."""

    a: VertexId
    b: VertexId
    latency: int = 1
    loss: float = 0.0

    def __post_init__(self):
        if self.a == self.b:
            raise TopologyError(f"self-link at vertex {self.a}")
        if self.a > self.b:
            object.__setattr__(self, "a", self.b)
            object.__setattr__(self, "b", self.a)
        if self.latency < 0:
            raise TopologyError(f"negative latency on link {self.a}-{self.b}")
        if not 0.0 <= self.loss <= 1.0:
            raise TopologyError(f"loss outside [0,1] on link {self.a}-{self.b}")

    @property
    def endpoints(self) -> tuple[VertexId, VertexId]:
        return (self.a, self.b)

    def other(self, vid: VertexId) -> VertexId:
        return self.b if vid == self.a else self.a


class NetworkGraph:
    """Undirected graph of nodes and switches.

    Construction is single threaded; reads are safe from anywhere. The
    mutating methods (used by the simulator for link failures and node
    relocation) bump ``version`` so derived caches can invalidate.
    """

    def __init__(self, vertices: Iterable[Vertex] = (), links: Iterable[Link] = ()):
        self.vertices: dict[VertexId, Vertex] = {}
        self.links: dict[tuple[VertexId, VertexId], Link] = {}
        self._adj: dict[VertexId, set[VertexId]] = {}
        self.version = 0
        for v in vertices:
            self.add_vertex(v)
        for l in links:
            self.add_link(l)

    # -- construction / mutation ------------------------------------------

    def add_vertex(self, vertex: Vertex) -> None:
        if vertex.id in self.vertices:
            raise DuplicateIdError(f"vertex id {vertex.id} defined twice")
        if not 0 <= vertex.id <= MAX_VERTEX_ID:
            raise TopologyError(f"vertex id {vertex.id} outside 16-bit range")
        self.vertices[vertex.id] = vertex
        self._adj[vertex.id] = set()
        self.version += 1

    def add_link(self, link: Link) -> None:
        for end in link.endpoints:
            if end not in self.vertices:
                raise DanglingLinkError(f"link {link.a}-{link.b} references unknown vertex {end}")
        if link.endpoints in self.links:
            raise DuplicateIdError(f"duplicate link {link.a}-{link.b}")
        self.links[link.endpoints] = link
        self._adj[link.a].add(link.b)
        self._adj[link.b].add(link.a)
        self.version += 1

    def remove_link(self, a: VertexId, b: VertexId) -> Link:
        key = (a, b) if a < b else (b, a)
        link = self.links.pop(key, None)
        if link is None:
            raise DanglingLinkError(f"no link {a}-{b}")
        self._adj[link.a].discard(link.b)
        self._adj[link.b].discard(link.a)
        self.version += 1
        return link

    # -- queries -----------------------------------------------------------

    def link(self, a: VertexId, b: VertexId) -> Link | None:
        key = (a, b) if a < b else (b, a)
        return self.links.get(key)

    def neighbors(self, vid: VertexId) -> list[VertexId]:
        return sorted(self._adj[vid])

    def kind(self, vid: VertexId) -> VertexKind:
        return self.vertices[vid].kind

    def is_switch(self, vid: VertexId) -> bool:
        return self.vertices[vid].kind is VertexKind.SWITCH

    def is_node(self, vid: VertexId) -> bool:
        return self.vertices[vid].kind is VertexKind.NODE

    def switches(self) -> list[VertexId]:
        return sorted(v.id for v in self.vertices.values() if v.kind is VertexKind.SWITCH)

    def nodes(self) -> list[VertexId]:
        return sorted(v.id for v in self.vertices.values() if v.kind is VertexKind.NODE)

    def node_neighbors(self, vid: VertexId) -> frozenset[VertexId]:
        return frozenset(n for n in self._adj[vid] if self.is_node(n))

    def shortest_path(
        self, src: VertexId, dst_set: frozenset[VertexId] | set[VertexId],
        allowed: set[VertexId] | None = None,
    ) -> tuple[int, float, tuple[VertexId, ...]] | None:
        """Minimum-latency path from src to the nearest vertex of dst_set.

        Returns (latency, loss, vertex sequence) or None. Ties resolve by
        (latency, loss, lexicographic vertex sequence) so results are stable.
        ``allowed`` restricts the traversal to an induced subgraph.
        """
        import heapq

        if src in dst_set:
            return (0, 0.0, (src,))
        best: dict[VertexId, tuple[int, float, tuple[VertexId, ...]]] = {}
        heap: list[tuple[int, float, tuple[VertexId, ...]]] = [(0, 0.0, (src,))]
        while heap:
            lat, loss, path = heapq.heappop(heap)
            here = path[-1]
            if here in dst_set:
                return (lat, loss, path)
            prev = best.get(here)
            if prev is not None and prev < (lat, loss, path):
                continue
            for nxt in self.neighbors(here):
                if nxt in path:
                    continue
                if allowed is not None and nxt not in allowed and nxt not in dst_set:
                    continue
                ln = self.link(here, nxt)
                cand = (lat + ln.latency, 1.0 - (1.0 - loss) * (1.0 - ln.loss), path + (nxt,))
                known = best.get(nxt)
                if known is None or cand < known:
                    best[nxt] = cand
                    heapq.heappush(heap, cand)
        return None


@dataclass(frozen=True)
class ValidationReport:
    connected: bool
    ids_unique: bool
    isolated: tuple[VertexId, ...]
    switch_count: int
    node_count: int
    issues: tuple[str, ...] = ()


def validate(graph: NetworkGraph) -> ValidationReport:
    """Pure structural check: connectivity, id uniqueness, isolated vertices."""
    ids = sorted(graph.vertices)
    isolated = tuple(v for v in ids if not graph._adj[v])
    connected = True
    if ids:
        seen = {ids[0]}
        queue = deque([ids[0]])
        while queue:
            v = queue.popleft()
            for n in graph.neighbors(v):
                if n not in seen:
                    seen.add(n)
                    queue.append(n)
        connected = len(seen) == len(ids)
    issues = []
    if not connected:
        issues.append("graph is not connected")
    for v in isolated:
        issues.append(f"vertex {v} has no links")
    if graph.vertices and not any(graph.is_switch(v) for v in ids):
        issues.append("no switches present")
    return ValidationReport(
        connected=connected,
        ids_unique=True,
        isolated=isolated,
        switch_count=len(graph.switches()),
        node_count=len(graph.nodes()),
        issues=tuple(issues),
    )


# -- file I/O ---------------------------------------------------------------


def _parse_float(token: str, line: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise TopologyParseError(f"bad numeric value {token!r}", line) from None


def _parse_int(token: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise TopologyParseError(f"bad integer {token!r}", line) from None


def _iter_lines(source) -> Iterator[tuple[int, str]]:
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield i, line


def load_topology(source, fmt: TopoFormat = TopoFormat.TEXT) -> NetworkGraph:
    """Parse a topology from text/JSON. Errors carry the offending line."""
    if fmt is TopoFormat.JSON:
        return _load_json(source)
    graph = NetworkGraph()
    for lineno, line in _iter_lines(source):
        parts = line.split()
        verb = parts[0]
        try:
            if verb in ("node", "switch"):
                if len(parts) < 2:
                    raise TopologyParseError(f"{verb} needs an id", lineno)
                vid = _parse_int(parts[1], lineno)
                label = parts[2] if len(parts) > 2 else ""
                kind = VertexKind.NODE if verb == "node" else VertexKind.SWITCH
                graph.add_vertex(Vertex(vid, kind, label))
            elif verb == "link":
                if len(parts) < 3:
                    raise TopologyParseError("link needs two endpoints", lineno)
                a = _parse_int(parts[1], lineno)
                b = _parse_int(parts[2], lineno)
                latency, loss = 1, 0.0
                for opt in parts[3:]:
                    if "=" not in opt:
                        raise TopologyParseError(f"bad link option {opt!r}", lineno)
                    key, val = opt.split("=", 1)
                    if key == "latency":
                        latency = _parse_int(val, lineno)
                    elif key == "loss":
                        loss = _parse_float(val, lineno)
                    else:
                        raise TopologyParseError(f"unknown link option {key!r}", lineno)
                graph.add_link(Link(a, b, latency, loss))
            else:
                raise TopologyParseError(f"unknown directive {verb!r}", lineno)
        except (DuplicateIdError, DanglingLinkError, TopologyError) as exc:
            if isinstance(exc, TopologyParseError):
                raise
            raise type(exc)(f"line {lineno}: {exc}") from None
    return graph


def _load_json(source) -> NetworkGraph:
    if isinstance(source, (bytes, str)):
        text = source
    else:
        text = source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TopologyParseError(f"invalid JSON: {exc}", exc.lineno) from None
    graph = NetworkGraph()
    for entry in doc.get("vertices", []):
        kind = VertexKind(entry["kind"])
        graph.add_vertex(Vertex(int(entry["id"]), kind, entry.get("label", "")))
    for entry in doc.get("links", []):
        graph.add_link(
            Link(int(entry["a"]), int(entry["b"]),
                 int(entry.get("latency", 1)), float(entry.get("loss", 0.0)))
        )
    return graph


def serialize_topology(graph: NetworkGraph, fmt: TopoFormat = TopoFormat.TEXT) -> str:
    if fmt is TopoFormat.JSON:
        doc = {
            "vertices": [
                {"id": v.id, "kind": v.kind.value, "label": v.label}
                for v in sorted(graph.vertices.values(), key=lambda v: v.id)
            ],
            "links": [
                {"a": l.a, "b": l.b, "latency": l.latency, "loss": l.loss}
                for l in sorted(graph.links.values(), key=lambda l: l.endpoints)
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True)
    lines = []
    for v in sorted(graph.vertices.values(), key=lambda v: v.id):
        suffix = f" {v.label}" if v.label else ""
        lines.append(f"{v.kind.value} {v.id}{suffix}")
    for l in sorted(graph.links.values(), key=lambda l: l.endpoints):
        lines.append(f"link {l.a} {l.b} latency={l.latency} loss={l.loss}")
    return "\n".join(lines) + "\n"
