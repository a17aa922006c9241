"""Bundled deterministic topologies and their canonical decompositions.

fig1a/fig1b: two-region network before/after relocating one node.
fig2: BCube-like access network with two overlapping full regions.
fig3: nine single-purpose districts (S C A E F G H R plus one umbrella
      group M) wired so the region graph is exactly

          S-C, C-A, C-E, A-H, A-F, E-F, F-G, H-G, G-R

      with two distinct node-paths from C into E (C's switch links to both
      of E's switches). Each district is the smallest wiring that realizes
      the adjacency: one switch plus one node, except E which has two
      switches sharing a node.
"""
from __future__ import annotations

from .regions import (
    FullRegion,
    HighLevelRegion,
    RegionDecomposition,
    RegionId,
    build_decomposition,
)
from .topology import Link, NetworkGraph, UnknownFixtureError, Vertex, VertexKind

FIXTURE_NAMES = ("fig1a", "fig1b", "fig2", "fig3")

# fig3 region letters to raw rids, and the vertex ids behind them
FIG3_RIDS = {"S": 1, "C": 2, "A": 3, "E": 4, "F": 5, "G": 6, "H": 7, "R": 8, "M": 100}
FIG3_SWITCHES = {"S": (10,), "C": (20,), "A": (30,), "E": (40, 41),
                 "F": (50,), "G": (60,), "H": (70,), "R": (80,)}
FIG3_NODES = {"S": (1,), "C": (2,), "A": (3,), "E": (4,),
              "F": (5,), "G": (6,), "H": (7,), "R": (9,)}
FIG3_SENDER = 1   # node in S
FIG3_RECEIVER = 9  # node in R


def _node(vid, label=""):
    return Vertex(vid, VertexKind.NODE, label)


def _switch(vid, label=""):
    return Vertex(vid, VertexKind.SWITCH, label)


def _fig1(after_move: bool) -> NetworkGraph:
    g = NetworkGraph()
    g.add_vertex(_switch(10, "x1"))
    g.add_vertex(_switch(20, "y1"))
    g.add_vertex(_node(1, "n1"))
    g.add_vertex(_node(2, "n2"))
    g.add_vertex(_node(3, "n3"))
    g.add_link(Link(10, 20))
    g.add_link(Link(10, 1))
    g.add_link(Link(20, 3))
    g.add_link(Link(20 if after_move else 10, 2))
    return g


def _fig2() -> NetworkGraph:
    g = NetworkGraph()
    g.add_vertex(_switch(10, "s1"))
    g.add_vertex(_switch(11, "s2"))
    for vid, label in ((1, "a"), (2, "b"), (3, "c"), (4, "d"), (5, "e")):
        g.add_vertex(_node(vid, label))
    for n in (1, 2, 3):
        g.add_link(Link(10, n))
    for n in (3, 4, 5):
        g.add_link(Link(11, n))
    return g


def _fig3() -> NetworkGraph:
    g = NetworkGraph()
    for letter in "SCAEFGHR":
        for i, sw in enumerate(FIG3_SWITCHES[letter], start=1):
            g.add_vertex(_switch(sw, f"{letter.lower()}{i}"))
        for nd in FIG3_NODES[letter]:
            g.add_vertex(_node(nd, f"n{letter.lower()}"))
    # every switch of a district is adjacent to its node
    for letter in "SCAEFGHR":
        for sw in FIG3_SWITCHES[letter]:
            for nd in FIG3_NODES[letter]:
                g.add_link(Link(sw, nd))
    # inter-district wiring; C reaches E over two parallel channels
    inter = [
        (10, 20),          # S-C
        (20, 30),          # C-A
        (20, 40), (20, 41),  # C-E (two node-paths)
        (30, 70),          # A-H
        (30, 50),          # A-F
        (40, 50), (41, 50),  # E-F
        (50, 60),          # F-G
        (70, 60),          # H-G
        (60, 80),          # G-R
    ]
    for a, b in inter:
        g.add_link(Link(a, b))
    return g


def builtin_fixture(name: str) -> NetworkGraph:
    """Deterministic bundled topology by name."""
    if name == "fig1a":
        return _fig1(after_move=False)
    if name == "fig1b":
        return _fig1(after_move=True)
    if name == "fig2":
        return _fig2()
    if name == "fig3":
        return _fig3()
    raise UnknownFixtureError(f"unknown fixture {name!r} (have {', '.join(FIXTURE_NAMES)})")


def builtin_decomposition(name: str, graph: NetworkGraph | None = None) -> RegionDecomposition:
    """Canonical region selection for a bundled topology."""
    g = graph if graph is not None else builtin_fixture(name)
    if name in ("fig1a", "fig1b"):
        moved = name == "fig1b"
        x_nodes = frozenset({1} if moved else {1, 2})
        y_nodes = frozenset({2, 3} if moved else {3})
        fulls = [
            FullRegion(RegionId(1), frozenset({10}), x_nodes),
            FullRegion(RegionId(2), frozenset({20}), y_nodes),
        ]
        return build_decomposition(g, fulls)
    if name == "fig2":
        fulls = [
            FullRegion(RegionId(1), frozenset({10}), frozenset({1, 2, 3})),
            FullRegion(RegionId(2), frozenset({11}), frozenset({3, 4, 5})),
        ]
        return build_decomposition(g, fulls)
    if name == "fig3":
        umbrella = RegionId(FIG3_RIDS["M"])
        fulls = [
            FullRegion(
                RegionId(FIG3_RIDS[letter], umbrella),
                frozenset(FIG3_SWITCHES[letter]),
                frozenset(FIG3_NODES[letter]),
            )
            for letter in "SCAEFGHR"
        ]
        groups = [HighLevelRegion(umbrella, frozenset(FIG3_RIDS[c] for c in "SCAEFGHR"))]
        return build_decomposition(g, fulls, groups)
    raise UnknownFixtureError(f"no decomposition for fixture {name!r}")


def synthetic_region_network(
    edges: list[tuple[int, int]], regions: list[int] | None = None,
    nodes_per_region: int = 1,
) -> tuple[NetworkGraph, RegionDecomposition]:
    """Build a network realizing a given region graph: region i gets switch
    1000+i and nodes 2000+i*16.., each region-graph edge becomes a
    switch-to-switch link. Useful for randomized protocol tests."""
    rids = sorted(regions if regions is not None else {r for e in edges for r in e})
    g = NetworkGraph()
    fulls = []
    for r in rids:
        sw = 1000 + r
        g.add_vertex(_switch(sw, f"sw{r}"))
        nds = []
        for k in range(nodes_per_region):
            nd = 2000 + r * 16 + k
            g.add_vertex(_node(nd, f"n{r}_{k}"))
            g.add_link(Link(sw, nd))
            nds.append(nd)
        fulls.append(FullRegion(RegionId(r), frozenset({sw}), frozenset(nds)))
    for a, b in edges:
        g.add_link(Link(1000 + a, 1000 + b))
    return g, build_decomposition(g, fulls)
