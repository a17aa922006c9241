"""DDoS response: back-propagated alerts, trace-based discrimination using
the region backward stack, blackholing of rogue regions, second screening
for packets that cannot be told apart from attack traffic, and historical
region scores that degrade service for repeat offenders.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable


@dataclass(frozen=True)
class DdosAlert:
    target_nid: int
    rogue_regions: frozenset[int]
    issued_at: int
    ttl: int
    trh_nid: int | None = None

    def alive(self, now: int) -> bool:
        return now < self.issued_at + self.ttl


class Verdict(Enum):
    PASS = "pass"
    BLOCK = "block"
    SECOND_SCREEN = "second-screen"
    DIVERT_TO_TRH = "divert-to-trh"


def evaluate(state, header, now: int) -> tuple[Verdict, DdosAlert | None]:
    """Verdict plus the alert that decided it (None on plain pass).

    Per live alert matching the packet's receiver: a recorded trace that
    touches a rogue region blocks; a missing or cleared trace cannot be
    discriminated and goes to second screening; a clean trace passes, or is
    diverted to the traffic regulator hub when one is designated. Traffic
    re-emitted by the hub itself always passes.
    """
    if header.ids is None or header.ids.receiver_nid is None:
        return Verdict.PASS, None
    receiver = header.ids.receiver_nid
    trace = tuple(header.rbs.traversed) if header.rbs is not None else None
    decided: tuple[Verdict, DdosAlert | None] = (Verdict.PASS, None)
    rank = {Verdict.PASS: 0, Verdict.DIVERT_TO_TRH: 1, Verdict.SECOND_SCREEN: 2, Verdict.BLOCK: 3}
    for alert in state.alerts:
        if not alert.alive(now) or alert.target_nid != receiver:
            continue
        if alert.trh_nid is not None and header.ids.sender_nid == alert.trh_nid:
            continue
        if not trace:
            verdict = Verdict.SECOND_SCREEN
        elif set(trace) & alert.rogue_regions:
            verdict = Verdict.BLOCK
        elif alert.trh_nid is not None:
            verdict = Verdict.DIVERT_TO_TRH
        else:
            verdict = Verdict.PASS
        if rank[verdict] > rank[decided[0]]:
            decided = (verdict, alert)
    return decided


def filter_packet(state, header, now: int = 0) -> Verdict:
    """Fast total discrimination on the packet's region trace."""
    return evaluate(state, header, now)[0]


def flood_distances(edges: Iterable[tuple[int, int]], origin: int,
                    max_hops: int | None = None) -> dict[int, int]:
    """Region-hop distances for flooding an alert or notice from origin."""
    adj: dict[int, set[int]] = {}
    for a, b in edges:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    dist = {origin: 0}
    queue = deque([origin])
    while queue:
        v = queue.popleft()
        if max_hops is not None and dist[v] >= max_hops:
            continue
        for n in sorted(adj.get(v, ())):
            if n not in dist:
                dist[n] = dist[v] + 1
                queue.append(n)
    return dist


# -- historical region scores --------------------------------------------------


@dataclass(frozen=True)
class RegionScore:
    region: int
    score: float
    attack_count: int
    window: int
    decayed_count: float = 0.0
    as_of: int = 0


def update_scores(
    scores: dict[int, RegionScore] | None,
    observed_attacks: list[tuple[int, int]],
    now: int | None = None,
    window: int = 1000,
) -> dict[int, RegionScore]:
    """Fold observed (region, tick) attacks into decaying per-region counts.

    Counts halve every ``window`` ticks; score = 1 / (1 + decayed count), so
    a region with k un-decayed attacks scores 1/(1+k) and a clean region 1.0.
    """
    out: dict[int, RegionScore] = {}
    if now is None:
        now = max((t for _, t in observed_attacks), default=0)
        if scores:
            now = max(now, max(s.as_of for s in scores.values()))
    for region, prev in (scores or {}).items():
        decayed = prev.decayed_count * 0.5 ** ((now - prev.as_of) / prev.window)
        out[region] = RegionScore(region, 1.0 / (1.0 + decayed), prev.attack_count,
                                  prev.window, decayed, now)
    for region, tick in sorted(observed_attacks, key=lambda p: (p[1], p[0])):
        prev = out.get(region)
        decayed = prev.decayed_count if prev else 0.0
        count = prev.attack_count if prev else 0
        decayed += 0.5 ** ((now - tick) / window)
        out[region] = RegionScore(region, 1.0 / (1.0 + decayed), count + 1, window, decayed, now)
    return out


def service_levels(scores: dict[int, RegionScore]) -> dict[int, float]:
    """Plain score lookup for path selection."""
    return {r: s.score for r, s in scores.items()}
