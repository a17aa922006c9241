"""Machine-readable run results: per-flow counters, per-copy traces, and the
conservation ledger. JSON output is canonical (sorted keys) so identical
runs produce identical bytes.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


class UnknownFlowError(Exception):
    pass


FlowKey = tuple[int, "int | None", "int | None"]


def flow_key_str(key: FlowKey) -> str:
    return "/".join("-" if part is None else str(part) for part in key)


def flow_key_from_str(text: str) -> FlowKey:
    parts = text.split("/")
    return tuple(None if p == "-" else int(p) for p in parts)  # type: ignore[return-value]


@dataclass
class TraceRecord:
    copy_id: int
    regions: list[int]
    delivered: bool
    latency: int | None = None
    rbs: list[int] | None = None
    drop_reason: str | None = None
    delivered_to: int | None = None


@dataclass
class FlowStats:
    sender: int
    receiver: int | None
    fid: int | None
    sent: int = 0
    spawned: int = 0
    delivered: int = 0
    delivered_unique: int = 0
    dropped: int = 0
    blocked: int = 0
    second_screened: int = 0
    drop_reasons: dict[str, int] = field(default_factory=dict)
    latencies: list[int] = field(default_factory=list)
    traces: list[TraceRecord] = field(default_factory=list)

    @property
    def key(self) -> FlowKey:
        return (self.sender, self.receiver, self.fid)


@dataclass
class MetricsReport:
    seed: int
    duration: int
    sent: int = 0
    spawned: int = 0
    delivered: int = 0
    dropped: int = 0
    in_flight: int = 0
    blocked: int = 0
    second_screened: int = 0
    diverted: int = 0
    drop_reasons: dict[str, int] = field(default_factory=dict)
    cache_hits: int = 0
    suggestions_computed: int = 0
    gesture_forwards: int = 0
    redirect_applied: int = 0
    redirect_notices: int = 0
    pull_queries: int = 0
    explorers_sent: int = 0
    events_sent: int = 0
    alerts_installed: int = 0
    map_convergence_tick: int | None = None
    conservation_checked: bool = False
    region_scores: dict[int, float] = field(default_factory=dict)
    flows: list[FlowStats] = field(default_factory=list)

    @property
    def emitted(self) -> int:
        """Total packet copies put on the wire: node sends plus copies
        spawned by fission or multicast fan-out. The conservation law is
        emitted == delivered + dropped + in_flight at every tick."""
        return self.sent + self.spawned

    def flow(self, key: FlowKey) -> FlowStats:
        for f in self.flows:
            if f.key == tuple(key):
                return f
        raise UnknownFlowError(f"no flow {key}")

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["region_scores"] = {str(k): v for k, v in sorted(self.region_scores.items())}
        doc["flows"] = sorted(doc["flows"], key=lambda f: flow_key_str(
            (f["sender"], f["receiver"], f["fid"])))
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricsReport":
        doc = dict(doc)
        doc["region_scores"] = {int(k): v for k, v in doc.get("region_scores", {}).items()}
        flows = []
        for f in doc.get("flows", []):
            f = dict(f)
            f["traces"] = [TraceRecord(**t) for t in f.get("traces", [])]
            flows.append(FlowStats(**f))
        doc["flows"] = flows
        return cls(**doc)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        return cls.from_dict(json.loads(text))


def trace_query(report: MetricsReport, flow: FlowKey) -> list[list[int]]:
    """Ground-truth region sequences of one flow's packet copies, in copy
    order. Independent of whatever the packets' backward stacks recorded."""
    stats = report.flow(flow)
    return [list(t.regions) for t in sorted(stats.traces, key=lambda t: t.copy_id)]


def summary_text(report: MetricsReport) -> str:
    lines = [
        f"seed {report.seed}  duration {report.duration}",
        f"emitted {report.emitted} = sent {report.sent} + spawned {report.spawned}",
        f"delivered {report.delivered}  dropped {report.dropped}  in-flight {report.in_flight}",
        f"blocked {report.blocked}  second-screened {report.second_screened}  diverted {report.diverted}",
        f"cache hits {report.cache_hits}  suggestions {report.suggestions_computed}",
        f"map convergence tick {report.map_convergence_tick}",
        f"flows: {len(report.flows)}",
    ]
    for f in sorted(report.flows, key=lambda f: flow_key_str(f.key)):
        lines.append(
            f"  {flow_key_str(f.key)}: sent {f.sent} delivered {f.delivered} "
            f"dropped {f.dropped} blocked {f.blocked} screened {f.second_screened}"
        )
    return "\n".join(lines) + "\n"


def write_csv(report: MetricsReport, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "sender", "receiver", "fid", "sent", "spawned", "delivered",
            "delivered_unique", "dropped", "blocked", "second_screened",
            "mean_latency",
        ])
        for f in sorted(report.flows, key=lambda f: flow_key_str(f.key)):
            mean = (sum(f.latencies) / len(f.latencies)) if f.latencies else ""
            writer.writerow([
                f.sender, "" if f.receiver is None else f.receiver,
                "" if f.fid is None else f.fid,
                f.sent, f.spawned, f.delivered, f.delivered_unique,
                f.dropped, f.blocked, f.second_screened, mean,
            ])


def emit_report(report: MetricsReport, out_dir: Path, formats: tuple[str, ...] = ("json",)) -> list[Path]:
    """Write the report under out_dir; returns the files written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        p = out_dir / "report.json"
        p.write_text(report.to_json())
        written.append(p)
    if "csv" in formats:
        p = out_dir / "flows.csv"
        write_csv(report, p)
        written.append(p)
    if "text" in formats or "summary" in formats:
        p = out_dir / "summary.txt"
        p.write_text(summary_text(report))
        written.append(p)
    return written
