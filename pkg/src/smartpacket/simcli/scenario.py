"""Scenario scripts: declarative simulation input.

Text form, one statement per line, `#` comments:

    topology <path|builtin:NAME>
    decomposition <path|builtin:NAME|all-regions>
    seed <int>                     # mandatory
    duration <ticks>
    set <key> <value>              # engine knobs (gesture-forward, ...)
    config global <key> <value>    # default switch config
    config region <rid> <key> <value>
    config switch <vid> <key> <value>
    send from <nid> to <nid> at <tick> [count N] [every T] [flow FID]
         [stack R1,R2,..] [fission K] [path-latency-budget L]
         [path-loss-budget L] [hop-latency-budget L] [hop-loss-budget L]
    send from <nid> to region <rid> at <tick> [...]      # multicast form
    move <nid> to <region> at <tick>
    fail-link <a> <b> at <tick>
    attack from <region> to <nid> rate <pkts-per-tick> at <tick> [duration D]
    alert target <nid> rogue <r1,r2,..> ttl <ticks> [trh <nid>] [at <tick>]
    explorer-period <ticks>

A `.json` scenario is the same data as one object; see ScenarioScript.to_dict.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


class ScriptError(Exception):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass
class SendVerb:
    at: int
    sender: int
    receiver: int | None
    region: int | None = None  # multicast destination region
    count: int = 1
    every: int = 1
    fid: int | None = None
    stack: tuple[int, ...] | None = None
    fission: int | None = None
    path_latency_budget: int | None = None
    path_loss_budget: int | None = None
    hop_latency_budget: int | None = None
    hop_loss_budget: int | None = None

    kind: str = "send"


@dataclass
class MoveVerb:
    at: int
    nid: int
    to_region: int
    kind: str = "move"


@dataclass
class FailLinkVerb:
    at: int
    a: int
    b: int
    kind: str = "fail-link"


@dataclass
class AttackVerb:
    at: int
    region: int
    target: int
    rate: int
    duration: int | None = None
    kind: str = "attack"


@dataclass
class AlertVerb:
    at: int
    target: int
    rogue: tuple[int, ...] = ()
    ttl: int = 1000
    trh: int | None = None
    kind: str = "alert"


@dataclass
class ConfigEntry:
    scope: str  # global | region | switch
    ident: int | None
    key: str
    value: str


@dataclass
class ScenarioScript:
    topology_ref: str
    decomposition_ref: str
    seed: int
    duration: int
    settings: dict[str, str] = field(default_factory=dict)
    configs: list[ConfigEntry] = field(default_factory=list)
    verbs: list = field(default_factory=list)
    explorer_period: int | None = None
    source_dir: Path | None = None

    def to_dict(self) -> dict:
        from dataclasses import asdict

        return {
            "topology": self.topology_ref,
            "decomposition": self.decomposition_ref,
            "seed": self.seed,
            "duration": self.duration,
            "settings": dict(self.settings),
            "configs": [asdict(c) for c in self.configs],
            "verbs": [asdict(v) for v in self.verbs],
            "explorer_period": self.explorer_period,
        }


def _ints(token: str, line: int) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in token.split(",") if t)
    except ValueError:
        raise ScriptError(f"bad id list {token!r}", line) from None


def _int(token: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ScriptError(f"bad integer {token!r}", line) from None


def _parse_send(parts: list[str], line: int) -> SendVerb:
    # send from <nid> to [region] <id> at <tick> [options...]
    if len(parts) < 5 or parts[1] != "from" or parts[3] != "to":
        raise ScriptError("send syntax: send from <nid> to [region] <id> at <tick> ...", line)
    sender = _int(parts[2], line)
    idx = 4
    region = None
    receiver: int | None
    if parts[idx] == "region":
        region = _int(parts[idx + 1], line)
        receiver = None
        idx += 2
    else:
        receiver = _int(parts[idx], line)
        idx += 1
    if idx >= len(parts) or parts[idx] != "at":
        raise ScriptError("send needs `at <tick>`", line)
    at = _int(parts[idx + 1], line)
    verb = SendVerb(at=at, sender=sender, receiver=receiver, region=region)
    idx += 2
    options = {
        "count": ("count", int), "every": ("every", int), "flow": ("fid", int),
        "fission": ("fission", int),
        "path-latency-budget": ("path_latency_budget", int),
        "path-loss-budget": ("path_loss_budget", int),
        "hop-latency-budget": ("hop_latency_budget", int),
        "hop-loss-budget": ("hop_loss_budget", int),
    }
    while idx < len(parts):
        opt = parts[idx]
        if opt == "stack":
            verb.stack = _ints(parts[idx + 1], line)
        elif opt in options:
            attr, conv = options[opt]
            try:
                setattr(verb, attr, conv(parts[idx + 1]))
            except (ValueError, IndexError):
                raise ScriptError(f"bad value for {opt}", line) from None
        else:
            raise ScriptError(f"unknown send option {opt!r}", line)
        idx += 2
    return verb


def parse_scenario(text: str, source_dir: Path | None = None) -> ScenarioScript:
    topology = decomposition = None
    seed = None
    duration = None
    settings: dict[str, str] = {}
    configs: list[ConfigEntry] = []
    verbs: list = []
    explorer_period = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        verb = parts[0]
        try:
            if verb == "topology":
                topology = parts[1]
            elif verb == "decomposition":
                decomposition = parts[1]
            elif verb == "seed":
                seed = _int(parts[1], lineno)
            elif verb == "duration":
                duration = _int(parts[1], lineno)
            elif verb == "set":
                settings[parts[1]] = parts[2]
            elif verb == "config":
                scope = parts[1]
                if scope == "global":
                    configs.append(ConfigEntry("global", None, parts[2], parts[3]))
                elif scope in ("region", "switch"):
                    configs.append(ConfigEntry(scope, _int(parts[2], lineno), parts[3], parts[4]))
                else:
                    raise ScriptError(f"unknown config scope {scope!r}", lineno)
            elif verb == "send":
                verbs.append(_parse_send(parts, lineno))
            elif verb == "move":
                if len(parts) != 6 or parts[2] != "to" or parts[4] != "at":
                    raise ScriptError("move syntax: move <nid> to <region> at <tick>", lineno)
                verbs.append(MoveVerb(_int(parts[5], lineno), _int(parts[1], lineno),
                                      _int(parts[3], lineno)))
            elif verb == "fail-link":
                if len(parts) != 5 or parts[3] != "at":
                    raise ScriptError("fail-link syntax: fail-link <a> <b> at <tick>", lineno)
                verbs.append(FailLinkVerb(_int(parts[4], lineno), _int(parts[1], lineno),
                                          _int(parts[2], lineno)))
            elif verb == "attack":
                if parts[1] != "from" or parts[3] != "to" or parts[5] != "rate":
                    raise ScriptError(
                        "attack syntax: attack from <region> to <nid> rate <n> at <tick>", lineno)
                atk = AttackVerb(at=0, region=_int(parts[2], lineno),
                                 target=_int(parts[4], lineno), rate=_int(parts[6], lineno))
                idx = 7
                while idx < len(parts):
                    if parts[idx] == "at":
                        atk.at = _int(parts[idx + 1], lineno)
                    elif parts[idx] == "duration":
                        atk.duration = _int(parts[idx + 1], lineno)
                    else:
                        raise ScriptError(f"unknown attack option {parts[idx]!r}", lineno)
                    idx += 2
                verbs.append(atk)
            elif verb == "alert":
                if parts[1] != "target":
                    raise ScriptError("alert syntax: alert target <nid> rogue <rids> ttl <t>", lineno)
                al = AlertVerb(at=0, target=_int(parts[2], lineno))
                idx = 3
                while idx < len(parts):
                    if parts[idx] == "rogue":
                        al.rogue = _ints(parts[idx + 1], lineno)
                    elif parts[idx] == "ttl":
                        al.ttl = _int(parts[idx + 1], lineno)
                    elif parts[idx] == "trh":
                        al.trh = _int(parts[idx + 1], lineno)
                    elif parts[idx] == "at":
                        al.at = _int(parts[idx + 1], lineno)
                    else:
                        raise ScriptError(f"unknown alert option {parts[idx]!r}", lineno)
                    idx += 2
                verbs.append(al)
            elif verb == "explorer-period":
                explorer_period = _int(parts[1], lineno)
            else:
                raise ScriptError(f"unknown statement {verb!r}", lineno)
        except IndexError:
            raise ScriptError(f"statement {verb!r} is missing arguments", lineno) from None

    if topology is None:
        raise ScriptError("scenario needs a `topology` line")
    if seed is None:
        raise ScriptError("scenario needs a `seed` line")
    if duration is None:
        raise ScriptError("scenario needs a `duration` line")
    verbs.sort(key=lambda v: v.at)
    return ScenarioScript(
        topology_ref=topology,
        decomposition_ref=decomposition or "all-regions",
        seed=seed,
        duration=duration,
        settings=settings,
        configs=configs,
        verbs=verbs,
        explorer_period=explorer_period,
        source_dir=source_dir,
    )


_VERB_TYPES = {"send": SendVerb, "move": MoveVerb, "fail-link": FailLinkVerb,
               "attack": AttackVerb, "alert": AlertVerb}


def parse_scenario_json(text: str, source_dir: Path | None = None) -> ScenarioScript:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScriptError(f"invalid JSON: {exc}", exc.lineno) from None
    try:
        verbs = []
        for v in doc.get("verbs", []):
            v = dict(v)
            cls = _VERB_TYPES[v.pop("kind")]
            if "stack" in v and v["stack"] is not None:
                v["stack"] = tuple(v["stack"])
            if "rogue" in v and v["rogue"] is not None:
                v["rogue"] = tuple(v["rogue"])
            verbs.append(cls(**v))
        verbs.sort(key=lambda v: v.at)
        return ScenarioScript(
            topology_ref=doc["topology"],
            decomposition_ref=doc.get("decomposition", "all-regions"),
            seed=doc["seed"],
            duration=doc["duration"],
            settings=dict(doc.get("settings", {})),
            configs=[ConfigEntry(**c) for c in doc.get("configs", [])],
            verbs=verbs,
            explorer_period=doc.get("explorer_period"),
            source_dir=source_dir,
        )
    except KeyError as exc:
        raise ScriptError(f"scenario JSON missing field {exc}") from None


def load_scenario(path: str | Path) -> ScenarioScript:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScriptError(f"cannot read scenario {path}: {exc}") from None
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        return parse_scenario_json(text, source_dir=path.parent)
    return parse_scenario(text, source_dir=path.parent)
