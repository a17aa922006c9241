"""Bit-exact packet header codec.

A header is four SuperFields, each optional per the leading Active-SFs
nibble (bit0 Region Stack, bit1 IDs, bit2 QoS, bit3 Region Backward Stack).
Wire layout, most-significant nibble first:

    byte 0        Active-SFs nibble | Region-Stack presence nibble
                  (presence bit0 = ephemeral single-hop FID, bit1 =
                   intra-region FID; zero filler when the stack SF is absent)
    Region Stack  [eph FID nibble + zero filler] [intra FID byte]
                  count byte (>= 1), then count 16-bit RIDs,
                  front = next waypoint, back = destination
    IDs SF        presence nibble (bit0 PID, bit1 FID, bit2 receiver) +
                  zero filler; 12-bit PID, 12-bit FID (lone 12-bit values
                  are padded with a zero nibble), 16-bit sender NID,
                  16-bit receiver NID
    QoS SF        presence nibble (bit0 single-hop latency, bit1 path
                  latency, bit2 single-hop loss, bit3 path loss) + zero
                  filler; the present 4-bit budget levels in that order,
                  then the 4-bit fission rate (always carried, default 1),
                  padded to a byte
    RBS SF        zero presence nibble + filler, count byte (0 allowed),
                  count 16-bit RIDs, oldest region first

Active-SFs 0b0001 marks the compatibility form: only the Region Stack SF is
present and every byte after it is the original packet's own header,
carried opaquely. Any other value without bits 0 and 1 set is rejected.

Decoding is strict: filler nibbles and unused presence bits must be zero,
counts must match the remaining bytes, and trailing bytes are an error, so
every valid header has exactly one wire image. decode() is total over
arbitrary bytes and only ever raises HeaderDecodeError.
"""
from __future__ import annotations

from dataclasses import dataclass, field

RID_BITS = 16
NID_BITS = 16
PID_BITS = 12
FID_BITS = 12
EPH_FID_BITS = 4
INTRA_FID_BITS = 8
QOS_BITS = 4
MAX_STACK = 255

ACTIVE_REGION_STACK = 0x1
ACTIVE_IDS = 0x2
ACTIVE_QOS = 0x4
ACTIVE_RBS = 0x8


class HeaderError(Exception):
    pass


class HeaderEncodeError(HeaderError):
    pass


class HeaderDecodeError(HeaderError):
    pass


class EmptyStackError(HeaderError):
    pass


@dataclass
class RegionStackSF:
    """Waypoint stack: front entry is the next goal, back the destination."""

    entries: list[int] = field(default_factory=list)
    ephemeral_single_hop_fid: int | None = None
    intra_region_fid: int | None = None

    def push_front(self, rid: int) -> None:
        self.entries.insert(0, rid)

    def pop_front(self) -> int:
        if not self.entries:
            raise EmptyStackError("pop from empty region stack")
        return self.entries.pop(0)

    def peek_front(self) -> int:
        if not self.entries:
            raise EmptyStackError("peek at empty region stack")
        return self.entries[0]

    @property
    def destination(self) -> int:
        if not self.entries:
            raise EmptyStackError("empty region stack has no destination")
        return self.entries[-1]

    def clone(self) -> "RegionStackSF":
        return RegionStackSF(list(self.entries), self.ephemeral_single_hop_fid,
                             self.intra_region_fid)


@dataclass
class IdsSF:
    sender_nid: int
    receiver_nid: int | None = None  # absent = multicast to the region
    packet_pid: int | None = None
    flow_fid: int | None = None

    def clone(self) -> "IdsSF":
        return IdsSF(self.sender_nid, self.receiver_nid, self.packet_pid, self.flow_fid)


@dataclass
class QosSmartSF:
    """Quantized budget levels (0..15); the tables in routing map levels to
    tick/probability thresholds. Fission rate 1 is plain unicast, above 1
    requests replication over that many distinct region paths (RedunCast)."""

    single_hop_latency: int | None = None
    path_latency: int | None = None
    single_hop_loss: int | None = None
    path_loss: int | None = None
    fission_rate: int = 1

    def clone(self) -> "QosSmartSF":
        return QosSmartSF(self.single_hop_latency, self.path_latency,
                          self.single_hop_loss, self.path_loss, self.fission_rate)


@dataclass
class RbsSF:
    """Regions the packet traversed, oldest first. Purely a courtesy record:
    any switch may clear it, at the cost of the discrimination benefits."""

    traversed: list[int] = field(default_factory=list)

    def append(self, rid: int) -> None:
        self.traversed.append(rid)

    def clear(self) -> None:
        self.traversed.clear()

    def clone(self) -> "RbsSF":
        return RbsSF(list(self.traversed))


@dataclass
class SmartPacketHeader:
    region_stack: RegionStackSF
    ids: IdsSF | None = None
    qos: QosSmartSF | None = None
    rbs: RbsSF | None = None
    legacy_payload: bytes | None = None

    def clone(self) -> "SmartPacketHeader":
        return SmartPacketHeader(
            self.region_stack.clone(),
            self.ids.clone() if self.ids else None,
            self.qos.clone() if self.qos else None,
            self.rbs.clone() if self.rbs else None,
            self.legacy_payload,
        )


def prepend_stack(legacy_packet: bytes, stack: RegionStackSF) -> SmartPacketHeader:
    """Wrap a non-participating sender's packet: region stack up front, the
    original bytes carried opaquely, every other SF excluded."""
    if not stack.entries:
        raise EmptyStackError("cannot prepend an empty region stack")
    return SmartPacketHeader(stack.clone(), legacy_payload=bytes(legacy_packet))


# -- nibble-level packing ----------------------------------------------------


class _NibbleWriter:
    def __init__(self):
        self._nibbles: list[int] = []

    def put(self, value: int, bits: int) -> None:
        for shift in range(bits - 4, -4, -4):
            self._nibbles.append((value >> shift) & 0xF)

    def pad_byte(self) -> None:
        if len(self._nibbles) % 2:
            self._nibbles.append(0)

    def to_bytes(self) -> bytes:
        assert len(self._nibbles) % 2 == 0
        it = iter(self._nibbles)
        return bytes((hi << 4) | lo for hi, lo in zip(it, it))


class _NibbleReader:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0  # nibble offset

    def take(self, bits: int) -> int:
        value = 0
        for _ in range(bits // 4):
            byte_i, hi = divmod(self._pos, 2)
            if byte_i >= len(self._data):
                raise HeaderDecodeError("truncated header")
            nib = (self._data[byte_i] >> 4) if hi == 0 else (self._data[byte_i] & 0xF)
            value = (value << 4) | nib
            self._pos += 1
        return value

    def pad_byte(self) -> None:
        if self._pos % 2:
            if self.take(4) != 0:
                raise HeaderDecodeError("non-zero filler nibble")

    def byte_offset(self) -> int:
        assert self._pos % 2 == 0
        return self._pos // 2

    def rest(self) -> bytes:
        return self._data[self.byte_offset():]

    def at_end(self) -> bool:
        return self.byte_offset() == len(self._data)


def _check_range(name: str, value: int, bits: int) -> None:
    if not 0 <= value < (1 << bits):
        raise HeaderEncodeError(f"{name} {value} exceeds {bits}-bit width")


def encode(header: SmartPacketHeader) -> bytes:
    """Serialize to the wire form described in the module docstring."""
    rs = header.region_stack
    if not rs.entries:
        raise EmptyStackError("region stack must carry at least one entry")
    if len(rs.entries) > MAX_STACK:
        raise HeaderEncodeError(f"region stack overflow ({len(rs.entries)} > {MAX_STACK})")

    legacy = header.legacy_payload is not None
    if legacy and (header.ids or header.qos or header.rbs):
        raise HeaderEncodeError("legacy payload excludes the IDs/QoS/RBS SFs")
    if not legacy and header.ids is None:
        raise HeaderEncodeError("IDs SF (sender NID) is required without a legacy payload")

    active = ACTIVE_REGION_STACK
    if not legacy:
        active |= ACTIVE_IDS
        if header.qos is not None:
            active |= ACTIVE_QOS
        if header.rbs is not None:
            active |= ACTIVE_RBS

    rs_presence = 0
    if rs.ephemeral_single_hop_fid is not None:
        _check_range("ephemeral single-hop FID", rs.ephemeral_single_hop_fid, EPH_FID_BITS)
        rs_presence |= 0x1
    if rs.intra_region_fid is not None:
        _check_range("intra-region FID", rs.intra_region_fid, INTRA_FID_BITS)
        rs_presence |= 0x2

    w = _NibbleWriter()
    w.put(active, 4)
    w.put(rs_presence, 4)
    if rs.ephemeral_single_hop_fid is not None:
        w.put(rs.ephemeral_single_hop_fid, EPH_FID_BITS)
        w.pad_byte()
    if rs.intra_region_fid is not None:
        w.put(rs.intra_region_fid, INTRA_FID_BITS)
    w.put(len(rs.entries), 8)
    for rid in rs.entries:
        _check_range("region stack RID", rid, RID_BITS)
        w.put(rid, RID_BITS)

    if legacy:
        return w.to_bytes() + header.legacy_payload

    ids = header.ids
    ids_presence = 0
    if ids.packet_pid is not None:
        _check_range("packet PID", ids.packet_pid, PID_BITS)
        ids_presence |= 0x1
    if ids.flow_fid is not None:
        _check_range("flow FID", ids.flow_fid, FID_BITS)
        ids_presence |= 0x2
    if ids.receiver_nid is not None:
        _check_range("receiver NID", ids.receiver_nid, NID_BITS)
        ids_presence |= 0x4
    _check_range("sender NID", ids.sender_nid, NID_BITS)
    w.put(ids_presence, 4)
    w.put(0, 4)
    if ids.packet_pid is not None:
        w.put(ids.packet_pid, PID_BITS)
    if ids.flow_fid is not None:
        w.put(ids.flow_fid, FID_BITS)
    w.pad_byte()
    w.put(ids.sender_nid, NID_BITS)
    if ids.receiver_nid is not None:
        w.put(ids.receiver_nid, NID_BITS)

    if header.qos is not None:
        q = header.qos
        presence = 0
        budgets = []
        for bit, name, val in (
            (0x1, "single-hop latency", q.single_hop_latency),
            (0x2, "path latency", q.path_latency),
            (0x4, "single-hop loss", q.single_hop_loss),
            (0x8, "path loss", q.path_loss),
        ):
            if val is not None:
                _check_range(name, val, QOS_BITS)
                presence |= bit
                budgets.append(val)
        if not 1 <= q.fission_rate <= 15:
            raise HeaderEncodeError(f"fission rate {q.fission_rate} outside 1..15")
        w.put(presence, 4)
        w.put(0, 4)
        for val in budgets:
            w.put(val, QOS_BITS)
        w.put(q.fission_rate, QOS_BITS)
        w.pad_byte()

    if header.rbs is not None:
        rbs = header.rbs
        if len(rbs.traversed) > MAX_STACK:
            raise HeaderEncodeError(f"RBS overflow ({len(rbs.traversed)} > {MAX_STACK})")
        w.put(0, 4)
        w.put(0, 4)
        w.put(len(rbs.traversed), 8)
        for rid in rbs.traversed:
            _check_range("RBS RID", rid, RID_BITS)
            w.put(rid, RID_BITS)

    return w.to_bytes()


def decode(data: bytes) -> SmartPacketHeader:
    """Inverse of encode on valid input; raises HeaderDecodeError otherwise."""
    r = _NibbleReader(bytes(data))
    active = r.take(4)
    legacy = active == ACTIVE_REGION_STACK
    if not legacy and (active & (ACTIVE_REGION_STACK | ACTIVE_IDS)) != (
        ACTIVE_REGION_STACK | ACTIVE_IDS
    ):
        raise HeaderDecodeError(f"invalid active-SFs nibble 0b{active:04b}")

    rs_presence = r.take(4)
    if rs_presence & ~0x3:
        raise HeaderDecodeError("unknown region-stack presence bits")
    rs = RegionStackSF()
    if rs_presence & 0x1:
        rs.ephemeral_single_hop_fid = r.take(EPH_FID_BITS)
        r.pad_byte()
    if rs_presence & 0x2:
        rs.intra_region_fid = r.take(INTRA_FID_BITS)
    count = r.take(8)
    if count == 0:
        raise HeaderDecodeError("region stack count must be at least 1")
    for _ in range(count):
        rs.entries.append(r.take(RID_BITS))

    if legacy:
        return SmartPacketHeader(rs, legacy_payload=r.rest())

    ids_presence = r.take(4)
    if ids_presence & ~0x7:
        raise HeaderDecodeError("unknown IDs presence bits")
    if r.take(4) != 0:
        raise HeaderDecodeError("non-zero filler nibble")
    pid = r.take(PID_BITS) if ids_presence & 0x1 else None
    fid = r.take(FID_BITS) if ids_presence & 0x2 else None
    r.pad_byte()
    sender = r.take(NID_BITS)
    receiver = r.take(NID_BITS) if ids_presence & 0x4 else None
    header = SmartPacketHeader(rs, IdsSF(sender, receiver, pid, fid))

    if active & ACTIVE_QOS:
        presence = r.take(4)
        if r.take(4) != 0:
            raise HeaderDecodeError("non-zero filler nibble")
        q = QosSmartSF()
        if presence & 0x1:
            q.single_hop_latency = r.take(QOS_BITS)
        if presence & 0x2:
            q.path_latency = r.take(QOS_BITS)
        if presence & 0x4:
            q.single_hop_loss = r.take(QOS_BITS)
        if presence & 0x8:
            q.path_loss = r.take(QOS_BITS)
        q.fission_rate = r.take(QOS_BITS)
        if q.fission_rate == 0:
            raise HeaderDecodeError("fission rate 0 is not encodable")
        r.pad_byte()
        header.qos = q

    if active & ACTIVE_RBS:
        if r.take(4) != 0:
            raise HeaderDecodeError("unknown RBS presence bits")
        if r.take(4) != 0:
            raise HeaderDecodeError("non-zero filler nibble")
        rbs = RbsSF()
        for _ in range(r.take(8)):
            rbs.traversed.append(r.take(RID_BITS))
        header.rbs = rbs

    if not r.at_end():
        raise HeaderDecodeError(f"{len(r.rest())} trailing bytes after header")
    return header


# -- hex dumps ---------------------------------------------------------------


def to_hex(data: bytes) -> str:
    return " ".join(f"{b:02x}" for b in data)


def from_hex(text: str) -> bytes:
    chunks = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        chunks.append(line.replace(" ", "").replace("\t", ""))
    joined = "".join(chunks)
    try:
        return bytes.fromhex(joined)
    except ValueError as exc:
        raise HeaderDecodeError(f"bad hex dump: {exc}") from None
