"""Canonical injective self-delimiting encoding of mixed tuples.

Every oracle input, associated-data string, and wire message is produced by
``encode``.  The format is one type-tag byte, a 4-byte big-endian payload
length, then the payload; tuples nest recursively.  Leaf encodings are fixed
width (scalars) or canonical (compressed points), so distinct values always
produce distinct byte strings and a decoder recovers the exact structure
with no external framing.

Value model:
    int        -> Scalar (fixed width, needs group params)
    U64        -> unsigned 64-bit integer
    bytes      -> ByteString
    Label/str  -> Label (str is encoded utf-8; decode returns Label)
    PartyId    -> party identifier
    point      -> GroupElement (canonical bytes, needs group params)
    tuple/list -> Tuple
"""

from dataclasses import dataclass

TAG_SCALAR = 0x01
TAG_POINT = 0x02
TAG_BYTES = 0x03
TAG_U64 = 0x04
TAG_PARTY = 0x05
TAG_LABEL = 0x06
TAG_TUPLE = 0x10


class CodecError(Exception):
    pass


@dataclass(frozen=True)
class U64:
    value: int

    def __post_init__(self):
        if not 0 <= self.value < 1 << 64:
            raise CodecError("U64 out of range")


class _BytesWrapper:
    __slots__ = ("value",)

    def __init__(self, value):
        if isinstance(value, str):
            value = value.encode()
        if not isinstance(value, (bytes, bytearray)):
            raise CodecError("%s wants bytes or str" % type(self).__name__)
        self.value = bytes(value)

    def __eq__(self, other):
        return type(other) is type(self) and other.value == self.value

    def __hash__(self):
        return hash((type(self).__name__, self.value))

    def __repr__(self):
        return "%s(%r)" % (type(self).__name__, self.value)


class Label(_BytesWrapper):
    pass


class PartyId(_BytesWrapper):
    pass


def _frame(tag: int, payload: bytes) -> bytes:
    return bytes([tag]) + len(payload).to_bytes(4, "big") + payload


def encode(value, pp=None) -> bytes:
    """Encode one value; ``pp`` (group params) is required for scalars/points."""
    if isinstance(value, bool):
        raise CodecError("bool is not encodable")
    if isinstance(value, int):
        if pp is None:
            raise CodecError("scalar encoding requires group params")
        if not 0 <= value < pp.p:
            raise CodecError("scalar out of range")
        return _frame(TAG_SCALAR, value.to_bytes(pp.scalar_width, "big"))
    if isinstance(value, U64):
        return _frame(TAG_U64, value.value.to_bytes(8, "big"))
    if isinstance(value, (bytes, bytearray)):
        return _frame(TAG_BYTES, bytes(value))
    if isinstance(value, str):
        return _frame(TAG_LABEL, value.encode())
    if isinstance(value, Label):
        return _frame(TAG_LABEL, value.value)
    if isinstance(value, PartyId):
        return _frame(TAG_PARTY, value.value)
    if isinstance(value, (tuple, list)):
        payload = b"".join(encode(v, pp) for v in value)
        return _frame(TAG_TUPLE, payload)
    if hasattr(value, "point_bytes"):
        if pp is None:
            raise CodecError("point encoding requires group params")
        raw = value.point_bytes()
        if len(raw) != pp.point_width:
            raise CodecError("point does not belong to the active group")
        return _frame(TAG_POINT, raw)
    raise CodecError("unencodable value of type %s" % type(value).__name__)


def decode(data: bytes, pp=None):
    """Inverse of encode on its image; rejects trailing bytes."""
    value, consumed = _decode_at(memoryview(data), 0, pp)
    if consumed != len(data):
        raise CodecError("trailing bytes after value")
    return value


def _decode_at(view, off, pp):
    if off + 5 > len(view):
        raise CodecError("truncated header")
    tag = view[off]
    length = int.from_bytes(view[off + 1 : off + 5], "big")
    start = off + 5
    end = start + length
    if end > len(view):
        raise CodecError("truncated payload")
    payload = bytes(view[start:end])
    if tag == TAG_SCALAR:
        if pp is None:
            raise CodecError("scalar decoding requires group params")
        if length != pp.scalar_width:
            raise CodecError("bad scalar width")
        v = int.from_bytes(payload, "big")
        if v >= pp.p:
            raise CodecError("scalar out of range")
        return v, end
    if tag == TAG_POINT:
        if pp is None:
            raise CodecError("point decoding requires group params")
        return pp.point_from_bytes(payload), end
    if tag == TAG_BYTES:
        return payload, end
    if tag == TAG_U64:
        if length != 8:
            raise CodecError("bad u64 width")
        return U64(int.from_bytes(payload, "big")), end
    if tag == TAG_PARTY:
        return PartyId(payload), end
    if tag == TAG_LABEL:
        return Label(payload), end
    if tag == TAG_TUPLE:
        items = []
        pos = start
        while pos < end:
            item, pos = _decode_at(view, pos, pp)
            if pos > end:
                raise CodecError("tuple element overruns frame")
            items.append(item)
        if pos != end:
            raise CodecError("malformed tuple payload")
        return tuple(items), end
    raise CodecError("unknown type tag 0x%02x" % tag)
