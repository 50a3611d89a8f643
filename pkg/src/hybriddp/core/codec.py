"""Binary payloads: a one-byte message-kind tag, then length-prefixed fields.

Integers are 8-byte big-endian signed, floats 8-byte big-endian IEEE,
integer arrays a run of 8-byte big-endian signed values.
"""

import struct

import numpy as np

_LEN = struct.Struct(">I")
_INT = struct.Struct(">q")
_FLOAT = struct.Struct(">d")


def encode_payload(tag, *fields):
    if not 0 <= tag < 256:
        raise ValueError("tag must fit in one byte")
    parts = [bytes([tag])]
    for field in fields:
        raw = field_bytes(field)
        parts.append(_LEN.pack(len(raw)))
        parts.append(raw)
    return b"".join(parts)


def decode_payload(payload):
    """Split a payload into ``(tag, [field bytes, ...])``."""
    if not payload:
        raise ValueError("empty payload")
    tag = payload[0]
    fields = []
    pos = 1
    while pos < len(payload):
        if pos + 4 > len(payload):
            raise ValueError("truncated length prefix")
        (size,) = _LEN.unpack_from(payload, pos)
        pos += 4
        if pos + size > len(payload):
            raise ValueError("truncated field")
        fields.append(bytes(payload[pos : pos + size]))
        pos += size
    return tag, fields


def field_bytes(value):
    if isinstance(value, (bytes, bytearray)):
        return bytes(value)
    if isinstance(value, (bool, np.bool_)):
        return _INT.pack(int(value))
    if isinstance(value, (int, np.integer)):
        return _INT.pack(int(value))
    if isinstance(value, (float, np.floating)):
        return _FLOAT.pack(float(value))
    if isinstance(value, np.ndarray):
        if value.dtype.kind == "f":
            return value.astype(">f8").tobytes()
        return value.astype(">i8").tobytes()
    if isinstance(value, (list, tuple)):
        return np.asarray(value, dtype=np.int64).astype(">i8").tobytes()
    raise TypeError(f"cannot encode field of type {type(value).__name__}")


def unpack_int(raw):
    return _INT.unpack(raw)[0]


def unpack_float(raw):
    return _FLOAT.unpack(raw)[0]


def unpack_ints(raw):
    return np.frombuffer(raw, dtype=">i8").astype(np.int64)


def encode_int_rows(tag, columns):
    """Payload bytes for a block of all-integer messages, one row per message.

    Returns a ``(count, width)`` uint8 array; row ``i`` equals
    ``encode_payload(tag, *(col[i] for col in columns))``.
    """
    if not columns:
        raise ValueError("need at least one column")
    count = len(columns[0])
    prefix = _LEN.pack(8)
    width = 1 + 12 * len(columns)
    buf = np.empty((count, width), dtype=np.uint8)
    buf[:, 0] = tag
    for k, col in enumerate(columns):
        start = 1 + 12 * k
        buf[:, start : start + 4] = np.frombuffer(prefix, dtype=np.uint8)
        be = np.ascontiguousarray(np.asarray(col, dtype=np.int64).astype(">i8"))
        buf[:, start + 4 : start + 12] = be.view(np.uint8).reshape(count, 8)
    return buf
