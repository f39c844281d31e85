"""Binary parameter container: little-endian, exact float64 round-trip.

Layout:
    magic   4 bytes  b"CSQ1"
    version uint32
    config  uint32 length + UTF-8 JSON (model configuration)
    sha256  32 bytes, hash of the config bytes
    count   uint32
    count records of:
        name  uint32 length + UTF-8
        kind  uint8 (0 vector, 1 matrix)
        rows  uint32
        cols  uint32
        data  rows*cols float64
"""

from __future__ import annotations

import hashlib
import json
import struct

MAGIC = b"CSQ1"
VERSION = 1


class ParamFormatError(ValueError):
    pass


def config_hash(config):
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def save_params(path, config, named_values):
    """named_values: iterable of (name, value) where value is a float list
    (vector) or list of row lists (matrix)."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    records = list(named_values)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(hashlib.sha256(blob).digest())
        f.write(struct.pack("<I", len(records)))
        for name, value in records:
            nb = name.encode()
            f.write(struct.pack("<I", len(nb)))
            f.write(nb)
            if value and isinstance(value[0], list):
                rows, cols = len(value), len(value[0])
                flat = [x for row in value for x in row]
                f.write(struct.pack("<BII", 1, rows, cols))
            else:
                rows, cols = len(value), 1
                flat = value
                f.write(struct.pack("<BII", 0, rows, cols))
            f.write(struct.pack(f"<{len(flat)}d", *flat))


def load_params(path):
    """Returns (config dict, list of (name, value))."""
    with open(path, "rb") as f:
        raw = f.read()
    off = 0

    def take(n):
        nonlocal off
        if off + n > len(raw):
            raise ParamFormatError("truncated parameter file")
        out = raw[off : off + n]
        off += n
        return out

    if take(4) != MAGIC:
        raise ParamFormatError("bad magic; not a parameter file")
    (version,) = struct.unpack("<I", take(4))
    if version != VERSION:
        raise ParamFormatError(f"unsupported format version {version}")
    (clen,) = struct.unpack("<I", take(4))
    blob = take(clen)
    digest = take(32)
    if hashlib.sha256(blob).digest() != digest:
        raise ParamFormatError("configuration hash mismatch")
    config = json.loads(blob.decode())
    (count,) = struct.unpack("<I", take(4))
    records = []
    for _ in range(count):
        (nlen,) = struct.unpack("<I", take(4))
        name = take(nlen).decode()
        kind, rows, cols = struct.unpack("<BII", take(9))
        flat = list(struct.unpack(f"<{rows * cols}d", take(8 * rows * cols)))
        if kind == 1:
            value = [flat[i * cols : (i + 1) * cols] for i in range(rows)]
        else:
            value = flat
        records.append((name, value))
    if off != len(raw):
        raise ParamFormatError("trailing bytes in parameter file")
    return config, records
