"""Versioned little-endian model files.

Layout: magic bytes, ``u32`` format version, a length-prefixed UTF-8 JSON
header, then named sections.  Strings are ``u32`` length + UTF-8 bytes;
string lists are ``u32`` count + strings; matrices are ``u32`` ndim,
``u64`` dims and row-major ``<f8`` data.
"""

import json
import os
import struct

import numpy as np

from .errors import FormatError


class ModelWriter:
    def __init__(self, fh, magic: bytes, version: int, header: dict):
        self.fh = fh
        fh.write(magic)
        fh.write(struct.pack("<I", version))
        self.string(json.dumps(header, sort_keys=True))

    def string(self, s: str):
        b = s.encode("utf-8")
        self.fh.write(struct.pack("<I", len(b)))
        self.fh.write(b)

    def strings(self, items):
        items = list(items)
        self.fh.write(struct.pack("<I", len(items)))
        for s in items:
            self.string(s)

    def matrix(self, a):
        a = np.ascontiguousarray(a, dtype="<f8")
        self.fh.write(struct.pack("<I", a.ndim))
        self.fh.write(struct.pack(f"<{a.ndim}Q", *a.shape))
        self.fh.write(a.tobytes(order="C"))


class ModelReader:
    def __init__(self, fh, magic: bytes, version: int):
        self.fh = fh
        got = fh.read(len(magic))
        if got != magic:
            raise FormatError(f"not a {magic.decode()} model file (bad magic {got[:32]!r})")
        (ver,) = self._unpack("<I")
        if ver != version:
            raise FormatError(f"unsupported {magic.decode()} format version {ver}, "
                              f"expected {version}")
        self.version = ver
        self.header = json.loads(self.string())

    def _read(self, n):
        b = self.fh.read(n)
        if len(b) != n:
            raise FormatError("truncated model file")
        return b

    def _unpack(self, fmt):
        return struct.unpack(fmt, self._read(struct.calcsize(fmt)))

    def string(self) -> str:
        (n,) = self._unpack("<I")
        return self._read(n).decode("utf-8")

    def strings(self):
        (n,) = self._unpack("<I")
        return [self.string() for _ in range(n)]

    def matrix(self):
        (ndim,) = self._unpack("<I")
        shape = self._unpack(f"<{ndim}Q") if ndim else ()
        count = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(self._read(8 * count), dtype="<f8")
        return data.reshape(shape).astype(np.float64)


def open_for(path_or_file, mode):
    if isinstance(path_or_file, (str, os.PathLike)):
        return open(path_or_file, mode), True
    return path_or_file, False
