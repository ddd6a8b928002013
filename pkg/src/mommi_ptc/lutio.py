"""Binary LUT files.

Layout, little-endian::

    0   8 bytes   magic b"MOMMILUT"
    8   u32       version (1)
    12  u32       k
    16  u32       d
    20  u32       bits
    24  u32       reserved, zero
    28  records   (2**bits)**d records of 2k^2 float64: real parts then
                  imaginary parts, row-major; level tuples in lexicographic
                  order with pad 0 varying slowest
    end u32       CRC32 of the record bytes
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .momdevice import Lut

MAGIC = b"MOMMILUT"
VERSION = 1
_HEADER = struct.Struct("<8s5I")
HEADER_SIZE = _HEADER.size  # 28


class LutFormatError(ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def lut_file_size(k, d, bits):
    return HEADER_SIZE + (2**bits) ** d * 2 * k * k * 8 + 4


def encode_lut(lut: Lut):
    n = len(lut)
    m = np.asarray(lut.matrices).reshape(n, -1)
    payload = np.concatenate([m.real, m.imag], axis=1).astype("<f8").tobytes()
    header = _HEADER.pack(MAGIC, VERSION, lut.k, lut.d, lut.bits, 0)
    return header + payload + struct.pack("<I", zlib.crc32(payload))


def decode_lut(data: bytes):
    if len(data) < HEADER_SIZE:
        raise LutFormatError("length", f"file has {len(data)} bytes, shorter than the {HEADER_SIZE}-byte header")
    magic, version, k, d, bits, _ = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise LutFormatError("magic", f"expected {MAGIC!r}, got {magic!r}")
    if version != VERSION:
        raise LutFormatError("version", f"unsupported version {version}")
    if k < 1 or d < 1 or not 1 <= bits <= 8:
        raise LutFormatError("header", f"invalid sizes k={k} d={d} bits={bits}")
    expected = lut_file_size(k, d, bits)
    if len(data) != expected:
        raise LutFormatError("length", f"expected {expected} bytes, got {len(data)}")
    payload = data[HEADER_SIZE:-4]
    (crc,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(payload) != crc:
        raise LutFormatError("crc", "payload checksum mismatch")
    rec = np.frombuffer(payload, dtype="<f8").reshape(-1, 2, k * k)
    mats = (rec[:, 0] + 1j * rec[:, 1]).reshape(-1, k, k)
    return Lut(k, d, bits, mats)


def write_lut(path, lut: Lut):
    with open(path, "wb") as fh:
        fh.write(encode_lut(lut))


def read_lut(path):
    with open(path, "rb") as fh:
        return decode_lut(fh.read())
