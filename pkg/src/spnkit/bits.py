"""Fixed-width bit strings, MSB first within each byte."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BitstreamError


@dataclass(frozen=True)
class BitString:
    data: bytes
    length: int

    def __post_init__(self):
        if self.length < 0 or len(self.data) != (self.length + 7) // 8:
            raise BitstreamError(
                f"{len(self.data)} bytes cannot hold exactly {self.length} bits"
            )
        if self.length % 8:
            # padding bits must be zero so equal payloads compare equal
            tail = self.data[-1] & ((1 << (8 - self.length % 8)) - 1)
            if tail:
                raise BitstreamError("non-zero padding bits")

    def __len__(self) -> int:
        return self.length

    @staticmethod
    def empty() -> "BitString":
        return BitString(b"", 0)

    @staticmethod
    def concat(parts: list["BitString"]) -> "BitString":
        w = BitWriter()
        for part in parts:
            r = BitReader(part)
            remaining = part.length
            while remaining >= 32:
                w.write(r.read(32), 32)
                remaining -= 32
            if remaining:
                w.write(r.read(remaining), remaining)
        return w.getvalue()

    def flip_bit(self, index: int) -> "BitString":
        """Copy with one bit inverted; handy for tamper tests."""
        if not 0 <= index < self.length:
            raise IndexError(index)
        buf = bytearray(self.data)
        buf[index // 8] ^= 0x80 >> (index % 8)
        return BitString(bytes(buf), self.length)


class BitWriter:
    def __init__(self):
        self._buf = bytearray()
        self._bitpos = 0

    def write(self, value: int, width: int) -> None:
        if width < 0 or (width == 0 and value) or (width and value >> width):
            raise ValueError(f"value {value} does not fit in {width} bits")
        for shift in range(width - 1, -1, -1):
            if self._bitpos % 8 == 0:
                self._buf.append(0)
            if (value >> shift) & 1:
                self._buf[-1] |= 0x80 >> (self._bitpos % 8)
            self._bitpos += 1

    def getvalue(self) -> BitString:
        return BitString(bytes(self._buf), self._bitpos)


class BitReader:
    def __init__(self, bits: BitString):
        self._bits = bits
        self._pos = 0

    def read(self, width: int) -> int:
        if self._pos + width > self._bits.length:
            raise BitstreamError("bit payload truncated")
        value = 0
        data = self._bits.data
        for _ in range(width):
            byte = data[self._pos // 8]
            value = (value << 1) | ((byte >> (7 - self._pos % 8)) & 1)
            self._pos += 1
        return value

    @property
    def remaining(self) -> int:
        return self._bits.length - self._pos
