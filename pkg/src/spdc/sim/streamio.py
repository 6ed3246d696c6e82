"""Stream files and stall patterns.

Binary stream file::

    spdc-stream v1 count=<N> fields=<name>,<name>,...\\n
    N * len(fields) little-endian uint32 words, one row per vector

CSV mode: a header row of field names, then one row per vector.  Numeric
fields are written as shortest round-trip binary32 decimals, RAW fields as
unsigned integers.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import f32
from ..ast import PortClass
from ..errors import SimError

MAGIC = "spdc-stream v1"
_HEADER = re.compile(r"^spdc-stream v1 count=(\d+) fields=(.*)$")


@dataclass
class StreamVector:
    values: list[int]

    def floats(self) -> list[float]:
        return [f32.bits_f32(w) for w in self.values]


@dataclass
class StreamPacket:
    """Rows of 32-bit words plus per-row framing bits."""

    words: np.ndarray
    fields: list[str] = field(default_factory=list)
    classes: list[PortClass] | None = None
    sop: np.ndarray | None = None
    eop: np.ndarray | None = None

    def __post_init__(self):
        self.words = np.ascontiguousarray(self.words, dtype=np.uint32)
        if self.words.ndim == 1 and self.fields:
            self.words = self.words.reshape(-1, len(self.fields))
        if self.words.ndim != 2:
            raise SimError("WIDTH_MISMATCH", "stream words must be a 2-D array")
        n = len(self)
        if self.sop is None:
            self.sop = np.zeros(n, dtype=bool)
            if n:
                self.sop[0] = True
        if self.eop is None:
            self.eop = np.zeros(n, dtype=bool)
            if n:
                self.eop[-1] = True

    def __len__(self) -> int:
        return self.words.shape[0]

    @property
    def vectors(self) -> list[StreamVector]:
        return [StreamVector(row) for row in self.words.tolist()]

    def framing_ok(self) -> bool:
        n = len(self)
        if n == 0:
            return True
        return bool(self.sop[0] and self.eop[-1] and not self.sop[1:].any() and not self.eop[:-1].any())

    def as_floats(self) -> np.ndarray:
        return self.words.view(np.float32)

    @classmethod
    def from_floats(cls, values, fields: list[str], classes=None) -> "StreamPacket":
        arr = np.asarray(values, dtype=np.float32).reshape(-1, len(fields))
        return cls(arr.view(np.uint32).copy(), list(fields), classes)


# -- binary files ---------------------------------------------------------------

def write_stream(path, packet: StreamPacket) -> None:
    header = f"{MAGIC} count={len(packet)} fields={','.join(packet.fields)}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(packet.words.astype("<u4").tobytes())


def read_stream(path) -> StreamPacket:
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError:
        raise SimError("FILE_NOT_FOUND", f"stream file {path} not found", filename=str(path)) from None
    nl = data.find(b"\n")
    m = _HEADER.match(data[:nl].decode("ascii", "replace")) if nl >= 0 else None
    if m is None:
        raise SimError("BAD_STREAM_FILE", "missing spdc-stream header", filename=str(path))
    count = int(m.group(1))
    fields = [f for f in m.group(2).split(",") if f]
    body = data[nl + 1:]
    if len(body) != 4 * count * len(fields):
        raise SimError("BAD_STREAM_FILE", f"expected {count} x {len(fields)} words, got {len(body)} bytes",
                       filename=str(path))
    words = np.frombuffer(body, dtype="<u4").astype(np.uint32).reshape(count, len(fields))
    return StreamPacket(words, fields)


# -- CSV ------------------------------------------------------------------------

def _fmt(word: int, klass: PortClass) -> str:
    if klass is PortClass.RAW:
        return str(word)
    x = f32.bits_f32(word)
    if math.isnan(x) or math.isinf(x):
        return repr(x)
    return f32.format_f32(x)


def write_csv(path, packet: StreamPacket) -> None:
    classes = packet.classes or [PortClass.NUMERIC] * len(packet.fields)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(packet.fields)
    for row in packet.words.tolist():
        w.writerow([_fmt(v, k) for v, k in zip(row, classes)])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_csv(path, classes: list[PortClass] | None = None) -> StreamPacket:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise SimError("FILE_NOT_FOUND", f"stream file {path} not found", filename=str(path)) from None
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise SimError("BAD_STREAM_FILE", "empty CSV stream", filename=str(path))
    fields = [f.strip() for f in rows[0]]
    classes = classes or [PortClass.NUMERIC] * len(fields)
    words = np.zeros((len(rows) - 1, len(fields)), dtype=np.uint32)
    for i, row in enumerate(rows[1:]):
        if len(row) != len(fields):
            raise SimError("WIDTH_MISMATCH", f"CSV row {i + 2} has {len(row)} values, expected {len(fields)}",
                           i + 2, None, str(path))
        for j, (cell, klass) in enumerate(zip(row, classes)):
            cell = cell.strip()
            if klass is PortClass.RAW:
                words[i, j] = int(cell, 0)
            else:
                words[i, j] = f32.f32_bits(f32.parse_decimal_f32(cell)) if _is_decimal(cell) \
                    else f32.f32_bits(float(cell))
    return StreamPacket(words, fields, classes)


def _is_decimal(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return math.isfinite(float(text))


def load_stream(path, classes=None) -> StreamPacket:
    if str(path).lower().endswith(".csv"):
        return read_csv(path, classes)
    return read_stream(path)


def save_stream(path, packet: StreamPacket) -> None:
    if str(path).lower().endswith(".csv"):
        write_csv(path, packet)
    else:
        write_stream(path, packet)


# -- stall patterns -------------------------------------------------------------

class StallPattern:
    """Cycles on which the downstream sink deasserts ready."""

    def __init__(self, cycles=(), duty: float = 0.0, seed: int = 0):
        self.cycles = frozenset(int(c) for c in cycles)
        self.duty = duty
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self._draws = np.zeros(0, dtype=bool)

    def __contains__(self, cycle: int) -> bool:
        if cycle in self.cycles:
            return True
        if self.duty <= 0.0:
            return False
        while cycle >= len(self._draws):
            self._draws = np.concatenate([self._draws, self._rng.random(4096) < self.duty])
        return bool(self._draws[cycle])

    def __bool__(self) -> bool:
        return bool(self.cycles) or self.duty > 0.0

    @classmethod
    def parse(cls, text: str | None) -> "StallPattern":
        """``"3,4,10"`` (explicit cycles) or ``"random:<duty>:<seed>"``."""
        if not text:
            return cls()
        text = text.strip()
        if text.startswith("random:"):
            parts = text.split(":")
            try:
                duty = float(parts[1])
                seed = int(parts[2]) if len(parts) > 2 else 0
            except (IndexError, ValueError):
                raise SimError("BAD_STALL_PATTERN", f"cannot parse {text!r}") from None
            if not 0.0 <= duty < 1.0:
                raise SimError("BAD_STALL_PATTERN", f"duty cycle {duty} must be in [0, 1)")
            return cls(duty=duty, seed=seed)
        try:
            return cls(int(c) for c in text.split(",") if c.strip())
        except ValueError:
            raise SimError("BAD_STALL_PATTERN", f"cannot parse {text!r}") from None
