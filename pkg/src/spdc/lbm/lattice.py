"""D2Q9 lattices, the .lat file format, and lattice <-> stream conversion.

.lat layout (all little-endian)::

    b"SPDLAT1\\0"  uint32 nx  uint32 ny
    9 planes of float32 (f0..f8), then 1 plane of uint32 attributes,
    each plane nx*ny values in row-major order (index = y*nx + x)
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..ast import PortClass
from ..errors import SpdError
from ..sim.streamio import StreamPacket

MAGIC = b"SPDLAT1\0"

WALL = 1 << 3
PRESSURE = 1 << 9
OUTLET = 1 << 11

# velocity set, index: (cx, cy); 0 rest, 1 E, 2 N, 3 W, 4 S, 5 NE, 6 NW, 7 SW, 8 SE
C = np.array([(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1)])
OPP = (0, 3, 4, 1, 2, 7, 8, 5, 6)
W = np.array([4 / 9] + [1 / 9] * 4 + [1 / 36] * 4)

IN_FIELDS = [f"if{i}" for i in range(9)] + ["iAtr_RAW"]
OUT_FIELDS = [f"of{i}" for i in range(9)] + ["oAtr_RAW"]
FIELD_CLASSES = [PortClass.NUMERIC] * 9 + [PortClass.RAW]


@dataclass
class Lattice:
    f: np.ndarray      # float32, shape (9, ny, nx)
    attr: np.ndarray   # uint32, shape (ny, nx)

    def __post_init__(self):
        self.f = np.ascontiguousarray(self.f, dtype=np.float32)
        self.attr = np.ascontiguousarray(self.attr, dtype=np.uint32)
        if self.f.shape[0] != 9 or self.f.shape[1:] != self.attr.shape:
            raise SpdError("SIZE_MISMATCH", f"planes {self.f.shape} do not match attributes {self.attr.shape}")

    @property
    def nx(self) -> int:
        return self.attr.shape[1]

    @property
    def ny(self) -> int:
        return self.attr.shape[0]

    def copy(self) -> "Lattice":
        return Lattice(self.f.copy(), self.attr.copy())

    def mass(self) -> float:
        return float(self.f.astype(np.float64).sum())

    def macro(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        f = self.f.astype(np.float64)
        rho = f.sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.tensordot(C[:, 0], f, axes=1) / rho
            v = np.tensordot(C[:, 1], f, axes=1) / rho
        return rho, u, v

    def __eq__(self, other) -> bool:
        return (isinstance(other, Lattice) and self.f.shape == other.f.shape
                and np.array_equal(self.f.view(np.uint32), other.f.view(np.uint32))
                and np.array_equal(self.attr, other.attr))


def equilibrium_planes(rho, u, v) -> np.ndarray:
    """Double-precision D2Q9 equilibrium for arrays of rho, u, v."""
    rho, u, v = np.broadcast_arrays(np.asarray(rho, float), np.asarray(u, float), np.asarray(v, float))
    usq = u * u + v * v
    out = np.empty((9,) + rho.shape)
    for i in range(9):
        cu = C[i, 0] * u + C[i, 1] * v
        out[i] = W[i] * rho * (1 + 3 * cu + 4.5 * cu * cu - 1.5 * usq)
    return out


# -- generators ---------------------------------------------------------------

def uniform(nx: int, ny: int, rho: float = 1.0, u: float = 0.0, v: float = 0.0, attr=None) -> Lattice:
    f = equilibrium_planes(np.full((ny, nx), rho), u, v).astype(np.float32)
    return Lattice(f, np.zeros((ny, nx), np.uint32) if attr is None else attr)


def channel(nx: int = 64, ny: int = 32, u0: float = 0.05, obstacle: tuple[int, int, int] | None = (16, 16, 4)) -> Lattice:
    """Pressure-driven channel: walls on the top and bottom rows, inlet at x=0, outlet at x=nx-1.

    ``obstacle`` is a solid disc ``(cx, cy, r)`` of wall cells.
    """
    attr = np.zeros((ny, nx), np.uint32)
    attr[1:-1, 0] = PRESSURE
    attr[1:-1, -1] = PRESSURE | OUTLET
    attr[0, :] = WALL
    attr[-1, :] = WALL
    if obstacle is not None:
        ox, oy, r = obstacle
        yy, xx = np.mgrid[0:ny, 0:nx]
        attr[(xx - ox) ** 2 + (yy - oy) ** 2 <= r * r] = WALL
    u = np.where(attr & WALL, 0.0, u0)
    return Lattice(equilibrium_planes(np.ones((ny, nx)), u, 0.0).astype(np.float32), attr)


def closed_box(nx: int = 32, ny: int = 32, seed: int = 0, amplitude: float = 0.02) -> Lattice:
    """Walls on every border cell; fluid starts at rest with a small density bump."""
    attr = np.zeros((ny, nx), np.uint32)
    attr[0, :] = attr[-1, :] = WALL
    attr[:, 0] = attr[:, -1] = WALL
    rng = np.random.default_rng(seed)
    rho = 1.0 + amplitude * rng.uniform(-1, 1, (ny, nx))
    return Lattice(equilibrium_planes(rho, 0.0, 0.0).astype(np.float32), attr)


# -- files ------------------------------------------------------------------------

def write_lattice(path, lat: Lattice) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<II", lat.nx, lat.ny))
        fh.write(lat.f.astype("<f4").tobytes())
        fh.write(lat.attr.astype("<u4").tobytes())


def read_lattice(path) -> Lattice:
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError:
        raise SpdError("FILE_NOT_FOUND", f"lattice file {path} not found", filename=str(path)) from None
    if data[:8] != MAGIC or len(data) < 16:
        raise SpdError("BAD_LATTICE_FILE", "not an SPDLAT1 file", filename=str(path))
    nx, ny = struct.unpack("<II", data[8:16])
    n = nx * ny
    if len(data) != 16 + 40 * n:
        raise SpdError("SIZE_MISMATCH", f"{nx}x{ny} lattice needs {16 + 40 * n} bytes, file has {len(data)}",
                       filename=str(path))
    f = np.frombuffer(data, "<f4", 9 * n, 16).astype(np.float32).reshape(9, ny, nx)
    attr = np.frombuffer(data, "<u4", n, 16 + 36 * n).astype(np.uint32).reshape(ny, nx)
    return Lattice(f, attr)


def snapshot_csv(lat: Lattice) -> str:
    """``x,y,rho,u,v`` per cell for plotting."""
    rho, u, v = lat.macro()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "rho", "u", "v"])
    for y in range(lat.ny):
        for x in range(lat.nx):
            w.writerow([x, y, f"{rho[y, x]:.9g}", f"{u[y, x]:.9g}", f"{v[y, x]:.9g}"])
    return buf.getvalue()


# -- stream conversion --------------------------------------------------------------

def to_packet(lat: Lattice, fields: list[str] | None = None) -> StreamPacket:
    n = lat.nx * lat.ny
    words = np.empty((n, 10), dtype=np.uint32)
    words[:, :9] = lat.f.reshape(9, n).T.view(np.uint32)
    words[:, 9] = lat.attr.reshape(n)
    return StreamPacket(words, list(fields or IN_FIELDS), list(FIELD_CLASSES))


def from_packet(packet: StreamPacket, nx: int, ny: int) -> Lattice:
    if len(packet) != nx * ny or packet.words.shape[1] != 10:
        raise SpdError("SIZE_MISMATCH", f"stream of {len(packet)} x {packet.words.shape[1]} words is not a "
                       f"{nx}x{ny} lattice of 10 fields")
    words = packet.words
    f = np.ascontiguousarray(words[:, :9].T).view(np.float32).reshape(9, ny, nx)
    return Lattice(f, words[:, 9].reshape(ny, nx))
