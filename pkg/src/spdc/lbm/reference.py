"""Independent numpy implementation of one D2Q9 lattice Boltzmann step.

Two modes:

``"double"``
    textbook formulas evaluated in float64, rounded to binary32 at the end.
``"spd"``
    binary32 throughout, with every expression associated exactly as in the
    bundled ``lbm.spd``; this is the bit-exact oracle for the pipeline.

Both modes share the translation and boundary rules: a population whose
upstream neighbour is off the lattice takes the same cell's opposite
population; pressure cells (bit 9) then recompute their three unknown
populations; wall cells (bit 3) finally swap opposite pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import f32
from .lattice import C, OPP, OUTLET, PRESSURE, WALL, W, Lattice

# decimal text of every Param line in lbm.spd
SPD_PARAMS = {
    "P_rho_in": "1.05", "P_rho_out": "0.95", "P_one_tau": "0.516262261",
    "P0": "0.666666666666667", "P1": "0.166666666666667", "P2": "0.5", "P3": "0.333333333333333",
    "P4": "0.166666666666667", "P5": "0.111111111111111", "P6": "0.0277777777777778",
    "P7": "0.0833333333333333", "P8": "0.125", "P9": "0.0416666666666667",
    "Pa": "0.444444444444444", "Pb": "0.666666666666667",
}


@dataclass(frozen=True)
class LbmConstants:
    tau_inv: float
    rho_in: float
    rho_out: float
    A: tuple[float, ...]
    B: tuple[float, ...]
    C: tuple[float, ...]
    D: tuple[float, ...]
    p0: float = 2 / 3   # pressure-boundary share of the axial unknown
    p1: float = 1 / 6   # share of each diagonal unknown

    @classmethod
    def standard(cls, tau_inv: float = 0.516262261, rho_in: float = 1.05, rho_out: float = 0.95) -> "LbmConstants":
        A = tuple(float(w) for w in W)
        return cls(tau_inv, rho_in, rho_out, A, tuple(3 * a for a in A), tuple(4.5 * a for a in A),
                   tuple(1.5 * a for a in A))


def _p32(name: str) -> np.float32:
    return np.float32(f32.parse_decimal_f32(SPD_PARAMS[name]))


# -- double-precision stages --------------------------------------------------

def macro(f: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    f = np.asarray(f, dtype=np.float64)
    rho = f.sum(axis=0)
    u = np.tensordot(C[:, 0].astype(float), f, axes=1) / rho
    v = np.tensordot(C[:, 1].astype(float), f, axes=1) / rho
    return rho, u, v


def equilibrium(rho, u, v, k: LbmConstants | None = None) -> np.ndarray:
    k = k or LbmConstants.standard()
    rho, u, v = np.broadcast_arrays(np.asarray(rho, float), np.asarray(u, float), np.asarray(v, float))
    usq = u * u + v * v
    out = np.empty((9,) + rho.shape)
    for i in range(9):
        cu = C[i, 0] * u + C[i, 1] * v
        out[i] = rho * (k.A[i] + k.B[i] * cu + k.C[i] * cu * cu - k.D[i] * usq)
    return out


def collide(f, feq, tau_inv: float) -> np.ndarray:
    return f - tau_inv * (f - feq)


def _span(c: int, n: int) -> tuple[slice, slice]:
    return (slice(c, n), slice(0, n - c)) if c >= 0 else (slice(0, n + c), slice(-c, n))


def translate(f: np.ndarray) -> np.ndarray:
    """``f_tr(x + c_i) = f(x)``; off-lattice sources fall back to the opposite population."""
    out = np.empty_like(f)
    ny, nx = f.shape[1:]
    for i in range(9):
        out[i] = f[OPP[i]]
        (dx, sx), (dy, sy) = _span(int(C[i, 0]), nx), _span(int(C[i, 1]), ny)
        out[i][dy, dx] = f[i][sy, sx]
    return out


def boundaries(ftr: np.ndarray, attr: np.ndarray, k: LbmConstants | None = None, dtype=np.float64) -> np.ndarray:
    """Constant-pressure recomputation followed by bounce-back, in ``dtype`` arithmetic."""
    if dtype == np.float32:
        rho_in, rho_out, p0, p1 = _p32("P_rho_in"), _p32("P_rho_out"), _p32("P0"), _p32("P1")
    else:
        k = k or LbmConstants.standard()
        rho_in, rho_out, p0, p1 = k.rho_in, k.rho_out, k.p0, k.p1
    f = [np.asarray(ftr[i], dtype=dtype) for i in range(9)]
    wall = (attr & WALL) != 0
    press = (attr & PRESSURE) != 0
    outlet = (attr & OUTLET) != 0
    f3t = np.where(outlet, f[1], f[3])
    f6t = np.where(outlet, f[8], f[6])
    f7t = np.where(outlet, f[5], f[7])
    given = np.where(outlet, rho_out, rho_in).astype(dtype)
    diff = given - (((f[0] + f[2]) + (f3t + f[4])) + (f6t + f7t))
    f1c = p0 * diff
    f5c = p1 * diff
    sub = {1: np.where(outlet, f[1], f1c), 5: np.where(outlet, f[5], f5c), 8: np.where(outlet, f[8], f5c),
           3: np.where(outlet, f1c, f[3]), 7: np.where(outlet, f5c, f[7]), 6: np.where(outlet, f5c, f[6])}
    cp = [np.where(press, sub[i], f[i]) if i in sub else f[i] for i in range(9)]
    out = [cp[0]] + [np.where(wall, cp[OPP[i]], cp[i]) for i in range(1, 9)]
    return np.stack(out).astype(dtype)


# -- binary32 stages in pipeline association ------------------------------------------

def spd_cell_stages(f: np.ndarray) -> np.ndarray:
    """Macro, equilibrium and collision exactly as the SPD equations compute them."""
    f = [np.asarray(f[i], dtype=np.float32) for i in range(9)]
    P = {name: _p32(name) for name in SPD_PARAMS}
    two, one = np.float32(2.0), np.float32(1.0)
    a57, a68, a13, a24 = f[5] - f[7], f[6] - f[8], f[1] - f[3], f[2] - f[4]
    rho = ((f[5] + f[7]) + (f[6] + f[8])) + (((f[1] + f[3]) + (f[2] + f[4])) + f[0])
    ru = (a57 - a68) + a13
    rv = (a57 + a68) + a24
    ruMv = (a13 - a24) - (two * a68)
    ruPv = (a13 + a24) + (two * a57)
    u2, v2 = ru * ru, rv * rv
    uPv2, uMv2 = ruPv * ruPv, ruMv * ruMv
    r2 = u2 + v2
    with np.errstate(divide="ignore", invalid="ignore"):
        dr = one / rho
    feq = [(P["Pa"] * rho) - ((P["Pb"] * r2) * dr)]
    terms = {1: ("P5", "P3", 1, ru, "P2", u2, "P4"), 2: ("P5", "P3", 1, rv, "P2", v2, "P4"),
             3: ("P5", "P3", -1, ru, "P2", u2, "P4"), 4: ("P5", "P3", -1, rv, "P2", v2, "P4"),
             5: ("P6", "P7", 1, ruPv, "P8", uPv2, "P9"), 6: ("P6", "P7", -1, ruMv, "P8", uMv2, "P9"),
             7: ("P6", "P7", -1, ruPv, "P8", uPv2, "P9"), 8: ("P6", "P7", 1, ruMv, "P8", uMv2, "P9")}
    for i in range(1, 9):
        w, b, sign, m, c, m2, d = terms[i]
        lin = (P[w] * rho) + (P[b] * m) if sign > 0 else (P[w] * rho) - (P[b] * m)
        feq.append(lin + (((P[c] * m2) - (P[d] * r2)) * dr))
    tau = P["P_one_tau"]
    return np.stack([f[i] - tau * (f[i] - feq[i]) for i in range(9)])


def cell_stages(f: np.ndarray, mode: str = "double", k: LbmConstants | None = None) -> np.ndarray:
    """Post-collision populations for independent cells (no neighbours involved)."""
    if mode == "spd":
        return spd_cell_stages(f)
    k = k or LbmConstants.standard()
    fd = np.asarray(f, dtype=np.float64)
    rho, u, v = macro(fd)
    return collide(fd, equilibrium(rho, u, v, k), k.tau_inv)


def lbm_step_reference(lat: Lattice, mode: str = "double", k: LbmConstants | None = None) -> Lattice:
    if mode not in ("double", "spd"):
        raise ValueError(f"unknown mode {mode!r}")
    dtype = np.float32 if mode == "spd" else np.float64
    fco = cell_stages(lat.f, mode, k)
    fout = boundaries(translate(fco), lat.attr, k, dtype)
    return Lattice(fout.astype(np.float32), lat.attr.copy())


def run_steps(lat: Lattice, steps: int, mode: str = "spd") -> tuple[Lattice, list[float]]:
    """Advance ``steps`` times; also returns the total mass after each step (index 0 = initial)."""
    masses = [lat.mass()]
    for _ in range(steps):
        lat = lbm_step_reference(lat, mode)
        masses.append(lat.mass())
    return lat, masses
