"""binary32 helpers: rounding, bit reinterpretation, exact literal parsing."""

from __future__ import annotations

import math
import struct
from array import array
from fractions import Fraction

_buf = array("f", [0.0])

FLT_MAX = struct.unpack("<f", b"\xff\xff\x7f\x7f")[0]


def round_f32(x: float) -> float:
    """Round a double to the nearest binary32 (ties to even, overflow to inf)."""
    _buf[0] = x
    return _buf[0]


def f32_bits(x: float) -> int:
    return struct.unpack("<I", struct.pack("<f", x))[0]


def bits_f32(w: int) -> float:
    return struct.unpack("<f", struct.pack("<I", w & 0xFFFFFFFF))[0]


def add(a: float, b: float) -> float:
    return round_f32(a + b)


def sub(a: float, b: float) -> float:
    return round_f32(a - b)


def mul(a: float, b: float) -> float:
    return round_f32(a * b)


def div(a: float, b: float) -> float:
    # Double rounding through binary64 is innocuous for binary32 operands.
    if b == 0.0:
        if a == 0.0 or math.isnan(a):
            return math.nan
        sign = math.copysign(1.0, a) * math.copysign(1.0, b)
        return math.copysign(math.inf, sign)
    return round_f32(a / b)


def parse_decimal_f32(text: str) -> float:
    """Nearest binary32 to a decimal literal, without double-rounding error."""
    exact = Fraction(text)
    guess = round_f32(float(text))
    if math.isinf(guess):
        return guess
    below = _nextafter32(guess, -math.inf)
    above = _nextafter32(guess, math.inf)
    best = guess
    best_err = abs(Fraction(guess) - exact)
    for cand in (below, above):
        if math.isinf(cand):
            continue
        err = abs(Fraction(cand) - exact)
        if err < best_err or (err == best_err and f32_bits(cand) % 2 == 0
                              and f32_bits(best) % 2 == 1):
            best, best_err = cand, err
    return best


def _nextafter32(x: float, toward: float) -> float:
    if x == toward:
        return x
    w = f32_bits(x)
    if x == 0.0:
        return bits_f32(1) if toward > 0 else bits_f32(0x80000001)
    up = (toward > x) == (x > 0)
    return bits_f32(w + 1 if up else w - 1)


def is_exact_reciprocal(p: float) -> bool:
    """True when 1/p is exactly representable in binary32 (p a power of two)."""
    if p == 0.0 or not math.isfinite(p):
        return False
    m, _ = math.frexp(p)
    if abs(m) != 0.5:
        return False
    r = 1.0 / p
    return round_f32(r) == r and r != 0.0 and math.isfinite(round_f32(r))


def format_f32(x: float) -> str:
    """Shortest decimal text that parses back to the same binary32."""
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"non-finite literal {x!r}")
    for digits in range(1, 10):
        text = f"{x:.{digits}g}"
        if parse_decimal_f32(text) == x:
            break
    if "e" not in text and "." not in text:
        text += ".0"
    return text
