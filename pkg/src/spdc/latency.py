"""Frequency-tiered operator latency tables."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from importlib import resources

from .errors import SpdError

OP_FIELDS = ("add", "sub", "mul", "const_mul", "div", "converter_in", "converter_out")


@dataclass(frozen=True)
class OpTable:
    add: int
    sub: int
    mul: int
    const_mul: int
    div: int
    converter_in: int
    converter_out: int


@dataclass(frozen=True)
class LatencyModel:
    """Ordered ``(max_mhz, OpTable)`` tiers.

    ``table_for(freq)`` picks the tier with the smallest ``max_mhz`` that is
    at least ``freq``; asking for more than the top tier is an error.
    """

    tiers: tuple[tuple[float, OpTable], ...]

    def __post_init__(self):
        if not self.tiers:
            raise SpdError("BAD_LATENCY_MODEL", "latency model has no tiers")
        prev: tuple[float, OpTable] | None = None
        for mhz, table in self.tiers:
            for name in OP_FIELDS:
                value = getattr(table, name)
                floor = 0 if name.startswith("converter") else 1
                if not isinstance(value, int) or value < floor:
                    raise SpdError("BAD_LATENCY_MODEL",
                                   f"tier {mhz} MHz: {name}={value!r} must be an integer >= {floor}")
            if prev is not None:
                if mhz <= prev[0]:
                    raise SpdError("BAD_LATENCY_MODEL", "tiers must be sorted by increasing max_mhz")
                for name in OP_FIELDS:
                    if getattr(table, name) < getattr(prev[1], name):
                        raise SpdError("BAD_LATENCY_MODEL",
                                       f"{name} decreases from {prev[0]} MHz to {mhz} MHz")
            prev = (mhz, table)

    def table_for(self, freq_mhz: float) -> OpTable:
        return self.tier_for(freq_mhz)[1]

    def tier_for(self, freq_mhz: float) -> tuple[float, OpTable]:
        if freq_mhz <= 0:
            raise SpdError("BAD_FREQUENCY", f"frequency must be positive, got {freq_mhz}")
        for mhz, table in self.tiers:
            if freq_mhz <= mhz:
                return mhz, table
        raise SpdError("FREQ_OUT_OF_RANGE",
                       f"{freq_mhz} MHz exceeds the top latency tier ({self.tiers[-1][0]} MHz)")

    def to_dict(self) -> dict:
        return {"tiers": [{"max_mhz": mhz, **asdict(t)} for mhz, t in self.tiers]}

    @classmethod
    def from_dict(cls, data: dict) -> "LatencyModel":
        try:
            tiers = []
            for entry in data["tiers"]:
                tiers.append((entry["max_mhz"], OpTable(**{f.name: entry[f.name] for f in fields(OpTable)})))
        except (KeyError, TypeError) as exc:
            raise SpdError("BAD_LATENCY_MODEL", f"malformed latency model: missing {exc}") from None
        return cls(tuple(tiers))

    @classmethod
    def load(cls, path) -> "LatencyModel":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise SpdError("FILE_NOT_FOUND", f"latency model {path} not found", filename=str(path)) from None
        except json.JSONDecodeError as exc:
            raise SpdError("BAD_LATENCY_MODEL", str(exc), exc.lineno, exc.colno, str(path)) from None
        return cls.from_dict(data)


def default_model() -> LatencyModel:
    text = resources.files("spdc.data").joinpath("latency_default.json").read_text("utf-8")
    return LatencyModel.from_dict(json.loads(text))
