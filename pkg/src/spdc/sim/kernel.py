"""Kernel backend selection.

The compiled extension is used when importable; ``SPDC_PURE_PYTHON=1`` forces
the pure-Python kernel.  Both backends are bit-identical.
"""

from __future__ import annotations

import os

from ._kernel_py import PyKernel

try:
    from ._kernel import CKernel
except ImportError:  # extension not built
    CKernel = None

BACKENDS = {"python": PyKernel}
if CKernel is not None:
    BACKENDS["cython"] = CKernel


def default_backend() -> str:
    if os.environ.get("SPDC_PURE_PYTHON", "") not in ("", "0") or CKernel is None:
        return "python"
    return "cython"


def make_kernel(netlist, backend: str | None = None):
    name = backend or default_backend()
    try:
        cls = BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available (have {sorted(BACKENDS)})") from None
    return cls(netlist)
