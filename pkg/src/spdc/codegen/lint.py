"""Self-checks on emitted Verilog: module closure and wire widths."""

from __future__ import annotations

import re
from importlib import resources

from ..errors import SpdError

_MODULE_DEF = re.compile(r"^\s*module\s+([A-Za-z_][A-Za-z0-9_$]*)", re.M)
# `name #(...) inst (` or `name inst (` at the start of a statement
_INSTANCE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_$]*)(?:\s*#\s*\((?:[^()]|\([^()]*\))*\)\s*|\s+)"
                       r"([A-Za-z_][A-Za-z0-9_$]*)\s*\(", re.M)
_INCLUDE = re.compile(r'^\s*`include\s+"([^"]+)"', re.M)
_NOT_MODULES = frozenset({"module", "function", "task", "if", "for", "while", "case", "assign", "always",
                          "initial", "begin", "end", "wire", "reg", "input", "output", "localparam",
                          "parameter", "integer", "else", "repeat", "return", "generate",
                          "endgenerate", "genvar", "default", "casez", "casex"})


def _strip_comments(text: str) -> str:
    text = re.sub(r"/\*.*?\*/", "", text, flags=re.S)
    return re.sub(r"//[^\n]*", "", text)


def defined_modules(text: str) -> list[str]:
    return _MODULE_DEF.findall(_strip_comments(text))


def instantiated_modules(text: str) -> list[str]:
    found = []
    for mod, _inst in _INSTANCE.findall(_strip_comments(text)):
        if mod not in _NOT_MODULES:
            found.append(mod)
    return found


def includes(text: str) -> list[str]:
    return _INCLUDE.findall(text)


def library_files() -> dict[str, str]:
    """File name -> text for every shipped library file."""
    lib = resources.files("spdc.codegen").joinpath("hdl_lib")
    return {p.name: p.read_text("utf-8") for p in sorted(lib.iterdir(), key=lambda p: p.name)
            if p.name.endswith((".v", ".vh"))}


def library_modules() -> dict[str, str]:
    """Module name -> defining library file."""
    out = {}
    for fname, text in library_files().items():
        for mod in defined_modules(text):
            out[mod] = fname
    return out


def library_closure(modules) -> list[str]:
    """Library files needed by ``modules``, following instantiations and includes."""
    files = library_files()
    where = library_modules()
    need: set[str] = set()
    stack = [where[m] for m in modules if m in where]
    while stack:
        fname = stack.pop()
        if fname in need:
            continue
        need.add(fname)
        text = files[fname]
        stack.extend(where[m] for m in instantiated_modules(text) if m in where)
        stack.extend(i for i in includes(text) if i in files)
    return sorted(need)


def check_closure(sources: dict[str, str], external: set[str] = frozenset()) -> list[str]:
    """Instantiated module names that no source defines and are not declared external."""
    defined: set[str] = set()
    used: set[str] = set()
    for text in sources.values():
        defined.update(defined_modules(text))
        used.update(instantiated_modules(text))
    return sorted(used - defined - set(external))


def lint_or_raise(sources: dict[str, str], audit_problems: list[str], external: set[str] = frozenset()) -> None:
    missing = check_closure(sources, external)
    if missing:
        raise SpdError("LINT_FAILED", f"undefined modules instantiated: {', '.join(missing)}")
    if audit_problems:
        raise SpdError("LINT_FAILED", "width audit: " + "; ".join(audit_problems))
