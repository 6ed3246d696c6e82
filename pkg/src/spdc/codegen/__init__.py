"""Verilog, manifest and DOT generation for compiled designs."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .dot import emit_dot
from .lint import check_closure, instantiated_modules, library_closure, library_files, library_modules, lint_or_raise
from .manifest import emit_hw_tcl, emit_manifest_json, manifest_dict
from .verilog import emit_equation_module, emit_top, sanitize

__all__ = ["HdlArtifactSet", "emit_design", "emit_dot", "emit_equation_module", "emit_top", "write_artifacts",
           "check_closure"]


@dataclass
class HdlArtifactSet:
    name: str
    top_module: str
    equation_modules: dict[str, str]          # module name -> source
    equation_files: dict[str, str]            # module name -> relative path
    library_instantiations: list[tuple[str, tuple[tuple[str, str], ...]]]
    library_files: dict[str, str]             # relative path -> source
    manifest: dict
    manifest_text: str
    hw_tcl: str
    dot: str
    external_modules: list[str] = field(default_factory=list)

    def files(self) -> dict[str, str]:
        """Every artifact as relative path -> text, in a fixed order."""
        out = {"top.v": self.top_module}
        for mod in sorted(self.equation_modules):
            out[self.equation_files[mod]] = self.equation_modules[mod]
        out.update(sorted(self.library_files.items()))
        out["manifest.txt"] = self.manifest_text
        out["hw.tcl"] = self.hw_tcl
        out["dfg.dot"] = self.dot
        return out


def emit_design(design, epoch: str | None = None) -> HdlArtifactSet:
    """Generate and self-lint every artifact of a CompiledDesign."""
    sdfg, program = design.sdfg, design.program
    name = sanitize(program.name)
    top = emit_top(sdfg, program)
    eq_sources = {}
    eq_files = {}
    for label, (mod, text) in sorted(top.equation_modules.items()):
        eq_sources[mod] = text
        eq_files[mod] = f"eq/{sanitize(label)}.v"
    lib_mods = library_modules()
    used = sorted({m for m, _ in top.instantiated}
                  | {m for text in eq_sources.values() for m in instantiated_modules(text)})
    emitted = set(eq_sources)
    external = sorted(m for m in used if m not in lib_mods and m not in emitted)
    lib_texts = library_files()
    lib = {f"hdl_lib/{f}": lib_texts[f] for f in library_closure(used)}
    lint_or_raise({"top.v": top.text, **eq_sources, **lib}, top.audit.problems(), set(external))
    lib_inst = [(m, p) for m, p in top.instantiated if m in lib_mods]
    files = ["top.v"] + [eq_files[m] for m in sorted(eq_sources)] + sorted(lib)
    data = manifest_dict(name, top, files, design.report, external, lib_inst, epoch)
    return HdlArtifactSet(name, top.text, eq_sources, eq_files, lib_inst, lib, data,
                          emit_manifest_json(data), emit_hw_tcl(data), emit_dot(sdfg), external)


def write_artifacts(artifacts: HdlArtifactSet, outdir) -> Path:
    """Write ``outdir/<name>/...``; returns the design directory."""
    root = Path(outdir) / artifacts.name
    for rel, text in artifacts.files().items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="\n")
    return root
