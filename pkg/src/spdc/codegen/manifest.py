"""Component description: manifest.txt (JSON) and an illustrative hw.tcl."""

from __future__ import annotations

import datetime
import json
import os

from .. import __version__
from ..ast import PortClass


def build_time(epoch: str | None = None) -> str:
    """UTC timestamp, pinned by ``SPDC_EPOCH`` (seconds since 1970) when set."""
    raw = epoch if epoch is not None else os.environ.get("SPDC_EPOCH")
    t = int(raw) if raw not in (None, "") else int(datetime.datetime.now(datetime.timezone.utc).timestamp())
    return datetime.datetime.fromtimestamp(t, datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _fields(fields: list[tuple[str, PortClass]]) -> list[dict]:
    return [{"name": name, "lsb": 32 * k, "width": 32, "numeric": klass is PortClass.NUMERIC,
             "class": klass.value} for k, (name, klass) in enumerate(fields)]


def manifest_dict(name: str, top, files: list[str], report, external: list[str],
                  library_instantiations, epoch: str | None = None) -> dict:
    return {
        "component": name,
        "version": __version__,
        "generated": build_time(epoch),
        "top_module": name,
        "clock": {"name": "clk", "edge": "rising"},
        "reset": {"name": "reset_n", "active": "low"},
        "interfaces": [
            {"name": "sink", "kind": "avalon_streaming_sink", "data": "in_data", "width": top.data_width_in,
             "signals": {"data": "in_data", "valid": "in_valid", "ready": "in_ready",
                         "startofpacket": "in_sop", "endofpacket": "in_eop"},
             "fields": _fields(top.in_fields)},
            {"name": "source", "kind": "avalon_streaming_source", "data": "out_data",
             "width": top.data_width_out,
             "signals": {"data": "out_data", "valid": "out_valid", "ready": "out_ready",
                         "startofpacket": "out_sop", "endofpacket": "out_eop", "empty": "out_empty"},
             "empty_width": top.empty_width,
             "fields": _fields(top.out_fields)},
        ],
        "files": files,
        "pipeline_depth": report.pipeline_depth,
        "census": {k: v for k, v in report.census.items() if k != "n_ops"},
        "n_ops": report.n_ops,
        "target_freq_mhz": report.target_freq,
        "library_instantiations": [{"module": m, "params": dict(p)} for m, p in library_instantiations],
        "external_modules": external,
    }


def emit_manifest_json(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=False) + "\n"


def emit_hw_tcl(data: dict) -> str:
    """Qsys-flavoured component script; illustrative, not tied to one tool version."""
    name = data["component"]
    out = [
        f"# {name}: component description generated by spdc {data['version']} at {data['generated']}",
        "# Illustrative Platform-Designer style script; the structured copy is manifest.txt.",
        "package require -exact qsys 14.0",
        "",
        f"set_module_property NAME {name}",
        f"set_module_property DISPLAY_NAME {name}",
        f"set_module_property VERSION {data['version']}",
        f"set_module_property TOP_LEVEL_HDL_MODULE {data['top_module']}",
        "set_module_property EDITABLE false",
        f"# pipeline depth {data['pipeline_depth']} cycles, {data['n_ops']} FP operators",
        "",
        "add_fileset QUARTUS_SYNTH QUARTUS_SYNTH \"\" \"\"",
        f"set_fileset_property QUARTUS_SYNTH TOP_LEVEL {data['top_module']}",
    ]
    for path in data["files"]:
        kind = "VERILOG_INCLUDE" if path.endswith(".vh") else "VERILOG"
        top = " TOP_LEVEL_FILE" if path == "top.v" else ""
        out.append(f"add_fileset_file {path} {kind} PATH {path}{top}")
    out += [
        "",
        "add_interface clock clock end",
        "add_interface_port clock clk clk Input 1",
        "add_interface reset reset end",
        "set_interface_property reset associatedClock clock",
        "add_interface_port reset reset_n reset_n Input 1",
    ]
    for itf in data["interfaces"]:
        sink = itf["kind"].endswith("sink")
        nm = itf["name"]
        out += ["", f"add_interface {nm} avalon_streaming {'end' if sink else 'start'}",
                f"set_interface_property {nm} associatedClock clock",
                f"set_interface_property {nm} associatedReset reset",
                f"set_interface_property {nm} dataBitsPerSymbol 8",
                f"set_interface_property {nm} symbolsPerBeat {max(itf['width'] // 8, 1)}",
                f"set_interface_property {nm} readyLatency 0"]
        dirs = {"ready": "Output" if sink else "Input"}
        for role, sig in itf["signals"].items():
            width = itf["width"] if role == "data" else itf.get("empty_width", 1) if role == "empty" else 1
            direction = dirs.get(role, "Input" if sink else "Output")
            out.append(f"add_interface_port {nm} {sig} {role} {direction} {width}")
        for f in itf["fields"]:
            kind = "binary32" if f["numeric"] else "raw"
            out.append(f"# field {f['name']} bits [{f['lsb'] + 31}:{f['lsb']}] {kind}")
    return "\n".join(out) + "\n"
