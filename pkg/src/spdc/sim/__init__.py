"""Cycle-accurate stream simulation of scheduled designs."""

from .kernel import default_backend, make_kernel
from .netlist import Netlist, build_netlist
from .plugins import HdlPlugin, PluginRegistry, default_registry, function_plugin, register_builtin_plugins
from .simulator import SimTrace, Simulator, simulate, throughput_check
from .streamio import StallPattern, StreamPacket, StreamVector, load_stream, save_stream

__all__ = [
    "HdlPlugin", "Netlist", "PluginRegistry", "SimTrace", "Simulator", "StallPattern", "StreamPacket",
    "StreamVector", "build_netlist", "default_backend", "default_registry", "function_plugin", "load_stream",
    "make_kernel", "register_builtin_plugins", "save_stream", "simulate", "throughput_check",
]
