"""D2Q9 lattice Boltzmann reference, lattice files and pipeline harness."""

from .harness import (cell_stage_design, extract_stage, lbm_design, lbm_program, lbm_source, max_rel_error,
                      pipeline_step, simulate_cells, unit_length, with_unit_length)
from .lattice import Lattice, channel, closed_box, read_lattice, uniform, write_lattice
from .reference import LbmConstants, cell_stages, lbm_step_reference, run_steps

__all__ = ["Lattice", "LbmConstants", "cell_stage_design", "cell_stages", "channel", "closed_box",
           "extract_stage", "lbm_design", "lbm_program", "lbm_source", "lbm_step_reference", "max_rel_error",
           "pipeline_step", "read_lattice", "run_steps", "simulate_cells", "uniform", "unit_length",
           "with_unit_length", "write_lattice"]
