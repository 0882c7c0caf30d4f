"""Discretised reservoir model: normal modes, polariton rows and their checks."""

from .bogoliubov import BogoliubovModes, diagonalize, williamson
from .checks import (bosonicity_check, bosonicity_sweep, certification_check, defect_vs_bath,
                     defect_vs_filling, filled_box_defect, finite_slab_defect, standard_slab)
from .defect import lnf_defect, spanning_fraction
from .maxwell import maxwell_ampere_check, maxwell_ampere_refinement
from .model import BathGrid, PhaseSpaceModel, build_model, model_from_matrix
from .polariton import PolaritonVectors, polariton_vectors

__all__ = [
    "BathGrid", "PhaseSpaceModel", "build_model", "model_from_matrix", "BogoliubovModes",
    "diagonalize", "williamson", "PolaritonVectors", "polariton_vectors", "lnf_defect",
    "spanning_fraction", "maxwell_ampere_check", "maxwell_ampere_refinement",
    "certification_check", "bosonicity_check", "bosonicity_sweep", "finite_slab_defect",
    "filled_box_defect", "defect_vs_filling", "defect_vs_bath", "standard_slab",
]
