"""Pulse-excited quantum-dot--cavity single-photon source simulator."""

__version__ = "0.1.0"

from .algebra import HilbertSpace, eig_hermitian, expectation, kron, lindblad
from .bath import PhononParams
from .correlators import (
    FiguresOfMerit,
    TwoTimeGrid,
    emitted_photon_number,
    figures_of_merit,
    purcell_factor,
    timing_jitter_indistinguishability,
)
from .evolve import TimeGrid, Trajectory, integrate, run_until_decayed
from .models import (
    BiexcitonModel,
    DissipatorKind,
    PulseParams,
    TwoLevelCavityModel,
    pulse_envelope,
)

__all__ = [
    "BiexcitonModel",
    "DissipatorKind",
    "FiguresOfMerit",
    "HilbertSpace",
    "PhononParams",
    "PulseParams",
    "TimeGrid",
    "Trajectory",
    "TwoLevelCavityModel",
    "TwoTimeGrid",
    "eig_hermitian",
    "emitted_photon_number",
    "expectation",
    "figures_of_merit",
    "integrate",
    "kron",
    "lindblad",
    "pulse_envelope",
    "purcell_factor",
    "run_until_decayed",
    "timing_jitter_indistinguishability",
]
