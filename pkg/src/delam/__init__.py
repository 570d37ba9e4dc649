"""2D quasistatic adhesive-contact delamination: a visco-elastic brittle
interface model and an associative plasticity-based one, stepped by
semi-implicit convex quadratic programming."""

__version__ = "0.1.0"

from .core import (
    AprimLaw,
    BulkMaterial,
    ConstantToughness,
    DirichletRamp,
    HutchinsonSuoToughness,
    LebimLaw,
    LoadProgram,
    NeumannRamp,
    PlasticityToughness,
    SystemState,
    validate_scenario,
)
from .laws import (
    fit_lebim_to_aprim,
    fracture_energy,
    gc_curve,
    mixity,
    mode_two_trigger,
)
from .scenarios import (
    Scenario,
    build_mmf,
    build_pullpush,
    build_single_segment,
    load_config,
    run,
)

__all__ = [
    "AprimLaw", "BulkMaterial", "ConstantToughness", "DirichletRamp",
    "HutchinsonSuoToughness", "LebimLaw", "LoadProgram", "NeumannRamp",
    "PlasticityToughness", "Scenario", "SystemState", "build_mmf",
    "build_pullpush", "build_single_segment", "fit_lebim_to_aprim",
    "fracture_energy", "gc_curve", "load_config", "mixity",
    "mode_two_trigger", "run", "validate_scenario",
]
