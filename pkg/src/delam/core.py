"""Shared domain types: bulk material, interface laws, state, load program.

Units are SI throughout (m, s, Pa, J). All types are plain value data and
are not mutated after construction; parameter checking that the solver
cannot tolerate silently is collected by :func:`validate_scenario` into a
report instead of raised piecemeal, so that a fully populated scenario can
always be built and then audited.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np


# ---------------------------------------------------------------------------
# bulk material


@dataclass(frozen=True)
class BulkMaterial:
    """Isotropic plane-strain material with optional Kelvin-Voigt viscosity.

    Attributes
    ----------
    youngs_modulus : float
        Young's modulus [Pa].
    poisson_ratio : float
        Poisson's ratio, must lie in (0, 0.5) for a definite stiffness.
    relaxation_time : float
        Retardation time chi [s]; the viscosity tensor is chi times the
        elastic tensor.  chi = 0 is accepted (inviscid) but flagged by
        validation because the inviscid problem has no theoretical backing.
    """

    youngs_modulus: float
    poisson_ratio: float
    relaxation_time: float = 0.0

    @property
    def lame_lambda(self) -> float:
        e, nu = self.youngs_modulus, self.poisson_ratio
        return e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))

    @property
    def lame_mu(self) -> float:
        return self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))

    def stiffness_voigt(self) -> np.ndarray:
        """Plane-strain stiffness, Voigt order (xx, yy, xy) with engineering shear."""
        lam, mu = self.lame_lambda, self.lame_mu
        return np.array(
            [
                [lam + 2.0 * mu, lam, 0.0],
                [lam, lam + 2.0 * mu, 0.0],
                [0.0, 0.0, mu],
            ]
        )

    def viscosity_voigt(self) -> np.ndarray:
        return self.relaxation_time * self.stiffness_voigt()


# ---------------------------------------------------------------------------
# interface constitutive laws


@dataclass(frozen=True)
class ConstantToughness:
    """Mode-insensitive fracture energy."""

    a_i: float


@dataclass(frozen=True)
class HutchinsonSuoToughness:
    """Phenomenological fracture-energy law G(psi) = a_i (1 + tan^2((1-s) psi))."""

    a_i: float
    sensitivity: float  # in [0, 1]; 1 means mode-insensitive


@dataclass(frozen=True)
class PlasticityToughness:
    """Fracture energy derived from interfacial plasticity with hardening.

    The parameters are those of the plasticity model this law was fitted
    from; they are kept verbatim so the Mode-II limit stays consistent even
    when the hosting interface uses a different tangential stiffness.
    """

    a_i: float
    kappa_t: float
    kappa_h: float
    sigma_t_yield: float


ToughnessLaw = Union[ConstantToughness, HutchinsonSuoToughness, PlasticityToughness]


@dataclass(frozen=True)
class LebimLaw:
    """Linear elastic-brittle interface: stiffnesses plus a toughness law."""

    kappa_n: float
    kappa_t: float
    toughness: ToughnessLaw


@dataclass(frozen=True)
class AprimLaw:
    """Elastic-plastic interface with damage: stiffnesses, energy split,
    kinematic hardening, slip-gradient coefficient, and yield stress."""

    kappa_n: float
    kappa_t: float
    a_0: float
    a_1: float
    kappa_h: float
    kappa_g: float
    sigma_t_yield: float

    @property
    def a_i(self) -> float:
        """Total Mode-I fracture energy (surface part plus debonding part)."""
        return self.a_0 + self.a_1


InterfaceLaw = Union[LebimLaw, AprimLaw]


def yield_window_ok(kappa_t: float, a_i: float, sigma_t_yield: float) -> bool:
    """Admissible yield stress range: (1/2) sqrt(2 kt a_i) < sigma_y <= sqrt(2 kt a_i).

    Below the lower bound the slip keeps evolving after rupture; above the
    upper bound it never activates before rupture.
    """
    if kappa_t <= 0.0 or a_i <= 0.0:
        return False
    crit = math.sqrt(2.0 * kappa_t * a_i)
    return 0.5 * crit < sigma_t_yield <= crit


# ---------------------------------------------------------------------------
# system state


#: Post-hoc audit bound on interface interpenetration [m].  The QP enforces
#: the contact constraint to solver tolerance; this is only used to report
#: states that somehow drifted out of the feasible set.
TOL_GAP = 1e-12


def _readonly(a: Optional[np.ndarray]) -> Optional[np.ndarray]:
    if a is None:
        return None
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SystemState:
    """Nodal displacements, per-segment damage, optional interfacial slip.

    ``displacement`` is the flat DOF vector (ux0, uy0, ux1, ...).  ``damage``
    has one entry per interface segment in [0, 1] and never increases over a
    run.  ``slip`` holds the tangential plastic slip at the interface nodes
    and is present only for the plasticity-based model.
    """

    displacement: np.ndarray
    damage: np.ndarray
    slip: Optional[np.ndarray]
    time: float

    def __post_init__(self):
        object.__setattr__(self, "displacement", _readonly(self.displacement))
        object.__setattr__(self, "damage", _readonly(self.damage))
        object.__setattr__(self, "slip", _readonly(self.slip))


def initial_state(n_nodes: int, n_segments: int, n_interface_nodes: int,
                  model: str, damage: Optional[np.ndarray] = None) -> SystemState:
    """Pristine state: zero displacement, fully bonded unless ``damage`` given."""
    z = np.ones(n_segments) if damage is None else np.asarray(damage, dtype=float)
    pi = np.zeros(n_interface_nodes) if model == "aprim" else None
    return SystemState(np.zeros(2 * n_nodes), z, pi, 0.0)


# ---------------------------------------------------------------------------
# load program


@dataclass(frozen=True)
class DirichletRamp:
    """Prescribed displacement w(t) = direction * speed * t on a tagged node set.

    ``components`` masks which of (ux, uy) are constrained; an unconstrained
    component is left free regardless of the direction entry.
    """

    tag: str
    direction: tuple[float, float]
    speed: float
    components: tuple[bool, bool] = (True, True)

    def value(self, t: float) -> np.ndarray:
        return np.asarray(self.direction, dtype=float) * (self.speed * t)


@dataclass(frozen=True)
class NeumannRamp:
    """Applied traction f(t) = traction + rate * t on a tagged edge set [Pa]."""

    tag: str
    traction: tuple[float, float] = (0.0, 0.0)
    rate: tuple[float, float] = (0.0, 0.0)

    def value(self, t: float) -> np.ndarray:
        return np.asarray(self.traction, dtype=float) + np.asarray(self.rate, dtype=float) * t


@dataclass(frozen=True)
class LoadProgram:
    """Time grid and boundary drive: Dirichlet ramps plus optional tractions."""

    dirichlet: tuple[DirichletRamp, ...]
    horizon: float
    step: float
    neumann: tuple[NeumannRamp, ...] = ()

    @property
    def n_steps(self) -> int:
        """Number of time steps; the horizon is rounded up to a full step."""
        if self.step <= 0.0 or self.horizon <= 0.0:
            return 0
        ratio = self.horizon / self.step
        n = int(round(ratio))
        if abs(ratio - n) > 1e-9 * max(1.0, ratio):
            n = math.ceil(ratio - 1e-12)
            warnings.warn(
                f"horizon {self.horizon} is not a multiple of the step "
                f"{self.step}; rounding up to {n} steps",
                stacklevel=2,
            )
        return max(n, 1)


# ---------------------------------------------------------------------------
# scenario validation


@dataclass
class ValidationReport:
    """Outcome of a scenario audit: blocking violations and advisory notes."""

    violations: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        lines = [f"violation: {v}" for v in self.violations]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines) if lines else "ok"


def _check_toughness(law: ToughnessLaw, out: ValidationReport) -> None:
    if isinstance(law, ConstantToughness):
        if law.a_i <= 0.0:
            out.violations.append("toughness a_i must be positive")
    elif isinstance(law, HutchinsonSuoToughness):
        if law.a_i <= 0.0:
            out.violations.append("toughness a_i must be positive")
        if not 0.0 <= law.sensitivity <= 1.0:
            out.violations.append("mode-sensitivity parameter must lie in [0, 1]")
    elif isinstance(law, PlasticityToughness):
        for name in ("a_i", "kappa_t", "kappa_h", "sigma_t_yield"):
            if getattr(law, name) <= 0.0:
                out.violations.append(f"toughness {name} must be positive")
        if law.kappa_t > 0 and law.a_i > 0 and not yield_window_ok(
            law.kappa_t, law.a_i, law.sigma_t_yield
        ):
            crit = math.sqrt(2.0 * law.kappa_t * law.a_i)
            out.violations.append(
                "yield stress outside the admissible window: need "
                f"{0.5 * crit:.6g} < sigma_t_yield <= {crit:.6g}, "
                f"got {law.sigma_t_yield:.6g}"
            )
    else:
        out.violations.append(f"unknown toughness law {type(law).__name__}")


def validate_scenario(scenario) -> ValidationReport:
    """Audit a fully populated scenario; an empty report means runnable.

    Pure: the same scenario always yields the same report.  The argument only
    needs attributes ``bulk``, ``interface``, ``mesh``, ``load``, ``model``
    and optionally ``initial_damage``.
    """
    out = ValidationReport()
    bulk: BulkMaterial = scenario.bulk
    law: InterfaceLaw = scenario.interface
    mesh = scenario.mesh
    load: LoadProgram = scenario.load
    model: str = scenario.model

    # bulk
    if bulk.youngs_modulus <= 0.0:
        out.violations.append("Young's modulus must be positive")
    if not 0.0 < bulk.poisson_ratio < 0.5:
        out.violations.append("Poisson ratio must lie in (0, 0.5)")
    if bulk.relaxation_time < 0.0:
        out.violations.append("relaxation time must be non-negative")
    elif bulk.relaxation_time == 0.0 and model == "lebim":
        out.notes.append("inviscid bulk (relaxation time 0): permitted but "
                         "not theoretically justified")

    # model / law pairing
    if model not in ("lebim", "aprim"):
        out.violations.append(f"unknown model '{model}'")
    if model == "lebim" and not isinstance(law, LebimLaw):
        out.violations.append("model 'lebim' requires a LebimLaw interface")
    if model == "aprim" and not isinstance(law, AprimLaw):
        out.violations.append("model 'aprim' requires an AprimLaw interface")
    if model == "aprim" and bulk.relaxation_time > 0.0:
        out.violations.append("the plasticity-based model assumes an elastic "
                              "bulk; set relaxation time to 0")

    # interface law
    if law.kappa_n <= 0.0 or law.kappa_t <= 0.0:
        out.violations.append("interface stiffnesses must be positive")
    if isinstance(law, LebimLaw):
        _check_toughness(law.toughness, out)
    elif isinstance(law, AprimLaw):
        if law.a_0 < 0.0:
            out.violations.append("surface energy a_0 must be non-negative")
        if law.a_1 <= 0.0:
            out.violations.append("debonding energy a_1 must be positive")
        if law.kappa_h <= 0.0:
            out.violations.append("hardening modulus must be positive")
        if law.kappa_g < 0.0:
            out.violations.append("slip-gradient coefficient must be non-negative")
        if law.sigma_t_yield <= 0.0:
            out.violations.append("yield stress must be positive")
        elif law.kappa_t > 0 and law.a_i > 0 and not yield_window_ok(
            law.kappa_t, law.a_i, law.sigma_t_yield
        ):
            crit = math.sqrt(2.0 * law.kappa_t * law.a_i)
            out.violations.append(
                "yield stress outside the admissible window: need "
                f"{0.5 * crit:.6g} < sigma_t_yield <= {crit:.6g}, "
                f"got {law.sigma_t_yield:.6g}"
            )

    # mesh geometry
    mesh.validate_into(out)

    # load program
    if load.horizon <= 0.0:
        out.violations.append("load horizon must be positive")
    if load.step <= 0.0:
        out.violations.append("time step must be positive")
    if load.horizon > 0.0 and load.step > 0.0:
        ratio = load.horizon / load.step
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            out.notes.append("horizon is not a multiple of the time step; "
                             "it will be rounded up to a full step")
    tags = {t for t in mesh.dirichlet_edges} | {t for t in mesh.dirichlet_nodes}
    for ramp in load.dirichlet:
        if ramp.tag not in tags:
            out.violations.append(f"Dirichlet ramp references unknown tag '{ramp.tag}'")
        mag = math.hypot(*ramp.direction)
        if ramp.speed != 0.0 and abs(mag - 1.0) > 1e-9:
            out.notes.append(f"Dirichlet ramp '{ramp.tag}' direction is not a "
                             "unit vector; speed is not the drive magnitude")
    for ramp in load.neumann:
        if ramp.tag not in mesh.neumann_edges:
            out.violations.append(f"Neumann ramp references unknown tag '{ramp.tag}'")

    # initial damage, if the scenario carries one
    z0 = getattr(scenario, "initial_damage", None)
    if z0 is not None:
        z0 = np.asarray(z0, dtype=float)
        if z0.shape != (len(mesh.segments),):
            out.violations.append("initial damage must have one entry per segment")
        elif np.any(z0 < 0.0) or np.any(z0 > 1.0):
            out.violations.append("initial damage must lie in [0, 1]")

    return out
