"""Closed-form interface algebra: mode mixity, fracture-energy laws,
Mode-II rupture quantities, and the fitting of the brittle model to the
plasticity-based one."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    AprimLaw,
    ConstantToughness,
    HutchinsonSuoToughness,
    LebimLaw,
    PlasticityToughness,
    ToughnessLaw,
    yield_window_ok,
)

#: Jumps below this magnitude [m] carry no usable direction information.
ZERO_JUMP = 1e-15


@dataclass(frozen=True)
class MixityAngles:
    """Fracture-mode mixity in energetic, displacement, and stress form [rad].

    0 is pure opening, pi/2 pure shear.  The energetic angle weights the
    tangential part by sqrt(kappa_t / kappa_n).
    """

    psi_g: float
    psi_u: float
    psi_sigma: float


def mixity(jump_n: float, jump_t: float, kappa_n: float, kappa_t: float) -> Optional[MixityAngles]:
    """Mixity angles of a displacement jump, or None when both parts vanish.

    A closed or compressed contact (jump_n <= 0) with nonzero shear counts as
    pure shear: sliding against a closed interface dissipates like Mode II.
    The None marker lets consumers fall back to the Mode-I fracture energy,
    which is inert because no damage criterion can fire at zero jump.
    """
    at = abs(jump_t)
    if jump_n < ZERO_JUMP and at < ZERO_JUMP:
        return None
    if jump_n <= 0.0:
        return MixityAngles(0.5 * math.pi, 0.5 * math.pi, 0.5 * math.pi)
    return MixityAngles(
        psi_g=math.atan(math.sqrt(kappa_t / kappa_n) * at / jump_n),
        psi_u=math.atan(at / jump_n),
        psi_sigma=math.atan(kappa_t * at / (kappa_n * jump_n)),
    )


def fracture_energy_hutchinson_suo(psi_g: float, a_i: float, sensitivity: float) -> float:
    """Phenomenological law a_i (1 + tan^2((1 - s) psi)); monotone in psi."""
    if not 0.0 <= sensitivity <= 1.0:
        raise ValueError("sensitivity must lie in [0, 1]")
    arg = (1.0 - sensitivity) * psi_g
    limit = 0.5 * math.pi - 1e-9
    if arg >= limit:
        warnings.warn("fracture-energy argument clamped just below pi/2", stacklevel=2)
        arg = limit
    return a_i * (1.0 + math.tan(arg) ** 2)


def fracture_energy_plasticity(psi_g: float, a_i: float, kappa_t: float,
                               kappa_h: float, sigma_t_yield: float) -> float:
    """Fracture energy of the plasticity-derived law.

    Constant a_i up to the knee angle arcsin(sigma_y / sqrt(2 kt a_i)), then
    increasing up to the Mode-II value.  The rising branch is evaluated as

        (2 a_i (kt + kh) - sigma_y^2) / (2 (kt cos^2 psi + kh))

    which is algebraically identical to the tan^2 form but continuous through
    psi = pi/2.
    """
    if not yield_window_ok(kappa_t, a_i, sigma_t_yield):
        raise ValueError("yield stress outside the admissible window")
    sigma_crit = math.sqrt(2.0 * kappa_t * a_i)
    knee = math.asin(sigma_t_yield / sigma_crit)
    if psi_g <= knee:
        return a_i
    c2 = math.cos(psi_g) ** 2
    return (2.0 * a_i * (kappa_t + kappa_h) - sigma_t_yield ** 2) / (
        2.0 * (kappa_t * c2 + kappa_h)
    )


def fracture_energy(law: ToughnessLaw, psi_g: Optional[float]) -> float:
    """Evaluate a toughness law; undefined mixity falls back to the Mode-I value."""
    if psi_g is None:
        return law.a_i
    if isinstance(law, ConstantToughness):
        return law.a_i
    if isinstance(law, HutchinsonSuoToughness):
        return fracture_energy_hutchinson_suo(psi_g, law.a_i, law.sensitivity)
    if isinstance(law, PlasticityToughness):
        return fracture_energy_plasticity(
            psi_g, law.a_i, law.kappa_t, law.kappa_h, law.sigma_t_yield
        )
    raise TypeError(f"unknown toughness law {type(law).__name__}")


def fracture_energy_for_jump(law: LebimLaw, jump_n: float, jump_t: float) -> float:
    """Fracture energy at a given jump, using the interface's own stiffnesses
    for the mixity angle."""
    m = mixity(jump_n, jump_t, law.kappa_n, law.kappa_t)
    return fracture_energy(law.toughness, None if m is None else m.psi_g)


@dataclass(frozen=True)
class ModeTwoTrigger:
    """Closed-form pure-shear rupture data of the plasticity-based interface.

    u_ii / pi_ii are the tangential jump and slip at rupture, a_ii the total
    energy expended per unit area, and ratio = a_ii / a_i the fracture-mode
    sensitivity.  sigma_t_crit and sigma_n_crit are the peak tractions in
    pure shear and pure opening.
    """

    u_ii: float
    pi_ii: float
    a_ii: float
    sigma_t_crit: float
    sigma_n_crit: float
    ratio: float


def mode_two_trigger(law: AprimLaw) -> ModeTwoTrigger:
    """Evaluate the pure-shear rupture point of the plasticity-based law."""
    a_i = law.a_i
    if not yield_window_ok(law.kappa_t, a_i, law.sigma_t_yield):
        raise ValueError("yield stress outside the admissible window")
    kt, kh, sy = law.kappa_t, law.kappa_h, law.sigma_t_yield
    sigma_t_crit = math.sqrt(2.0 * kt * a_i)
    sigma_n_crit = math.sqrt(2.0 * law.kappa_n * a_i)
    pi_ii = (sigma_t_crit - sy) / kh
    u_ii = (sigma_t_crit * (kt + kh) - sy * kt) / (kt * kh)
    a_ii = a_i + sy * pi_ii + 0.5 * kh * pi_ii ** 2
    ratio = 1.0 + kt / kh - sy ** 2 / (2.0 * kh * a_i)
    if abs(a_ii - a_i * ratio) > 1e-12 * a_ii:
        raise ArithmeticError("inconsistent Mode-II energy accounting")
    return ModeTwoTrigger(
        u_ii=u_ii,
        pi_ii=pi_ii,
        a_ii=a_ii,
        sigma_t_crit=sigma_t_crit,
        sigma_n_crit=sigma_n_crit,
        ratio=ratio,
    )


def fit_lebim_to_aprim(aprim: AprimLaw, scenario: int) -> LebimLaw:
    """Derive a brittle interface law that imitates the plasticity-based one.

    Scenario 1 keeps both stiffnesses, so the initial response matches and
    Mode II ruptures a bit early.  Scenario 2 matches the Mode-II rupture
    displacement instead by softening the tangential stiffness to
    2 a_ii / u_ii^2, which is always below the original kappa_t inside the
    admissible window.  Mode I is identical in both.
    """
    trigger = mode_two_trigger(aprim)
    toughness = PlasticityToughness(
        a_i=aprim.a_i,
        kappa_t=aprim.kappa_t,
        kappa_h=aprim.kappa_h,
        sigma_t_yield=aprim.sigma_t_yield,
    )
    if scenario == 1:
        return LebimLaw(aprim.kappa_n, aprim.kappa_t, toughness)
    if scenario == 2:
        return LebimLaw(aprim.kappa_n, 2.0 * trigger.a_ii / trigger.u_ii ** 2, toughness)
    raise ValueError(f"fit scenario must be 1 or 2, got {scenario!r}")


def gc_curve(law: ToughnessLaw, n_points: int = 361) -> tuple[np.ndarray, np.ndarray]:
    """Sample G(psi)/a_i on [0, pi/2]; returns (psi in degrees, ratio)."""
    psi = np.linspace(0.0, 0.5 * math.pi, n_points)
    ratio = np.array([fracture_energy(law, p) / law.a_i for p in psi])
    return np.degrees(psi), ratio
