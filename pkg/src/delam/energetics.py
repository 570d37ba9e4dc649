"""Energy bookkeeping and the a-posteriori maximum-dissipation audit.

The per-step balance residual is

    (E_k - E_{k-1}) + viscous + delamination + plastic - external work,

with the external work taken as the end-of-step Dirichlet reaction times the
prescribed displacement increment (plus any traction work).  On smooth steps
this residual is of the order of the step size; on rupture steps it can be
markedly negative because a sudden rupture releases stored energy that the
local-solution concept does not force back into the books, but it can never
be markedly positive: the scheme cannot create energy.

For the brittle model the full fracture energy counts as dissipated the
moment a segment breaks.  For the plasticity-based model the fracture energy
splits: the debonding part a_1 is dissipated at rupture while the surface
part a_0 transfers into the stored ledger as created-surface energy, along
with whatever hardening energy the slip has accumulated; that is exactly the
four-part Mode-II decomposition the closed forms predict.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .aprim import driving_forces
from .core import AprimLaw, LebimLaw, SystemState
from .fem import SimOps, interface_mass, neumann_vector
from .lebim import LebimStepReport


@dataclass(frozen=True, eq=False)
class EnergyLedger:
    """Per-step time series of stored, dissipated, and external-work energies [J]."""

    step: tuple[int, ...]
    time: tuple[float, ...]
    bulk_stored: tuple[float, ...]
    interface_stored: tuple[float, ...]
    viscous_cum: tuple[float, ...]
    delam_cum: tuple[float, ...]
    plastic_cum: tuple[float, ...]
    work_cum: tuple[float, ...]
    balance_residual: tuple[float, ...]

    @property
    def total(self) -> np.ndarray:
        """Stored plus dissipated at each step (the 'total energy' curve)."""
        return (np.array(self.bulk_stored) + np.array(self.interface_stored)
                + np.array(self.viscous_cum) + np.array(self.delam_cum)
                + np.array(self.plastic_cum))


def stored_energy(state: SystemState, scenario, ops: SimOps) -> tuple[float, float]:
    """(bulk, interface) stored energy of a state, matching the assembly quadratures."""
    u, z = state.displacement, state.damage
    law = scenario.interface
    bulk = 0.5 * float(u @ (ops.stiffness @ u))
    iface = ops.iface
    if isinstance(law, LebimLaw):
        jn = iface.jump_n_mid @ u
        jt = iface.jump_t_mid @ u
        interface = 0.5 * float(np.sum(
            z * iface.lengths * (law.kappa_n * jn ** 2 + law.kappa_t * jt ** 2)))
        return bulk, interface
    assert isinstance(law, AprimLaw)
    pi = state.slip
    jn = iface.jump_n_gauss @ u
    jt = iface.jump_t_gauss @ u
    pg = iface.slip_gauss @ pi
    zg = np.repeat(z, 2)
    adhesive = 0.5 * float(np.sum(
        zg * iface.gauss_weights
        * (law.kappa_n * jn ** 2 + law.kappa_t * (jt - pg) ** 2)))
    from .aprim import slip_gradient

    mass = ops.cache.get("slip-mass")
    if mass is None:
        mass = ops.cache["slip-mass"] = interface_mass(iface)
    grad = ops.cache.get("slip-grad")
    if grad is None:
        grad = ops.cache["slip-grad"] = slip_gradient(ops.mesh, law.kappa_g)
    hardening = 0.5 * law.kappa_h * float(pi @ (mass @ pi))
    gradient = 0.5 * float(pi @ (grad @ pi))
    surface = float(np.sum(law.a_0 * (1.0 - z) * iface.lengths))
    return bulk, adhesive + hardening + gradient + surface


def ledger_initial(state: SystemState, scenario, ops: SimOps) -> EnergyLedger:
    bulk, interface = stored_energy(state, scenario, ops)
    return EnergyLedger(
        step=(0,), time=(state.time,),
        bulk_stored=(bulk,), interface_stored=(interface,),
        viscous_cum=(0.0,), delam_cum=(0.0,), plastic_cum=(0.0,),
        work_cum=(0.0,), balance_residual=(0.0,),
    )


def ledger_update(prev: EnergyLedger, report, scenario, ops: SimOps) -> EnergyLedger:
    """Fold one step report into the ledger; pure, returns a new ledger."""
    law = scenario.interface
    state0, state1 = report.state_prev, report.state_next
    tau = scenario.load.step
    du = state1.displacement - state0.displacement
    dz = state1.damage - state0.damage

    viscous = float(du @ (ops.viscosity @ du)) / tau
    if isinstance(law, LebimLaw):
        delam = float(np.sum(report.alpha_used * np.abs(dz) * ops.iface.lengths))
        plastic = 0.0
    else:
        delam = float(np.sum(law.a_1 * np.abs(dz) * ops.iface.lengths))
        dpi = state1.slip - state0.slip
        plastic = law.sigma_t_yield * float(np.sum(np.abs(dpi) * ops.iface.node_weight))

    dw = ops.dmap.values(state1.time) - ops.dmap.values(state0.time)
    work = float(report.reactions @ dw)
    f_now = neumann_vector(ops.mesh, scenario.load, state1.time)
    if f_now.any():
        work += float(f_now @ du)

    bulk, interface = stored_energy(state1, scenario, ops)
    de = (bulk + interface) - (prev.bulk_stored[-1] + prev.interface_stored[-1])
    residual = de + viscous + delam + plastic - work

    k = prev.step[-1] + 1
    return EnergyLedger(
        step=prev.step + (k,),
        time=prev.time + (state1.time,),
        bulk_stored=prev.bulk_stored + (bulk,),
        interface_stored=prev.interface_stored + (interface,),
        viscous_cum=prev.viscous_cum + (prev.viscous_cum[-1] + viscous,),
        delam_cum=prev.delam_cum + (prev.delam_cum[-1] + delam,),
        plastic_cum=prev.plastic_cum + (prev.plastic_cum[-1] + plastic,),
        work_cum=prev.work_cum + (prev.work_cum[-1] + work,),
        balance_residual=prev.balance_residual + (residual,),
    )


@dataclass(frozen=True)
class AmdpAudit:
    """Discrete maximum-dissipation accumulators and their defects.

    The left-hand sides accumulate previous-step driving forces against the
    actual increments; the right-hand sides are the dissipation the flow
    rules claim.  Equality is expected only asymptotically as the time step
    vanishes, so the residuals are reported, not asserted, except as a
    refinement regression.
    """

    z_lhs: float
    z_rhs: float
    pi_lhs: float
    pi_rhs: float
    z_residual_abs: float
    z_residual_rel: float
    pi_residual_abs: float
    pi_residual_rel: float


def amdp_audit(reports, scenario, ops: SimOps) -> AmdpAudit:
    """Evaluate the maximum-dissipation sums over a run's step reports."""
    if not reports:
        raise ValueError("audit needs at least one step report")
    law = scenario.interface
    if not isinstance(law, AprimLaw) or not hasattr(reports[0], "zeta"):
        raise ValueError("audit requires driving-force dumps from the "
                         "plasticity-based stepper")
    lengths = ops.iface.lengths
    weights = ops.iface.node_weight

    xi_prev, zeta_prev = driving_forces(reports[0].state_prev, law, ops.mesh)
    z_lhs = pi_lhs = pi_rhs = 0.0
    for rep in reports:
        dz = rep.state_next.damage - rep.state_prev.damage
        dpi = rep.state_next.slip - rep.state_prev.slip
        z_lhs += float(np.sum(xi_prev * dz * lengths))
        pi_lhs += float(np.sum(zeta_prev * dpi * weights))
        pi_rhs += law.sigma_t_yield * float(np.sum(np.abs(dpi) * weights))
        xi_prev, zeta_prev = rep.xi, rep.zeta

    z0 = reports[0].state_prev.damage
    z_final = reports[-1].state_next.damage
    z_rhs = float(np.sum(law.a_1 * (z_final - z0) * lengths))

    z_abs = abs(z_lhs - z_rhs)
    pi_abs = abs(pi_lhs - pi_rhs)
    z_rel = z_abs / max(abs(z_lhs), abs(z_rhs), 1e-300)
    pi_rel = pi_abs / max(abs(pi_lhs), abs(pi_rhs), 1e-300)
    return AmdpAudit(z_lhs, z_rhs, pi_lhs, pi_rhs, z_abs, z_rel, pi_abs, pi_rel)
