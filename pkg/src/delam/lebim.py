"""Semi-implicit step of the visco-elastic brittle interface model.

Each step does one fractional sweep: the displacement minimizes the
viscosity-regularized incremental energy with the damage frozen at its
previous value, then each segment's damage drops to zero wherever the
stored adhesive energy density reaches the mixity-dependent fracture
energy.  The damage subproblem has an energy linear in the damage with a
norm-type dissipation, so its exact minimizer is bang-bang: a segment
either keeps its damage or loses it entirely, and the explicit threshold
test reproduces that minimizer without a per-segment solve.

Broken segments are not re-solved within the same step; a rupture cascade
resolves across subsequent steps, which is exactly what the fractional
scheme prescribes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import LebimLaw, SystemState
from .fem import SimOps, adhesive_matrix_lebim, build_operators, expand, neumann_vector, partition
from .laws import fracture_energy_for_jump, mixity
from .qp import QpError, QpProblem, QpSolution, WarmStart, solve_qp


class StepError(RuntimeError):
    """Solver failure inside a time step; carries the step index."""

    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step


@dataclass(frozen=True)
class QpSummary:
    iterations: int
    kkt_residual: float
    active_set: tuple[int, ...]

    @classmethod
    def of(cls, sol: QpSolution) -> "QpSummary":
        return cls(sol.iterations, sol.kkt_residual, sol.active_set)


@dataclass(eq=False)
class LebimStepReport:
    state_prev: SystemState
    state_next: SystemState
    newly_broken: tuple[int, ...]
    u_qp: QpSummary
    driving_force: np.ndarray      # per segment: stored density minus a_i
    alpha_used: np.ndarray         # per segment fracture energy at this step
    psi_g: np.ndarray              # per segment mixity angle (nan if undefined)
    reactions: np.ndarray          # forces on the constrained DOFs, end of step
    contact_force: np.ndarray      # nodal normal contact forces (>= 0)


def _contact_forces(ops: SimOps, multipliers: np.ndarray) -> np.ndarray:
    rows = ops.contact_rows
    norms = np.sqrt(np.asarray(rows.multiply(rows).sum(axis=1)).ravel())
    norms[norms == 0.0] = 1.0
    forces = np.zeros(len(ops.iface.node_weight))
    forces[ops.contact_nodes] = multipliers[: rows.shape[0]] / norms
    return forces


def _epoch(ops: SimOps, law: LebimLaw, z: np.ndarray, tau: float):
    """Assembled displacement problem for one damage field; between ruptures
    only the linear term, constraint targets, and warm start change."""
    key = ("lebim-epoch", z.tobytes())
    pack = ops.cache.get(key)
    if pack is None:
        adhesive = adhesive_matrix_lebim(ops.iface, law, z)
        a_ff, a_fc = partition(adhesive, ops.dmap)
        h = (ops.k_ff + a_ff + ops.d_ff / tau).tocsr()
        problem = QpProblem(h, np.zeros(h.shape[0]), ops.contact_rows,
                            np.zeros(ops.contact_rows.shape[0]),
                            factor_cache={})
        rows = ops.contact_rows
        norms = np.sqrt(np.asarray(rows.multiply(rows).sum(axis=1)).ravel())
        norms[norms == 0.0] = 1.0
        pack = ops.cache[key] = (adhesive, a_fc, problem, norms)
    return pack


def step_lebim(state: SystemState, scenario, k: int,
               ops: Optional[SimOps] = None,
               warm_active: tuple[int, ...] = (),
               tol_kkt: float = 1e-8) -> LebimStepReport:
    """Advance the brittle-interface system from step k-1 to step k."""
    law: LebimLaw = scenario.interface
    if not isinstance(law, LebimLaw):
        raise StepError(k, "scenario does not carry a brittle interface law")
    if ops is None:
        ops = build_operators(scenario)
    tau = scenario.load.step
    t = k * tau
    z = state.damage
    u_prev = state.displacement

    adhesive, a_fc, problem, contact_norms = _epoch(ops, law, z, tau)

    w_c = ops.dmap.values(t)
    f_full = neumann_vector(ops.mesh, scenario.load, t)
    visc_pull = (ops.viscosity @ u_prev) / tau
    problem.linear = (-f_full[ops.dmap.free] - visc_pull[ops.dmap.free]
                      + (ops.k_fc + a_fc + ops.d_fc / tau) @ w_c)
    rhs = -(ops.contact_rhs_rows @ w_c) if w_c.size else np.zeros(ops.contact_rows.shape[0])
    problem.ineq_rhs[:] = rhs / contact_norms
    problem.warm_start = WarmStart(u_prev[ops.dmap.free], tuple(warm_active))
    try:
        sol = solve_qp(problem, tol_kkt=tol_kkt)
    except QpError as err:
        raise StepError(k, str(err)) from err

    u = expand(ops.dmap, sol.x, t)
    jn = ops.iface.jump_n_mid @ u
    jt = ops.iface.jump_t_mid @ u

    if getattr(scenario, "lebim_alpha_at", "current") == "previous":
        jn_arg, jt_arg = ops.iface.jump_n_mid @ u_prev, ops.iface.jump_t_mid @ u_prev
    else:
        jn_arg, jt_arg = jn, jt

    n_seg = len(ops.iface.lengths)
    alpha_used = np.empty(n_seg)
    psi = np.full(n_seg, np.nan)
    for s in range(n_seg):
        alpha_used[s] = fracture_energy_for_jump(law, jn_arg[s], jt_arg[s])
        m = mixity(jn[s], jt[s], law.kappa_n, law.kappa_t)
        if m is not None:
            psi[s] = m.psi_g
    density = 0.5 * (law.kappa_n * jn ** 2 + law.kappa_t * jt ** 2)
    driving = density - np.full(n_seg, law.toughness.a_i)

    breaking = (z > 0.0) & (density >= alpha_used)
    z_next = np.where(breaking, 0.0, z)

    reactions = (ops.stiffness @ u + adhesive @ u
                 + (ops.viscosity @ (u - u_prev)) / tau - f_full)[ops.dmap.fixed]

    return LebimStepReport(
        state_prev=state,
        state_next=SystemState(u, z_next, None, t),
        newly_broken=tuple(int(i) for i in np.nonzero(breaking)[0]),
        u_qp=QpSummary.of(sol),
        driving_force=driving,
        alpha_used=alpha_used,
        psi_g=psi,
        reactions=reactions,
        contact_force=_contact_forces(ops, sol.ineq_multipliers),
    )
