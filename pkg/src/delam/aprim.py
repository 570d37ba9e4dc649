"""Semi-implicit step of the plasticity-based rate-independent model.

The displacement and the interfacial plastic slip are updated jointly: they
minimize one convex functional (elastic bulk, damage-weighted adhesive
energy in the effective jump, kinematic hardening, slip-gradient
regularization, and the yield-stress L1 increment cost) with the damage
frozen, subject to the Dirichlet drive and non-penetration.  The slip's L1
term is mass-lumped along the interface polyline, which keeps the split
problem separable and the nodal stick condition exact.  The damage update
is the same bang-bang threshold sweep as in the brittle model, with the
effective jump (jump minus slip) driving it.

Slip on nodes whose adjacent segments are all broken is frozen exactly:
inside the admissible yield window the back-stress left at rupture never
exceeds the yield stress, so freezing agrees with the unconstrained
evolution and avoids dragging dead degrees of freedom through the solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .core import AprimLaw, SystemState
from .fem import (
    SimOps,
    adhesive_blocks_aprim,
    build_operators,
    expand,
    interface_mass,
    interface_operators,
    neumann_vector,
    partition,
)
from .laws import mixity
from .lebim import QpSummary, StepError, _contact_forces
from .qp import QpError, QpProblem, WarmStart, solve_qp, split_l1


def slip_gradient(mesh, kappa_g: float) -> sp.csr_matrix:
    """1D stiffness of the slip gradient along the interface polyline.

    For a piecewise-linear slip s, s'Gs = integral of kappa_g |ds/dl|^2 over
    the interface; ends are natural (zero flux), so nothing is added there.
    Constant slip on a polyline is exactly in the null space.
    """
    p = len(mesh.interface_nodes)
    if kappa_g == 0.0:
        return sp.csr_matrix((p, p))
    rows, cols, vals = [], [], []
    for s, seg in enumerate(mesh.segments):
        if seg.length <= 0.0:
            continue
        i, j = mesh.segment_nodes[s]
        w = kappa_g / seg.length
        rows += [i, i, j, j]
        cols += [i, j, i, j]
        vals += [w, -w, -w, w]
    return sp.coo_matrix((vals, (rows, cols)), shape=(p, p)).tocsr()


@dataclass(eq=False)
class AprimStepReport:
    state_prev: SystemState
    state_next: SystemState
    newly_broken: tuple[int, ...]
    joint_qp: QpSummary
    xi: np.ndarray             # per segment damage driving force
    zeta: np.ndarray           # per node slip driving force, post-damage-update
    zeta_frozen: np.ndarray    # same but with the damage the QP actually saw
    psi_g: np.ndarray
    reactions: np.ndarray
    contact_force: np.ndarray
    base_active: tuple[int, ...]   # active contact rows, for warm starts


def _blocks(ops: SimOps, law: AprimLaw, z: np.ndarray):
    """Damage-dependent adhesive blocks plus the full slip-space operator,
    memoized on the damage field (it only changes at ruptures)."""
    key = ("aprim-blocks", z.tobytes())
    hit = ops.cache.get(key)
    if hit is None:
        mass = ops.cache.get("slip-mass")
        if mass is None:
            mass = ops.cache["slip-mass"] = interface_mass(ops.iface)
        grad = ops.cache.get("slip-grad")
        if grad is None:
            grad = ops.cache["slip-grad"] = slip_gradient(ops.mesh, law.kappa_g)
        a_uu, a_up, a_pp = adhesive_blocks_aprim(ops.iface, law, z)
        hpp_full = (a_pp + law.kappa_h * mass + grad).tocsr()
        hit = ops.cache[key] = (a_uu, a_up, hpp_full)
    return hit


def _slip_energy_gradient(u, pi, a_up, hpp_full):
    """d(stored energy)/d(slip) for the blocks of a given damage field."""
    return a_up.T @ u + hpp_full @ pi


def driving_forces(state: SystemState, law: AprimLaw, mesh):
    """Damage driving force per segment and slip driving force per node.

    The slip force is the negative slip gradient of the stored energy scaled
    by the lumped nodal arclength, i.e. the stress-like quantity whose
    magnitude the flow rule keeps at or below the yield stress.
    """
    iface = interface_operators(mesh)
    grad = slip_gradient(mesh, law.kappa_g)
    u, pi, z = state.displacement, state.slip, state.damage
    jn = iface.jump_n_mid @ u
    jt = iface.jump_t_mid @ u
    pi_mid = iface.slip_mid @ pi
    xi = 0.5 * (law.kappa_n * jn ** 2 + law.kappa_t * (jt - pi_mid) ** 2) - law.a_0
    _, a_up, a_pp = adhesive_blocks_aprim(iface, law, z)
    hpp = a_pp + law.kappa_h * interface_mass(iface) + grad
    zeta = -_slip_energy_gradient(u, pi, a_up, hpp) / iface.node_weight
    return xi, zeta


@dataclass(eq=False)
class _Epoch:
    """Joint split problem assembled for one damage field; between ruptures
    only the linear term, the slip link targets, and the warm start change."""

    live: np.ndarray
    dead: np.ndarray
    a_uu: sp.csr_matrix
    a_up: sp.csr_matrix
    hpp_full: sp.csr_matrix
    a_uu_fc: sp.csr_matrix
    split: object
    contact_norms: np.ndarray
    n_contact: int


def _epoch(ops: SimOps, law: AprimLaw, z: np.ndarray) -> _Epoch:
    key = ("aprim-epoch", z.tobytes())
    pack = ops.cache.get(key)
    if pack is not None:
        return pack
    iface = ops.iface
    free = ops.dmap.free
    n_nodes_if = len(iface.node_weight)
    live_mask = np.zeros(n_nodes_if, dtype=bool)
    for s in range(len(iface.lengths)):
        if z[s] > 0.0:
            live_mask[ops.mesh.segment_nodes[s]] = True
    live = np.nonzero(live_mask)[0]
    dead = np.nonzero(~live_mask)[0]

    a_uu, a_up, hpp_full = _blocks(ops, law, z)
    a_uu_ff, a_uu_fc = partition(a_uu, ops.dmap)
    h_xx = (ops.k_ff + a_uu_ff).tocsr()
    h_xq = a_up[free][:, live].tocsr()
    h_qq = hpp_full[live][:, live].tocsr()
    n_f, n_q = free.size, live.size
    h = sp.bmat([[h_xx, h_xq], [h_xq.T, h_qq]], format="csr")
    contact = sp.hstack([ops.contact_rows,
                         sp.csr_matrix((ops.contact_rows.shape[0], n_q))]).tocsr()
    norms = np.sqrt(np.asarray(contact.multiply(contact).sum(axis=1)).ravel())
    norms[norms == 0.0] = 1.0

    weights = np.concatenate([np.zeros(n_f),
                              law.sigma_t_yield * iface.node_weight[live]])
    joint = QpProblem(h, np.zeros(n_f + n_q), contact,
                      np.zeros(contact.shape[0]))
    split = split_l1(joint, weights, np.zeros(n_f + n_q))
    split.problem.factor_cache = {}
    pack = _Epoch(live=live, dead=dead, a_uu=a_uu, a_up=a_up,
                  hpp_full=hpp_full, a_uu_fc=a_uu_fc, split=split,
                  contact_norms=norms, n_contact=contact.shape[0])
    ops.cache[key] = pack
    return pack


def step_aprim(state: SystemState, scenario, k: int,
               ops: Optional[SimOps] = None,
               warm_active: tuple[int, ...] = (),
               tol_kkt: float = 1e-8) -> AprimStepReport:
    """Advance the plasticity-based system from step k-1 to step k."""
    law: AprimLaw = scenario.interface
    if not isinstance(law, AprimLaw):
        raise StepError(k, "scenario does not carry a plasticity-based interface law")
    if scenario.bulk.relaxation_time != 0.0:
        raise StepError(k, "the plasticity-based step assumes an elastic bulk")
    if ops is None:
        ops = build_operators(scenario)
    iface = ops.iface
    tau = scenario.load.step
    t = k * tau
    z = state.damage
    u_prev = state.displacement
    pi_prev = state.slip
    free, fixed = ops.dmap.free, ops.dmap.fixed

    pack = _epoch(ops, law, z)
    live, dead = pack.live, pack.dead
    a_up, hpp_full = pack.a_up, pack.hpp_full
    n_f, n_q = free.size, live.size
    n_contact = pack.n_contact

    w_c = ops.dmap.values(t)
    f_full = neumann_vector(ops.mesh, scenario.load, t)
    pi_dead = pi_prev[dead]
    g_x = (-f_full[free] + (ops.k_fc + pack.a_uu_fc) @ w_c
           + a_up[free][:, dead] @ pi_dead)
    g_q = (a_up[fixed][:, live].T @ w_c + hpp_full[live][:, dead] @ pi_dead)
    rhs = -(ops.contact_rhs_rows @ w_c) if w_c.size else np.zeros(n_contact)

    # the structure is cached per damage field; refresh the per-step data
    split = pack.split
    problem = split.problem
    n_split = split.split_indices.size
    problem.linear = np.concatenate(
        [g_x, g_q,
         law.sigma_t_yield * iface.node_weight[live],
         law.sigma_t_yield * iface.node_weight[live]])
    problem.eq_rhs = pi_prev[live].copy()
    problem.ineq_rhs[:n_contact] = rhs / pack.contact_norms
    x_aug = np.concatenate([u_prev[free], pi_prev[live],
                            np.zeros(2 * n_split)])
    active = tuple(warm_active) + tuple(
        range(n_contact, n_contact + 2 * n_split))
    problem.warm_start = WarmStart(x_aug, active)
    split.base_point = np.concatenate([np.zeros(n_f), pi_prev[live]])

    try:
        sol = solve_qp(problem, tol_kkt=tol_kkt)
    except QpError as err:
        raise StepError(k, str(err)) from err

    y = split.recover(sol.x)
    u = expand(ops.dmap, y[:n_f], t)
    # the increment cost pins non-flowing slip exactly; drop factorization
    # dust so stick really means stick
    dpi_live = y[n_f:n_f + n_q] - pi_prev[live]
    snap = 1e-14 * max(float(np.abs(y).max(initial=0.0)), 1e-300)
    dpi_live[np.abs(dpi_live) < snap] = 0.0
    pi = pi_prev.copy()
    pi[live] += dpi_live

    jn = iface.jump_n_mid @ u
    jt = iface.jump_t_mid @ u
    pi_mid = iface.slip_mid @ pi
    xi = 0.5 * (law.kappa_n * jn ** 2 + law.kappa_t * (jt - pi_mid) ** 2) - law.a_0
    breaking = (z > 0.0) & (xi >= law.a_1)
    z_next = np.where(breaking, 0.0, z)

    n_seg = len(iface.lengths)
    psi = np.full(n_seg, np.nan)
    for s in range(n_seg):
        m = mixity(jn[s], jt[s], law.kappa_n, law.kappa_t)
        if m is not None:
            psi[s] = m.psi_g

    zeta_frozen = -_slip_energy_gradient(u, pi, a_up, hpp_full) / iface.node_weight
    _, a_up_next, hpp_next = _blocks(ops, law, z_next)
    zeta = -_slip_energy_gradient(u, pi, a_up_next, hpp_next) / iface.node_weight

    reactions = (ops.stiffness @ u + pack.a_uu @ u + a_up @ pi - f_full)[fixed]
    n_contact = ops.contact_rows.shape[0]
    base_active = tuple(i for i in sol.active_set if i < n_contact)

    return AprimStepReport(
        state_prev=state,
        state_next=SystemState(u, z_next, pi, t),
        newly_broken=tuple(int(i) for i in np.nonzero(breaking)[0]),
        joint_qp=QpSummary.of(sol),
        xi=xi,
        zeta=zeta,
        zeta_frozen=zeta_frozen,
        psi_g=psi,
        reactions=reactions,
        contact_force=_contact_forces(ops, sol.ineq_multipliers),
        base_active=base_active,
    )
