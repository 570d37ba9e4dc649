"""Assembly of bulk and interface operators on P1 triangle meshes.

Bulk strains are constant per triangle, so one-point quadrature is exact.
Interface terms use midpoint quadrature for the piecewise-constant damage
weighting and two-point Gauss quadrature wherever the piecewise-linear slip
couples in, which integrates the products of linear fields exactly.

Assembly is pure given its inputs and sums element contributions in a fixed
order, so repeated calls are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .core import AprimLaw, BulkMaterial, LebimLaw, LoadProgram
from .mesh import Mesh


class AssemblyError(ValueError):
    pass


# ---------------------------------------------------------------------------
# bulk operators


def assemble_stiffness(mesh: Mesh, material: BulkMaterial) -> sp.csr_matrix:
    """Plane-strain elastic stiffness K with u'Ku the doubled strain energy."""
    tris = mesh.triangles
    xy = mesh.nodes[tris]
    x, y = xy[:, :, 0], xy[:, :, 1]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0])
                  - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    scale = max(float(np.abs(mesh.nodes).max(initial=0.0)), 1.0)
    bad = np.nonzero(area <= 1e-14 * scale * scale)[0]
    if bad.size:
        raise AssemblyError(f"triangle {int(bad[0])} is degenerate")

    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    m = tris.shape[0]
    bmat = np.zeros((m, 3, 6))
    bmat[:, 0, 0::2] = b
    bmat[:, 1, 1::2] = c
    bmat[:, 2, 0::2] = c
    bmat[:, 2, 1::2] = b
    bmat /= (2.0 * area)[:, None, None]

    cv = material.stiffness_voigt()
    ke = np.einsum("mki,kl,mlj,m->mij", bmat, cv, bmat, area)

    dofs = np.empty((m, 6), dtype=int)
    dofs[:, 0::2] = 2 * tris
    dofs[:, 1::2] = 2 * tris + 1
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    k = sp.coo_matrix((ke.ravel(), (rows, cols)),
                      shape=(mesh.n_dofs, mesh.n_dofs)).tocsr()
    return k


def assemble_viscosity(mesh: Mesh, material: BulkMaterial) -> sp.csr_matrix:
    """Kelvin-Voigt viscosity matrix, exactly relaxation_time times K."""
    return material.relaxation_time * assemble_stiffness(mesh, material)


# ---------------------------------------------------------------------------
# interface operators


_GAUSS2 = (0.5 * (1.0 - 1.0 / np.sqrt(3.0)), 0.5 * (1.0 + 1.0 / np.sqrt(3.0)))


@dataclass(eq=False)
class InterfaceOperators:
    """Sparse maps from DOF/slip vectors to jump and slip values on the interface.

    ``jump_*_mid`` evaluate at segment midpoints (one row per segment),
    ``jump_*_gauss`` at the two Gauss points per segment, and
    ``jump_*_nodes`` at the interface nodes (one row per node, duplicate
    endpoint rows merged).  ``node_weight`` carries the lumped arclength
    measure of each interface node.
    """

    jump_n_mid: sp.csr_matrix
    jump_t_mid: sp.csr_matrix
    jump_n_gauss: sp.csr_matrix
    jump_t_gauss: sp.csr_matrix
    jump_n_nodes: sp.csr_matrix
    jump_t_nodes: sp.csr_matrix
    slip_mid: sp.csr_matrix
    slip_gauss: sp.csr_matrix
    gauss_weights: np.ndarray
    lengths: np.ndarray
    node_weight: np.ndarray
    node_normal: np.ndarray
    node_tangent: np.ndarray


def _jump_row(seg, shapes, direction, cols, vals):
    for a, n in enumerate(shapes):
        p = seg.plus_nodes[a]
        cols.extend((2 * p, 2 * p + 1))
        vals.extend((-n * direction[0], -n * direction[1]))
        if seg.minus_nodes is not None:
            q = seg.minus_nodes[a]
            cols.extend((2 * q, 2 * q + 1))
            vals.extend((n * direction[0], n * direction[1]))


def interface_operators(mesh: Mesh) -> InterfaceOperators:
    segs = mesh.segments
    s = len(segs)
    p = len(mesh.interface_nodes)
    n_dofs = mesh.n_dofs

    def build(points):
        rows_n, rows_t, rows_s = [], [], []
        for seg_idx, seg in enumerate(segs):
            for shapes in points:
                cn, vn = [], []
                _jump_row(seg, shapes, seg.normal, cn, vn)
                rows_n.append((cn, vn))
                ct, vt = [], []
                _jump_row(seg, shapes, seg.tangent, ct, vt)
                rows_t.append((ct, vt))
                rows_s.append((list(mesh.segment_nodes[seg_idx]), list(shapes)))
        return rows_n, rows_t, rows_s

    def to_csr(rows, width):
        data, ri, ci = [], [], []
        for r, (cols, vals) in enumerate(rows):
            ri.extend([r] * len(cols))
            ci.extend(cols)
            data.extend(vals)
        return sp.coo_matrix((data, (ri, ci)), shape=(len(rows), width)).tocsr()

    mid_n, mid_t, mid_s = build([(0.5, 0.5)])
    g_n, g_t, g_s = build([(1.0 - _GAUSS2[0], _GAUSS2[0]),
                           (1.0 - _GAUSS2[1], _GAUSS2[1])])

    lengths = np.array([seg.length for seg in segs])
    gauss_weights = np.repeat(lengths * 0.5, 2)

    # nodal frames: average of the adjacent segment frames (identical for
    # straight polylines, which is all the shipped scenarios use)
    node_normal = np.zeros((p, 2))
    node_tangent = np.zeros((p, 2))
    node_weight = np.zeros(p)
    for seg_idx, seg in enumerate(segs):
        for a in (0, 1):
            i = mesh.segment_nodes[seg_idx, a]
            node_normal[i] += seg.normal
            node_tangent[i] += seg.tangent
            node_weight[i] += 0.5 * seg.length
    for arr in (node_normal, node_tangent):
        norms = np.hypot(arr[:, 0], arr[:, 1])
        norms[norms == 0.0] = 1.0
        arr /= norms[:, None]

    rows_nn, rows_nt = [], []
    for i in range(p):
        plus = int(mesh.interface_nodes[i])
        minus = int(mesh.minus_interface_nodes[i])
        for rows, d in ((rows_nn, node_normal[i]), (rows_nt, node_tangent[i])):
            cols = [2 * plus, 2 * plus + 1]
            vals = [-d[0], -d[1]]
            if minus >= 0:
                cols += [2 * minus, 2 * minus + 1]
                vals += [d[0], d[1]]
            rows.append((cols, vals))

    return InterfaceOperators(
        jump_n_mid=to_csr(mid_n, n_dofs),
        jump_t_mid=to_csr(mid_t, n_dofs),
        jump_n_gauss=to_csr(g_n, n_dofs),
        jump_t_gauss=to_csr(g_t, n_dofs),
        jump_n_nodes=to_csr(rows_nn, n_dofs),
        jump_t_nodes=to_csr(rows_nt, n_dofs),
        slip_mid=to_csr(mid_s, p),
        slip_gauss=to_csr(g_s, p),
        gauss_weights=gauss_weights,
        lengths=lengths,
        node_weight=node_weight,
        node_normal=node_normal,
        node_tangent=node_tangent,
    )


def adhesive_matrix_lebim(ops: InterfaceOperators, law: LebimLaw,
                          z: np.ndarray) -> sp.csr_matrix:
    """Damage-weighted interface stiffness, midpoint quadrature per segment."""
    wn = sp.diags(z * ops.lengths * law.kappa_n)
    wt = sp.diags(z * ops.lengths * law.kappa_t)
    a = ops.jump_n_mid.T @ wn @ ops.jump_n_mid
    a = a + ops.jump_t_mid.T @ wt @ ops.jump_t_mid
    return a.tocsr()


def adhesive_blocks_aprim(ops: InterfaceOperators, law: AprimLaw, z: np.ndarray):
    """Joint (u, slip) adhesive energy blocks, two-point Gauss quadrature.

    Energy = 1/2 u'A_uu u + u'A_up s + 1/2 s'A_pp s for slip vector s.
    """
    zg = np.repeat(z, 2) * ops.gauss_weights
    wn = sp.diags(zg * law.kappa_n)
    wt = sp.diags(zg * law.kappa_t)
    a_uu = (ops.jump_n_gauss.T @ wn @ ops.jump_n_gauss
            + ops.jump_t_gauss.T @ wt @ ops.jump_t_gauss).tocsr()
    a_up = (-ops.jump_t_gauss.T @ wt @ ops.slip_gauss).tocsr()
    a_pp = (ops.slip_gauss.T @ wt @ ops.slip_gauss).tocsr()
    return a_uu, a_up, a_pp


def interface_mass(ops: InterfaceOperators) -> sp.csr_matrix:
    """Consistent mass of the interface slip space (arclength measure)."""
    w = sp.diags(ops.gauss_weights)
    return (ops.slip_gauss.T @ w @ ops.slip_gauss).tocsr()


def assemble_adhesive(mesh: Mesh, law, z: np.ndarray,
                      pi: Optional[np.ndarray] = None):
    """Adhesive contribution as (matrix, linear term) in the displacement DOFs.

    For the brittle law the linear term is zero; for the plasticity-based law
    a given slip field contributes linearly through the coupling block.
    """
    ops = interface_operators(mesh)
    z = np.asarray(z, dtype=float)
    if isinstance(law, LebimLaw):
        return adhesive_matrix_lebim(ops, law, z), np.zeros(mesh.n_dofs)
    a_uu, a_up, _ = adhesive_blocks_aprim(ops, law, z)
    lin = a_up @ (np.zeros(a_up.shape[1]) if pi is None else np.asarray(pi, dtype=float))
    return a_uu, lin


def recover_tractions(state, law, mesh: Mesh,
                      contact_pressure: Optional[np.ndarray] = None):
    """Adhesive tractions (T_n, T_t) [Pa] at segment midpoints.

    Evaluated from the interface constitutive law; traction equilibrium makes
    this coincide with the bulk traction in the continuum limit.  A contact
    pressure (per segment, non-negative) recovered from the solver can be
    passed to include the Signorini reaction on closed segments.
    """
    ops = interface_operators(mesh)
    u = state.displacement
    jn = ops.jump_n_mid @ u
    jt = ops.jump_t_mid @ u
    z = state.damage
    if isinstance(law, AprimLaw):
        pi_mid = ops.slip_mid @ state.slip
        t_t = z * law.kappa_t * (jt - pi_mid)
    else:
        t_t = z * law.kappa_t * jt
    t_n = z * law.kappa_n * jn
    if contact_pressure is not None:
        t_n = t_n - np.asarray(contact_pressure, dtype=float)
    return t_n, t_t


# ---------------------------------------------------------------------------
# Dirichlet bookkeeping


@dataclass(eq=False)
class DirichletMap:
    """Constrained DOFs with ramp velocities; values at time t are velocity*t."""

    fixed: np.ndarray
    velocity: np.ndarray
    free: np.ndarray
    n_dofs: int
    load_dofs: dict[str, np.ndarray]

    def values(self, t: float) -> np.ndarray:
        return self.velocity * t


def dirichlet_map(mesh: Mesh, load: LoadProgram) -> DirichletMap:
    assign: dict[int, float] = {}
    load_dofs: dict[str, list[int]] = {}
    for ramp in load.dirichlet:
        nodes: set[int] = set()
        if ramp.tag in mesh.dirichlet_edges:
            nodes.update(int(n) for n in mesh.dirichlet_edges[ramp.tag].ravel())
        if ramp.tag in mesh.dirichlet_nodes:
            nodes.update(int(n) for n in mesh.dirichlet_nodes[ramp.tag].ravel())
        if not nodes:
            raise AssemblyError(f"Dirichlet tag '{ramp.tag}' matches no nodes")
        vel = np.asarray(ramp.direction, dtype=float) * ramp.speed
        group = []
        for node in sorted(nodes):
            for comp in (0, 1):
                if not ramp.components[comp]:
                    continue
                dof = 2 * node + comp
                if dof in assign and assign[dof] != vel[comp]:
                    raise AssemblyError(
                        f"DOF {dof} is constrained twice with different ramps")
                assign[dof] = vel[comp]
                group.append(dof)
        load_dofs[ramp.tag] = group
    fixed = np.array(sorted(assign), dtype=int)
    velocity = np.array([assign[d] for d in fixed])
    mask = np.ones(mesh.n_dofs, dtype=bool)
    mask[fixed] = False
    free = np.nonzero(mask)[0]
    return DirichletMap(fixed, velocity, free, mesh.n_dofs,
                        {k: np.array(v, dtype=int) for k, v in load_dofs.items()})


def neumann_vector(mesh: Mesh, load: LoadProgram, t: float) -> np.ndarray:
    """Consistent nodal loads of the boundary tractions at time t."""
    f = np.zeros(mesh.n_dofs)
    for ramp in load.neumann:
        edges = mesh.neumann_edges.get(ramp.tag)
        if edges is None:
            raise AssemblyError(f"Neumann tag '{ramp.tag}' matches no edges")
        traction = ramp.value(t)
        for a, b in edges:
            ell = float(np.hypot(*(mesh.nodes[b] - mesh.nodes[a])))
            for node in (a, b):
                f[2 * node:2 * node + 2] += 0.5 * ell * traction
    return f


def partition(matrix: sp.spmatrix, dmap: DirichletMap):
    """Split a symmetric operator into free-free and free-fixed blocks."""
    m = sp.csr_matrix(matrix)
    return m[dmap.free][:, dmap.free].tocsr(), m[dmap.free][:, dmap.fixed].tocsr()


def expand(dmap: DirichletMap, x_free: np.ndarray, t: float) -> np.ndarray:
    u = np.zeros(dmap.n_dofs)
    u[dmap.free] = x_free
    u[dmap.fixed] = dmap.values(t)
    return u


# ---------------------------------------------------------------------------
# per-scenario operator cache


@dataclass(eq=False)
class SimOps:
    """Everything assembled once per scenario: bulk matrices, interface maps,
    Dirichlet partition, and contact constraint rows (free columns only).

    ``cache`` memoizes damage-dependent assembled structures; the damage
    field only changes at rupture events, so steppers reuse one structure
    across the steps in between.
    """

    mesh: Mesh
    dmap: DirichletMap
    stiffness: sp.csr_matrix
    viscosity: sp.csr_matrix
    iface: InterfaceOperators
    k_ff: sp.csr_matrix
    k_fc: sp.csr_matrix
    d_ff: sp.csr_matrix
    d_fc: sp.csr_matrix
    contact_rows: sp.csr_matrix
    contact_rhs_rows: sp.csr_matrix
    contact_nodes: np.ndarray
    cache: dict = field(default_factory=dict)


def build_operators(scenario) -> SimOps:
    mesh: Mesh = scenario.mesh
    dmap = dirichlet_map(mesh, scenario.load)
    k = assemble_stiffness(mesh, scenario.bulk)
    d = scenario.bulk.relaxation_time * k
    iface = interface_operators(mesh)
    k_ff, k_fc = partition(k, dmap)
    d_ff, d_fc = partition(d, dmap)
    rows = iface.jump_n_nodes
    free_part = rows[:, dmap.free].tocsr()
    # a contact row on a fully prescribed node has no unknowns; the drive
    # itself decides that gap, so the row leaves the QP
    keep = np.nonzero(np.diff(free_part.indptr) > 0)[0]
    return SimOps(
        mesh=mesh,
        dmap=dmap,
        stiffness=k,
        viscosity=d,
        iface=iface,
        k_ff=k_ff,
        k_fc=k_fc,
        d_ff=d_ff,
        d_fc=d_fc,
        contact_rows=free_part[keep],
        contact_rhs_rows=rows[:, dmap.fixed].tocsr()[keep],
        contact_nodes=keep,
    )
