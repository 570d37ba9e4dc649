"""Benchmark scenario builders, config loading, and the run driver.

Two shipped benchmarks: a pull-push shear specimen (an aluminium bar glued
to a rigid obstacle over 90% of its bottom side and dragged at its right
edge) and a mixed-mode flexure specimen (two bonded aluminium arms on two
point supports, pushed down at midspan).  A minimal single-segment specimen
backs the closed-form checks.

A run writes delimited artifacts into an output directory: energies.csv,
forces.csv, mixity.csv, snapshots/*.csv, gc_curve.csv, amdp.csv (plasticity
model only), mesh.json, and MANIFEST.json.  Runs are deterministic: the same
scenario produces byte-identical CSV files.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import __version__
from .aprim import AprimStepReport, step_aprim
from .core import (
    AprimLaw,
    BulkMaterial,
    ConstantToughness,
    DirichletRamp,
    HutchinsonSuoToughness,
    InterfaceLaw,
    LebimLaw,
    LoadProgram,
    NeumannRamp,
    PlasticityToughness,
    SystemState,
    validate_scenario,
)
from .energetics import AmdpAudit, EnergyLedger, amdp_audit, ledger_initial, ledger_update
from .fem import SimOps, build_operators
from .laws import fit_lebim_to_aprim, fracture_energy_plasticity, gc_curve, mode_two_trigger
from .lebim import LebimStepReport, StepError, step_lebim
from .mesh import Mesh, make_interface


# paper benchmark constants (SI)
ALUMINIUM = dict(youngs_modulus=70e9, poisson_ratio=0.35)
KAPPA_N = 150e9
KAPPA_T = KAPPA_N / 2
A_I = 187.5
KAPPA_H = KAPPA_T / 9


@dataclass(eq=False)
class Scenario:
    name: str
    mesh: Mesh
    bulk: BulkMaterial
    interface: InterfaceLaw
    load: LoadProgram
    model: str
    fit_scenario: Optional[int] = None
    lebim_alpha_at: str = "current"
    initial_damage: Optional[np.ndarray] = None
    snapshot_steps: tuple[int, ...] = ()
    source_aprim: Optional[AprimLaw] = None


def default_aprim_law(kappa_n: float = KAPPA_N, kappa_t: float = KAPPA_T,
                      a_i: float = A_I, a_0: Optional[float] = None,
                      kappa_h: float = KAPPA_H,
                      yield_fraction: float = 0.79,
                      sigma_t_yield: Optional[float] = None,
                      kappa_g: Optional[float] = None,
                      mean_segment_length: float = 0.0) -> AprimLaw:
    """Paper parameter set; the surface/debonding split of a_i is even by
    default since only the sum enters the dynamics."""
    if a_0 is None:
        a_0 = 0.5 * a_i
    if sigma_t_yield is None:
        sigma_t_yield = yield_fraction * math.sqrt(2.0 * kappa_t * a_i)
    if kappa_g is None:
        # small enough to leave single-segment closed forms untouched,
        # nonzero to keep the slip field length-scale regularized
        kappa_g = 1e-6 * kappa_h * mean_segment_length ** 2
    return AprimLaw(kappa_n=kappa_n, kappa_t=kappa_t, a_0=a_0, a_1=a_i - a_0,
                    kappa_h=kappa_h, kappa_g=kappa_g,
                    sigma_t_yield=sigma_t_yield)


def _interface_for(model: str, fit_scenario: Optional[int], aprim: AprimLaw):
    if model == "aprim":
        return aprim, None
    if fit_scenario in (1, 2):
        return fit_lebim_to_aprim(aprim, fit_scenario), fit_scenario
    return fit_lebim_to_aprim(aprim, 1), 1


def grid_mesh(xs: np.ndarray, ys: np.ndarray, offset: int = 0):
    """Tensor-product triangle grid over explicit coordinate lines.

    Cell diagonals alternate with the cell parity, which removes the
    directional bias of a single-diagonal split and keeps the mesh mirror
    symmetric when the column count is odd.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    nx, ny = xs.size - 1, ys.size - 1
    nodes = np.array([(x, y) for y in ys for x in xs])

    def node_id(ix: int, iy: int) -> int:
        return offset + iy * (nx + 1) + ix

    tris = []
    for iy in range(ny):
        for ix in range(nx):
            a, b = node_id(ix, iy) - offset, node_id(ix + 1, iy) - offset
            c, d = node_id(ix + 1, iy + 1) - offset, node_id(ix, iy + 1) - offset
            if (ix + iy) % 2 == 0:
                tris.append((a, b, c))
                tris.append((a, c, d))
            else:
                tris.append((a, b, d))
                tris.append((b, c, d))
    return nodes, np.array(tris, dtype=int), node_id


def build_pullpush(n: int = 54, tau: float = 5e-3, horizon: float = 1.5,
                   model: str = "lebim", fit_scenario: Optional[int] = 1,
                   bulk_layers: Optional[int] = None,
                   speed: float = 0.3e-3, direction: tuple[float, float] = (1.0, 0.6),
                   yield_fraction: float = 0.79,
                   relaxation_time: Optional[float] = None,
                   glued_fraction: float = 0.9,
                   load_edge: str = "right",
                   snapshot_steps: Optional[tuple[int, ...]] = None) -> Scenario:
    """Pull-push shear specimen: 250 mm x 12.5 mm bar on a rigid obstacle.

    The bar is glued over ``glued_fraction`` of its bottom side starting at
    the end opposite the loaded edge; the unglued strip next to the load is
    simply absent from the interface.  The Dirichlet ramp acts on the whole
    loaded edge in the (1, 0.6) direction (normalized) with |w| growing at
    ``speed``.
    """
    if n < 4:
        raise ValueError("need at least 4 interface elements")
    length, height = 0.250, 0.0125
    glued = glued_fraction * length
    pitch = glued / n
    n_rest = max(1, round((length - glued) / pitch)) if glued < length else 0
    xs_glued = np.linspace(0.0, glued, n + 1)
    if load_edge == "right":
        # unglued strip sits next to the loaded edge
        xs = (np.concatenate([xs_glued,
                              np.linspace(glued, length, n_rest + 1)[1:]])
              if n_rest else xs_glued)
        first_ix = 0
        edge_ix = xs.size - 1
        sign = 1.0
    elif load_edge == "left":
        # mirrored variant used by symmetry checks
        xs = (np.concatenate([np.linspace(0.0, length - glued, n_rest + 1),
                              (length - glued) + xs_glued[1:]])
              if n_rest else xs_glued)
        first_ix = n_rest
        edge_ix = 0
        sign = -1.0
    else:
        raise ValueError("load_edge must be 'left' or 'right'")
    if bulk_layers is None:
        bulk_layers = int(min(4, max(2, round(height / pitch))))
    ys = np.linspace(0.0, height, bulk_layers + 1)
    nodes, tris, node_id = grid_mesh(xs, ys)

    chain = list(range(first_ix, first_ix + n + 1))
    segments = make_interface(nodes, chain)
    edges = np.array([[node_id(edge_ix, iy), node_id(edge_ix, iy + 1)]
                      for iy in range(bulk_layers)])
    mesh = Mesh(nodes, tris, segments, dirichlet_edges={"load": edges})

    d = np.array([direction[0] * sign, direction[1]], dtype=float)
    d /= np.hypot(*d)
    load = LoadProgram(
        dirichlet=(DirichletRamp("load", (d[0], d[1]), speed),),
        horizon=horizon, step=tau)

    if relaxation_time is None:
        relaxation_time = 0.001 if model == "lebim" else 0.0
    bulk = BulkMaterial(relaxation_time=relaxation_time, **ALUMINIUM)
    aprim = default_aprim_law(yield_fraction=yield_fraction,
                              mean_segment_length=pitch)
    law, fit_used = _interface_for(model, fit_scenario, aprim)
    if snapshot_steps is None:
        snapshot_steps = (50, 87, 107, 163, 198, 238, 242, 254)
    return Scenario(
        name="pullpush", mesh=mesh, bulk=bulk, interface=law, load=load,
        model=model, fit_scenario=fit_used, snapshot_steps=tuple(snapshot_steps),
        source_aprim=aprim,
    )


def build_mmf(n: int = 120, tau: float = 5e-3, horizon: float = 2.5,
              model: str = "lebim", fit_scenario: Optional[int] = 1,
              speed: float = 1.0e-3, yield_fraction: float = 0.56,
              relaxation_time: float = 0.0,
              snapshot_steps: Optional[tuple[int, ...]] = None) -> Scenario:
    """Mixed-mode flexure specimen: two bonded arms, three-point flexure.

    120 mm span; a 3 mm arm bonded on top of a 2 mm arm along the midplane.
    The bond starts 37 mm from the left end; the pre-cracked strip keeps its
    contact constraint with zero initial bonding.  Point supports sit 10 mm
    from either end on the bottom face and the midspan top node is pushed
    down at ``speed`` (2.5 mm reached at step 500 with the 5 ms default
    step).  Stations snap to the nearest grid line.
    """
    if n < 20:
        raise ValueError("need at least 20 interface elements")
    span, t_lower, t_upper = 0.120, 0.002, 0.003
    pitch = span / n
    xs = np.linspace(0.0, span, n + 1)
    lo_layers = max(1, round(t_lower / pitch))
    up_layers = max(1, round(t_upper / pitch))
    lo_nodes, lo_tris, lo_id = grid_mesh(xs, np.linspace(0.0, t_lower, lo_layers + 1))
    up_nodes, up_tris, up_id = grid_mesh(
        xs, np.linspace(t_lower, t_lower + t_upper, up_layers + 1),
        offset=lo_nodes.shape[0])
    nodes = np.vstack([lo_nodes, up_nodes])
    tris = np.vstack([lo_tris, up_tris + lo_nodes.shape[0]])

    upper_chain = [up_id(ix, 0) for ix in range(n + 1)]
    lower_chain = [lo_id(ix, lo_layers) for ix in range(n + 1)]
    segments = make_interface(nodes, upper_chain, lower_chain)

    i_crack = round(0.037 / pitch)
    i_sup_l = round(0.010 / pitch)
    i_sup_r = round(0.110 / pitch)
    i_load = round(0.060 / pitch)
    z0 = np.ones(n)
    z0[:i_crack] = 0.0  # pre-crack: debonded but still a unilateral contact

    mesh = Mesh(
        nodes, tris, segments,
        dirichlet_nodes={
            "support_left": np.array([lo_id(i_sup_l, 0)]),
            "support_right": np.array([lo_id(i_sup_r, 0)]),
            "load": np.array([up_id(i_load, up_layers)]),
        },
    )
    load = LoadProgram(
        dirichlet=(
            DirichletRamp("support_left", (0.0, 0.0), 0.0, components=(True, True)),
            DirichletRamp("support_right", (0.0, 0.0), 0.0, components=(False, True)),
            DirichletRamp("load", (0.0, -1.0), speed, components=(False, True)),
        ),
        horizon=horizon, step=tau)

    bulk = BulkMaterial(relaxation_time=relaxation_time, **ALUMINIUM)
    aprim = default_aprim_law(yield_fraction=yield_fraction,
                              mean_segment_length=pitch)
    law, fit_used = _interface_for(model, fit_scenario, aprim)
    if snapshot_steps is None:
        snapshot_steps = (215, 217, 219, 221, 223, 225, 227, 229, 231)
    return Scenario(
        name="mmf", mesh=mesh, bulk=bulk, interface=law, load=load,
        model=model, fit_scenario=fit_used, initial_damage=z0,
        snapshot_steps=tuple(snapshot_steps), source_aprim=aprim,
    )


def build_single_segment(direction: tuple[float, float] = (0.0, 1.0),
                         speed: float = 2e-5,
                         tau: float = 0.01, horizon: float = 2.6,
                         model: str = "lebim",
                         fit_scenario: Optional[int] = 1,
                         length: float = 1e-3, thickness: float = 5e-4,
                         youngs_modulus: float = 7e13,
                         yield_fraction: float = 0.79,
                         kappa_g: float = 0.0,
                         relaxation_time: float = 0.0) -> Scenario:
    """One glued segment on a rigid obstacle, driven through a stiff block.

    The block is three orders stiffer than aluminium so the interface jump
    tracks the applied ramp almost exactly; this is the specimen behind all
    single-segment closed-form checks.
    """
    nodes, tris, node_id = grid_mesh(np.array([0.0, length]),
                                     np.array([0.0, thickness]))
    segments = make_interface(nodes, [0, 1])
    edges = np.array([[node_id(0, 1), node_id(1, 1)]])
    mesh = Mesh(nodes, tris, segments, dirichlet_edges={"load": edges})
    d = np.asarray(direction, dtype=float)
    d = d / np.hypot(*d)
    load = LoadProgram(dirichlet=(DirichletRamp("load", (d[0], d[1]), speed),),
                       horizon=horizon, step=tau)
    bulk = BulkMaterial(youngs_modulus, 0.3, relaxation_time)
    aprim = default_aprim_law(yield_fraction=yield_fraction, kappa_g=kappa_g,
                              mean_segment_length=length)
    law, fit_used = _interface_for(model, fit_scenario, aprim)
    return Scenario(
        name="single-segment", mesh=mesh, bulk=bulk, interface=law, load=load,
        model=model, fit_scenario=fit_used, source_aprim=aprim,
    )


BUILDERS = {
    "pullpush": build_pullpush,
    "mmf": build_mmf,
    "single-segment": build_single_segment,
}


# ---------------------------------------------------------------------------
# run driver


@dataclass(eq=False)
class RunArtifacts:
    out_dir: Path
    completed: bool
    failed_step: Optional[int]
    ledger: EnergyLedger
    reports: list
    audit: Optional[AmdpAudit]
    rupture_step: np.ndarray
    rupture_time: np.ndarray
    rupture_psi: np.ndarray
    mixity_ratio: np.ndarray
    ratio_measured: np.ndarray
    final_state: SystemState
    paths: dict[str, Path]


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) if isinstance(v, float) else str(v)
                             for v in row) + "\n")


def _length_scale(units: str) -> float:
    return 1e3 if units == "mm-mpa" else 1.0


def _snapshot_rows(mesh: Mesh, state: SystemState, scale: float):
    u = state.displacement
    for i, (x, y) in enumerate(mesh.nodes):
        yield (i, float(x) * scale, float(y) * scale,
               float(u[2 * i]) * scale, float(u[2 * i + 1]) * scale)


def _law_echo(law: InterfaceLaw) -> dict:
    if isinstance(law, AprimLaw):
        trig = mode_two_trigger(law)
        return {
            "kind": "aprim", "kappa_n": law.kappa_n, "kappa_t": law.kappa_t,
            "a_0": law.a_0, "a_1": law.a_1, "a_i": law.a_i,
            "kappa_h": law.kappa_h, "kappa_g": law.kappa_g,
            "sigma_t_yield": law.sigma_t_yield,
            "derived": {
                "sigma_t_crit": trig.sigma_t_crit,
                "sigma_n_crit": trig.sigma_n_crit,
                "u_ii": trig.u_ii, "pi_ii": trig.pi_ii,
                "a_ii": trig.a_ii, "ratio": trig.ratio,
            },
            "gc_asymptote_ratio": trig.ratio,
        }
    tough = law.toughness
    echo = {"kind": "lebim", "kappa_n": law.kappa_n, "kappa_t": law.kappa_t,
            "a_i": tough.a_i}
    if isinstance(tough, ConstantToughness):
        echo["toughness"] = {"kind": "constant"}
        echo["gc_asymptote_ratio"] = 1.0
    elif isinstance(tough, HutchinsonSuoToughness):
        echo["toughness"] = {"kind": "hutchinson-suo", "sensitivity": tough.sensitivity}
        echo["gc_asymptote_ratio"] = (
            1.0 + math.tan(min((1 - tough.sensitivity) * math.pi / 2,
                               math.pi / 2 - 1e-9)) ** 2)
    else:
        echo["toughness"] = {
            "kind": "plasticity", "kappa_t": tough.kappa_t,
            "kappa_h": tough.kappa_h, "sigma_t_yield": tough.sigma_t_yield,
        }
        echo["gc_asymptote_ratio"] = (
            tough.a_i * (1 + tough.kappa_t / tough.kappa_h)
            - tough.sigma_t_yield ** 2 / (2 * tough.kappa_h)) / tough.a_i
    return echo


def _manifest(scenario: Scenario, units: str, completed: bool,
              failed_step: Optional[int], n_steps: int,
              snapshots: list[int]) -> dict:
    params = {
        "bulk": {
            "youngs_modulus": scenario.bulk.youngs_modulus,
            "poisson_ratio": scenario.bulk.poisson_ratio,
            "relaxation_time": scenario.bulk.relaxation_time,
        },
        "interface": _law_echo(scenario.interface),
        "load": [
            {"tag": r.tag, "direction": list(r.direction), "speed": r.speed,
             "components": list(r.components)}
            for r in scenario.load.dirichlet
        ],
        "time": {"step": scenario.load.step, "horizon": scenario.load.horizon,
                 "n_steps": n_steps},
        "mesh": {
            "n_nodes": int(scenario.mesh.n_nodes),
            "n_triangles": int(scenario.mesh.triangles.shape[0]),
            "n_segments": len(scenario.mesh.segments),
        },
        "model": scenario.model,
        "fit_scenario": scenario.fit_scenario,
        "lebim_alpha_at": scenario.lebim_alpha_at,
    }
    blob = json.dumps(params, sort_keys=True).encode()
    return {
        "format": "delam-run/1",
        "name": scenario.name,
        "config_hash": hashlib.sha256(blob).hexdigest(),
        "parameters": params,
        "csv_units": ("lengths mm, stresses MPa" if units == "mm-mpa"
                      else "SI (m, s, Pa, N, J)"),
        "units": units,
        "versions": {"delam": __version__},
        "completed": completed,
        "failed_step": failed_step,
        "snapshot_steps": snapshots,
    }


def _write_mesh_json(path: Path, mesh: Mesh) -> None:
    payload = {
        "nodes": [[float(x), float(y)] for x, y in mesh.nodes],
        "triangles": [[int(a) for a in tri] for tri in mesh.triangles],
        "outline_edges": [[int(a), int(b)]
                          for a, b in mesh.boundary_edges_of_triangulation()],
        "interface": [
            {"plus": [int(p) for p in seg.plus_nodes],
             "minus": None if seg.minus_nodes is None
             else [int(m) for m in seg.minus_nodes]}
            for seg in mesh.segments
        ],
    }
    path.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def write_gc_curve(out_dir: Path, law: InterfaceLaw, n_points: int = 361) -> Path:
    """Fracture-energy curve of the scenario's law as (degrees, ratio) CSV."""
    if isinstance(law, AprimLaw):
        tough = PlasticityToughness(law.a_i, law.kappa_t, law.kappa_h,
                                    law.sigma_t_yield)
    else:
        tough = law.toughness
    deg, ratio = gc_curve(tough, n_points)
    path = out_dir / "gc_curve.csv"
    _write_csv(path, ["psi_g_deg", "alpha_over_ai"],
               ((float(a), float(b)) for a, b in zip(deg, ratio)))
    return path


def run(scenario: Scenario, out_dir, tol_kkt: float = 1e-8,
        units: str = "si") -> RunArtifacts:
    """Execute the scenario and write all artifacts; raises on stepper failure
    after flushing what exists, with the failed step recorded in the manifest."""
    report = validate_scenario(scenario)
    if not report.ok:
        raise ValueError("scenario is not runnable:\n" + str(report))
    out = Path(out_dir)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        n_steps = scenario.load.n_steps

    ops = build_operators(scenario)
    mesh = scenario.mesh
    n_seg = len(mesh.segments)
    z0 = (np.ones(n_seg) if scenario.initial_damage is None
          else np.asarray(scenario.initial_damage, dtype=float))
    pi0 = (np.zeros(len(mesh.interface_nodes)) if scenario.model == "aprim"
           else None)
    state = SystemState(np.zeros(mesh.n_dofs), z0, pi0, 0.0)

    snapshots = sorted({k for k in scenario.snapshot_steps if 1 <= k <= n_steps})
    if not snapshots:
        snapshots = sorted({int(k) for k in
                            np.linspace(max(1, n_steps // 8), n_steps, 8)})
    scale = _length_scale(units)

    ledger = ledger_initial(state, scenario, ops)
    reports: list = []
    force_rows = [(0, 0.0, 0.0, 0.0)]
    rupture_step = np.full(n_seg, -1, dtype=int)
    rupture_time = np.full(n_seg, np.nan)
    rupture_psi = np.full(n_seg, np.nan)
    mixity_ratio = np.full(n_seg, np.nan)
    plast_per_area = np.zeros(n_seg)
    hard_at_rupture = np.zeros(n_seg)

    load_tags = [r.tag for r in scenario.load.dirichlet if r.speed != 0.0]
    load_dofs = np.concatenate([ops.dmap.load_dofs[t] for t in load_tags]) \
        if load_tags else ops.dmap.fixed
    fixed_pos = {d: i for i, d in enumerate(ops.dmap.fixed)}
    load_idx = np.array([fixed_pos[d] for d in load_dofs], dtype=int)
    load_is_x = (load_dofs % 2 == 0)

    failed_step: Optional[int] = None
    warm_active: tuple[int, ...] = ()
    a_i = (scenario.interface.a_i if isinstance(scenario.interface, AprimLaw)
           else scenario.interface.toughness.a_i)
    try:
        for k in range(1, n_steps + 1):
            if scenario.model == "lebim":
                rep = step_lebim(state, scenario, k, ops=ops,
                                 warm_active=warm_active, tol_kkt=tol_kkt)
                warm_active = rep.u_qp.active_set
            else:
                rep = step_aprim(state, scenario, k, ops=ops,
                                 warm_active=warm_active, tol_kkt=tol_kkt)
                warm_active = rep.base_active
                # per-segment energy tally runs while the segment is bonded;
                # slip at nodes shared with a live neighbour afterwards
                # belongs to that neighbour
                dpi = np.abs(rep.state_next.slip - rep.state_prev.slip)
                seg_dpi = 0.5 * dpi[mesh.segment_nodes].sum(axis=1) \
                    * scenario.interface.sigma_t_yield
                plast_per_area += np.where(rep.state_prev.damage > 0.0,
                                           seg_dpi, 0.0)
                if rep.newly_broken:
                    pi_now = rep.state_next.slip
                    hard_now = 0.25 * scenario.interface.kappa_h \
                        * (pi_now[mesh.segment_nodes] ** 2).sum(axis=1)
                    for s in rep.newly_broken:
                        hard_at_rupture[s] = hard_now[s]
            reports.append(rep)
            ledger = ledger_update(ledger, rep, scenario, ops)
            state = rep.state_next

            t = k * scenario.load.step
            fx = float(rep.reactions[load_idx[load_is_x]].sum())
            fy = float(rep.reactions[load_idx[~load_is_x]].sum())
            force_rows.append((k, t, fx, fy))
            for s in rep.newly_broken:
                rupture_step[s] = k
                rupture_time[s] = t
                rupture_psi[s] = rep.psi_g[s]
                if scenario.model == "lebim":
                    mixity_ratio[s] = rep.alpha_used[s] / a_i
            if k in snapshots:
                _write_csv(out / "snapshots" / f"snapshot_k{k:06d}.csv",
                           ["node", "x", "y", "ux", "uy"],
                           _snapshot_rows(mesh, state, scale))
    except StepError as err:
        failed_step = err.step
        raise
    finally:
        if scenario.model == "aprim":
            # energy expended per unit area to break each segment, over a_i:
            # surface+debonding a_i, the yield-stress work while bonded, and
            # the hardening energy held at the moment of rupture; overshoots
            # the continuum fracture energy by one step's load increment
            broken = rupture_step >= 0
            ratio_measured = np.full(n_seg, np.nan)
            ratio_measured[broken] = (
                (a_i + plast_per_area[broken] + hard_at_rupture[broken]) / a_i)
            law = scenario.interface
            for s in np.nonzero(broken)[0]:
                mixity_ratio[s] = fracture_energy_plasticity(
                    float(rupture_psi[s]), law.a_i, law.kappa_t,
                    law.kappa_h, law.sigma_t_yield) / law.a_i
        else:
            ratio_measured = mixity_ratio.copy()
        audit = None
        if scenario.model == "aprim" and reports:
            audit = amdp_audit(reports, scenario, ops)
            _write_csv(out / "amdp.csv",
                       ["z_lhs", "z_rhs", "pi_lhs", "pi_rhs",
                        "z_residual_abs", "z_residual_rel",
                        "pi_residual_abs", "pi_residual_rel"],
                       [(audit.z_lhs, audit.z_rhs, audit.pi_lhs, audit.pi_rhs,
                         audit.z_residual_abs, audit.z_residual_rel,
                         audit.pi_residual_abs, audit.pi_residual_rel)])
        _write_csv(out / "energies.csv",
                   ["k", "t", "bulk_stored", "interface_stored", "viscous_cum",
                    "delam_cum", "plastic_cum", "work_cum", "total", "residual"],
                   ((ledger.step[i], ledger.time[i], ledger.bulk_stored[i],
                     ledger.interface_stored[i], ledger.viscous_cum[i],
                     ledger.delam_cum[i], ledger.plastic_cum[i],
                     ledger.work_cum[i], float(ledger.total[i]),
                     ledger.balance_residual[i])
                    for i in range(len(ledger.step))))
        _write_csv(out / "forces.csv",
                   ["k", "t", "f_horizontal", "f_vertical"], force_rows)
        mid = np.array([0.5 * (mesh.nodes[seg.plus_nodes[0]]
                               + mesh.nodes[seg.plus_nodes[1]])
                        for seg in mesh.segments])
        _write_csv(out / "mixity.csv",
                   ["segment", "x_mid", "rupture_step", "rupture_time",
                    "psi_g_deg", "ratio", "ratio_measured"],
                   ((s, float(mid[s, 0]) * scale, int(rupture_step[s]),
                     float(rupture_time[s]),
                     float(np.degrees(rupture_psi[s])), float(mixity_ratio[s]),
                     float(ratio_measured[s]))
                    for s in range(n_seg)))
        write_gc_curve(out, scenario.interface)
        _write_mesh_json(out / "mesh.json", mesh)
        manifest = _manifest(scenario, units, failed_step is None,
                             failed_step, n_steps, snapshots)
        (out / "MANIFEST.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n",
            encoding="utf-8")

    paths = {name: out / name for name in
             ("energies.csv", "forces.csv", "mixity.csv", "gc_curve.csv",
              "mesh.json", "MANIFEST.json")}
    if scenario.model == "aprim":
        paths["amdp.csv"] = out / "amdp.csv"
    return RunArtifacts(
        out_dir=out, completed=failed_step is None, failed_step=failed_step,
        ledger=ledger, reports=reports, audit=audit,
        rupture_step=rupture_step, rupture_time=rupture_time,
        rupture_psi=rupture_psi, mixity_ratio=mixity_ratio,
        ratio_measured=ratio_measured, final_state=state, paths=paths,
    )


# ---------------------------------------------------------------------------
# configuration files


_UNIT_FACTORS = {
    "m": 1.0, "mm": 1e-3, "cm": 1e-2, "um": 1e-6,
    "s": 1.0, "ms": 1e-3,
    "Pa": 1.0, "kPa": 1e3, "MPa": 1e6, "GPa": 1e9,
    "Pa/m": 1.0, "MPa/m": 1e6, "GPa/m": 1e9, "MPa/mm": 1e9, "GPa/mm": 1e12,
    "J/m^2": 1.0, "J/m2": 1.0, "kJ/m^2": 1e3, "kJ/m2": 1e3,
    "m/s": 1.0, "mm/s": 1e-3,
}


def _quantity(value) -> float:
    """A config number is either SI or a [value, unit] pair."""
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        val, unit = value
        try:
            return float(val) * _UNIT_FACTORS[str(unit)]
        except KeyError:
            raise ValueError(f"unknown unit '{unit}'") from None
    raise ValueError(f"cannot parse quantity {value!r}")


def _custom_scenario(cfg: dict) -> Scenario:
    mcfg = cfg["mesh"]
    nodes = np.array(mcfg["nodes"], dtype=float)
    tris = np.array(mcfg["triangles"], dtype=int)
    iface = mcfg.get("interface", {})
    segments = make_interface(nodes, iface["plus_chain"],
                              iface.get("minus_chain"))
    as_edges = lambda d: {k: np.array(v, dtype=int) for k, v in d.items()}
    mesh = Mesh(nodes, tris, segments,
                dirichlet_edges=as_edges(mcfg.get("dirichlet_edges", {})),
                neumann_edges=as_edges(mcfg.get("neumann_edges", {})),
                dirichlet_nodes=as_edges(mcfg.get("dirichlet_nodes", {})))
    bulk_cfg = cfg.get("bulk", {})
    bulk = BulkMaterial(
        youngs_modulus=_quantity(bulk_cfg.get("youngs_modulus", ALUMINIUM["youngs_modulus"])),
        poisson_ratio=float(bulk_cfg.get("poisson_ratio", ALUMINIUM["poisson_ratio"])),
        relaxation_time=_quantity(bulk_cfg.get("relaxation_time", 0.0)))
    icfg = cfg.get("interface", {})
    a_i = _quantity(icfg.get("a_i", A_I))
    kappa_t = _quantity(icfg.get("kappa_t", KAPPA_T))
    sigma = icfg.get("sigma_t_yield")
    sigma_t_yield = (None if sigma is None else _quantity(sigma))
    if sigma_t_yield is None and "yield_fraction" in icfg:
        sigma_t_yield = icfg["yield_fraction"] * math.sqrt(2 * kappa_t * a_i)
    lengths = np.array([s.length for s in segments])
    aprim = default_aprim_law(
        kappa_n=_quantity(icfg.get("kappa_n", KAPPA_N)),
        kappa_t=kappa_t, a_i=a_i,
        a_0=None if "a_0" not in icfg else _quantity(icfg["a_0"]),
        kappa_h=_quantity(icfg.get("kappa_h", KAPPA_H)),
        sigma_t_yield=sigma_t_yield,
        kappa_g=None if "kappa_g" not in icfg else _quantity(icfg["kappa_g"]),
        mean_segment_length=float(lengths.mean()))
    model = cfg.get("model", "lebim")
    fit = cfg.get("fit_scenario", 1)
    fit = None if fit in (None, "none") else int(fit)
    law, fit_used = _interface_for(model, fit, aprim)

    lcfg = cfg["load"]
    ramps = tuple(
        DirichletRamp(r["tag"], tuple(r.get("direction", (0.0, 0.0))),
                      _quantity(r.get("speed", 0.0)),
                      tuple(r.get("components", (True, True))))
        for r in lcfg.get("dirichlet", []))
    neumann = tuple(
        NeumannRamp(r["tag"], tuple(r.get("traction", (0.0, 0.0))),
                    tuple(r.get("rate", (0.0, 0.0))))
        for r in lcfg.get("neumann", []))
    load = LoadProgram(dirichlet=ramps, neumann=neumann,
                       horizon=_quantity(lcfg["horizon"]),
                       step=_quantity(lcfg["step"]))
    damage = mcfg.get("initial_damage")
    return Scenario(
        name=cfg.get("name", "custom"), mesh=mesh, bulk=bulk, interface=law,
        load=load, model=model, fit_scenario=fit_used,
        lebim_alpha_at=cfg.get("lebim_alpha_at", "current"),
        initial_damage=None if damage is None else np.array(damage, dtype=float),
        snapshot_steps=tuple(cfg.get("snapshots", ())), source_aprim=aprim)


def load_config(source: Union[str, Path, dict]) -> Scenario:
    """Build a scenario from a JSON config file, a dict, or a builder name."""
    if isinstance(source, (str, Path)) and str(source) in BUILDERS:
        return BUILDERS[str(source)]()
    if isinstance(source, (str, Path)):
        cfg = json.loads(Path(source).read_text(encoding="utf-8"))
    else:
        cfg = dict(source)
    kind = cfg.get("scenario", "custom")
    if kind == "custom":
        return _custom_scenario(cfg)
    if kind not in BUILDERS:
        raise ValueError(f"unknown scenario '{kind}'")
    kwargs = {}
    for key in ("n", "model", "bulk_layers", "yield_fraction",
                "glued_fraction", "load_edge"):
        if key in cfg:
            kwargs[key] = cfg[key]
    for key in ("tau", "horizon", "speed"):
        if key in cfg:
            kwargs[key] = _quantity(cfg[key])
    if "fit_scenario" in cfg:
        fit = cfg["fit_scenario"]
        kwargs["fit_scenario"] = None if fit in (None, "none") else int(fit)
    if "snapshots" in cfg:
        kwargs["snapshot_steps"] = tuple(cfg["snapshots"])
    if "relaxation_time" in cfg:
        kwargs["relaxation_time"] = _quantity(cfg["relaxation_time"])
    if "direction" in cfg and kind in ("pullpush", "single-segment"):
        kwargs["direction"] = tuple(cfg["direction"])
    scenario = BUILDERS[kind](**kwargs)
    if "lebim_alpha_at" in cfg:
        scenario.lebim_alpha_at = cfg["lebim_alpha_at"]
    return scenario
