"""Render figures from a delam run directory.

Pure post-processing: every curve comes from the run's CSV files and every
number appearing in a legend or reference line comes from the MANIFEST.
Nothing is recomputed from the physics, so the figures stay honest about
what the simulation actually wrote.

Images default to SVG with a fixed hash salt and no embedded date, so the
same run directory always renders to the same bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import matplotlib
import numpy as np

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "delam-plot"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

KINDS = ("gc_curve", "snapshots", "forces", "energies", "mixity",
         "load_deflection")


class PlotDataError(ValueError):
    """A required file or column is missing or malformed."""


@dataclass
class PlotJob:
    """One figure request: which kind, from which run, to which file.

    ``magnification`` scales displacements in the snapshot overlays (the
    source figures use 100x for the pull-push bar and 5x for the flexure
    specimen).
    """

    run_dir: Path
    kind: str
    out_path: Optional[Path] = None
    magnification: float = 100.0
    image_format: str = "svg"

    def __post_init__(self):
        self.run_dir = Path(self.run_dir)
        if self.kind not in KINDS:
            raise PlotDataError(f"unknown figure kind '{self.kind}'; "
                                f"expected one of {', '.join(KINDS)}")
        if self.out_path is None:
            self.out_path = self.run_dir / f"{self.kind}.{self.image_format}"
        else:
            self.out_path = Path(self.out_path)


def read_csv(path: Path, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    if not path.exists():
        raise PlotDataError(f"missing file {path}")
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip().split(",")
    data = np.genfromtxt(path, delimiter=",", skip_header=1, ndmin=2)
    if data.shape[0] and data.shape[1] != len(header):
        raise PlotDataError(f"{path} is malformed")
    columns = {name: data[:, i] if data.size else np.zeros(0)
               for i, name in enumerate(header)}
    for name in required:
        if name not in columns:
            raise PlotDataError(f"{path} is missing column '{name}'")
    return columns


def read_manifest(run_dir: Path) -> dict:
    path = run_dir / "MANIFEST.json"
    if not path.exists():
        raise PlotDataError(f"missing file {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def _length_unit(manifest: dict) -> str:
    return "mm" if manifest.get("units") == "mm-mpa" else "m"


def _fig_gc_curve(job: PlotJob, manifest: dict):
    data = read_csv(job.run_dir / "gc_curve.csv", ("psi_g_deg", "alpha_over_ai"))
    iface = manifest.get("parameters", {}).get("interface", {})
    asymptote = iface.get("gc_asymptote_ratio",
                          iface.get("derived", {}).get("ratio"))
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(data["psi_g_deg"], data["alpha_over_ai"], color="tab:blue",
            label="fracture energy")
    if asymptote is not None:
        ax.axhline(asymptote, linestyle="--", color="tab:gray",
                   label=f"pure-shear limit {asymptote:.4g}")
    ax.set_xlabel("mode-mixity angle [deg]")
    ax.set_ylabel("fracture energy / mode-I value")
    ax.set_xlim(0, 90)
    ax.legend(loc="upper left", frameon=False)
    fig.tight_layout()
    return fig


def _outline_segments(mesh: dict, coords: np.ndarray) -> list:
    return [coords[edge] for edge in mesh["outline_edges"]]


def _fig_snapshots(job: PlotJob, manifest: dict):
    mesh_path = job.run_dir / "mesh.json"
    if not mesh_path.exists():
        raise PlotDataError(f"missing file {mesh_path}")
    mesh = json.loads(mesh_path.read_text(encoding="utf-8"))
    nodes = np.array(mesh["nodes"], dtype=float)
    files = sorted((job.run_dir / "snapshots").glob("snapshot_k*.csv"))
    if not files:
        raise PlotDataError(f"no snapshot files in {job.run_dir / 'snapshots'}")

    from matplotlib.collections import LineCollection

    n = len(files)
    fig, axes = plt.subplots(n, 1, figsize=(6.0, 1.1 * n), sharex=True)
    axes = np.atleast_1d(axes)
    unit = _length_unit(manifest)
    for ax, path in zip(axes, files):
        data = read_csv(path, ("node", "x", "y", "ux", "uy"))
        ref = np.column_stack([data["x"], data["y"]])
        disp = np.column_stack([data["ux"], data["uy"]])
        deformed = ref + job.magnification * disp
        ax.add_collection(LineCollection(_outline_segments(mesh, ref),
                                         colors="tab:gray",
                                         linestyles="dashed", linewidths=0.6))
        ax.add_collection(LineCollection(_outline_segments(mesh, deformed),
                                         colors="tab:blue", linewidths=0.9))
        k = int(path.stem.split("snapshot_k")[1])
        ax.set_ylabel(f"k={k}", rotation=0, ha="right", va="center", fontsize=8)
        ax.set_aspect("equal")
        ax.autoscale()
        ax.set_yticks([])
    axes[-1].set_xlabel(f"position [{unit}], displacement magnified "
                        f"{job.magnification:g}x")
    fig.tight_layout()
    return fig


def _fig_forces(job: PlotJob, manifest: dict):
    data = read_csv(job.run_dir / "forces.csv",
                    ("k", "t", "f_horizontal", "f_vertical"))
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(data["t"], data["f_horizontal"], label="horizontal")
    ax.plot(data["t"], data["f_vertical"], label="vertical")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("reaction force [N/m]")
    ax.legend(frameon=False)
    fig.tight_layout()
    return fig


def _fig_energies(job: PlotJob, manifest: dict):
    data = read_csv(job.run_dir / "energies.csv",
                    ("t", "bulk_stored", "interface_stored", "viscous_cum",
                     "delam_cum", "plastic_cum", "total"))
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    ax.plot(data["t"], data["bulk_stored"], label="bulk stored")
    ax.plot(data["t"], data["interface_stored"], label="interface stored")
    if np.any(data["viscous_cum"] > 0):
        ax.plot(data["t"], data["viscous_cum"], label="viscous dissipated")
    ax.plot(data["t"], data["delam_cum"], label="delamination dissipated")
    if np.any(data["plastic_cum"] > 0):
        ax.plot(data["t"], data["plastic_cum"], label="plastic dissipated")
    ax.plot(data["t"], data["total"], color="black", linewidth=1.6,
            label="total")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("energy [J/m]")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return fig


def _fig_mixity(job: PlotJob, manifest: dict):
    data = read_csv(job.run_dir / "mixity.csv", ("segment", "x_mid", "ratio"))
    iface = manifest.get("parameters", {}).get("interface", {})
    asymptote = iface.get("gc_asymptote_ratio",
                          iface.get("derived", {}).get("ratio"))
    ruptured = np.isfinite(data["ratio"])
    fig, ax = plt.subplots(figsize=(5.4, 3.4))
    unit = _length_unit(manifest)
    ax.step(data["x_mid"][ruptured], data["ratio"][ruptured], where="mid",
            color="tab:blue", label="dissipated / mode-I energy")
    ax.axhline(1.0, linestyle=":", color="tab:gray", linewidth=0.8)
    if asymptote is not None:
        ax.axhline(asymptote, linestyle="--", color="tab:red",
                   label=f"pure-shear limit {asymptote:.4g}")
    ax.set_xlabel(f"interface position [{unit}]")
    ax.set_ylabel("mode-mixity ratio")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return fig


def _fig_load_deflection(job: PlotJob, manifest: dict):
    data = read_csv(job.run_dir / "forces.csv",
                    ("k", "t", "f_horizontal", "f_vertical"))
    ramps = [r for r in manifest.get("parameters", {}).get("load", [])
             if r.get("speed")]
    if not ramps:
        raise PlotDataError("manifest has no driven ramp to derive the "
                            "deflection from")
    speed = abs(ramps[0]["speed"])
    deflection = speed * data["t"] * 1e3
    load = np.hypot(data["f_horizontal"], data["f_vertical"])
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(deflection, load, color="tab:blue")
    ax.set_xlabel("imposed displacement [mm]")
    ax.set_ylabel("load magnitude [N/m]")
    fig.tight_layout()
    return fig


_BUILDERS = {
    "gc_curve": _fig_gc_curve,
    "snapshots": _fig_snapshots,
    "forces": _fig_forces,
    "energies": _fig_energies,
    "mixity": _fig_mixity,
    "load_deflection": _fig_load_deflection,
}


def build_figure(job: PlotJob):
    """Build the matplotlib figure for a job without writing it."""
    manifest = read_manifest(job.run_dir)
    return _BUILDERS[job.kind](job, manifest)


def render(job: PlotJob) -> Path:
    """Render a job to its output path; same inputs give identical bytes."""
    fig = build_figure(job)
    try:
        job.out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(job.out_path, format=job.image_format,
                    metadata={"Date": None})
    finally:
        plt.close(fig)
    return job.out_path
