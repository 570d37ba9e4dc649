"""Rendering behavior on a real pull-push run directory."""

import shutil

import numpy as np
import pytest

from delam_plot import KINDS, PlotDataError, PlotJob, build_figure, render
from delam_plot.cli import main as cli_main


@pytest.mark.parametrize("kind", KINDS)
def test_each_kind_renders(kind, pullpush_dir, tmp_path):
    path = render(PlotJob(pullpush_dir, kind, tmp_path / f"{kind}.svg"))
    assert path.exists() and path.stat().st_size > 0


def test_snapshot_panels_match_snapshot_files(pullpush_dir):
    fig = build_figure(PlotJob(pullpush_dir, "snapshots"))
    assert len(fig.axes) == 8


def test_magnification_scales_the_overlay(pullpush_dir):
    def deformation_extent(mag):
        fig = build_figure(PlotJob(pullpush_dir, "snapshots", magnification=mag))
        ax = fig.axes[-1]
        ref, deformed = ax.collections[0], ax.collections[1]
        gap = np.array(deformed.get_segments()) - np.array(ref.get_segments())
        return np.abs(gap).max()

    assert deformation_extent(100.0) == pytest.approx(
        20.0 * deformation_extent(5.0), rel=1e-12)


def test_gc_curve_has_dashed_asymptote(pullpush_dir):
    fig = build_figure(PlotJob(pullpush_dir, "gc_curve"))
    ax = fig.axes[0]
    dashed = [ln for ln in ax.lines if ln.get_linestyle() == "--"]
    assert dashed
    assert dashed[0].get_ydata()[0] == pytest.approx(4.3831, abs=1e-9)


def test_mixity_reference_lines(pullpush_dir):
    fig = build_figure(PlotJob(pullpush_dir, "mixity"))
    ax = fig.axes[0]
    levels = sorted(ln.get_ydata()[0] for ln in ax.lines
                    if ln.get_linestyle() in ("--", ":"))
    assert levels[0] == pytest.approx(1.0)
    assert levels[-1] == pytest.approx(4.3831, abs=1e-9)


def test_rendering_is_deterministic(pullpush_dir, tmp_path):
    a = render(PlotJob(pullpush_dir, "energies", tmp_path / "a.svg"))
    b = render(PlotJob(pullpush_dir, "energies", tmp_path / "b.svg"))
    assert a.read_bytes() == b.read_bytes()


def test_missing_column_is_named(pullpush_dir, tmp_path):
    broken = tmp_path / "broken"
    shutil.copytree(pullpush_dir, broken)
    forces = broken / "forces.csv"
    lines = forces.read_text().splitlines()
    lines[0] = "k,t,f_horizontal,f_sideways"
    forces.write_text("\n".join(lines) + "\n")
    with pytest.raises(PlotDataError, match="f_vertical"):
        build_figure(PlotJob(broken, "forces"))


def test_missing_manifest_reported(tmp_path):
    with pytest.raises(PlotDataError, match="MANIFEST"):
        build_figure(PlotJob(tmp_path, "forces"))


def test_unknown_kind_rejected(pullpush_dir):
    with pytest.raises(PlotDataError, match="unknown figure kind"):
        PlotJob(pullpush_dir, "sparklines")


def test_vector_output_is_the_default(pullpush_dir):
    job = PlotJob(pullpush_dir, "forces")
    assert job.out_path.suffix == ".svg"


def test_png_output(pullpush_dir, tmp_path):
    path = render(PlotJob(pullpush_dir, "forces", tmp_path / "f.png",
                          image_format="png"))
    assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_cli_roundtrip(pullpush_dir, tmp_path, capsys):
    out = tmp_path / "cli.svg"
    assert cli_main(["forces", str(pullpush_dir), "--out", str(out)]) == 0
    assert out.exists()
    assert cli_main(["forces", str(tmp_path / "nowhere")]) == 2
