"""Renderer: all six jobs, schema guards, overlay check, determinism."""

import json

import numpy as np
import pytest

from kavg_figures import FIGURES, FigureJob, SchemaError, equilibrium_curve, render


@pytest.mark.parametrize("figure", FIGURES)
def test_renders_png_and_svg(figure, experiment_outputs, tmp_path):
    paths = render(FigureJob(experiment_outputs[figure], figure, tmp_path / figure))
    assert len(paths) == 2
    for p in paths:
        assert p.exists() and p.stat().st_size > 0
    assert {p.suffix for p in paths} == {".png", ".svg"}


def test_inputs_untouched(experiment_outputs, tmp_path):
    src = experiment_outputs["fig5"]
    before = src.read_bytes()
    render(FigureJob(src, "fig5", tmp_path))
    assert src.read_bytes() == before


def test_empty_csv_schema_error_writes_nothing(tmp_path):
    bad = tmp_path / "empty.csv"
    bad.write_text("")
    out = tmp_path / "out"
    with pytest.raises(SchemaError, match="kavg.fig5.v1"):
        render(FigureJob(bad, "fig5", out))
    assert not out.exists()


def test_wrong_schema_version_names_expected(tmp_path):
    bad = tmp_path / "old.csv"
    bad.write_text("# schema=kavg.fig5.v0\nstep,kl,bound\n0,1.0,1.0\n1,0.1,0.2\n")
    with pytest.raises(SchemaError, match="kavg.fig5.v1"):
        render(FigureJob(bad, "fig5", tmp_path / "out"))


def test_fig2_overlay_matches_recomputed_equilibrium(experiment_outputs):
    # the CSV-embedded curve must equal the curve recomputed from the
    # manifest parameters, node-wise to 1e-9
    samples_csv = experiment_outputs["fig2"]
    manifest = json.loads((samples_csv.parent / "manifest.json").read_text())
    x, recomputed = equilibrium_curve(manifest)

    curve_lines = (samples_csv.parent / "fig2_equilibrium.csv").read_text().splitlines()
    rows = [ln.split(",") for ln in curve_lines if ln and not ln.startswith("#")][1:]
    embedded = np.array([float(v) for _, v in rows])
    assert len(embedded) == len(recomputed)
    assert np.max(np.abs(embedded - recomputed)) <= 1e-9


def test_fig2_rejects_curve_inconsistent_with_manifest(experiment_outputs, tmp_path):
    import shutil

    src_dir = experiment_outputs["fig2"].parent
    work = tmp_path / "tampered"
    shutil.copytree(src_dir, work)
    manifest = json.loads((work / "manifest.json").read_text())
    manifest["params"]["sigma"] = 0.2  # curve no longer matches
    (work / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(SchemaError, match="deviates"):
        render(FigureJob(work / "fig2_samples.csv", "fig2", tmp_path / "out"))


def test_deterministic_output(experiment_outputs, tmp_path):
    side_by_side = []
    for d in ("a", "b"):
        paths = render(FigureJob(experiment_outputs["poc"], "poc", tmp_path / d))
        side_by_side.append({p.suffix: p.read_bytes() for p in paths})
    assert side_by_side[0][".svg"] == side_by_side[1][".svg"]
    assert side_by_side[0][".png"] == side_by_side[1][".png"]


def test_cli(experiment_outputs, tmp_path):
    from kavg_figures.cli import main

    code = main(["--job", "fig4", "--in", str(experiment_outputs["fig4"]),
                 "--out", str(tmp_path / "cli")])
    assert code == 0
    assert (tmp_path / "cli" / "fig4.png").exists()
    assert (tmp_path / "cli" / "fig4.svg").exists()


def test_unknown_figure_rejected(tmp_path):
    with pytest.raises(ValueError, match="unknown figure"):
        FigureJob(tmp_path / "x.csv", "fig9", tmp_path)
