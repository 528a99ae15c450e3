"""Tests for the bundle renderer.

The renderer is exercised against real bundles produced by the simulator's
CLI (via subprocess — the CSV files and meta.json are the only interface the
plotting side is allowed to touch).  Rendering must be deterministic at the
byte level and must refuse foreign or truncated inputs without leaving
partial images behind.
"""

from __future__ import annotations

import hashlib
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

PLOTS_DIR = Path(__file__).resolve().parents[1]
RENDER = PLOTS_DIR / "render.py"
sys.path.insert(0, str(PLOTS_DIR))

import render  # noqa: E402
from csvio import RenderError, read_table  # noqa: E402

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _generate(preset: str, out: Path, samples: int, steps: int) -> None:
    cmd = [sys.executable, "-m", "qkelly", "figures", "--preset", preset,
           "--samples", str(samples), "--steps", str(steps), "--out", str(out)]
    subprocess.run(cmd, check=True, capture_output=True, text=True)


@pytest.fixture(scope="session")
def bundles(tmp_path_factory) -> Path:
    """Small real datasets: two histogram presets and the sweep."""
    base = tmp_path_factory.mktemp("bundles")
    _generate("fig5a", base, samples=40, steps=10)
    _generate("fig4a", base, samples=40, steps=10)
    _generate("fig6", base, samples=12, steps=6)
    return base


def _tree_digest(root: Path) -> dict:
    return {p.relative_to(root): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_single_panel_bundle(bundles, tmp_path):
    out = tmp_path / "png"
    rc = render.main(["--preset", "fig5a", "--in", str(bundles), "--out", str(out)])
    assert rc == 0
    files = sorted(p.name for p in out.iterdir())
    assert files == ["fig5a_r.png"]  # meta panels for this preset: r only
    data = (out / "fig5a_r.png").read_bytes()
    assert data.startswith(PNG_MAGIC)
    assert len(data) > 1000


def test_two_panel_bundle(bundles, tmp_path):
    out = tmp_path / "png"
    rc = render.main(["--preset", "fig4a", "--in", str(bundles), "--out", str(out)])
    assert rc == 0
    assert sorted(p.name for p in out.iterdir()) == ["fig4a_mu.png", "fig4a_r.png"]


def test_sweep_bundle(bundles, tmp_path):
    out = tmp_path / "png"
    rc = render.main(["--preset", "fig6", "--in", str(bundles), "--out", str(out)])
    assert rc == 0
    assert sorted(p.name for p in out.iterdir()) == ["fig6_mu.png", "fig6_r.png"]


def test_render_all_finds_every_bundle(bundles, tmp_path):
    out = tmp_path / "png"
    rc = render.main(["--preset", "all", "--in", str(bundles), "--out", str(out)])
    assert rc == 0
    assert sorted(p.name for p in out.iterdir()) == [
        "fig4a_mu.png", "fig4a_r.png", "fig5a_r.png",
        "fig6_mu.png", "fig6_r.png"]


def test_rendering_is_byte_deterministic(bundles, tmp_path):
    # two fresh processes must produce identical PNGs
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        cmd = [sys.executable, str(RENDER), "--preset", "all",
               "--in", str(bundles), "--out", str(out)]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(out)
    a, b = (_tree_digest(o) for o in outs)
    assert set(a) == set(b)
    for name in a:
        assert a[name] == b[name], f"{name} differs between runs"


def test_inputs_are_never_modified(bundles, tmp_path):
    before = _tree_digest(bundles)
    rc = render.main(["--preset", "all", "--in", str(bundles),
                      "--out", str(tmp_path / "png")])
    assert rc == 0
    assert _tree_digest(bundles) == before


def _copy_bundle(bundles: Path, name: str, dest: Path) -> Path:
    target = dest / name
    shutil.copytree(bundles / name, target)
    return target


def test_wrong_format_version_refused(bundles, tmp_path, capsys):
    bundle = _copy_bundle(bundles, "fig5a", tmp_path / "in")
    agg = bundle / "aggregates.csv"
    lines = agg.read_text().splitlines()
    lines[0] = "# qkelly-csv v2 aggregates"
    agg.write_text("\n".join(lines) + "\n")
    rc = render.main(["--preset", "fig5a", "--in", str(tmp_path / "in"),
                      "--out", str(tmp_path / "png")])
    assert rc == 1
    err = capsys.readouterr().err
    assert "unsupported format version v2" in err


def test_foreign_csv_refused(bundles, tmp_path, capsys):
    bundle = _copy_bundle(bundles, "fig5a", tmp_path / "in")
    agg = bundle / "aggregates.csv"
    body = agg.read_text().splitlines()[1:]  # drop the version line entirely
    agg.write_text("\n".join(body) + "\n")
    rc = render.main(["--preset", "fig5a", "--in", str(tmp_path / "in"),
                      "--out", str(tmp_path / "png")])
    assert rc == 1
    assert "version line" in capsys.readouterr().err


def test_missing_column_is_named(bundles, tmp_path, capsys):
    bundle = _copy_bundle(bundles, "fig5a", tmp_path / "in")
    agg = bundle / "aggregates.csv"
    lines = agg.read_text().splitlines()
    header = lines[1].split(",")
    drop = header.index("mean_field_r")
    rewritten = [lines[0]]
    for line in lines[1:]:
        cells = line.split(",")
        del cells[drop]
        rewritten.append(",".join(cells))
    agg.write_text("\n".join(rewritten) + "\n")
    rc = render.main(["--preset", "fig5a", "--in", str(tmp_path / "in"),
                      "--out", str(tmp_path / "png")])
    assert rc == 1
    assert "missing column 'mean_field_r'" in capsys.readouterr().err


def test_empty_table_leaves_no_partial_image(bundles, tmp_path, capsys):
    bundle = _copy_bundle(bundles, "fig5a", tmp_path / "in")
    agg = bundle / "aggregates.csv"
    lines = agg.read_text().splitlines()
    agg.write_text("\n".join(lines[:2]) + "\n")  # version line + header only
    out = tmp_path / "png"
    rc = render.main(["--preset", "fig5a", "--in", str(tmp_path / "in"),
                      "--out", str(out)])
    assert rc == 1
    assert "no data rows" in capsys.readouterr().err
    assert not (out / "fig5a_r.png").exists()


def test_unknown_bundle_lists_what_exists(bundles, tmp_path, capsys):
    rc = render.main(["--preset", "fig9", "--in", str(bundles),
                      "--out", str(tmp_path / "png")])
    assert rc == 1
    err = capsys.readouterr().err
    assert "no such bundle" in err
    assert "fig5a" in err  # points at what is actually there


def test_ragged_row_rejected(bundles, tmp_path):
    bundle = _copy_bundle(bundles, "fig5a", tmp_path / "in")
    agg = bundle / "aggregates.csv"
    with open(agg, "a") as fh:
        fh.write("1,2,3\n")
    with pytest.raises(RenderError, match="cells"):
        read_table(agg)


def test_read_table_reports_kind(bundles):
    table = read_table(bundles / "fig6" / "sweep.csv")
    assert table.kind == "sweep"
    assert table.columns[0] == "family"
    fams = set(table.text_column("family"))
    assert fams == {"squeezed", "coherent", "m2_075", "m2_0875"}
    e0 = table.column("e0")
    assert e0.min() == 50.0
