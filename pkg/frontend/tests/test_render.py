from pathlib import Path

import pytest

from vdplots import PlotSpec, RenderError, read_table, render
from vdplots.cli import main

DATA = Path(__file__).parent / "data"

CASES = [
    ("flux", "flux.csv"),
    ("budget", "budget.csv"),
    ("dq", "dq.csv"),
    ("estimates", "estimates.csv"),
    ("khm", "khm.csv"),
]


@pytest.mark.parametrize("kind,name", CASES)
def test_render_each_kind(kind, name, tmp_path):
    out = render(PlotSpec(kind, DATA / name, tmp_path / f"{kind}.png"))
    assert out.exists()
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


@pytest.mark.parametrize("kind,name", CASES)
def test_byte_identical_rerender(kind, name, tmp_path):
    a = render(PlotSpec(kind, DATA / name, tmp_path / "a.png"))
    b = render(PlotSpec(kind, DATA / name, tmp_path / "b.png"))
    assert a.read_bytes() == b.read_bytes()


def test_read_table_skips_comments():
    table = read_table(DATA / "flux.csv")
    assert table.columns[0] == "t"
    assert all(not c.startswith("#") for c in table.columns)


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(RenderError):
        PlotSpec("sparkline", DATA / "flux.csv", tmp_path / "x.png")


def test_empty_csv_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("# config_hash=none\n")
    with pytest.raises(RenderError):
        render(PlotSpec("flux", empty, tmp_path / "x.png"))


def test_missing_columns_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(RenderError, match="missing columns"):
        render(PlotSpec("budget", bad, tmp_path / "x.png"))


def test_cli_success(tmp_path):
    out = tmp_path / "fig.png"
    rc = main(["render", "--kind", "khm", "--in", str(DATA / "khm.csv"), "--out", str(out)])
    assert rc == 0 and out.exists()


def test_cli_error_exits_nonzero(tmp_path):
    rc = main(["render", "--kind", "flux", "--in", str(tmp_path / "nope.csv"),
               "--out", str(tmp_path / "x.png")])
    assert rc == 2


def test_cli_missing_column_exit(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n0,1\n")
    rc = main(["render", "--kind", "flux", "--in", str(bad), "--out", str(tmp_path / "x.png")])
    assert rc == 2


def test_linear_y_flag(tmp_path):
    a = render(PlotSpec("khm", DATA / "khm.csv", tmp_path / "log.png"))
    b = render(PlotSpec("khm", DATA / "khm.csv", tmp_path / "lin.png", logy=False))
    assert a.read_bytes() != b.read_bytes()
    rc = main(["render", "--kind", "khm", "--in", str(DATA / "khm.csv"),
               "--out", str(tmp_path / "cli_lin.png"), "--linear-y"])
    assert rc == 0
    assert (tmp_path / "cli_lin.png").read_bytes() == b.read_bytes()
