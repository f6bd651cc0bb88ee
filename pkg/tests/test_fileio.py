import csv
import json
import re

import numpy as np
import pytest

from polya_lattice.analysis import MarketSnapshot, capital_curve
from polya_lattice.core import ModelParams
from polya_lattice.fileio import (
    CURVE_HEADER,
    TRAJECTORY_HEADER,
    EmptyInputError,
    read_curve,
    read_snapshot,
    render_curve_svg,
    render_svg,
    render_trajectory_svg,
    write_curve,
    write_report,
    write_snapshot,
    write_trajectory,
)
from polya_lattice.simulate import Mode, ScenarioConfig, run_growth, run_two_phase
from polya_lattice.verify import check_stationarity


@pytest.fixture
def snap():
    return MarketSnapshot("2014-03-01", (("AAPL", 4.7e11), ("MSFT", 3.1e11), ("ZNGA", 2.4e9)))


class TestSnapshotCsv:
    def test_round_trip(self, tmp_path, snap):
        path = tmp_path / "2014-03-01.csv"
        write_snapshot(path, snap)
        assert path.read_text().splitlines()[0] == "ticker,market_cap"
        assert read_snapshot(path) == snap

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(EmptyInputError):
            read_snapshot(path)
        path.write_text("ticker,market_cap\n")
        with pytest.raises(EmptyInputError):
            read_snapshot(path)

    @pytest.mark.parametrize(
        "body, line",
        [
            ("A,1\nB,abc\n", 3),
            ("A,1\nB,-5\n", 3),
            ("A,1,2\n", 2),
            (",7\n", 2),
        ],
    )
    def test_malformed_rows_report_line(self, tmp_path, body, line):
        path = tmp_path / "bad.csv"
        path.write_text("ticker,market_cap\n" + body)
        with pytest.raises(ValueError, match=f":{line}:"):
            read_snapshot(path)

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("symbol,cap\nA,1\n")
        with pytest.raises(ValueError, match="header"):
            read_snapshot(path)

    def test_duplicate_ticker(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("ticker,market_cap\nA,1\nA,2\n")
        with pytest.raises(ValueError, match="duplicate"):
            read_snapshot(path)


class TestCurveCsv:
    def test_schema_and_round_trip(self, tmp_path, snap):
        curve = capital_curve(snap)
        path = tmp_path / "curve.csv"
        write_curve(path, curve)
        rows = list(csv.reader(path.open()))
        assert rows[0] == CURVE_HEADER
        assert [int(r[0]) for r in rows[1:]] == [1, 2, 3]
        back = read_curve(path)
        np.testing.assert_array_equal(back.weights, curve.weights)
        np.testing.assert_array_equal(back.log10_weight, curve.log10_weight)

    def test_reread_curve_replots_identically(self, tmp_path, snap):
        curve = capital_curve(snap)
        write_curve(tmp_path / "c.csv", curve)
        render_curve_svg(curve, tmp_path / "a.svg")
        render_curve_svg(read_curve(tmp_path / "c.csv"), tmp_path / "b.svg")
        assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


class TestTrajectoryCsv:
    def test_schema(self, tmp_path):
        cfg = ScenarioConfig(ModelParams(1, 3), Mode.TWO_PHASE, 20, 10, seed=3, record_every=5)
        traj = run_two_phase(cfg)
        path = tmp_path / "traj.csv"
        write_trajectory(path, traj)
        rows = list(csv.DictReader(path.open()))
        assert list(rows[0]) == TRAJECTORY_HEADER
        assert len(rows) == 3 * len(traj.steps)
        assert {r["phase"] for r in rows if int(r["step"]) <= 10} == {"growth"}
        assert {r["phase"] for r in rows if int(r["step"]) > 10} == {"equilibrium"}
        for r in rows:
            assert int(r["count"]) / sum(
                int(q["count"]) for q in rows if q["step"] == r["step"]
            ) == pytest.approx(float(r["weight"]))


def test_report_jsonl(tmp_path):
    reports = [check_stationarity(ModelParams(1, 2), n) for n in (2, 3)]
    path = tmp_path / "r.jsonl"
    write_report(path, reports)
    lines = [json.loads(l) for l in path.read_text().splitlines()]
    assert len(lines) == 2
    assert list(lines[0]) == ["check", "params", "residual", "argmax_state"]
    assert lines[1]["params"]["n"] == 3


class TestSvg:
    def test_single_point_curve(self, tmp_path):
        path = tmp_path / "one.svg"
        render_svg(capital_curve((7,)), path)
        text = path.read_text()
        circles = re.findall(r"<circle[^>]*>", text)
        assert len(circles) == 1
        assert 'data-log10-rank="0"' in circles[0] and 'data-log10-weight="0"' in circles[0]

    def test_identical_inputs_identical_bytes(self, tmp_path, snap):
        render_svg(capital_curve(snap), tmp_path / "a.svg")
        render_svg(capital_curve(snap), tmp_path / "b.svg")
        assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()

    def test_trajectory_polylines(self, tmp_path):
        traj = run_growth(ScenarioConfig(ModelParams(5, 20), Mode.GROWTH_ONLY, 300, seed=1))
        path = tmp_path / "t.svg"
        render_trajectory_svg(traj, path)
        assert len(re.findall(r"<polyline", path.read_text())) == 20

    def test_two_curves_share_axes(self, tmp_path):
        render_curve_svg([capital_curve((5, 3, 2)), capital_curve((4, 4, 2))], tmp_path / "c.svg", names=["a", "b"])
        text = (tmp_path / "c.svg").read_text()
        assert text.count('class="curve"') == 2
        assert len(re.findall(r"<circle", text)) == 6


def test_failed_write_leaves_no_file(tmp_path, monkeypatch):
    import polya_lattice.fileio as fileio

    def boom(*a, **k):
        raise OSError("disk full")

    monkeypatch.setattr(fileio.os, "replace", boom)
    with pytest.raises(OSError):
        write_curve(tmp_path / "c.csv", capital_curve((1, 2)))
    assert list(tmp_path.iterdir()) == []
