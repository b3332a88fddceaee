"""Command-line sweeps, configuration handling and reproducible output."""

from __future__ import annotations

import csv
import io
import json
import math

import pytest

from dutfloquet import cli
from dutfloquet.errors import NumericFailure
from dutfloquet.floquet import rho_3l
from dutfloquet.gvv import Kind, couplings, rho11_analytic, rho11_two_level
from dutfloquet.model import DriveSpec2L, DriveSpec3L


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def _run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_single_step_sweep_equals_library_call(capsys):
    code, out, _ = _run(["sweep", "--steps", "1", "--min", "0.75", "--omega-c", "3",
                         "--methods", "floquet,grwa,gvv", "--jobs", "1"], capsys)
    assert code == 0
    (row,) = _rows(out)
    spec = DriveSpec3L.from_ratios(0.12, 3.0, 0.75)
    rho = rho_3l(spec)
    assert float(row["delta"]) == 0.75
    assert [float(row[f"floquet_rho{s}{s}"]) for s in range(3)] == [float(x) for x in rho]
    assert float(row["gvv_rho11"]) == rho11_analytic(spec, Kind.GVV)
    assert float(row["grwa_rho11"]) == rho11_analytic(spec, Kind.GRWA)


def test_csv_format(tmp_path, capsys):
    out_file = tmp_path / "run.csv"
    assert cli.main(["sweep", "--steps", "3", "--jobs", "1", "-o", str(out_file)]) == 0
    raw = out_file.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    lines = raw.decode("utf-8").splitlines()
    assert lines[0] == "delta,floquet_rho00,floquet_rho11,floquet_rho22"
    assert len(lines) == 4
    assert lines[1].split(",")[0] == "-4"
    # 17 significant digits round-trip exactly
    for value in lines[2].split(",")[1:]:
        assert "%.17g" % float(value) == value


def test_output_independent_of_worker_count(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "--steps", "6", "--min", "0.5", "--max", "1.0", "--methods", "floquet,gvv"]
    assert cli.main(args + ["--jobs", "1", "-o", str(a)]) == 0
    assert cli.main(args + ["--jobs", "2", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert cli.main(args + ["--jobs", "1", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sidecar_reproduces_run(tmp_path):
    first = tmp_path / "first.csv"
    assert cli.main(["compare", "--steps", "4", "--omega-c", "9.5", "--nc", "60", "--window", "10",
                     "--jobs", "1", "-o", str(first)]) == 0
    meta = json.loads((tmp_path / "first.csv.json").read_text())
    assert meta["truncation"] == {"n_c": 60, "q_max": 20, "n_window": 10}
    assert set(meta["method_versions"]) == {"floquet", "grwa", "gvv"}
    assert meta["rows"] == 4 and meta["failed_points"] == 0
    assert {"dutfloquet", "numpy", "scipy", "python"} <= set(meta["versions"])
    second = tmp_path / "second.csv"
    assert cli.main(["rerun", str(tmp_path / "first.csv.json"), "-o", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_compare_duplicate_method_has_zero_deviation(tmp_path):
    out = tmp_path / "c.csv"
    assert cli.main(["compare", "--steps", "3", "--methods", "gvv,gvv", "--jobs", "1",
                     "-o", str(out)]) == 0
    stats = json.loads((tmp_path / "c.csv.json").read_text())["comparison"]
    assert stats == {"gvv_vs_gvv": {"max_abs": 0.0, "l2": 0.0}}


def test_compare_reports_statistics(tmp_path):
    out = tmp_path / "c.csv"
    assert cli.main(["compare", "--steps", "21", "--jobs", "1", "-o", str(out)]) == 0
    stats = json.loads((tmp_path / "c.csv.json").read_text())["comparison"]
    assert set(stats) == {"grwa_vs_floquet", "gvv_vs_floquet"}
    for s in stats.values():
        assert 0 <= s["l2"] <= s["max_abs"] < 0.02


@pytest.mark.parametrize("argv", [
    ["sweep", "--steps", "0"],
    ["sweep", "--min", "2", "--max", "1"],
    ["sweep", "--methods", ""],
    ["sweep", "--methods", "floquet,magic"],
    ["compare", "--methods", "gvv"],
    ["sweep", "--omega-p", "-0.1"],
    ["sweep", "--nosuchflag"],
    ["sweep", "--config", "/nonexistent/file.ini"],
    ["coefficients", "--sweep", "delta"],
])
def test_invalid_configuration_exits_2(argv, capsys):
    code, _, err = _run(argv, capsys)
    assert code == 2
    assert err


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\nomega_c = 9.5\nsteps = 2\nmin = 0.3\nmax = 0.4\nmethods = gvv\n")
    code, out, _ = _run(["sweep", "--config", str(cfg), "--steps", "1", "--jobs", "1"], capsys)
    assert code == 0
    (row,) = _rows(out)
    assert float(row["gvv_rho11"]) == rho11_analytic(DriveSpec3L.from_ratios(0.12, 9.5, 0.3))
    bad = tmp_path / "bad.ini"
    bad.write_text("steps = many\n")
    assert cli.main(["sweep", "--config", str(bad)]) == 2
    unknown = tmp_path / "unknown.ini"
    unknown.write_text("colour = blue\n")
    assert cli.main(["sweep", "--config", str(unknown)]) == 2


def test_failed_point_marked_nan(monkeypatch, tmp_path, capsys):
    def flaky(spec, kind=Kind.GVV, n_window=12, method=None):
        if spec.delta > 0:
            raise NumericFailure("synthetic failure")
        return 0.1

    monkeypatch.setattr(cli, "rho11_analytic", flaky)
    args = ["sweep", "--steps", "3", "--min", "-1", "--max", "1", "--methods", "gvv",
            "--jobs", "1"]
    code, out, err = _run(args, capsys)
    assert code == 0
    rows = _rows(out)
    assert [float(r["gvv_rho11"]) for r in rows[:2]] == [0.1, 0.1]
    assert math.isnan(float(rows[2]["gvv_rho11"]))
    assert "synthetic failure" in err
    code, _, _ = _run(args + ["--strict"], capsys)
    assert code == 1


def test_two_level_sweep(capsys):
    code, out, _ = _run(["two-level", "--steps", "3", "--min", "0", "--max", "2", "--jobs", "1"],
                        capsys)
    assert code == 0
    rows = _rows(out)
    assert list(rows[0]) == ["epsilon_0", "floquet_rho00", "floquet_rho11", "grwa_rho11"]
    for r in rows:
        spec = DriveSpec2L(float(r["epsilon_0"]), 5.0, 1.0, 0.1)
        assert float(r["grwa_rho11"]) == rho11_two_level(spec)
        assert float(r["floquet_rho11"]) == pytest.approx(float(r["grwa_rho11"]), abs=0.02)


def test_coefficients_table(capsys):
    code, out, _ = _run(["coefficients", "--steps", "2", "--min", "3", "--max", "7",
                         "--orders", "0,1", "--jobs", "1"], capsys)
    assert code == 0
    rows = _rows(out)
    assert list(rows[0])[:5] == ["omega_c", "OmegaP_0", "OmegaP_1", "OmegaQ_0", "OmegaQ_1"]
    table = couplings(0.12, 7.0, 80)
    assert float(rows[1]["OmegaP_1"]) == pytest.approx(table.p(1), abs=1e-15)
    assert float(rows[1]["OmegaQ_0"]) == pytest.approx(table.q(0), abs=1e-15)
    # the untruncated square wave has Omega_1^P(7) = Omega_0^P(3)
    assert float(rows[1]["OmegaP_1"]) == pytest.approx(float(rows[0]["OmegaP_0"]), abs=1e-4)


def test_quasienergy_columns(capsys):
    code, out, _ = _run(["quasienergies", "--steps", "2", "--jobs", "1"], capsys)
    assert code == 0
    for r in _rows(out):
        q = [float(r[f"q{i}"]) for i in range(3)]
        assert q == sorted(q)
        assert all(-0.5 <= x < 0.5 for x in q)


def test_two_d_map_ordering(capsys):
    code, out, _ = _run(["map2d", "--steps", "3", "--steps2", "2", "--min2", "1",
                         "--max2", "2", "--jobs", "1"], capsys)
    assert code == 0
    rows = _rows(out)
    assert [(float(r["delta"]), float(r["omega_c"])) for r in rows] == [
        (-4.0, 1.0), (0.0, 1.0), (4.0, 1.0), (-4.0, 2.0), (0.0, 2.0), (4.0, 2.0)]


def test_oracle_method_column(capsys):
    code, out, _ = _run(["sweep", "--steps", "1", "--min", "1.2", "--methods", "floquet,oracle",
                         "--oracle-periods", "300", "--jobs", "1"], capsys)
    assert code == 0
    (row,) = _rows(out)
    assert float(row["oracle_rho11"]) == pytest.approx(float(row["floquet_rho11"]), abs=2e-3)


@pytest.mark.parametrize("name", sorted(cli.PRESETS))
def test_presets_resolve(name):
    command, settings = cli.PRESETS[name]
    cfg = cli.resolve_config(command, settings, {})
    assert cfg["steps"] >= 1 and cfg["methods"]
    assert len(cli.sweep_points(cfg)) == cfg["steps"] * (
        cfg["steps2"] if cfg["sweep"] == "two_d_map" else 1)


def test_fig5_preset_geometry():
    cfg = cli.resolve_config(*cli.PRESETS["fig5a"], {})
    assert (cfg["min"], cfg["max"], cfg["steps"]) == (-4.0, 4.0, 801)
    assert cfg["omega_c"] == 3.0 and cfg["omega_p"] == 0.12 and cfg["quasienergies"]


def test_preset_runs_with_overrides(capsys):
    code, out, _ = _run(["preset", "fig8", "--steps", "2", "--jobs", "1"], capsys)
    assert code == 0
    rows = _rows(out)
    assert len(rows) == 2 and "gvv_rho11" in rows[0]


def test_module_entry_point_version(capsys):
    assert cli.main(["--version"]) == 0
    from dutfloquet import __version__

    assert capsys.readouterr().out.strip() == __version__
