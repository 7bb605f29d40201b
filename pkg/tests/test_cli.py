import math

import pytest

import cli
from phase_catalog import BRAGG_NULL_LABELS, LABELS
from reporting import read_csv
from scenario_config import CONFIG_DIR, reference_scenario


def _label(value):
    # label columns such as "7" read back as numbers
    return value if isinstance(value, str) else str(int(value))


def _run(tmp_path, *argv):
    out = tmp_path / "result.csv"
    code = cli.main([*argv, "--out", str(out), "--log-level", "WARNING"])
    if not out.exists():
        return code, None, []
    header, rows = read_csv(out)
    return code, header, rows


def test_phases_on_reference_scenario(tmp_path, capsys):
    code, header, rows = _run(tmp_path, "phases")
    assert code == cli.EXIT_OK
    assert header == list(cli.PHASES_HEADER)
    assert [_label(row["label"]) for row in rows] == list(LABELS)
    by_label = {_label(row["label"]): row for row in rows}
    assert by_label["7"]["delta_phi_rad"] == 0.0
    assert by_label["m"]["phi_lower_rad"] != 0.0
    assert "delta_phi_rad" in capsys.readouterr().out


def test_phases_need_a_fixed_phase(tmp_path):
    code, _, _ = _run(tmp_path, "phases", "--config", str(CONFIG_DIR / "reference.ini"))
    assert code == cli.EXIT_INVALID


def test_phases_with_phase_override_on_bragg(tmp_path):
    code, _, _ = _run(tmp_path, "phases", "--config", str(CONFIG_DIR / "bragg.ini"))
    assert code == cli.EXIT_INVALID
    code, _, rows = _run(
        tmp_path, "phases", "--config", str(CONFIG_DIR / "bragg.ini"), "--phi-rho", "0.3"
    )
    assert code == cli.EXIT_OK
    by_label = {_label(row["label"]): row for row in rows}
    for label in BRAGG_NULL_LABELS:
        assert by_label[label]["phi_lower_rad"] == 0.0
        assert by_label[label]["phi_upper_rad"] == 0.0
        assert by_label[label]["delta_phi_rad"] == 0.0
    # g0 = 0 leaves only the recoil term of the mean coupling
    nonzero = {label for label, row in by_label.items() if row["phi_lower_rad"] != 0.0}
    assert nonzero == {"1"}


def test_signal_on_reference_scenario(tmp_path):
    code, header, rows = _run(tmp_path, "signal")
    assert code == cli.EXIT_OK
    assert header == list(cli.SIGNAL_HEADER)
    quantities = {row["quantity"]: row for row in rows if row["quantity"] != "correlation"}
    total = quantities["signal_amplitude"]
    assert total["numeric"] > 0.0
    assert total["catalog"] > 0.0
    assert "next_order_ratio" in quantities
    assert {"frequency:compton", "frequency:transition", "frequency:recoil"} <= set(quantities)
    correlations = [row for row in rows if row["quantity"] == "correlation"]
    mm = next(row for row in correlations if row["i"] == "m" and row["j"] == "m")
    assert mm["numeric"] == pytest.approx(mm["catalog"], rel=1e-9)
    assert mm["catalog_reduced"] is not None


def test_signal_bragg_regime(tmp_path):
    code, _, rows = _run(tmp_path, "signal", "--config", str(CONFIG_DIR / "bragg.ini"))
    assert code == cli.EXIT_OK
    quantities = {row["quantity"]: row for row in rows if row["quantity"] != "correlation"}
    regime = quantities["regime:bragg-zero-g"]["catalog"]
    assert regime == pytest.approx(quantities["signal_amplitude"]["numeric"], rel=1e-9)
    assert "next_order_ratio" not in quantities


def test_signal_with_averaged_source_phase(tmp_path):
    code, _, rows = _run(tmp_path, "signal", "--config", str(CONFIG_DIR / "rubidium_raman.ini"))
    assert code == cli.EXIT_OK
    correlations = [row for row in rows if row["quantity"] == "correlation"]
    assert all(row["catalog_reduced"] is None for row in correlations)


def test_scan_one_axis(tmp_path):
    code, header, rows = _run(
        tmp_path, "scan", "--axis", "geometry.T:0.5:1.0:3", "--threads", "2"
    )
    assert code == cli.EXIT_OK
    assert header[:3] == ["geometry.T", "phi_s2_numeric", "phi_s2_catalog"]
    assert header[-1] == "dominant_pairs"
    assert [row["geometry.T"] for row in rows] == [0.5, 0.75, 1.0]
    assert all(row["dominant_pairs"].startswith("m,m") for row in rows)


def test_scan_does_not_depend_on_thread_count(tmp_path):
    outputs = []
    for threads in ("1", "3"):
        out = tmp_path / f"scan_{threads}.csv"
        code = cli.main(
            [
                "scan",
                "--axis", "dilaton.omega_rho:0.5:5:4:log",
                "--axis", "gradiometer.L:10:100:2",
                "--threads", threads,
                "--out", str(out),
                "--log-level", "WARNING",
            ]
        )
        assert code == cli.EXIT_OK
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_scan_signal_vanishes_at_full_periods(tmp_path):
    full = 2.0 * math.pi / reference_scenario().geometry.T
    code, _, rows = _run(tmp_path, "scan", "--axis", f"dilaton.omega_rho:{full!r}:{2.0 * full!r}:3")
    assert code == cli.EXIT_OK
    first, middle, last = rows
    for column in ("phi_s2_numeric", "phi_s2_catalog"):
        assert middle[column] > 0.0
        assert abs(first[column]) < 1e-20 * middle[column]
        assert abs(last[column]) < 1e-20 * middle[column]


def test_scan_keeps_tiny_coupling_ratios():
    base = reference_scenario()
    row = cli._scan_point(base, cli.RATIO_AXES, (1e-16, 1e-16))
    reference = cli._scan_point(base, cli.RATIO_AXES, (1e-16, 1e-30))
    assert row[-1] == pytest.approx(0.25, rel=1e-12)
    assert row[2] != reference[2]
    # the transition pair dominates, so the signal follows the coupling ratio
    assert reference[2] / row[2] == pytest.approx(row[-1], rel=2e-2)


def test_scan_ratio_axes(tmp_path):
    code, header, rows = _run(
        tmp_path,
        "scan",
        "--axis", "ratio.omega_over_omegac:1e-12:1e-10:2:log",
        "--axis", "ratio.deltaeps_over_bareps:0.1:10:2:log",
    )
    assert code == cli.EXIT_OK
    assert header[-1] == "coupling_ratio"
    assert len(rows) == 4
    for row in rows:
        a = row["ratio.omega_over_omegac"]
        b = row["ratio.deltaeps_over_bareps"]
        assert row["coupling_ratio"] == pytest.approx(1.0 / (1.0 + b / a) ** 2, rel=1e-12)


def test_scan_uses_configured_axes(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "DOMINANT_PAIRS", 1)
    text = (CONFIG_DIR / "rubidium_raman.ini").read_text(encoding="utf-8")
    config = tmp_path / "short.ini"
    config.write_text(text.replace("1e-4:1e2:200:log", "1e-2:1e1:3:log"), encoding="utf-8")
    code, header, rows = _run(tmp_path, "scan", "--config", str(config))
    assert code == cli.EXIT_OK
    assert header[0] == "dilaton.omega_rho"
    assert len(rows) == 3
    assert all(";" not in row["dominant_pairs"] for row in rows)


def test_scan_without_axes_is_invalid(tmp_path):
    code, _, _ = _run(tmp_path, "scan")
    assert code == cli.EXIT_INVALID


def test_verify_reports_gates(tmp_path):
    code, header, rows = _run(tmp_path, "verify", "--trials", "2", "--seed", "4")
    assert code == cli.EXIT_OK
    assert header == list(cli.VERIFY_HEADER)
    assert {row["gate"] for row in rows} == {"oracle", "pair", "timescale"}
    assert all(row["status"] == "pass" for row in rows)


def test_verify_with_strict_tolerance(tmp_path):
    code, _, rows = _run(tmp_path, "verify", "--trials", "1", "--tolerance", "1e-30")
    assert code == 2
    assert any(row["status"] == "FAIL" for row in rows)


def test_invalid_inputs(tmp_path, monkeypatch):
    code, _, _ = _run(tmp_path, "signal", "--config", str(tmp_path / "missing.ini"))
    assert code == cli.EXIT_INVALID
    code, _, _ = _run(tmp_path, "verify", "--tolerance", "-1")
    assert code == cli.EXIT_INVALID
    monkeypatch.setenv("DILATON_MONITOR_THREADS", "zero")
    code, _, _ = _run(tmp_path, "scan", "--axis", "geometry.T:0.5:1.0:2")
    assert code == cli.EXIT_INVALID


def test_unwritable_output_is_invalid(tmp_path):
    out = tmp_path / "missing" / "result.csv"
    code = cli.main(["phases", "--out", str(out), "--log-level", "WARNING"])
    assert code == cli.EXIT_INVALID


def test_unexpected_errors_are_not_swallowed(monkeypatch):
    def broken(args):
        raise RuntimeError("bug")

    monkeypatch.setattr(cli, "cmd_phases", broken)
    with pytest.raises(RuntimeError):
        cli.main(["phases", "--log-level", "WARNING"])


def test_log_level_from_environment(monkeypatch):
    monkeypatch.setenv("DILATON_MONITOR_LOG_LEVEL", "debug")
    assert cli._log_level(None) == 10
    assert cli._log_level("ERROR") == 40
    monkeypatch.setenv("DILATON_MONITOR_LOG_LEVEL", "chatty")
    with pytest.raises(cli.ConfigError):
        cli._log_level(None)
