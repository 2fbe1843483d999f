import json
import re
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coherence_cycle import cli, harness
from coherence_cycle.channels import PAULI_LABELS, ChiMatrix, depolarized_cnot
from coherence_cycle.harness import HarnessError, SweepSpec
from coherence_cycle.measures import binary_entropy
from coherence_cycle.reference import load_table


def table_rows(name):
    return [{"key": r.key, "discord": r.discord, "c_final": r.c_final} for r in load_table(name).rows]


# --- reference tables -------------------------------------------------------------

def test_reference_tables():
    s1, s2 = load_table("S1"), load_table("S2")
    assert s1.keys == [2, 5, 8, 11, 14, 17, 20, 23, 26, 29, 32, 35, 38, 41, 44]
    assert s2.keys == [200, 120, 100, 90, 76, 60, 46, 30, 16, 0]
    assert all(r.c_initial is None for r in s1.rows)
    assert all(r.c_initial is not None for r in s2.rows)
    peak = max(s1.rows, key=lambda r: r.discord)
    assert (peak.key, peak.discord, peak.c_final) == (23, 0.823, 0.773)
    row = s2.rows[s2.keys.index(100)]
    assert (row.c_initial, row.discord, row.c_final) == (0.327, 0.293, 0.251)
    np.testing.assert_allclose(s1.ideal()[0], binary_entropy(np.cos(np.radians(4)) ** 2))
    with pytest.raises(KeyError):
        load_table("S3")


# --- sweep ------------------------------------------------------------------------

def test_sweep_spec_validation():
    with pytest.raises(HarnessError):
        SweepSpec(mode="pure", grid=[])
    with pytest.raises(HarnessError):
        SweepSpec(mode="pure", grid=[50])
    with pytest.raises(HarnessError):
        SweepSpec(mode="mixed", grid=[1.5])
    with pytest.raises(HarnessError):
        SweepSpec(mode="mixed", table="S1")
    with pytest.raises(HarnessError):
        SweepSpec(mode="other", grid=[1])
    with pytest.raises(HarnessError):
        SweepSpec(mode="mixed", table="S2", grid=[55]).inputs_keys()


def test_resolve_gate(tmp_path):
    assert harness.resolve_gate("ideal") is None
    np.testing.assert_allclose(harness.resolve_gate("lambda=0.5").entries, depolarized_cnot(0.5).entries)
    np.testing.assert_allclose(harness.resolve_gate("0.7").entries, depolarized_cnot(0.7).entries)
    path = tmp_path / "chi.json"
    depolarized_cnot(0.9).save(path)
    np.testing.assert_allclose(harness.resolve_gate(str(path)).entries, depolarized_cnot(0.9).entries)
    with pytest.raises(HarnessError):
        harness.resolve_gate("lambda=1.5")
    with pytest.raises(HarnessError):
        harness.resolve_gate(str(tmp_path / "missing.json"))
    path.write_text("[]")
    with pytest.raises(HarnessError):
        harness.resolve_gate(str(path))


def test_sweep_ideal_endpoints_and_peak(tmp_path):
    out = tmp_path / "s.csv"
    rows = harness.sweep(SweepSpec(mode="pure", grid=[0, 22.5, 45], out=str(out)))
    np.testing.assert_allclose([r["c_final"] for r in rows], [0, 1, 0], atol=1e-9)
    text = out.read_bytes()
    assert text.splitlines()[0] == b"key,c_initial,discord,qi_rel_ent,c_final,p_plus,p_minus"
    assert b"\r" not in text


def test_sweep_csv_uses_nine_significant_digits():
    rows = [{c: 1 / 3 for c in harness.SWEEP_COLUMNS}]
    line = harness.sweep_csv(rows).splitlines()[1]
    assert line.split(",")[0] == "0.333333333"
    assert harness.fmt(-0.0) == "0"


def test_sweep_table_grids():
    s1 = harness.sweep(SweepSpec(mode="pure", table="S1", gate="lambda=0.87733"))
    assert [r["key"] for r in s1] == load_table("S1").keys
    s2 = harness.sweep(SweepSpec(mode="mixed", table="S2"))
    assert [r["key"] for r in s2] == load_table("S2").keys
    # ideal gate: the mixed grid reproduces each row's C_I
    for r, ref in zip(s2, load_table("S2").rows):
        assert r["c_initial"] == pytest.approx(ref.c_initial, abs=1e-9)


def test_sweep_parallel_matches_serial():
    spec = dict(mode="pure", grid=[3, 17, 31], gate="0.8")
    assert harness.sweep(SweepSpec(**spec)) == harness.sweep(SweepSpec(**spec, workers=2))


def test_sweep_tomographic_mode_is_seeded():
    spec = dict(mode="pure", grid=[23], gate="0.9", shots=2000)
    a = harness.sweep(SweepSpec(**spec, seed=1))
    assert a == harness.sweep(SweepSpec(**spec, seed=1))
    assert a != harness.sweep(SweepSpec(**spec, seed=2))
    exact = harness.sweep(SweepSpec(mode="pure", grid=[23], gate="0.9"))[0]
    assert abs(a[0]["discord"] - exact["discord"]) < 0.05


# --- report -----------------------------------------------------------------------

@pytest.mark.parametrize("name", ["S1", "S2"])
def test_report_against_itself_is_zero(name):
    cmp = harness.report(table_rows(name), load_table(name))
    assert cmp.rms_discord == 0 and cmp.rms_c_final == 0 and cmp.max_deviation == 0
    assert cmp.band_violations == 0 and cmp.passed


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=30, max_size=30))
def test_report_deviations_are_absolute_differences(values):
    sim = table_rows("S1")
    for r, d, c in zip(sim, values[:15], values[15:]):
        r["discord"], r["c_final"] = d, c
    cmp = harness.report(sim, load_table("S1"))
    for row, ref in zip(cmp.rows, load_table("S1").rows):
        assert row["discord_dev"] == abs(row["discord_sim"] - ref.discord)
    expected = np.sqrt(np.mean([(d - r.discord) ** 2 for d, r in zip(values[:15], load_table("S1").rows)]))
    assert cmp.rms_discord == pytest.approx(expected)


def test_report_ideal_sweep_deviation_is_the_experimental_loss():
    rows = harness.sweep(SweepSpec(mode="pure", table="S1"))
    cmp = harness.report(rows, load_table("S1"), max_rms_discord=1, max_rms_c_final=1)
    ideal = load_table("S1").ideal()
    for row, ide in zip(cmp.rows, ideal):
        assert row["discord_sim"] == pytest.approx(ide, abs=1e-3)
    assert cmp.rms_discord > 0.05


def test_report_key_mismatch():
    with pytest.raises(HarnessError):
        harness.report(table_rows("S1")[:-1], load_table("S1"))
    with pytest.raises(HarnessError):
        harness.report(table_rows("S1"), load_table("S2"))


def test_report_thresholds_and_band_flag():
    sim = table_rows("S1")
    sim[0]["discord"] += 0.3  # leaves the band, RMS still small
    cmp = harness.report(sim, load_table("S1"))
    assert cmp.band_violations == 1 and cmp.passed
    assert not harness.report(sim, load_table("S1"), require_band=True).passed
    assert not harness.report(sim, load_table("S1"), max_rms_discord=0.01).passed
    text = cmp.to_csv()
    assert text.splitlines()[0].startswith("key,discord_sim,discord_ref")
    assert "summary,rms_discord" in text


def test_in_band():
    assert harness.in_band(0.5, 0.4, 0.6)
    assert harness.in_band(0.64, 0.4, 0.6)
    assert not harness.in_band(0.66, 0.4, 0.6)
    assert not harness.in_band(0.34, 0.6, 0.4)


# --- plot -------------------------------------------------------------------------

def test_plot_three_points_per_series(tmp_path):
    csv_path, svg_path = tmp_path / "s.csv", tmp_path / "s.svg"
    harness.sweep(SweepSpec(mode="pure", grid=[0, 22.5, 45], out=str(csv_path)))
    harness.plot(csv_path, svg_path, x_label="theta (deg)")
    svg = svg_path.read_text()
    assert svg.startswith("<?xml") and svg.rstrip().endswith("</svg>")
    assert svg.count("<circle") == 9
    assert svg.count("<polyline") == 4  # three series plus the axes
    for name in ("initial coherence", "discord", "final coherence", "theta (deg)"):
        assert name in svg


def test_plot_reference_table_peaks_near_23():
    svg = harness.plot_svg(table_rows("S1"))
    pts = re.search(r'points="([^"]+)" fill="none" stroke="#1f77b4"', svg).group(1)
    ys = [float(p.split(",")[1]) for p in pts.split()]
    assert table_rows("S1")[int(np.argmin(ys))]["key"] == 23


def test_plot_empty_input_writes_nothing(tmp_path):
    csv_path, svg_path = tmp_path / "empty.csv", tmp_path / "out.svg"
    csv_path.write_text("key,discord\n")
    with pytest.raises(HarnessError):
        harness.plot(csv_path, svg_path)
    assert not svg_path.exists()
    csv_path.write_text("key,discord\n1,abc\n")
    with pytest.raises(HarnessError):
        harness.plot(csv_path, svg_path)
    csv_path.write_text("theta,discord\n1,0.5\n")
    with pytest.raises(HarnessError):
        harness.plot(csv_path, svg_path)


def test_outputs_byte_identical_across_runs(tmp_path):
    blobs = []
    for run in range(2):
        csv_path, svg_path = tmp_path / f"{run}.csv", tmp_path / f"{run}.svg"
        harness.sweep(SweepSpec(mode="mixed", grid=[0.1, 0.5, 0.9], gate="0.8", out=str(csv_path)))
        harness.plot(csv_path, svg_path)
        blobs.append((csv_path.read_bytes(), svg_path.read_bytes()))
    assert blobs[0] == blobs[1]


# --- CLI --------------------------------------------------------------------------

def run_cli(*argv):
    return cli.main(list(argv))


def test_cli_cycle_json(tmp_path, capsys):
    out = tmp_path / "c.json"
    assert run_cli("cycle", "--theta", "22.5", "--out", str(out)) == cli.EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data == json.loads(out.read_text())
    assert data["c_final"] == pytest.approx(1.0)
    assert run_cli("cycle", "--mode", "mixed", "--a", "0.3+0.4j", "--basis", "fourier", "--lambda", "0.9") == 0


def test_cli_sweep_report_plot(tmp_path, capsys):
    sim, cmp, svg = (tmp_path / n for n in ("s1.csv", "cmp.csv", "s1.svg"))
    assert run_cli("sweep", "--mode", "pure", "--table", "S1", "--out", str(sim)) == cli.EXIT_OK
    # ideal sweep exceeds the default RMS thresholds against the experimental table
    assert run_cli("report", "--sim", str(sim), "--table", "S1", "--out", str(cmp)) == cli.EXIT_THRESHOLD
    assert "FAIL" in capsys.readouterr().out
    assert run_cli("report", "--sim", str(sim), "--max-rms-discord", "1", "--max-rms-cfinal", "1") == cli.EXIT_OK
    assert run_cli("plot", "--csv", str(sim), "--out", str(svg), "--xlabel", "theta") == cli.EXIT_OK
    assert svg.read_text().count("<circle") == 45


def test_cli_qpt_demo(tmp_path, capsys):
    out = tmp_path / "chi.json"
    assert run_cli("qpt-demo", "--analytic", "--lambda", "0.5", "--out", str(out)) == cli.EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["estimated_fidelity"] == pytest.approx(0.5 + 0.5 / 16, abs=1e-6)
    assert run_cli("cycle", "--chi", str(out), "--tp-tol", "1e-4") == cli.EXIT_OK


def test_cli_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mode": "pure", "grid": "0,45", "lambda": 0.9, "out": str(tmp_path / "o.csv")}))
    assert run_cli("sweep", "--config", str(cfg)) == cli.EXIT_OK
    assert (tmp_path / "o.csv").read_text().count("\n") == 3
    # explicit flags override the file
    assert run_cli("sweep", "--config", str(cfg), "--grid", "10") == cli.EXIT_OK
    assert (tmp_path / "o.csv").read_text().count("\n") == 2


def test_cli_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("sweep", "--bogus")
    assert exc.value.code == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        run_cli()
    assert exc.value.code == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        run_cli("sweep", "--config", str(tmp_path / "nope.json"))
    assert exc.value.code == cli.EXIT_USAGE
    assert run_cli("sweep", "--grid", "1") == cli.EXIT_USAGE
    assert run_cli("sweep", "--grid", "60", "--out", str(tmp_path / "x.csv")) == cli.EXIT_USAGE
    assert run_cli("cycle", "--theta", "90") == cli.EXIT_USAGE
    assert run_cli("cycle", "--chi", str(tmp_path / "missing.json")) == cli.EXIT_USAGE
    assert run_cli("report", "--sim", str(tmp_path / "missing.csv")) == cli.EXIT_USAGE
    assert run_cli("qpt-demo", "--lambda", "2") == cli.EXIT_USAGE


def test_cli_numerical_failure(tmp_path):
    chi = np.zeros((16, 16), dtype=complex)
    i, z = PAULI_LABELS.index("II"), PAULI_LABELS.index("ZI")
    chi[np.ix_([i, z], [i, z])] = 0.5
    path = tmp_path / "bad.json"
    ChiMatrix(chi).save(path)
    assert run_cli("cycle", "--chi", str(path)) == cli.EXIT_NUMERICAL


def test_cli_byte_identical_outputs(tmp_path):
    outs = []
    for run in range(2):
        d = tmp_path / str(run)
        d.mkdir()
        run_cli("sweep", "--mode", "pure", "--grid", "5,23,40", "--lambda", "0.87733", "--shots", "500",
                "--seed", "7", "--out", str(d / "s.csv"))
        run_cli("plot", "--csv", str(d / "s.csv"), "--out", str(d / "s.svg"))
        run_cli("cycle", "--mode", "mixed", "--a", "0.5j", "--out", str(d / "c.json"))
        outs.append([(d / n).read_bytes() for n in ("s.csv", "s.svg", "c.json")])
    assert outs[0] == outs[1]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "coherence_cycle", "cycle", "--theta", "0"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["c_initial"] == 0
