import json
import math

import pytest
import yaml

from vortexsheet.cli import main
from vortexsheet.runio import (
    compare_runs,
    execute,
    read_manifest,
    read_table,
    verify_manifest,
    write_table,
)
from vortexsheet.scenarios import (
    ScenarioError,
    load_scenario,
    packaged_scenarios,
    scenario_from_dict,
    write_scenario,
)


def minimal_amplitude_dict(name="tiny", n=32, t_end=0.05, **integrator):
    base = {"t_end": t_end, "dt_fixed": 0.01, "strip_floor": 0.0}
    base.update(integrator)
    return {
        "name": name,
        "mode": "amplitude_only",
        "resolution": n,
        "amplitude": {
            "background": 0.0,
            "profile": {"kind": "modes", "modes": [{"k": 1, "amp": 1.0}]},
        },
        "integrator": base,
    }


def write_config(tmp_path, data, name="s.yaml"):
    p = tmp_path / name
    with open(p, "w") as fh:
        yaml.safe_dump(data, fh)
    return p


class TestLoadScenario:
    def test_all_packaged_scenarios_load(self):
        shipped = packaged_scenarios()
        assert len(shipped) >= 10
        for name, path in shipped.items():
            s = load_scenario(path)
            assert s.name == name

    def test_flat_sheet_sample(self):
        s = load_scenario(packaged_scenarios()["flat_sheet_cosine"])
        assert s.mode == "full_sheet"
        assert s.resolution == 128
        assert s.curve == {"kind": "flat"}

    def test_rejects_nonzero_mean_profile(self, tmp_path):
        data = minimal_amplitude_dict()
        data["amplitude"]["profile"]["modes"] = [{"k": 0, "amp": 1.0}, {"k": 1, "amp": 1.0}]
        with pytest.raises(ScenarioError, match="mean-zero violated") as exc:
            load_scenario(write_config(tmp_path, data))
        assert exc.value.invariant
        assert "6.28" in str(exc.value)  # the offending integral, 2 pi

    def test_rejects_odd_resolution(self, tmp_path):
        data = minimal_amplitude_dict(n=127)
        with pytest.raises(ScenarioError, match="resolution"):
            load_scenario(write_config(tmp_path, data))

    def test_rejects_unknown_field(self, tmp_path):
        data = minimal_amplitude_dict()
        data["frobnicate"] = 1
        with pytest.raises(ScenarioError, match="unknown field"):
            load_scenario(write_config(tmp_path, data))

    def test_rejects_unparseable_file(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("mode: [unclosed\n")
        with pytest.raises(ScenarioError, match="parse"):
            load_scenario(p)

    def test_rejects_degenerate_initial_curve(self, tmp_path):
        data = {
            "name": "degenerate",
            "mode": "full_sheet",
            "resolution": 128,
            "amplitude": {"profile": {"kind": "modes", "modes": [{"k": 1, "amp": 1.0}]}},
            "curve": {
                "kind": "modes",
                "modes": [{"k": 1, "amp1": 0.95, "phase1": math.pi / 2}],
            },
            "integrator": {"t_end": 0.1, "arc_chord_floor": 1.0e-2},
        }
        with pytest.raises(ScenarioError, match="arc-chord") as exc:
            load_scenario(write_config(tmp_path, data))
        assert exc.value.invariant

    def test_round_trip(self, tmp_path):
        original = load_scenario(packaged_scenarios()["amplitude_cosine"])
        p = write_scenario(original, tmp_path / "echo.yaml")
        reloaded = load_scenario(p)
        assert reloaded.to_dict() == original.to_dict()


class TestTables:
    def test_float_round_trip_17_digits(self, tmp_path):
        values = [math.pi, 1.0 / 3.0, 6.02e23, 1e-300, -0.1]
        p = write_table(
            tmp_path / "t.csv", {"x": "value"}, [[v] for v in values]
        )
        header, rows = read_table(p)
        assert header == ["x"]
        assert [r[0] for r in rows] == values
        meta = json.loads((tmp_path / "t.meta.json").read_text())
        assert "x" in meta["columns"]

    def test_inf_and_nan_cells(self, tmp_path):
        p = write_table(tmp_path / "t.csv", {"x": "v"}, [[math.inf], [math.nan]])
        _, rows = read_table(p)
        assert rows[0][0] == math.inf
        assert math.isnan(rows[1][0])


class TestExecute:
    def test_zero_scenario_all_zero_tables(self, tmp_path):
        s = load_scenario(packaged_scenarios()["zero_amplitude"])
        manifest = execute(s, tmp_path)
        out = tmp_path / "zero_amplitude"
        header, rows = read_table(out / "snapshots.csv")
        w_col = header.index("w")
        assert all(r[w_col] == 0.0 for r in rows)
        assert manifest.stop_reason == "t_end"

    def test_manifest_checksums_verify(self, tmp_path):
        s = scenario_from_dict(minimal_amplitude_dict())
        execute(s, tmp_path)
        results = verify_manifest(tmp_path / "tiny" / "manifest.json")
        assert results and all(results.values())

    def test_tampering_detected(self, tmp_path):
        s = scenario_from_dict(minimal_amplitude_dict())
        execute(s, tmp_path)
        diag = tmp_path / "tiny" / "diagnostics.csv"
        diag.write_text(diag.read_text() + "tampered\n")
        results = verify_manifest(tmp_path / "tiny" / "manifest.json")
        assert not results["diagnostics.csv"]

    def test_scenario_echo_includes_defaults(self, tmp_path):
        s = scenario_from_dict(minimal_amplitude_dict())
        execute(s, tmp_path)
        m = read_manifest(tmp_path / "tiny" / "manifest.json")
        integ = m.scenario["integrator"]
        # defaults are materialized, nothing hidden
        assert "cfl_safety" in integ and "picard_max_iter" in integ
        assert m.version

    def test_halted_run_flagged(self, tmp_path):
        s = load_scenario(packaged_scenarios()["pinch_halt"])
        manifest = execute(s, tmp_path)
        assert manifest.stop_reason == "arc_chord_floor"
        assert any(f.startswith("halted:") for f in manifest.flags)

    def test_linear_kh_scenario_rate_table(self, tmp_path):
        # shipped linear scenario tables mode-2 rate ~ 1.0
        s = load_scenario(packaged_scenarios()["linear_kh_modes"])
        execute(s, tmp_path)
        header, rows = read_table(tmp_path / "linear_kh_modes" / "rates.csv")
        k_col, rate_col = header.index("k"), header.index("rate")
        by_k = {r[k_col]: r[rate_col] for r in rows}
        assert abs(by_k[2.0] - 1.0) < 0.01
        for k in (1.0, 2.0, 3.0, 4.0):
            assert abs(by_k[k] - k / 2) < 0.01 * (k / 2)

    def test_failure_preserves_partial_outputs_and_flags(self, tmp_path, monkeypatch):
        import vortexsheet.runio as runio

        def boom(problem, config=None):
            raise RuntimeError("synthetic failure")

        monkeypatch.setattr(runio, "run_simulation", boom)
        s = scenario_from_dict(minimal_amplitude_dict(name="broken"))
        with pytest.raises(RuntimeError, match="synthetic"):
            execute(s, tmp_path)
        manifest = read_manifest(tmp_path / "broken" / "manifest.json")
        assert any(f.startswith("error:RuntimeError") for f in manifest.flags)

    def test_amplitude_cosine_conservation_column(self, tmp_path):
        # shipped characteristics scenario: conservation error below 1e-6
        # at every snapshot up to t = 0.5
        s = load_scenario(packaged_scenarios()["amplitude_cosine"])
        execute(s, tmp_path)
        header, rows = read_table(tmp_path / "amplitude_cosine" / "conservation.csv")
        err_col = header.index("conservation_error")
        t_col = header.index("t")
        assert rows[-1][t_col] == 0.5
        assert all(r[err_col] < 1e-6 for r in rows)


class TestCompareRuns:
    def _family(self, tmp_path, n_values=(32, 64)):
        paths = []
        for n in n_values:
            d = minimal_amplitude_dict(name=f"fam_n{n}", n=n)
            s = scenario_from_dict(d)
            execute(s, tmp_path)
            paths.append(tmp_path / f"fam_n{n}" / "manifest.json")
        return paths

    def test_family_report(self, tmp_path):
        paths = self._family(tmp_path)
        report = compare_runs(paths, tmp_path / "cmp")
        assert [r["n"] for r in report["rows"]] == [32, 64]
        assert (tmp_path / "cmp" / "refinement.csv").exists()
        top = f"sobolev_w_{report['orders'][-1]:g}"
        assert len(report["growth_factors"][top]) == 1

    def test_single_manifest_trivial_report(self, tmp_path):
        paths = self._family(tmp_path, n_values=(32,))
        report = compare_runs(paths)
        assert len(report["rows"]) == 1
        top = f"sobolev_w_{report['orders'][-1]:g}"
        assert report["growth_factors"][top] == []

    def test_incompatible_rejected(self, tmp_path):
        p1 = self._family(tmp_path, n_values=(32,))
        other = minimal_amplitude_dict(name="other", n=64, t_end=0.04)
        execute(scenario_from_dict(other), tmp_path)
        with pytest.raises(ValueError, match="family"):
            compare_runs([p1[0], tmp_path / "other" / "manifest.json"])


class TestCli:
    def test_validate_ok(self, capsys):
        code = main(["validate", "amplitude_cosine"])
        assert code == 0
        assert "valid" in capsys.readouterr().out

    def test_list_scenarios(self, capsys):
        assert main(["list-scenarios"]) == 0
        out = capsys.readouterr().out
        assert "kh_mode2_validation" in out and "amplitude_blowup" in out

    def test_run_and_exit_codes(self, tmp_path, capsys):
        config = write_config(tmp_path, minimal_amplitude_dict())
        assert main(["run", str(config), "--out", str(tmp_path / "out")]) == 0
        assert (tmp_path / "out" / "tiny" / "manifest.json").exists()

    def test_parse_error_exit_2(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("mode: {]{\n")
        assert main(["validate", str(bad)]) == 2

    def test_invariant_violation_exit_3(self, tmp_path):
        data = minimal_amplitude_dict()
        data["amplitude"]["profile"]["modes"] = [{"k": 0, "amp": 1.0}, {"k": 1, "amp": 1.0}]
        assert main(["validate", str(write_config(tmp_path, data))]) == 3

    def test_numerical_halt_exit_4(self, tmp_path):
        assert main(["run", "pinch_halt", "--out", str(tmp_path)]) == 4

    def test_missing_config_exit_2(self):
        assert main(["validate", "no_such_scenario_anywhere"]) == 2

    def test_env_var_output_root(self, tmp_path, monkeypatch):
        monkeypatch.setenv("VSHEET_OUT", str(tmp_path / "env_out"))
        config = write_config(tmp_path, minimal_amplitude_dict(name="envrun"))
        assert main(["run", str(config)]) == 0
        assert (tmp_path / "env_out" / "envrun" / "manifest.json").exists()

    def test_batch_and_compare(self, tmp_path, capsys):
        fam = tmp_path / "fam"
        fam.mkdir()
        for n in (32, 64):
            write_config(fam, minimal_amplitude_dict(name=f"b_n{n}", n=n), f"b_n{n}.yaml")
        assert main(["batch", str(fam), "--out", str(tmp_path / "out")]) == 0
        manifests = [str(tmp_path / "out" / f"b_n{n}" / "manifest.json") for n in (32, 64)]
        assert main(["compare", *manifests, "--out", str(tmp_path / "out")]) == 0
        assert (tmp_path / "out" / "comparison" / "refinement.csv").exists()
