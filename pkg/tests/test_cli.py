import json
import math

import pytest
import yaml

from ramanlink import cli
from ramanlink.cli import _fmt, _write_csv, main
from ramanlink.fixtures import paper_fixture


def write_link(path, **kwargs):
    path.write_text(yaml.safe_dump(paper_fixture(**kwargs)), encoding="utf-8")
    return str(path)


@pytest.fixture()
def small_input(tmp_path):
    return write_link(tmp_path / "link.yaml", num_channels=4, num_spans=2)


def read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


class TestFormatting:
    def test_fixed_range(self):
        assert _fmt(0.0) == "0.000000"
        assert _fmt(-3.01) == "-3.010000"
        assert _fmt(186.1) == "186.100000"

    def test_scientific_range(self):
        assert _fmt(1e-5) == "1.000000e-05"
        assert _fmt(-2.5e12) == "-2.500000e+12"

    def test_special_values(self):
        assert _fmt(math.inf) == "inf"
        assert _fmt(-math.inf) == "-inf"
        assert _fmt(math.nan) == "nan"
        assert _fmt(7) == "7"

    def test_empty_rows_give_header_only(self, tmp_path):
        out = tmp_path / "empty.csv"
        _write_csv(out, ["a", "b"], [])
        assert out.read_text(encoding="utf-8") == "a,b\n"


class TestSolve:
    def test_outputs_and_exit_code(self, small_input, tmp_path):
        out = tmp_path / "run"
        assert main(["solve", "--input", small_input, "--out", str(out)]) == 0
        for name in ("profiles.csv", "nli.csv", "gsnr.csv", "manifest.json"):
            assert (out / name).is_file()
        header, rows = read_csv(out / "gsnr.csv")
        assert header == ["channel", "f_THz", "osnr_db", "snr_nli_db", "gsnr_db"]
        assert len(rows) == 4
        header, rows = read_csv(out / "nli.csv")
        assert header == ["span", "channel", "f_THz", "p_nli_dbm",
                          "p_nli_i1_dbm", "p_nli_i2_dbm", "end_share",
                          "q1", "q2"]
        assert len(rows) == 8     # 2 spans x 4 channels
        header, rows = read_csv(out / "profiles.csv")
        assert header == ["span", "channel", "f_THz", "direction",
                          "alpha0_per_km", "alpha1_per_km", "sigma_per_km",
                          "mse"]
        assert len(rows) == 16    # 2 spans x 4 channels x 2 directions

    def test_manifest_contents(self, small_input, tmp_path):
        out = tmp_path / "run"
        main(["solve", "--input", small_input, "--out", str(out)])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "solve"
        assert len(manifest["input_sha256"]) == 64
        assert manifest["options"]["grid_step_m"] == 100.0

    def test_byte_identical_reruns(self, small_input, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["solve", "--input", small_input, "--out", str(a)])
        main(["solve", "--input", small_input, "--out", str(b)])
        for name in ("profiles.csv", "nli.csv", "gsnr.csv", "manifest.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_missing_input_no_partial_outputs(self, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(["solve", "--input", str(tmp_path / "nope.yaml"),
                     "--out", str(out)])
        assert code == 1
        assert not out.exists()
        assert "nope.yaml" in capsys.readouterr().err

    def test_invalid_link_exit_one(self, tmp_path, capsys):
        doc = paper_fixture(num_channels=2, num_spans=1)
        doc["channels"][1]["f_THz"] = doc["channels"][0]["f_THz"]
        path = tmp_path / "bad.yaml"
        path.write_text(yaml.safe_dump(doc), encoding="utf-8")
        assert main(["solve", "--input", str(path),
                     "--out", str(tmp_path / "run")]) == 1

    def test_nonconvergence_exit_two(self, tmp_path, capsys):
        path = write_link(tmp_path / "link.yaml", num_channels=2, num_spans=1,
                          options={"solver_max_iter": 1})
        assert main(["solve", "--input", path,
                     "--out", str(tmp_path / "run")]) == 2
        assert "converge" in capsys.readouterr().err

    def test_singularity_exit_three(self, tmp_path, capsys):
        doc = paper_fixture(num_channels=2, num_spans=1)
        for s in doc["spans"]:
            s["beta2_ps2_per_km"] = 0.0
            s["beta3_ps3_per_km"] = 0.0
            s["beta4_ps4_per_km"] = 0.0
        path = tmp_path / "flat.yaml"
        path.write_text(yaml.safe_dump(doc), encoding="utf-8")
        assert main(["solve", "--input", str(path),
                     "--out", str(tmp_path / "run")]) == 3
        assert "dispersion" in capsys.readouterr().err

    def test_zero_power_link(self, tmp_path):
        doc = paper_fixture(num_channels=1, num_spans=1)
        doc["channels"][0]["power_dBm"] = float("-inf")
        path = tmp_path / "dark.yaml"
        path.write_text(yaml.safe_dump(doc), encoding="utf-8")
        out = tmp_path / "run"
        assert main(["solve", "--input", str(path), "--out", str(out)]) == 0
        _, rows = read_csv(out / "nli.csv")
        assert rows[0][3] == "-inf"          # zero NLI power in dBm
        assert float(rows[0][6]) == 0.0      # end share of nothing

    def test_low_power_gsnr_tracks_osnr(self, tmp_path):
        path = write_link(tmp_path / "link.yaml", num_channels=4, num_spans=2,
                          launch_dbm=-18.0)
        out = tmp_path / "run"
        main(["gsnr", "--input", path, "--out", str(out)])
        _, rows = read_csv(out / "gsnr.csv")
        for row in rows:
            osnr, gsnr_db = float(row[2]), float(row[4])
            assert abs(osnr - gsnr_db) < 0.2


class TestSubcommands:
    def test_fit_profiles_writes_only_profiles(self, small_input, tmp_path):
        out = tmp_path / "run"
        assert main(["fit-profiles", "--input", small_input,
                     "--out", str(out)]) == 0
        assert (out / "profiles.csv").is_file()
        assert not (out / "nli.csv").exists()
        assert not (out / "gsnr.csv").exists()
        assert (out / "manifest.json").is_file()

    def test_nli_writes_only_nli(self, small_input, tmp_path):
        out = tmp_path / "run"
        assert main(["nli", "--input", small_input, "--out", str(out)]) == 0
        assert (out / "nli.csv").is_file()
        assert not (out / "gsnr.csv").exists()

    def test_structured_output_round_trip(self, small_input, tmp_path):
        csv_out, js_out = tmp_path / "csv", tmp_path / "js"
        main(["solve", "--input", small_input, "--out", str(csv_out)])
        main(["solve", "--input", small_input, "--out", str(js_out),
              "--format", "structured"])
        doc = json.loads((js_out / "report.json").read_text())
        _, rows = read_csv(csv_out / "gsnr.csv")
        assert len(doc["gsnr"]) == len(rows)
        for rec, row in zip(doc["gsnr"], rows):
            assert rec["channel"] == int(row[0])
            assert rec["gsnr_db"] == pytest.approx(float(row[4]), abs=1e-6)
        assert doc["offset_db"] == 0.0

    def test_grid_step_override_recorded(self, small_input, tmp_path):
        out = tmp_path / "run"
        main(["fit-profiles", "--input", small_input, "--out", str(out),
              "--grid-step-m", "200"])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["options"]["grid_step_m"] == 200.0


class TestSweep:
    def single_channel_unpumped(self, tmp_path):
        doc = paper_fixture(num_channels=1, num_spans=2)
        for s in doc["spans"]:
            s["pumps"] = []
        path = tmp_path / "link.yaml"
        path.write_text(yaml.safe_dump(doc), encoding="utf-8")
        return str(path)

    def test_cubic_law_across_offsets(self, tmp_path):
        # pump-free single channel: the profile shape is power-independent,
        # so the sweep realizes the exact cubic law
        path = self.single_channel_unpumped(tmp_path)
        out = tmp_path / "sweep"
        assert main(["sweep", "--input", path, "--out", str(out),
                     "--offset-db=-10:0:10"]) == 0
        header, rows = read_csv(out / "sweep.csv")
        assert header == ["offset_db", "channel", "f_THz", "osnr_db",
                          "snr_nli_db", "gsnr_db", "end_share"]
        by_offset = {float(r[0]): r for r in rows}
        d_nli = float(by_offset[-10.0][4]) - float(by_offset[0.0][4])
        assert d_nli == pytest.approx(20.0, abs=2e-6)
        # ASE is fixed in watts, so OSNR moves 1:1 with the offset
        d_osnr = float(by_offset[-10.0][3]) - float(by_offset[0.0][3])
        assert d_osnr == pytest.approx(-10.0, abs=2e-6)

    def test_single_offset_matches_solve(self, small_input, tmp_path):
        solve_out, sweep_out = tmp_path / "solve", tmp_path / "sweep"
        main(["solve", "--input", small_input, "--out", str(solve_out)])
        main(["sweep", "--input", small_input, "--out", str(sweep_out),
              "--offset-db", "0:0:1"])
        _, gsnr_rows = read_csv(solve_out / "gsnr.csv")
        _, sweep_rows = read_csv(sweep_out / "sweep.csv")
        assert len(sweep_rows) == len(gsnr_rows)
        for s, g in zip(sweep_rows, gsnr_rows):
            assert s[0] == "0.000000"
            assert s[1:6] == g[:5]

    def test_requires_offset_range(self, small_input, tmp_path, capsys):
        assert main(["sweep", "--input", small_input,
                     "--out", str(tmp_path / "run")]) == 1
        assert "--offset-db" in capsys.readouterr().err

    def test_bad_range_spec(self, small_input, tmp_path):
        assert main(["sweep", "--input", small_input,
                     "--out", str(tmp_path / "run"),
                     "--offset-db", "0:10:-1"]) == 1

    def test_gsnr_unimodal_over_offsets(self, tmp_path):
        path = self.single_channel_unpumped(tmp_path)
        out = tmp_path / "sweep"
        main(["sweep", "--input", path, "--out", str(out),
              "--offset-db=-6:6:2"])
        _, rows = read_csv(out / "sweep.csv")
        gsnr_db = [float(r[5]) for r in sorted(rows, key=lambda r: float(r[0]))]
        diffs = [b - a for a, b in zip(gsnr_db, gsnr_db[1:])]
        sign_changes = sum(1 for a, b in zip(diffs, diffs[1:])
                           if (a > 0) != (b > 0))
        assert sign_changes <= 1
