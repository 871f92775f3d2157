import json
import subprocess
import sys

import pytest

from nmr_swaptest import cli


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestCommands:
    def test_run(self, capsys):
        code, out, _ = _run(capsys, "run", "--theta1", "90", "--phi1", "270")
        assert code == 0
        header, row = out.strip().splitlines()
        vals = dict(zip(header.split(","), row.split(",")))
        assert abs(float(vals["f_exp"]) - 0.5) < 1e-4

    def test_sweep_to_file(self, capsys, tmp_path):
        out_csv = tmp_path / "s.csv"
        code, _, err = _run(capsys, "sweep", "--mode", "fig3b", "--out", str(out_csv))
        assert code == 0
        assert len(out_csv.read_text().splitlines()) == 21
        assert "experimental reference" in err

    def test_calibrate(self, capsys):
        code, out, _ = _run(capsys, "calibrate")
        assert code == 0
        assert out.startswith("area_ref ") and "normalisation" in out

    def test_export_spectrum_and_fid(self, capsys, tmp_path):
        p = tmp_path / "spec.csv"
        assert _run(capsys, "export-spectrum", "--theta1", "45", "--out", str(p))[0] == 0
        assert p.read_text().startswith("frequency_hz,real,imag")
        assert _run(capsys, "export-spectrum", "--fid", "--out", str(p))[0] == 0
        assert p.read_text().startswith("time_s,real,imag")

    def test_sequence(self, capsys):
        code, out, _ = _run(capsys, "sequence")
        assert code == 0 and "transition_pulse 110-111" in out


class TestConfig:
    def test_precedence(self, capsys, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("noise = true\ntheta1 = 180\nseed = 3\n")
        _, out, _ = _run(capsys, "run", "--config", str(cfg))
        f_noisy = float(out.splitlines()[1].split(",")[5])
        assert f_noisy > 0.01  # noise and theta taken from file
        _, out, _ = _run(capsys, "run", "--config", str(cfg), "--no-noise")
        assert abs(float(out.splitlines()[1].split(",")[5])) < 1e-4

    def test_system_keys(self, capsys, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("offsets_hz = 0 9000 -3000\nt2_s = 0.5\nt1_s = 1.0\n")
        code, out, _ = _run(capsys, "run", "--config", str(cfg), "--theta1", "90")
        assert code == 0 and abs(float(out.splitlines()[1].split(",")[5]) - 0.5) < 1e-4


class TestErrors:
    @pytest.mark.parametrize("argv", [
        ["run", "--theta1", "400"],
        ["run", "--flip-err", "0.5"],
        ["run", "--config", "/nonexistent/file.cfg"],
    ])
    def test_json_error(self, capsys, argv):
        code, _, err = _run(capsys, *argv)
        assert code != 0
        msg = json.loads(err.strip().splitlines()[-1])
        assert set(msg) == {"error", "message"}

    def test_bad_config_value(self, capsys, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("noise = maybe\n")
        code, _, err = _run(capsys, "run", "--config", str(cfg))
        assert code == 1 and json.loads(err)["error"] == "ValueError"

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "nmr_swaptest", "run", "--theta1", "-5"],
                              capture_output=True, text=True)
        assert proc.returncode == 1
        assert json.loads(proc.stderr)["error"] == "InvalidStateError"
