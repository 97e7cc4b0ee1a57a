import os
import subprocess
import sys

import numpy as np
import pytest

from qdsps.config import parse_config
from qdsps.presets import preset_names, preset_text
from qdsps.runner import (
    build_model,
    compare_dissipators,
    evaluate_checks,
    optimize_area,
    run_scenario,
    run_sweep,
)

SMOKE = """
scheme = resonant
dissipator = none

[pulse]
area = 1 pi
tau_p = 2 ps

[cavity]
g = 0 ueV
kappa = 50 ueV

[emitter]
gamma = 0 ueV

[bath]
alpha = 0 ps2

[numerics]
dt = 0.01 ps
t_max = 30 ps

[outputs]
trajectory = true
surfaces = false
fom = false
"""

SWEEP = """
scheme = phonon_assisted
dissipator = weak_simplified

[pulse]
area = 6 pi
tau_p = 2 ps

[laser]
delta_l = 1 meV

[numerics]
dt = 0.02 ps
t_max = 40 ps
threshold = 0.001

[sweep]
area = 4 pi, 8 pi
tau_p = 2 ps, 3 ps

[outputs]
trajectory = false
surfaces = false
fom = false
"""


class TestRunScenario:
    def test_bare_pi_pulse_smoke(self, tmp_path):
        # Engine smoke test: no dissipation at all, a resonant pi pulse fully
        # inverts the emitter.
        record = run_scenario(parse_config(SMOKE), outdir=str(tmp_path))
        assert abs(record.after_pulse["exciton"] - 1.0) < 1e-4
        assert record.fom is None
        assert os.path.exists(record.csv_paths["trajectory"])

    def test_reproducible_bytes(self, tmp_path):
        cfg = parse_config(SMOKE)
        rec1 = run_scenario(cfg, outdir=str(tmp_path / "a"))
        rec2 = run_scenario(cfg, outdir=str(tmp_path / "b"))
        with open(rec1.csv_paths["trajectory"], "rb") as fh:
            bytes1 = fh.read()
        with open(rec2.csv_paths["trajectory"], "rb") as fh:
            bytes2 = fh.read()
        assert bytes1 == bytes2

    def test_csv_headers_carry_hash_and_version(self, tmp_path):
        cfg = parse_config(SMOKE)
        record = run_scenario(cfg, outdir=str(tmp_path))
        with open(record.csv_paths["trajectory"]) as fh:
            first = fh.readline()
            header = fh.readline()
        assert f"config_hash={cfg.digest()}" in first
        assert "engine_version=" in first
        # two-level trajectories carry the phonon-assisted rate column
        assert header.strip().endswith("gamma_plus")

    def test_outdir_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("QDSPS_OUTDIR", str(tmp_path / "from_env"))
        record = run_scenario(parse_config(SMOKE))
        assert str(tmp_path / "from_env") in record.csv_paths["trajectory"]


class TestSweep:
    def test_empty_sweep_is_single_run(self, tmp_path):
        records = run_sweep(parse_config(SMOKE), outdir=str(tmp_path))
        assert len(records) == 1

    def test_cartesian_rows_sorted(self, tmp_path):
        records = run_sweep(parse_config(SWEEP), outdir=str(tmp_path))
        assert len(records) == 4
        sweep_csv = [
            p for p in (tmp_path).rglob("sweep.csv")
        ][0]
        lines = sweep_csv.read_text().splitlines()
        assert lines[1].startswith("area,tau_p")
        pairs = [tuple(float(x) for x in line.split(",")[:2]) for line in lines[2:]]
        assert pairs == sorted(pairs)

    def test_threads_match_serial(self, tmp_path):
        cfg = parse_config(SWEEP)
        serial = run_sweep(cfg, outdir=str(tmp_path / "s"), threads=1)
        parallel = run_sweep(cfg, outdir=str(tmp_path / "p"), threads=3)
        for a, b in zip(serial, parallel):
            assert a.after_pulse == b.after_pulse


def _inversion_map_text(tau_p: float) -> str:
    return f"""
scheme = phonon_assisted
dissipator = weak_simplified

[pulse]
area = 10 pi
tau_p = {tau_p} ps

[laser]
delta_l = 1 meV

[numerics]
threshold = 0.0001

[sweep]
area = 6 pi, 9 pi, 12 pi, 15 pi

[outputs]
trajectory = false
surfaces = false
fom = false
"""


@pytest.mark.slow
def test_inversion_improves_with_pulse_width(tmp_path):
    # Map property: at 1 meV detuning the best-over-area exciton population
    # after the pulse grows monotonically with the pulse width.
    best = []
    for tau_p in (2.0, 4.0, 6.0, 8.0):
        cfg = parse_config(_inversion_map_text(tau_p))
        records = run_sweep(cfg, outdir=str(tmp_path / f"tp{tau_p}"))
        best.append(max(r.after_pulse["exciton"] for r in records))
    assert all(b2 > b1 for b1, b2 in zip(best, best[1:]))


class TestOptimizer:
    def test_flat_objective_warns(self):
        # Zero cavity coupling: no emission regardless of pulse area.
        text = """
scheme = tpe_biexciton
[pulse]
area = optimize
tau_p = 4.3841 ps
[cavity]
g = 0 ueV
[emitter]
binding_energy = 3 meV
gamma_u = 200 ueV
[bath]
alpha = 0 ps2
"""
        theta, warns = optimize_area(parse_config(text), lo=np.pi, hi=2 * np.pi, coarse=3)
        assert any("flat" in w for w in warns)
        assert theta >= np.pi

    def test_resonant_rejected(self):
        with pytest.raises(ValueError, match="off-resonant"):
            optimize_area(parse_config(SMOKE))


class TestCompareDissipators:
    def test_rejects_fixed_area_requirement(self, tmp_path):
        text = preset_text("fig2-offres")  # area = optimize
        with pytest.raises(ValueError, match="area"):
            compare_dissipators(parse_config(text), outdir=str(tmp_path))


class TestChecks:
    def test_evaluate_checks(self):
        from qdsps.correlators import FiguresOfMerit

        cfg = parse_config(SMOKE + "\n[check]\nn_a_min = 0.5\n")
        fom = FiguresOfMerit(n_a=0.7, indist=0.9, d1=0.05, d2=0.05, purcell=1.0)
        assert evaluate_checks(cfg, fom) is True
        fom_bad = FiguresOfMerit(n_a=0.3, indist=0.9, d1=0.05, d2=0.05, purcell=1.0)
        assert evaluate_checks(cfg, fom_bad) is False
        assert evaluate_checks(cfg, None) is False
        assert evaluate_checks(parse_config(SMOKE), None) is None


class TestCli:
    def run_cli(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "qdsps.cli", *args],
            capture_output=True,
            text=True,
        )

    def test_presets_list_and_emit(self):
        out = self.run_cli("presets", "list")
        assert out.returncode == 0
        for name in preset_names():
            assert name in out.stdout
        emit = self.run_cli("presets", "emit", "fig2-resonant")
        assert emit.returncode == 0
        assert "scheme = resonant" in emit.stdout
        missing = self.run_cli("presets", "emit", "nope")
        assert missing.returncode == 1

    def test_config_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("scheme = resonant\n[cavity]\ng = 20\n")
        out = self.run_cli("run", str(bad))
        assert out.returncode == 1
        assert "config error" in out.stderr

    def test_check_failure_exit_code(self, tmp_path):
        cfg = tmp_path / "smoke.cfg"
        # trajectory-only run with thresholds: figures of merit are absent,
        # so the check cannot pass
        cfg.write_text(SMOKE + "\n[check]\nn_a_min = 0.5\n")
        out = self.run_cli("run", str(cfg), "--outdir", str(tmp_path), "--check")
        assert out.returncode == 3

    def test_run_smoke_exit_zero(self, tmp_path):
        cfg = tmp_path / "smoke.cfg"
        cfg.write_text(SMOKE)
        out = self.run_cli("run", str(cfg), "--outdir", str(tmp_path))
        assert out.returncode == 0
        assert "exciton population after pulse = 1.0000" in out.stdout


def test_build_model_schemes():
    from qdsps.models import BiexcitonModel, TwoLevelCavityModel

    assert isinstance(build_model(parse_config(SMOKE)), TwoLevelCavityModel)
    tpe = parse_config(preset_text("fig5-tpe"))
    assert isinstance(build_model(tpe, area=np.pi), BiexcitonModel)
    with pytest.raises(ValueError, match="unresolved"):
        build_model(tpe)
