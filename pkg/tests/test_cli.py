import numpy as np
import pytest

from cliptrap.cli import main
from cliptrap.estimation import DataSet


def read_report(path):
    out = {}
    for line in path.read_text().splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def run(*argv):
    return main(list(argv))


class TestPredict:
    def test_paper_defaults_values(self, tmp_path):
        out = tmp_path / "report.txt"
        assert run("predict", "--paper-defaults", "--out", str(out)) == 0
        rep = read_report(out)
        r = float(rep["loading_rate_atoms_per_s"])
        assert abs(r - 9.5e7) / 9.5e7 < 0.15
        assert 1.0 <= float(rep["tau_eff_s"]) <= 3.0
        assert 1e8 <= float(rep["n_steady_atoms"]) <= 6e8
        assert rep["majorana_safe"] == "False"
        assert float(rep["t_mt_virial_prediction_uk"]) == pytest.approx(52.5)

    def test_offset_forty_milligauss_safe(self, tmp_path):
        out = tmp_path / "report.txt"
        assert run("predict", "--paper-defaults", "--set", "b0_mg=40",
                   "--out", str(out)) == 0
        assert read_report(out)["majorana_safe"] == "True"

    def test_eta_zero_zeroes_accumulation(self, tmp_path):
        out = tmp_path / "report.txt"
        assert run("predict", "--paper-defaults", "--set", "eta=0",
                   "--out", str(out)) == 0
        rep = read_report(out)
        assert float(rep["loading_rate_atoms_per_s"]) == 0.0
        assert float(rep["n_steady_atoms"]) == 0.0
        assert float(rep["kappa"]) == 0.0

    def test_config_file_with_overrides(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("# minimal run\nb_prime_g_per_cm = 12.5\n"
                           "b_dprime_g_per_cm2 = 10.5\nn_mot = 5e6\n"
                           "t_mot_uk = 140\nbeta_dd_cm3_per_s = 1.3e-11\n")
        out = tmp_path / "report.txt"
        assert run("predict", "--config", str(cfgfile), "--out", str(out)) == 0
        assert float(read_report(out)["n_steady_atoms"]) > 0

    def test_missing_config_is_error(self, capsys):
        assert run("predict") == 2
        assert "config" in capsys.readouterr().err

    def test_bad_config_line(self, tmp_path, capsys):
        cfgfile = tmp_path / "bad.cfg"
        cfgfile.write_text("this line has no equals sign\n")
        assert run("predict", "--config", str(cfgfile)) == 2

    def test_bad_set_flag(self, capsys):
        assert run("predict", "--paper-defaults", "--set", "eta") == 2

    def test_untrapped_configuration(self, capsys):
        assert run("predict", "--paper-defaults", "--set",
                   "b_prime_g_per_cm=1.0") == 2
        assert "untrapped" in capsys.readouterr().err


class TestSimulate:
    def test_final_value_matches_predict(self, tmp_path):
        rep = tmp_path / "report.txt"
        run("predict", "--paper-defaults", "--out", str(rep))
        n_inf = float(read_report(rep)["n_steady_atoms"])
        csv = tmp_path / "sim.csv"
        assert run("simulate", "--paper-defaults", "--out", str(csv)) == 0
        lines = csv.read_text().splitlines()
        assert lines[0] == "t_s,n_atoms"
        table = np.loadtxt(lines[1:], delimiter=",")
        assert table[-1, 1] == pytest.approx(n_inf, rel=1e-3)

    def test_fixed_point_start_is_flat(self, tmp_path):
        rep = tmp_path / "report.txt"
        run("predict", "--paper-defaults", "--out", str(rep))
        n_inf = read_report(rep)["n_steady_atoms"]
        csv = tmp_path / "sim.csv"
        assert run("simulate", "--paper-defaults", "--set",
                   f"n0_atoms={n_inf}", "--out", str(csv)) == 0
        table = np.loadtxt(csv.read_text().splitlines()[1:], delimiter=",")
        assert np.all(np.abs(table[:, 1] / float(n_inf) - 1) < 1e-5)

    def test_two_samples(self, tmp_path):
        csv = tmp_path / "sim.csv"
        assert run("simulate", "--paper-defaults", "--set", "samples=2",
                   "--out", str(csv)) == 0
        rows = [ln for ln in csv.read_text().splitlines() if ln][1:]
        assert len(rows) == 2


class TestSweep:
    def test_gradient_sweep_csv(self, tmp_path):
        csv = tmp_path / "sweep.csv"
        assert run("sweep", "--paper-defaults",
                   "--set", "sweep_parameter=radial_gradient",
                   "--set", "sweep_start=8", "--set", "sweep_stop=20",
                   "--set", "sweep_points=4", "--out", str(csv)) == 0
        lines = csv.read_text().splitlines()
        assert lines[0].startswith("radial_gradient_g_per_cm,")
        assert lines[0].endswith(",error")
        assert len(lines) == 5

    def test_explicit_values_and_nmot_csv(self, tmp_path):
        nmot = tmp_path / "nmot.csv"
        nmot.write_text("b_prime,n_mot,sigma\n10,4e6,1\n12.5,5e6,1\n"
                        "15,4.5e6,1\n")
        csv = tmp_path / "sweep.csv"
        assert run("sweep", "--paper-defaults",
                   "--set", "sweep_values=10,12.5,15",
                   "--set", f"sweep_nmot_csv={nmot}",
                   "--set", "sweep_outputs=n_mot,kappa",
                   "--out", str(csv)) == 0
        lines = csv.read_text().splitlines()
        n_mots = [float(ln.split(",")[1]) for ln in lines[1:]]
        assert n_mots == [4e6, 5e6, 4.5e6]

    def test_nmot_csv_missing_value(self, tmp_path):
        nmot = tmp_path / "nmot.csv"
        nmot.write_text("b_prime,n_mot,sigma\n10,4e6,1\n")
        assert run("sweep", "--paper-defaults",
                   "--set", "sweep_values=10,12.5",
                   "--set", f"sweep_nmot_csv={nmot}") == 2

    def test_bad_sweep_parameter(self):
        assert run("sweep", "--paper-defaults",
                   "--set", "sweep_parameter=detuning",
                   "--set", "sweep_values=1,2") == 2

    def test_sweep_output_feeds_kappa_fit(self, tmp_path):
        sweep_csv = tmp_path / "sweep.csv"
        assert run("sweep", "--paper-defaults",
                   "--set", "sweep_parameter=radial_gradient",
                   "--set", "sweep_start=8", "--set", "sweep_stop=20",
                   "--set", "sweep_points=8",
                   "--set", "sweep_outputs=kappa_abscissa,kappa",
                   "--out", str(sweep_csv)) == 0
        fit_out = tmp_path / "fit.txt"
        assert run("fit", "kappa", "--paper-defaults",
                   "--data", str(sweep_csv), "--out", str(fit_out)) == 0
        rep = read_report(fit_out)
        assert float(rep["beta_dd_cm3_per_s"]) == pytest.approx(1.3e-11,
                                                                rel=1e-3)
        assert float(rep["beta_ed_cm3_per_s"]) == pytest.approx(6e-10,
                                                                rel=1e-3)


class TestSynthAndFit:
    def test_synth_seed_determinism(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert run("synth", "--paper-defaults", "--seed", "1",
                   "--out", str(a)) == 0
        assert run("synth", "--paper-defaults", "--seed", "1",
                   "--out", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_synth_fit_kappa_pipeline(self, tmp_path):
        csv = tmp_path / "kappa.csv"
        assert run("synth", "--paper-defaults", "--seed", "1",
                   "--out", str(csv)) == 0
        fit_out = tmp_path / "fit.txt"
        assert run("fit", "kappa", "--paper-defaults", "--data", str(csv),
                   "--out", str(fit_out)) == 0
        rep = read_report(fit_out)
        assert abs(float(rep["beta_dd_cm3_per_s"]) - 1.3e-11) < 0.3 * 1.3e-11
        assert abs(float(rep["beta_ed_cm3_per_s"]) - 6e-10) < 0.3 * 6e-10
        assert abs(float(rep["correlation"])) > 0.5

    def test_synth_fit_decay_pipeline(self, tmp_path):
        csv = tmp_path / "decay.csv"
        assert run("synth", "--paper-defaults",
                   "--set", "synth_kind=decay_curve",
                   "--set", "synth_noise=0.05",
                   "--set", "gamma_d_per_s=0.02",
                   "--set", "beta_dd_cm3_per_s=3.8e-11",
                   "--seed", "3", "--out", str(csv)) == 0
        fit_out = tmp_path / "fit.txt"
        assert run("fit", "decay", "--paper-defaults",
                   "--set", "beta_dd_cm3_per_s=3.8e-11",
                   "--set", "gamma_d_per_s=0.02",
                   "--data", str(csv), "--out", str(fit_out)) == 0
        rep = read_report(fit_out)
        assert abs(float(rep["gamma_per_s"]) - 0.02) < 0.2 * 0.02
        assert abs(float(rep["beta_dd_cm3_per_s"]) - 3.8e-11) < 0.2 * 3.8e-11

    def test_synth_fit_tof_pipeline(self, tmp_path):
        csv = tmp_path / "tof.csv"
        assert run("synth", "--paper-defaults",
                   "--set", "synth_kind=tof_series",
                   "--set", "synth_noise=0.03", "--set", "synth_points=8",
                   "--seed", "5", "--out", str(csv)) == 0
        fit_out = tmp_path / "fit.txt"
        assert run("fit", "tof", "--paper-defaults", "--data", str(csv),
                   "--out", str(fit_out)) == 0
        rep = read_report(fit_out)
        assert float(rep["temperature_uk"]) == pytest.approx(100.0, rel=0.15)

    def test_fit_loading_rate(self, tmp_path):
        csv = tmp_path / "load.csv"
        assert run("synth", "--paper-defaults",
                   "--set", "synth_kind=loading_curve",
                   "--set", "synth_noise=0", "--set", "synth_points=200",
                   "--out", str(csv)) == 0
        fit_out = tmp_path / "fit.txt"
        assert run("fit", "loading-rate", "--paper-defaults",
                   "--data", str(csv), "--out", str(fit_out)) == 0
        rate = float(read_report(fit_out)["loading_rate_atoms_per_s"])
        assert rate == pytest.approx(9.46e7, rel=0.10)

    def test_fit_empty_csv(self, tmp_path, capsys):
        csv = tmp_path / "empty.csv"
        csv.write_text("t_s,n_atoms,sigma_n_atoms\n")
        assert run("fit", "decay", "--paper-defaults",
                   "--data", str(csv)) == 2
        assert "rows" in capsys.readouterr().err

    def test_fit_missing_data_flag(self, capsys):
        assert run("fit", "kappa", "--paper-defaults") == 2

    def test_fit_missing_file(self, tmp_path):
        assert run("fit", "kappa", "--paper-defaults",
                   "--data", str(tmp_path / "nope.csv")) == 2

    def test_fit_profile(self, tmp_path):
        # forward-model a long-format profile table at 100 uK
        from cliptrap.cloud import column_density, make_thermal_cloud
        from cliptrap.species import chromium_52
        from cliptrap.trap import IpTrapConfig

        cl = make_thermal_cloud(chromium_52(),
                                IpTrapConfig.from_gauss(12.5, 10.5),
                                n=1e8, t=100e-6)
        y_mm = np.linspace(-0.8, 0.8, 17)
        z_mm = np.linspace(-5.0, 5.0, 11)
        lines = ["y_mm,z_mm,column_density"]
        for ym in y_mm:
            for zm in z_mm:
                val = column_density(cl, ym * 1e-3, zm * 1e-3)
                lines.append(f"{ym:.6g},{zm:.6g},{val:.10g}")
        csv = tmp_path / "profile.csv"
        csv.write_text("\n".join(lines) + "\n")
        fit_out = tmp_path / "fit.txt"
        assert run("fit", "profile", "--paper-defaults", "--data", str(csv),
                   "--out", str(fit_out)) == 0
        rep = read_report(fit_out)
        assert float(rep["temperature_uk"]) == pytest.approx(100.0, rel=1e-3)
