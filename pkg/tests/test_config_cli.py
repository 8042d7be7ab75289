import json

import pytest

from openres.cli import main
from openres.config import (
    ConfigError,
    bundled_config_text,
    list_experiments,
    load_config,
)
from openres.runner import run_experiment

MINIMAL = """
mode = sweep
family.n = 2
family.level1.e_intercept = 1.0
family.level1.e_slope = -0.5
family.level1.gamma_half_intercept = -0.495
family.level2.e_intercept = 0.0
family.level2.e_slope = 1.0
family.level2.gamma_half_intercept = -0.493
family.omega_scalar = 0.001,0.01
sweep.steps = 41
"""


def test_parse_minimal():
    cfg = load_config(MINIMAL)
    assert cfg.mode == "sweep"
    assert cfg.family.n == 2
    assert cfg.family.coupling[0, 1] == 0.001 + 0.01j
    assert cfg.sweep.steps == 41


def test_fraction_values():
    cfg = load_config(bundled_config_text("fig2_left"))
    assert cfg.family.levels[2].energy.intercept == pytest.approx(-1.0 / 3.0, abs=0)


def test_missing_family_is_config_error():
    with pytest.raises(ConfigError):
        load_config("mode = sweep\n")


def test_bad_mode():
    with pytest.raises(ConfigError):
        load_config(MINIMAL.replace("mode = sweep", "mode = dance"))


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as err:
        load_config(MINIMAL + "bogus.key = 1\n")
    assert "bogus.key" in str(err.value)
    assert "line" in str(err.value)


def test_duplicate_key():
    with pytest.raises(ConfigError):
        load_config(MINIMAL + "sweep.steps = 10\n")


def test_omega_matrix_keys():
    text = MINIMAL.replace(
        "family.omega_scalar = 0.001,0.01", "family.omega_1_2 = 0.0,0.5"
    )
    cfg = load_config(text)
    assert cfg.family.coupling[0, 1] == 0.5j
    assert cfg.family.coupling[1, 0] == 0.5j


def test_bundled_configs_all_validate():
    for name, description in list_experiments():
        cfg = load_config(bundled_config_text(name))
        assert cfg.mode in ("sweep", "ep", "xsec-scan", "xsec-contour", "diagnose")
        assert description


def test_bundled_parameter_literals_are_exact():
    # the canonical scenario constants appear verbatim in the config text
    text = bundled_config_text("fig1_left")
    for literal in ("-0.495", "-0.493", "0.001,0.01", "1.0", "-0.5"):
        assert literal in text
    text = bundled_config_text("fig1_right")
    for literal in ("-0.495", "-0.595", "0.05,0.5"):
        assert literal in text
    text = bundled_config_text("fig2_left")
    for literal in ("-1/3", "1.5", "-0.49", "0.001,0.01"):
        assert literal in text
    assert "0.653333" in bundled_config_text("fig3")
    assert "0.6502" in bundled_config_text("fig4")
    assert "0.6502" in bundled_config_text("fig5")


def test_list_experiments_has_eight():
    names = [name for name, _ in list_experiments()]
    assert names == sorted(
        ["fig1_left", "fig1_right", "fig2_left", "fig2_right", "fig3", "fig4", "fig5", "kato"]
    )


def test_run_sweep_experiment(tmp_path):
    cfg = load_config(MINIMAL)
    manifest = run_experiment(cfg, str(tmp_path))
    assert (tmp_path / "sweep.csv").exists()
    assert (tmp_path / "manifest.json").exists()
    on_disk = json.loads((tmp_path / "manifest.json").read_text())
    assert on_disk["files"] == manifest["files"]
    assert "sweep.csv" in manifest["files"]


def test_run_determinism(tmp_path):
    cfg = load_config(MINIMAL)
    d1, d2 = tmp_path / "one", tmp_path / "two"
    run_experiment(cfg, str(d1))
    run_experiment(cfg, str(d2))
    assert (d1 / "sweep.csv").read_bytes() == (d2 / "sweep.csv").read_bytes()
    assert (d1 / "manifest.json").read_bytes() == (d2 / "manifest.json").read_bytes()


def test_cli_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert "fig1_left" in out and "kato" in out


def test_cli_validate_bundled(capsys):
    assert main(["validate", "fig1_left"]) == 0
    assert "mode=sweep" in capsys.readouterr().out


def test_cli_validate_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.conf"
    bad.write_text("mode = sweep\n")  # missing family
    assert main(["validate", str(bad)]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_missing_family_no_partial_files(tmp_path, capsys):
    bad = tmp_path / "bad.conf"
    bad.write_text("mode = sweep\n")
    out_dir = tmp_path / "out"
    assert main(["run", str(bad), "--output-dir", str(out_dir)]) == 2
    assert not out_dir.exists()


def test_cli_run_kato(tmp_path, capsys):
    out_dir = tmp_path / "kato_out"
    assert main(["run", "kato", "--output-dir", str(out_dir)]) == 0
    data = json.loads((out_dir / "ep_candidates.json").read_text())
    locs = sorted(
        (
            complex(c["location"]["omega_re"], c["location"]["omega_im"])
            for c in data["candidates"]
        ),
        key=lambda z: z.imag,
    )
    assert abs(locs[0] + 1j) < 1e-10
    assert abs(locs[1] - 1j) < 1e-10


def test_cli_compute_error_exit_code(tmp_path, capsys):
    # zero coupling admits no EP: the scale search raises, exit code 3,
    # and no partial files appear
    conf = tmp_path / "noep.conf"
    conf.write_text(
        MINIMAL.replace("mode = sweep", "mode = ep")
        .replace("family.omega_scalar = 0.001,0.01", "family.omega_scalar = 0.0,0.0")
        + "ep.search = scale\n"
    )
    out_dir = tmp_path / "out3"
    assert main(["run", str(conf), "--output-dir", str(out_dir)]) == 3
    assert "compute error" in capsys.readouterr().err
    assert not out_dir.exists()


def test_cli_env_var_output_dir(tmp_path, monkeypatch, capsys):
    out_dir = tmp_path / "envout"
    monkeypatch.setenv("OPENRES_OUTPUT_DIR", str(out_dir))
    monkeypatch.chdir(tmp_path)
    cfgfile = tmp_path / "mini.conf"
    cfgfile.write_text(MINIMAL)
    assert main(["run", str(cfgfile)]) == 0
    assert (out_dir / "sweep.csv").exists()


def test_cli_no_refine_flag(tmp_path):
    cfgfile = tmp_path / "mini.conf"
    cfgfile.write_text(MINIMAL.replace("sweep.steps = 41", "sweep.steps = 201"))
    d1, d2 = tmp_path / "ref", tmp_path / "noref"
    assert main(["run", str(cfgfile), "--output-dir", str(d1)]) == 0
    assert main(["run", str(cfgfile), "--output-dir", str(d2), "--no-refine"]) == 0
    lines1 = (d1 / "sweep.csv").read_text().count("\n")
    lines2 = (d2 / "sweep.csv").read_text().count("\n")
    assert lines2 <= lines1


def test_run_xsec_contour_small(tmp_path):
    text = bundled_config_text("fig3").replace("sweep.steps = 200", "sweep.steps = 12")
    text = text.replace("xsec.a_values = 0.0; 0.653333; 1.0", "xsec.a_values = 0.0")
    cfg = load_config(text)
    manifest = run_experiment(cfg, str(tmp_path))
    assert "xsec_contour.csv" in manifest["files"]
    assert "xsec_contour_no_coupling.csv" in manifest["files"]
    assert "xsec_scan_1.csv" in manifest["files"]
    assert "xsec_scan_1_no_coupling.csv" in manifest["files"]
    header = (tmp_path / "xsec_contour.csv").read_text().splitlines()[0]
    assert header == "a,e,sigma"


def test_run_xsec_scan_mode(tmp_path):
    text = MINIMAL.replace("mode = sweep", "mode = xsec-scan")
    text = text.replace("sweep.steps = 41", "xsec.a_values = 0.0; 1.0")
    cfg = load_config(text)
    manifest = run_experiment(cfg, str(tmp_path))
    assert set(manifest["files"]) == {"xsec_scan_1.csv", "xsec_scan_2.csv"}
    body = (tmp_path / "xsec_scan_1.csv").read_text()
    assert body.startswith("e,sigma\n")


def test_run_ep_param_mode(tmp_path):
    text = MINIMAL.replace("mode = sweep", "mode = ep")
    text = text.replace("sweep.steps = 41", "ep.search = param")
    cfg = load_config(text)
    manifest = run_experiment(cfg, str(tmp_path))
    data = json.loads((tmp_path / "ep_candidates.json").read_text())
    best = data["candidates"][0]
    assert best["location"]["a"] == pytest.approx(0.653333, abs=1e-3)
    assert manifest["meta"]["candidates"] >= 1


def test_run_diagnose_mode(tmp_path):
    text = MINIMAL.replace("mode = sweep", "mode = diagnose")
    text += "diagnose.a_values = 0.0; 0.5\n"
    cfg = load_config(text)
    run_experiment(cfg, str(tmp_path))
    data = json.loads((tmp_path / "diagnostics.json").read_text())
    assert len(data["points"]) == 2
    assert data["points"][0]["rigidity"][0] <= 1.0


@pytest.mark.parametrize("name", [n for n, _ in list_experiments()])
def test_bundled_end_to_end(tmp_path, name):
    out_dir = tmp_path / name
    assert main(["run", name, "--output-dir", str(out_dir)]) == 0
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["files"]
    for fname, info in manifest["files"].items():
        path = out_dir / fname
        assert path.exists()
        assert path.stat().st_size == info["bytes"]


def test_threads_give_identical_output(tmp_path):
    text = bundled_config_text("fig3").replace("sweep.steps = 200", "sweep.steps = 24")
    cfg = load_config(text)
    d1, d2 = tmp_path / "t1", tmp_path / "t4"
    run_experiment(cfg, str(d1), threads=1)
    run_experiment(cfg, str(d2), threads=4)
    assert (d1 / "xsec_contour.csv").read_bytes() == (d2 / "xsec_contour.csv").read_bytes()
