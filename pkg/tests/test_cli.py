import csv
import json
import math

import pytest

from atomrepeater.cli import main
from atomrepeater.config import ConfigError, ScenarioConfig, default_config_text, parse_config
from atomrepeater.repeater import LinkParams


def test_default_config_matches_reference_parameters():
    cfg = parse_config(default_config_text())
    got, ref = cfg.link_params(), LinkParams()
    for name in ref.__dataclass_fields__:
        assert getattr(got, name) == pytest.approx(getattr(ref, name), rel=1e-12)
    assert cfg["cavity.g_h"] == pytest.approx(2 * math.pi * 16.3e6)
    assert cfg["pulse.fwhm"] == pytest.approx(5.9e-9)
    assert cfg["repeater.tau"] == pytest.approx(100e-6)
    for s, keys in ScenarioConfig().values.items():
        for k, v in keys.items():
            assert cfg.values[s][k] == (pytest.approx(v, rel=1e-12) if isinstance(v, float) else v)


def test_empty_config_gives_defaults():
    assert parse_config("").values == ScenarioConfig().values
    assert parse_config("# only a comment\n\n").seed is None


def test_units_are_converted():
    cfg = parse_config("pulse.fwhm = 0.0059 us\nrepeater.c_f = 2e8 m/s\nscheme.theta = 180 deg\n")
    assert cfg["pulse.fwhm"] == pytest.approx(5.9e-9)
    assert cfg["repeater.c_f"] == pytest.approx(2e5)
    assert cfg["scheme.theta"] == pytest.approx(math.pi)


def test_range_error_names_key_and_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("# header\nrepeater.eta_h = 1.3\n")
    (line, msg), = exc.value.errors
    assert line == 2 and "repeater.eta_h" in msg


@pytest.mark.parametrize("text, fragment", [
    ("repeater.bogus = 1", "unknown key"),
    ("pulse.fwhm = 5.9", "needs a unit"),
    ("pulse.fwhm = 5.9 parsec", "not one of"),
    ("repeater.R = 0.5 km", "dimensionless"),
    ("repeater.runs = lots", "cannot parse"),
    ("no equals sign here", "expected"),
])
def test_config_errors(text, fragment):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert fragment in str(exc.value)


def test_all_errors_reported_together():
    with pytest.raises(ConfigError) as exc:
        parse_config("repeater.R = 2\nrepeater.p_p = -1\n")
    assert [n for n, _ in exc.value.errors] == [1, 2]


def _read_csv(path):
    lines = path.read_text().splitlines()
    header = [l for l in lines if l.startswith("#")]
    body = list(csv.reader(l for l in lines if not l.startswith("#")))
    return header, body[0], body[1:]


def test_repeater_rate_reproducible_and_documented(tmp_path):
    args = ["--seed", "3", "repeater", "rate", "--N", "1,2,4", "--L-min", "20", "--L-max", "250", "--step", "10"]
    assert main(["--out-dir", str(tmp_path / "a")] + args) == 0
    assert main(["--out-dir", str(tmp_path / "b")] + args) == 0
    for N in (1, 2, 4):
        name = f"repeater_rate_N{N}_restart.csv"
        a, b = (tmp_path / d / name for d in "ab")
        assert a.read_bytes() == b.read_bytes()
        header, cols, rows = _read_csv(a)
        assert cols == ["L_km", "rate_per_s"]
        assert len(rows) == 24
        assert "# seed: 3" in header
        assert any(h.startswith("# repeater.L_a = 22 km") for h in header)
    # two-link chain beats direct transmission at 100 km
    rate = {N: dict((float(r[0]), float(r[1])) for r in _read_csv(tmp_path / "a" / f"repeater_rate_N{N}_restart.csv")[2])
            for N in (1, 2)}
    assert rate[2][100.0] > 3 * rate[1][100.0]


def test_keep_strategy_mc_is_byte_identical(tmp_path):
    args = ["--seed", "5", "repeater", "storage", "--N", "4", "--strategy", "keep",
            "--L-min", "100", "--L-max", "100", "--runs", "20000"]
    assert main(["--out-dir", str(tmp_path / "a")] + args) == 0
    assert main(["--out-dir", str(tmp_path / "b")] + args) == 0
    a = (tmp_path / "a" / "repeater_storage_N4_keep.csv").read_bytes()
    assert a == (tmp_path / "b" / "repeater_storage_N4_keep.csv").read_bytes()
    _, cols, rows = _read_csv(tmp_path / "a" / "repeater_storage_N4_keep.csv")
    assert cols == ["L_km", "storage_ms", "ci_lo", "ci_hi"]
    lo, m, hi = float(rows[0][2]), float(rows[0][1]), float(rows[0][3])
    assert lo < m < hi


def test_mc_without_seed_is_config_error(tmp_path, capsys):
    code = main(["--out-dir", str(tmp_path), "repeater", "storage", "--strategy", "keep"])
    assert code == 2
    record = json.loads(capsys.readouterr().err)
    assert record["error"] == "config"


def test_bad_config_file_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("repeater.eta_h = 1.3\n")
    assert main(["--config", str(bad), "--out-dir", str(tmp_path), "cavity-design"]) == 2
    rec = json.loads(capsys.readouterr().err)
    assert rec["details"][0]["line"] == 1
    assert main(["--config", str(tmp_path / "missing.cfg"), "cavity-design"]) == 2


def test_numeric_failure_exit_code(tmp_path, capsys):
    # too few arrival samples for a density estimate
    code = main(["--out-dir", str(tmp_path), "--seed", "1", "contrast", "--samples", str(_tiny_samples(tmp_path))])
    assert code == 3
    assert json.loads(capsys.readouterr().err)["type"] == "SampleError"


def _tiny_samples(tmp_path):
    p = tmp_path / "samples.csv"
    p.write_text("t_herald_ns,t_telecom_ns\n" + "".join(f"{20 + i * 0.1},{12 + i * 0.05}\n" for i in range(10)))
    return p


def test_contrast_from_sample_file(tmp_path):
    import numpy as np

    rng = np.random.default_rng(0)
    th = 25 + 4 * rng.standard_normal(400)
    tt = 12 + 0.6 * rng.standard_normal(400)
    p = tmp_path / "s.csv"
    p.write_text("t_herald_ns,t_telecom_ns\n" + "".join(f"{a},{b}\n" for a, b in zip(th, tt)))
    assert main(["--out-dir", str(tmp_path), "--seed", "2", "contrast", "--samples", str(p), "--n-boot", "3",
                 "--windows", "0.5,2", "--herald-times", "25"]) == 0
    _, cols, rows = _read_csv(tmp_path / "contrast.csv")
    assert cols == ["C", "C_stderr", "F"]
    # independent arrival times: C near 1 up to sampling noise
    assert float(rows[0][0]) > 0.97
    _, cols, rows = _read_csv(tmp_path / "contrast_envelopes.csv")
    assert cols == ["time_ns", "p_25ns_per_ns"]


def test_cavity_design_table(tmp_path):
    assert main(["--out-dir", str(tmp_path), "--format", "json", "cavity-design"]) == 0
    doc = json.loads((tmp_path / "cavity_design.json").read_text())
    assert doc["columns"] == ["cavity", "quantity", "value", "unit"]
    vals = {(r[0], r[1]): r[2] for r in doc["rows"]}
    assert vals[("heralding", "kappa_oc")] == pytest.approx(11.9, rel=0.03)
    assert vals[("entangling", "fiber_overlap")] == pytest.approx(0.96, abs=0.01)
    assert "config" in doc["header"] and doc["header"]["seed"] is None


def test_herald_and_keyrate_commands(tmp_path, capsys):
    assert main(["--out-dir", str(tmp_path), "herald-fidelity", "--a", "-1", "--b", "1", "--c", "0"]) == 0
    assert "2.8595%" in capsys.readouterr().out
    assert main(["--out-dir", str(tmp_path), "keyrate", "table", "--C", "0.97", "--bsm-fidelity", "0.95", "--N", "2"]) == 0
    _, cols, rows = _read_csv(tmp_path / "keyrate_table.csv")
    assert cols[-1] == "r" and float(rows[0][-1]) == pytest.approx(0.497, abs=0.005)
    assert main(["--out-dir", str(tmp_path), "keyrate", "threshold", "--C", "0.97", "--N", "2", "--target", "0"]) == 0
    _, _, rows = _read_csv(tmp_path / "keyrate_threshold.csv")
    assert float(rows[0][3]) == pytest.approx(0.83, abs=0.005)


def test_flag_overrides_appear_in_header(tmp_path):
    assert main(["--out-dir", str(tmp_path), "repeater", "rate", "--N", "1", "--L-min", "50", "--L-max", "50"]) == 0
    header, _, rows = _read_csv(tmp_path / "repeater_rate_N1_restart.csv")
    assert "# repeater.L_min = 50 km" in header
    assert len(rows) == 1
