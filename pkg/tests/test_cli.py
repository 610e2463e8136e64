import json
import os

import pytest
from hypothesis import given, strategies as st

from kitecomplexity import cli
from kitecomplexity.config import ConfigError, RunConfig
from test_complexity import GOLDEN


def _write(tmp_path, doc):
    p = tmp_path / "run.json"
    p.write_text(json.dumps(doc))
    return str(p)


def test_missing_field_is_named(tmp_path, capsys):
    cfg = _write(tmp_path, {"beta": "0.9"})
    assert cli.main(["complexity", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "alpha" in capsys.readouterr().err


@pytest.mark.parametrize("doc, name", [
    ({"alpha": "0.7", "beta": "0.9", "bogus": 1}, "bogus"),
    ({"alpha": "0.7", "beta": "0.9", "precision": 32}, "precision"),
    ({"alpha": "0.7", "beta": "0.9", "seed": -1}, "seed"),
    ({"alpha": "0.7", "beta": "0.9", "f_source": "oracle"}, "f_source"),
    ({"alpha": "zeta", "beta": "0.9"}, "alpha"),
    ({"alpha": "2", "beta": "1.5"}, "alpha"),
])
def test_bad_fields(doc, name):
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_dict(doc).kite()
    assert exc.value.field == name


def test_bad_json_and_bad_path(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{alpha:")
    assert cli.main(["complexity", "--config", str(p)]) == 2
    assert cli.main(["complexity", "--config", str(tmp_path / "nope.json")]) == 2
    assert cli.main(["no-such-command"]) == 2


@given(st.integers(1, 60), st.integers(0, 2 ** 64 - 1), st.sampled_from(["0.3", "pi/7", "sqrt(2)/4"]))
def test_config_roundtrip(n_max, seed, theta):
    cfg = RunConfig("0.7", "0.9", theta=theta, n_max=n_max, seed=seed)
    back = RunConfig.from_json(cfg.to_json())
    assert back == cfg and back.digest() == cfg.digest()


def test_complexity_golden_csv(tmp_path, capsys):
    out = tmp_path / "o"
    code = cli.main(["complexity", "--alpha", "0.7", "--beta", "0.9", "--theta", "0.3",
                     "--horizon", "30", "--out", str(out)])
    assert code == 0
    lines = (out / "complexity.csv").read_text().splitlines()
    assert lines[0] == "n,p_theta_n"
    assert [int(l.split(",")[1]) for l in lines[1:]] == GOLDEN
    summary = json.loads((out / "complexity_summary.json").read_text())
    assert summary["p_final"] == GOLDEN[-1] and summary["stabilized_at"] is None
    assert "stabilized" not in capsys.readouterr().out


def test_square_kite_reports_plateau(tmp_path, capsys):
    out = tmp_path / "o"
    code = cli.main(["complexity", "--alpha", "pi/4", "--beta", "pi/4", "--theta", "0",
                     "--horizon", "60", "--out", str(out)])
    assert code == 0
    summary = json.loads((out / "complexity_summary.json").read_text())
    assert summary["stabilized_at"] is not None
    assert "profile stabilized at n*=" in capsys.readouterr().out


def test_manifest(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["diophantine", "--alpha", "sqrt(2)/2", "--beta", "sqrt(3)/3",
                     "--horizon", "40", "--out", str(out)]) == 0
    man = json.loads((out / "manifest_diophantine.json").read_text())
    assert man["command"] == "diophantine"
    assert man["config"]["k_max"] == 40
    assert set(man["outputs"]) == {"small_denominators.csv", "net_function.tsv"}
    assert man["source_labels"]["N"] == "certified"
    assert {"kitecomplexity", "mpmath", "numpy", "python"} <= set(man["versions"])
    assert man["config_sha256"] == RunConfig.from_dict(man["config"]).digest()
    rows = (out / "small_denominators.csv").read_text().splitlines()
    assert rows[0] == "k,N_k,n,m" and len(rows) == 41


def test_verify_and_cache_agree(tmp_path):
    args = ["--alpha", "sqrt(5)/3", "--beta", "sqrt(7)/3", "--theta", "0.9"]
    cold = tmp_path / "cold"
    warm = tmp_path / "warm"
    assert cli.main(["verify"] + args + ["--out", str(cold)]) == 0
    # the warm run reuses the catalog and the profile written by earlier commands
    assert cli.main(["complexity"] + args + ["--horizon", "200", "--out", str(warm)]) == 0
    assert cli.main(["periodic"] + args + ["--out", str(warm)]) == 0
    assert cli.main(["verify"] + args + ["--out", str(warm)]) == 0
    assert (cold / "verify.csv").read_text() == (warm / "verify.csv").read_text()
    rows = [r.split(",") for r in (cold / "verify.csv").read_text().splitlines()[1:]]
    assert {r[0] for r in rows} == {"L", "N_theta", "generic"}
    assert all(r[5] != "FAIL" for r in rows)


def test_verify_flags_a_failing_bound(tmp_path):
    doc = {"alpha": "sqrt(2)/2", "beta": "sqrt(3)/3", "theta": "0.9", "n_grid": [2, 5],
           "constants": {"C_lower": 1e-12}, "out": str(tmp_path / "o")}
    assert cli.main(["verify", "--config", _write(tmp_path, doc)]) == 1


def test_internal_error_exit_code(tmp_path, monkeypatch):
    def boom(run):
        raise RuntimeError("boom")

    monkeypatch.setitem(cli.COMMANDS, "phi", boom)
    assert cli.main(["phi", "--alpha", "0.7", "--beta", "0.9", "--out", str(tmp_path)]) == 3


def test_figures_are_svg(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["figures", "--alpha", "0.7", "--beta", "0.9", "--out", str(out)]) == 0
    for name in ("kite.svg", "corridor.svg", "beam.svg"):
        text = (out / name).read_text()
        assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert os.path.exists(out / "manifest_figures.json")


def test_constants_override_keeps_calibrated_rest():
    from kitecomplexity.config import CALIBRATED

    c = RunConfig("0.7", "0.9", constants={"C_lower": 2.0}).constants_config()
    assert c.C_lower == 2.0 and c.provenance["C_lower"] == "user"
    assert c.C_dichotomy == CALIBRATED["C_dichotomy"] and c.provenance["C_dichotomy"] == "calibrated"
    with pytest.raises(ConfigError) as exc:
        RunConfig("0.7", "0.9", constants={"C_generic": -1})
    assert exc.value.field == "constants"
