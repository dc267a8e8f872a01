import json

import pytest

from mlec.cli import main, run
from mlec.config import config_from_dict, load_config
from mlec.errors import ParseError, ValidationError


def _run(tmp_path, kind, name, *extra):
    from conftest import CONFIG_DIR

    out = tmp_path / name
    code = main([kind, "--config", str(CONFIG_DIR / f"{name}.toml"), "--out", str(out), *extra])
    return code, out


@pytest.mark.parametrize(
    "kind,name",
    [
        ("design", "basictrans"),
        ("design", "eq2_roundtrip"),
        ("census", "rep2"),
        ("census", "rep3"),
        ("optimize", "two_level"),
        ("optimize", "step_cliff"),
        ("optimize", "flat"),
        ("optimize", "multilevel"),
        ("optimize", "autopilot"),
        ("simulate", "noisy"),
        ("simulate", "worked_fraction"),
        ("continuous", "continuous_constant"),
        ("continuous", "continuous_gaussian"),
        ("mismatch", "mismatch_swap"),
    ],
)
def test_shipped_configs_run(tmp_path, kind, name):
    extra = ("--trials", "3") if name == "worked_fraction" else ()
    code, out = _run(tmp_path, kind, name, *extra)
    assert code == 0
    report = json.loads((out / f"{kind}.json").read_text())
    assert report["kind"] == kind and report["error"] is None


def test_optimize_two_level_reports_skip(tmp_path):
    _, out = _run(tmp_path, "optimize", "two_level")
    alloc = json.loads((out / "optimize.json").read_text())["result"]["allocation"]
    assert alloc["K"][0] == 0.0 and alloc["status"] == "boundary"
    lines = (out / "energy_curve.csv").read_text().splitlines()
    assert lines[0] == "K_R,E_normalized,z,K_S" and len(lines) == 102


def test_census_rep3(tmp_path):
    _, out = _run(tmp_path, "census", "rep3")
    res = json.loads((out / "census.json").read_text())["result"]
    assert (res["valid"], res["correctable"], res["ambiguous"]) == (2, 6, 0)


def test_design_eq2(tmp_path):
    _, out = _run(tmp_path, "design", "eq2_roundtrip")
    res = json.loads((out / "design.json").read_text())["result"]
    code = res["codes"]["eq2"]
    assert code["rank"] == 3 and code["roundtrip"] is True
    assert code["matrix"] == [[1, 1, 0, 0], [0, 0, 1, 1], [1, 0, 1, 0], [0, 1, 0, 1]]
    assert res["decode"][0]["symbol"] == "C"
    assert res["decode"][1]["weights"] == {"A": 0.0, "B": 0.0, "C": 1.0, "D": 0.0}


def test_simulate_twice_is_byte_identical(tmp_path):
    _, a = _run(tmp_path, "simulate", "noisy", "--seed", "42")
    b = tmp_path / "again"
    from conftest import CONFIG_DIR

    main(["simulate", "--config", str(CONFIG_DIR / "noisy.toml"), "--seed", "42", "--out", str(b)])
    assert (a / "simulate.json").read_bytes() == (b / "simulate.json").read_bytes()
    assert (a / "trials.csv").read_bytes() == (b / "trials.csv").read_bytes()
    header = (a / "trials.csv").read_text().splitlines()[0]
    assert header == "trial,level,bits,detected,repaired,residual,energy_detect,energy_repair"


def test_domain_error_exit_1(tmp_path, capsys):
    cfg = tmp_path / "big.toml"
    cfg.write_text('kind = "census"\n[census]\nn = 2\nnu = 30\nvalid = [' + ", ".join(["[" + ", ".join(["0"] * 30) + "]"]) + "]\n")
    code = main(["census", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 1
    report = json.loads((tmp_path / "o" / "census.json").read_text())
    assert report["error"]["code"] == "SPACE_TOO_LARGE"
    assert "SPACE_TOO_LARGE" in capsys.readouterr().err


def test_infeasible_lp_exit_1(tmp_path):
    cfg = tmp_path / "lp.toml"
    cfg.write_text(
        'kind = "design"\n[alphabets]\nl = ["A","B"]\nb = ["a","b"]\n'
        '[codes.c]\ninput = "l"\noutput = "b"\nnu = 1\nwords = ["a","b"]\n'
        '[design]\n[[design.decode]]\ncode = "c"\nmethod = "lp"\nvector = [1, 1]\n'
    )
    code, report = run(load_config(cfg), tmp_path / "o")
    assert code == 1 and report["error"]["code"] == "INFEASIBLE"


def test_config_errors_exit_2(tmp_path, capsys):
    from conftest import CONFIG_DIR

    bad = tmp_path / "bad.toml"
    bad.write_text("kind = [")
    assert main(["census", "--config", str(bad)]) == 2
    assert main(["simulate", "--config", str(CONFIG_DIR / "rep3.toml")]) == 2
    assert main(["census", "--config", str(tmp_path / "missing.toml")]) == 2
    assert "config error" in capsys.readouterr().err


def test_validation_names_key_path():
    raw = {
        "kind": "simulate",
        "seed": 1,
        "alphabets": {"b": ["0", "1"]},
        "codes": {"p": {"input": "b", "output": "b", "nu": 1, "words": ["0", "1"]}},
        "simulate": {"source_length": 10, "hops": [{"code": "p"}, {"code": "p", "efficacy": {"z_max": 1.5}}]},
    }
    with pytest.raises(ValidationError) as exc:
        config_from_dict(raw)
    assert exc.value.key == "simulate.hops[1].efficacy"


def test_seed_rules():
    raw = {"kind": "mismatch", "mismatch": {}}
    with pytest.raises(ValidationError) as exc:
        config_from_dict(raw)
    assert exc.value.key == "seed"
    with pytest.raises(ValidationError):
        config_from_dict({"kind": "census", "census": {"n": 2, "nu": 2, "valid": [[0, 0]]}}, trials=3)


def test_unknown_kind_and_parse_error(tmp_path):
    with pytest.raises(ValidationError):
        config_from_dict({"kind": "dance"})
    bad = tmp_path / "x.json"
    bad.write_text("{")
    with pytest.raises(ParseError):
        load_config(bad)


def test_json_config_accepted(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "census", "census": {"n": 2, "nu": 3, "valid": [[0, 0, 0], [1, 1, 1]]}}))
    code, report = run(load_config(cfg))
    assert code == 0 and report["result"]["correctable"] == 6


def test_trials_override(tmp_path):
    _, out = _run(tmp_path, "simulate", "noisy", "--trials", "2")
    rows = (out / "trials.csv").read_text().splitlines()
    assert len(rows) == 1 + 2 * 2
