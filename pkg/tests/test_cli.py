import json
from pathlib import Path

import pytest

from nosign.cli import ConfigError, ManifestError, load_config, main, parse_config, replay, run_config
from nosign.field import GridSpec, sample, save_field
from nosign.fixtures import resolve

CONFIGS = sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.ini"))


def _report(out: Path) -> dict:
    return json.loads((out / "report.json").read_text())


# -- parsing -----------------------------------------------------------------

def test_unknown_kind_names_its_line():
    text = "# header\n[experiment]\nN = 65\nkind = bake\n"
    with pytest.raises(ConfigError, match=r"cfg\.ini:4 \[kind\]"):
        parse_config(text, "cfg.ini")


def test_json_syntax_error_has_line():
    with pytest.raises(ConfigError, match=r"c\.json:3"):
        parse_config('{\n "kind": "solve",\n "N" 5\n}', "c.json")


def test_json_config_accepted():
    cfg = parse_config('{"kind": "recursion-suite", "k_max": 1000}')
    assert cfg.kind == "recursion-suite" and cfg.get("k_max", cast=int) == 1000


def test_missing_section_and_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="section"):
        parse_config("kind = solve\n")
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.ini")


def test_bad_value_reports_key_and_line():
    cfg = parse_config("[experiment]\nkind = classify\nN = many\n", "x.ini")
    with pytest.raises(ConfigError, match=r"x\.ini:3 \[N\]"):
        cfg.get("N", cast=int)
    with pytest.raises(ConfigError, match=r"\[fixture\].*required"):
        cfg.require("fixture")


def test_keys_are_case_sensitive():
    cfg = parse_config("[experiment]\nkind = classify\nn = 3\nN = 65\n")
    assert cfg.get("n") == "3" and cfg.get("N") == "65"


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nkind = classify\nfixture = blob:x=1\n")
    assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "bad.ini:3 [fixture]" in capsys.readouterr().err


# -- runs --------------------------------------------------------------------

@pytest.mark.parametrize("config", CONFIGS, ids=lambda p: p.stem)
def test_shipped_configs_pass(config, tmp_path):
    out = tmp_path / config.stem
    assert main(["run", str(config), "--out", str(out)]) == 0
    rep = _report(out)
    assert rep["passed"] and not rep["errors"]
    assert rep["config"]["kind"] == load_config(config).kind
    for name, digest in rep["artifacts"].items():
        assert (out / name).exists() and len(digest) == 64


def test_failing_run_exit_code(tmp_path, capsys):
    cfg = tmp_path / "regular.ini"
    cfg.write_text("[experiment]\nkind = classify\nfixture = radial:R=0.5\nN = 257\ncenter = 0.5 0\nr_max = 0.4\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 1
    rep = _report(tmp_path / "o")
    assert not rep["passed"] and "not singular" in rep["errors"][0]
    assert "failed" in capsys.readouterr().out


def test_runs_are_deterministic(tmp_path):
    cfg = load_config(CONFIGS[[p.stem for p in CONFIGS].index("structure")])
    a = run_config(cfg, tmp_path / "a")
    b = run_config(cfg, tmp_path / "b")
    assert a["artifacts"] == b["artifacts"]


def test_replay_identical_and_with_new_seed(tmp_path):
    cfg = load_config(CONFIGS[[p.stem for p in CONFIGS].index("structure")])
    run_config(cfg, tmp_path / "run")
    same = replay(tmp_path / "run" / "report.json", tmp_path / "again")
    assert same["replay"]["identical"] and same["replay"]["verdicts_match"]
    other = replay(tmp_path / "run" / "report.json", tmp_path / "reseeded", seed=11)
    assert not other["replay"]["identical"] and other["replay"]["mismatched"]
    assert other["replay"]["verdicts_match"]
    assert other["config"]["seed"] == 11


def test_replay_via_main(tmp_path, capsys):
    cfg = CONFIGS[[p.stem for p in CONFIGS].index("classify_cubic")]
    assert main(["run", str(cfg), "--out", str(tmp_path / "r")]) == 0
    assert main(["replay", str(tmp_path / "r" / "report.json"), "--out", str(tmp_path / "rr")]) == 0
    assert "artifacts identical" in capsys.readouterr().out


def test_missing_manifest(tmp_path, capsys):
    assert main(["replay", str(tmp_path / "absent.json")]) == 2
    assert "missing inputs" in capsys.readouterr().err


def test_replay_detects_missing_field_dump(tmp_path):
    spec = GridSpec(2, 129)
    header, data = save_field(sample(spec, resolve("perturbed:d=3")), tmp_path / "u")
    cfg_path = tmp_path / "from_dump.ini"
    cfg_path.write_text(f"[experiment]\nkind = classify\nfixture = perturbed:d=3\nfield = {header.name}\n")
    rep = run_config(load_config(cfg_path), tmp_path / "run")
    assert rep["passed"] and rep["inputs"] == [str(header)]
    data.unlink()
    with pytest.raises(ManifestError) as exc:
        replay(tmp_path / "run" / "report.json")
    assert str(data) in exc.value.missing
