import json

import pytest

from dbarspec import cli
from dbarspec.config import ConfigError, parse_config, with_overrides

SMALL = """
seed = 3
analyses = ["criteria", "spectrum", "identity"]

[weight]
name = "gaussian"

[criteria]
checks = ["ball_linear", "shigekawa"]
samples_per_shell = 32
ball_centers = 4
bergman_k_max = 4

[spectrum]
cutoff = 2.5

[grid]
L = 4.0
N = 24

[identity]
kmh_forms = 2
"""


def test_parse_valid():
    cfg = parse_config(SMALL)
    assert cfg.seed == 3 and cfg.grid.N == 24
    assert cfg.criteria.checks == ("ball_linear", "shigekawa")
    assert cfg.build_weight().name == "gaussian"
    assert "dir" not in cfg.echo["output"]


def test_decoupled_weight_config():
    cfg = parse_config('[weight]\ndecoupled = [{name = "radial_power", params = {alpha = 4}}, {name = "gaussian"}]\n')
    w = cfg.build_weight()
    assert w.n == 2 and w.total.name == "decoupled"


@pytest.mark.parametrize("text,needle", [
    ('[weight]\nname = "gaussian"\nbogus = 1\n', "line 3: unknown key 'weight.bogus'"),
    ('[weight]\nname = "radial_power"\nparams = { alpha = -2 }\n', "line 3: 'weight.params.alpha' must be >= 0"),
    ('[weight]\nname = "nope"\n', "line 2: unknown weight 'nope'"),
    ('[weight]\nname = "gaussian"\n[grid]\nN = "big"\n', "line 4: 'grid.N' must be a number"),
    ('[weight]\nname = "gaussian"\n[criteria]\nchecks = ["x"]\n', "unknown check 'x'"),
    ('analyses = ["magic"]\n[weight]\nname = "gaussian"\n', "line 1: 'analyses'"),
    ('[grid]\nN = 8\n', "missing required section [weight]"),
    ('[weight\n', "TOML syntax error"),
])
def test_invalid_configs(text, needle):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert any(needle in e for e in exc.value.errors), exc.value.errors


def test_overrides():
    cfg = with_overrides(parse_config(SMALL), seed=9, grid_N=32, out="elsewhere", normalize_timings=True)
    assert cfg.seed == 9 and cfg.grid.N == 32 and cfg.output.dir == "elsewhere"
    assert cfg.echo["seed"] == 9 and cfg.echo["output"] == {"normalize_timings": True}


def _write(tmp_path, text):
    p = tmp_path / "c.toml"
    p.write_text(text)
    return p


def test_cli_exit_codes(tmp_path, capsys):
    bad = _write(tmp_path, '[weight]\nname = "gaussian"\nbogus = 1\n')
    assert cli.main(["analyze", "--config", str(bad), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    assert "line 3" in capsys.readouterr().err
    assert cli.main(["analyze", "--config", str(tmp_path / "missing.toml")]) == cli.EXIT_CONFIG


def test_cli_numerical_failure(tmp_path, monkeypatch):
    from dbarspec import report
    from dbarspec.quadrature import QuadratureError

    def boom(cfg):
        raise QuadratureError("non-finite integrand")

    monkeypatch.setattr(cli, "run", boom)
    cfg = _write(tmp_path, SMALL)
    assert cli.main(["analyze", "--config", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_NUMERICAL
    assert report.run is not boom


def test_cli_report_contents_and_determinism(tmp_path):
    cfg = _write(tmp_path, SMALL)
    outs = [tmp_path / "a", tmp_path / "b"]
    for o in outs:
        assert cli.main(["report", "--config", str(cfg), "--out", str(o), "--seed", "3",
                         "--normalize-timings"]) == cli.EXIT_OK
    files_a = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(outs[1]) for p in outs[1].rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes(), rel
    rep = json.loads((outs[0] / "report.json").read_text())
    assert rep["label"] == "numerical evidence, not proof"
    assert rep["seed"] == 3
    assert set(rep["spectrum"]) == {"top", "zero"}
    assert rep["criteria"]["verdicts"]["ball_linear"]["classification"] == "Bounded"
    assert rep["identity"]["kmh"]["max_relative_residual"] < 1e-8
    for v in rep["criteria"]["verdicts"].values():
        for f in v["evidence_files"]:
            assert (outs[0] / f).exists()


def test_cli_subcommand_restricts_analyses(tmp_path):
    cfg = _write(tmp_path, SMALL)
    assert cli.main(["identity-check", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert "identity" in rep and "criteria" not in rep and "spectrum" not in rep


def test_empty_analyses(tmp_path):
    cfg = _write(tmp_path, 'analyses = []\n[weight]\nname = "gaussian"\n')
    assert cli.main(["report", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["timings"] == {} and rep["warnings"] == []


def test_split_quartic_decoupled_scope(tmp_path):
    cfg = _write(tmp_path, '[weight]\nname = "split_quartic"\nparams = { n = 3, q = 2 }\n')
    assert cli.main(["decoupled", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert "out of calculus scope" in rep["decoupled"]["verdicts"]
