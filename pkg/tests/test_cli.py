import json
from pathlib import Path

import pytest

from thermal_casimir import cli

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

FLAT = """\
[geometry]
period = 400e-9
depth = 0
filling_factor = 0.5

[grid]
L = 1e-6
T = 0, 300

[quadrature]
N = 0
kx_nodes = 8
ky_nodes = 12
xi_nodes = 16
rel_tol = 0.01

[run]
ratio = theta

[plate]
model = gold

[ridge]
model = doped_silicon
"""


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_unknown_key_reports_line(tmp_path, capsys):
    path = write(tmp_path, FLAT.replace("depth = 0", "depht = 0"))
    assert cli.main(["force", "--config", path]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "run.ini:3" in err and "depht" in err


@pytest.mark.parametrize("edit", [
    ("L = 1e-6", "L = one"),
    ("model = gold", "model = unobtainium"),
    ("[grid]", "[grids]"),
    ("N = 0", "N = -2"),
    ("L = 1e-6", "L = -1e-6"),
    ("ratio = theta", "ratio = gamma"),
])
def test_malformed_config_exits_1(tmp_path, edit):
    path = write(tmp_path, FLAT.replace(*edit))
    assert cli.main(["force", "--config", path]) == cli.EXIT_CONFIG


def test_missing_config_exits_1(tmp_path):
    assert cli.main(["force", "--config", str(tmp_path / "nope.ini")]) == cli.EXIT_CONFIG


def test_environment_override(tmp_path):
    path = write(tmp_path, FLAT)
    base = cli.load_config(path, env={})
    over = cli.load_config(path, env={"TCASIMIR_GRID__L": "2e-6"})
    assert over.L_values == (2e-6,)
    assert over.hash != base.hash
    with pytest.raises(cli.ConfigError):
        cli.load_config(path, env={"TCASIMIR_GRID__SPEED": "1"})


def test_all_shipped_configs_parse():
    paths = sorted(CONFIGS.glob("*.ini"))
    assert paths
    for p in paths:
        cli.load_config(str(p), env={})


def test_sweep_csv_is_deterministic(tmp_path):
    path = write(tmp_path, FLAT)
    outs = []
    for i in range(2):
        out = tmp_path / f"out{i}.csv"
        assert cli.main(["sweep", "--config", path, "--out", str(out), "--threads", "2"]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    header, row = outs[0].decode().splitlines()
    assert header.startswith("config_hash,kind,L,a,T,value")
    assert float(row.split(",")[5]) > 1


def test_force_json_output(tmp_path):
    path = write(tmp_path, FLAT)
    out = tmp_path / "f.json"
    assert cli.main(["force", "--config", path, "--out", str(out), "--format", "json"]) == 0
    recs = json.loads(out.read_text())
    assert [r["T"] for r in recs] == [0.0, 300.0]
    assert all(r["pressure"] > 0 and r["converged"] for r in recs)


def test_convergence_failure_exits_2(tmp_path):
    text = FLAT.replace("rel_tol = 0.01", "rel_tol = 1e-9").replace("xi_nodes = 16", "xi_nodes = 2")
    assert cli.main(["force", "--config", write(tmp_path, text)]) == cli.EXIT_CONVERGENCE


def test_overlay_requires_experiment(tmp_path):
    assert cli.main(["overlay", "--config", write(tmp_path, FLAT)]) == cli.EXIT_CONFIG


def test_richardson_recovers_order():
    xs = [4.0, 8.0, 16.0]
    ys = [1 + 3 * x**-2 for x in xs]
    p, y = cli.richardson(xs, ys)
    assert p == pytest.approx(2.0)
    assert y == pytest.approx(1.0)


def test_validate_passes():
    assert cli.main(["validate"]) == cli.EXIT_OK


def test_validate_catches_wrong_normalization(capsys):
    assert cli.main(["validate", "--perturb-normalization", "1.01"]) == cli.EXIT_CONVERGENCE
    out = capsys.readouterr().out
    assert "Lifshitz a=0 match,False" in out
