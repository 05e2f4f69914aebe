import json

import pytest

from z2vqe.cli import EXIT_CAPACITY, EXIT_CONFIG, EXIT_OK, run
from z2vqe.config import ConfigError, load_config, parse_override, validate_config

BASE = {"experiment": "exact", "mu": 1.0, "J": 1.0, "m": 1.0}


def test_defaults():
    cfg = validate_config(BASE)
    assert cfg.shots == (None,) and cfg.P == (1,) and cfg.V == 0.0
    assert cfg.effective_max_iter() == 500
    assert validate_config(dict(BASE, optimizer="SPSA", shots=500)).effective_max_iter() == 300


@pytest.mark.parametrize("patch,needle", [
    ({"mu": 0}, "mu"),
    ({"V": -1}, "V"),
    ({"P": 0}, "P"),
    ({"P": 3, "charges": [[5, 0]]}, "off-lattice"),
    ({"charges": [[0, 0], [0, 0]]}, "two static charges"),
    ({"colour": "red"}, "colour"),
    ({"shots": 100}, "spsa"),
    ({"ansatz": "XY"}, "ansatz"),
    ({"experiment": "plot"}, "experiment"),
])
def test_rejections_name_the_problem(patch, needle):
    with pytest.raises(ConfigError, match=needle):
        validate_config(dict(BASE, **patch))


def test_missing_mu_is_named():
    raw = dict(BASE)
    del raw["mu"]
    with pytest.raises(ConfigError, match="'mu'"):
        validate_config(raw)


def test_sweep_lists_and_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(dict(BASE, P=[1, 2])))
    cfg = load_config(path, ["layers=[1,2,3]", "ansatz=zz", "J=2.5"])
    assert cfg.P == (1, 2) and cfg.layers == (1, 2, 3) and cfg.ansatz == ("ZZ",)
    assert cfg.J == 2.5
    assert parse_override("init=pi") == ("init", "pi")
    with pytest.raises(ConfigError):
        parse_override("novalue")


def test_cli_exact_writes_outputs(tmp_path, capsys):
    code = run(["exact", "--set", "mu=1.3", "--set", "J=0.7", "--set", "m=0.5",
                "--output-dir", str(tmp_path)])
    assert code == EXIT_OK
    assert "sector_energy=-6.79224047537" in capsys.readouterr().out
    echo = json.loads((tmp_path / "config.json").read_text())
    assert echo["mu"] == 1.3 and echo["experiment"] == "exact"
    assert (tmp_path / "exact.csv").read_text().startswith("P,sector_energy,vacuum_energy")


def test_cli_exit_codes(tmp_path, monkeypatch):
    monkeypatch.setenv("Z2VQE_OUTPUT_DIR", str(tmp_path))
    assert run(["exact", "--set", "J=1", "--set", "m=1"]) == EXIT_CONFIG
    assert run(["exact", "--set", "mu=1", "--set", "J=1", "--set", "m=1",
                "--set", "P=4", "--set", "oracle_method=dense"]) == EXIT_CAPACITY
    assert run(["dump-layout", "--set", "mu=1", "--set", "J=1", "--set", "m=1"]) == EXIT_OK
    assert json.loads((tmp_path / "layout.json").read_text())["0"]["kind"] == "site"


def test_cli_dump_hamiltonian_round_trips(tmp_path):
    from z2vqe.pauli import PauliSum
    assert run(["dump-hamiltonian", "--set", "mu=1", "--set", "J=1", "--set", "m=1",
                "--output-dir", str(tmp_path)]) == EXIT_OK
    h = PauliSum.parse((tmp_path / "hamiltonian.txt").read_text(), 8)
    assert len(h) == 17
