import json

import pytest

from noiseless import multiplicity as mult
from noiseless.cli import main, parse_grid
from noiseless.errors import DomainError
from noiseless.tables_io import parse_table_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_table_restricted(capsys, golden_dir):
    code, out, _ = run(capsys, "table", "--mode", "restricted", "--max-slots", "6",
                       "--max-photons", "6", "--format", "csv")
    assert code == 0
    assert out.startswith("# nss ")
    doc = parse_table_csv(out, "restricted")
    golden_doc = parse_table_csv((golden_dir / "table1_restricted.csv").read_text(), "restricted")
    assert set(golden_doc.cells) <= set(doc.cells)


def test_table_general_default_format(capsys, golden_dir):
    code, out, _ = run(capsys, "table", "--mode", "general", "--max-slots", "8", "--max-photons", "4")
    assert code == 0
    golden_doc = parse_table_csv((golden_dir / "table2_general.csv").read_text(), "general")
    assert set(golden_doc.cells) <= set(parse_table_csv(out, "general").cells)


def test_table_bad_bounds(capsys):
    code, _, err = run(capsys, "table", "--max-slots", "0", "--max-photons", "3")
    assert code == 1
    assert "usage" in err


def test_table_to_file(capsys, tmp_path):
    out = tmp_path / "t.json"
    assert run(capsys, "table", "--max-slots", "3", "--max-photons", "3", "--format", "json",
               "--out", str(out))[0] == 0
    assert json.loads(out.read_text())["mode"] == "restricted"


@pytest.mark.parametrize(
    "argv, value, flags",
    [
        (["--slots", "5", "--photons", "3", "--spin2", "1", "--mode", "general"], "40",
         "pure_phase=false optimal=true hybrid=true"),
        (["--slots", "4", "--photons", "3", "--spin2", "1", "--mode", "restricted"], "8",
         "pure_phase=false optimal=true hybrid=true"),
        (["--slots", "4", "--photons", "3", "--spin2", "3", "--mode", "restricted"], "4",
         "pure_phase=true optimal=false hybrid=true"),
    ],
)
def test_multiplicity(capsys, argv, value, flags):
    code, out, _ = run(capsys, "multiplicity", *argv)
    lines = [ln for ln in out.splitlines() if not ln.startswith("#")]
    assert code == 0
    assert lines == [value, flags]


def test_multiplicity_parity_error(capsys):
    code, _, err = run(capsys, "multiplicity", "--slots", "2", "--photons", "3", "--spin2", "2")
    assert code == 1
    assert "parity" in err


def test_parse_grid():
    assert parse_grid("geometric:2:16384") == [2**k for k in range(1, 15)]
    assert parse_grid("list:1,5,9") == [1, 5, 9]
    for bad in ["geometric:2", "list:", "linear:1:2", "list:a,b"]:
        with pytest.raises(DomainError):
            parse_grid(bad)


def test_capacity_and_fit(capsys, tmp_path):
    sweep = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "capacity", "--kind", "quantum", "--grid", "geometric:2:16384",
                     "--out", str(sweep))
    assert code == 0
    rows = [ln for ln in sweep.read_text().splitlines() if not ln.startswith("#")]
    assert len(rows) == 1 + 14
    code, out, _ = run(capsys, "fit", "--input", str(sweep))
    assert code == 0
    line = [ln for ln in out.splitlines() if ln.startswith("kind=quantum")][0]
    fields = dict(kv.split("=") for kv in line.split())
    assert 0.74 <= float(fields["exponent"]) <= 0.94
    assert {"limit", "amplitude", "residual"} <= set(fields)


def test_capacity_bad_grid(capsys):
    code, _, err = run(capsys, "capacity", "--grid", "geometric:2")
    assert code == 1
    assert "malformed grid" in err


def test_fit_too_few_points(capsys, tmp_path):
    sweep = tmp_path / "short.csv"
    assert run(capsys, "capacity", "--kind", "quantum", "--grid", "list:128,256,512",
               "--out", str(sweep))[0] == 0
    code, _, err = run(capsys, "fit", "--input", str(sweep))
    assert code == 1
    assert "at least 5" in err


def test_fit_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "fit", "--input", str(tmp_path / "nope.csv"))
    assert code == 1
    assert "nope.csv" in err


def test_verify_defaults(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0
    assert "all identities hold" in out


def test_verify_restricted_eight(capsys):
    code, _, _ = run(capsys, "verify", "--max-slots", "8", "--max-photons", "8", "--mode", "restricted")
    assert code == 0


def test_verify_numeric(capsys):
    assert run(capsys, "verify", "--max-slots", "4", "--max-photons", "4", "--numeric")[0] == 0


def test_verify_detects_corrupted_memo(capsys, monkeypatch):
    cache = mult.GeneralMultiplicityCache()
    monkeypatch.setattr(mult, "_GENERAL_CACHE", cache)
    cache.ensure(6, 6)
    cache.table[(5, 3, 1)] += 1
    code, out, _ = run(capsys, "verify")
    assert code == 2
    failing = [ln for ln in out.splitlines() if ln.startswith("FAIL")]
    assert any("N=5 L=3 2j=1" in ln for ln in failing)
    assert any(ln.startswith("FAIL dimension [general] N=5 L=3") for ln in failing)


def test_simulate(capsys):
    argv = ["simulate", "--slots", "3", "--photons", "3", "--spin2", "1", "--mode", "restricted",
            "--samples", "100", "--seed", "7"]
    code, out, _ = run(capsys, *argv)
    assert code == 0
    assert "# seed: 7" in out
    values = dict(ln.split("=", 1) for ln in out.splitlines() if ln.startswith(("min_", "mean_", "max_")))
    assert float(values["min_fidelity"]) >= 1 - 1e-9
    assert float(values["max_leakage"]) < 1e-9
    assert run(capsys, *argv)[1] == out


def test_simulate_guard(capsys, monkeypatch):
    monkeypatch.setenv("NSS_DIM_GUARD", "10")
    code, _, err = run(capsys, "simulate", "--slots", "4", "--photons", "3", "--spin2", "1",
                       "--mode", "restricted")
    assert code == 1
    assert "32" in err


def test_basis_export(capsys, tmp_path):
    path = tmp_path / "basis.json"
    code, _, _ = run(capsys, "basis", "--slots", "4", "--photons", "3", "--spin2", "1",
                     "--mode", "restricted", "--out", str(path))
    assert code == 0
    doc = json.loads(path.read_text())
    assert doc["logical_dim"] == 8
    assert doc["meta"]["version"]


def test_bad_seed(capsys):
    code, _, _ = run(capsys, "simulate", "--slots", "1", "--photons", "1", "--spin2", "1",
                     "--seed", str(2**64))
    assert code == 1
