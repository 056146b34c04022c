import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from convexroof import cli, io
from convexroof.core import InvalidInputError, random_density, random_unitary
from convexroof.measures import bell_state, ghzw_mixture


@pytest.fixture
def files(tmp_path):
    def write(name, m, **kw):
        path = tmp_path / name
        io.write_density_file(path, m, **kw)
        return str(path)
    return write


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_density_file_round_trip_is_bit_identical(tmp_path_factory, seed, dim):
    m = random_density(dim, dim, seed).matrix
    path = tmp_path_factory.mktemp("rt") / "rho.json"
    io.write_density_file(path, m, label="x", dims=[dim])
    back, meta = io.read_density_file(path)
    assert np.array_equal(back.view(np.float64), m.view(np.float64))
    assert meta == {"label": "x", "dims": [dim]}


@pytest.mark.parametrize("doc,msg", [
    ([], "top level"),
    ({"dim": 2}, "missing key"),
    ({"dim": 0, "entries": []}, "positive"),
    ({"dim": 1, "entries": [[1]]}, r"\[re, im\]"),
    ({"dim": 1, "entries": [[[1, 0]], [[1, 0]]]}, "rows"),
    ({"dim": 1, "entries": [[[1, 0], [0, 0]]]}, "entries"),
    ({"dim": 1, "entries": [[["a", 0]]]}, "pair of numbers"),
    ({"dim": 2, "entries": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]], "dims": [3]}, "dims"),
])
def test_parse_errors(doc, msg):
    with pytest.raises(InvalidInputError, match=msg):
        io.parse_density_document(doc)


def test_load_rejects_invalid_states(tmp_path, files):
    path = files("bad.json", np.diag([0.7, 0.7]))
    with pytest.raises(InvalidInputError, match="trace"):
        io.load_density(path)
    (tmp_path / "broken.json").write_text("{not json")
    with pytest.raises(InvalidInputError, match="line 1"):
        io.load_density(tmp_path / "broken.json")
    with pytest.raises(InvalidInputError, match="cannot read"):
        io.load_density(tmp_path / "missing.json")


def test_csv_has_config_comment_and_header(tmp_path):
    path = tmp_path / "out.csv"
    with io.output_stream(path) as fh:
        io.write_csv(fh, ("a", "b"), [(1, 0.5), (2, None)], {"seed": 3})
    lines = path.read_text().splitlines()
    assert lines[0] == '# config: {"seed": 3}'
    assert lines[1] == "a,b"
    config, rows = io.read_csv(path)
    assert config == {"seed": 3}
    assert rows == [{"a": "1", "b": "0.5"}, {"a": "2", "b": ""}]


def test_eval_bell_and_mixed(files, capsys):
    bell = files("bell.json", np.outer(bell_state(), bell_state().conj()))
    assert cli.main(["eval", bell, "--seed", "1", "--restarts", "2"]) == 0
    out = capsys.readouterr().out
    assert "eof-entropy = 1.0000000000" in out
    mixed = files("mixed.json", np.eye(4) / 4)
    assert cli.main(["eval", mixed, "--seed", "1", "--restarts", "3"]) == 0
    value = float(capsys.readouterr().out.split("=")[1].split()[0])
    assert abs(value) < 1e-6


def test_eval_ghzw_both_algorithms_agree(files, tmp_path, capsys):
    path = files("ghzw.json", ghzw_mixture(0.9).matrix, dims=[2, 2, 2])
    out = tmp_path / "eval.csv"
    dump = tmp_path / "ens.json"
    code = cli.main(["eval", path, "--measure", "tangle", "--algorithm", "both", "--seed", "2",
                     "--restarts", "5", "--out", str(out), "--dump-ensemble", str(dump)])
    assert code == 0
    config, rows = io.read_csv(out)
    assert config["seed"] == 2 and config["measure"] == "tangle"
    values = [float(r["value"]) for r in rows]
    assert abs(values[0] - values[1]) < 1e-6
    ens = json.loads(dump.read_text())
    p = np.array(ens["probabilities"])
    states = np.array(ens["states"])[..., 0] + 1j * np.array(ens["states"])[..., 1]
    assert np.allclose((states.T * p) @ states.conj(), ghzw_mixture(0.9).matrix, atol=1e-10)


def test_eval_input_errors(files, tmp_path, capsys):
    bad = files("bad.json", np.array([[1, 1], [0, 0]]))
    assert cli.main(["eval", bad, "--seed", "0"]) == 2
    assert "not Hermitian" in capsys.readouterr().err
    mixed = files("mixed.json", np.eye(4) / 4)
    assert cli.main(["eval", mixed, "--seed", "0", "--cardinality", "2"]) == 2
    assert cli.main(["eval", mixed, "--seed", "0", "--restarts", "0"]) == 2
    assert cli.main(["eval", str(tmp_path / "nope.json"), "--seed", "0"]) == 2


def test_optimization_failure_exit_code(files, monkeypatch):
    def broken(*args, **kwargs):
        raise FloatingPointError("diverged")

    monkeypatch.setitem(cli.OPTIMIZERS, "cg", broken)
    mixed = files("mixed.json", np.eye(4) / 4)
    assert cli.main(["eval", mixed, "--seed", "0", "--restarts", "2"]) == 3


def test_seed_is_generated_and_printed(files, capsys):
    bell = files("bell.json", np.outer(bell_state(), bell_state().conj()))
    assert cli.main(["eval", bell, "--restarts", "1"]) == 0
    assert capsys.readouterr().err.startswith("seed: ")


def test_lu_check(files, capsys):
    rng = np.random.default_rng(0)
    rho = random_density(4, 4, rng).matrix
    u = np.kron(random_unitary(2, rng), random_unitary(2, rng))
    a = files("a.json", rho)
    b = files("b.json", u @ rho @ u.conj().T)
    assert cli.main(["lu-check", a, b, "--seed", "0", "--restarts", "3"]) == 0
    out = capsys.readouterr().out
    assert float(out.split(":")[1].split()[0]) < 1e-6
    assert "U1 angles" in out and "U2 angles" in out
    c = files("c.json", random_density(4, 4, 9).matrix)
    assert cli.main(["lu-check", a, c, "--seed", "0"]) == 0
    assert "spectral lower bound" in capsys.readouterr().out
    d = files("d.json", random_density(8, 8, 1).matrix)
    assert cli.main(["lu-check", a, d, "--seed", "0"]) == 2
    e = files("e.json", random_density(6, 6, 1).matrix)
    assert cli.main(["lu-check", e, e, "--seed", "0"]) == 2
    assert cli.main(["lu-check", e, e, "--seed", "0", "--local-dims", "2,3", "--restarts", "2"]) == 0


def test_spinring_csv_and_determinism(tmp_path):
    args = ["spinring", "--n", "2..3", "--temps", "1e-3,0", "--b-grid", "0.05,0.3", "--seed", "11",
            "--restarts", "2"]
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(args + ["--out", str(first)]) == 0
    assert cli.main(args + ["--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    config, rows = io.read_csv(first)
    assert config["seed"] == 11
    assert list(rows[0]) == ["N", "T", "b", "gamma", "gamma_err_estimate", "optimizer", "restarts",
                             "seconds"]
    assert len(rows) == 8
    assert all(r["seconds"] == "" for r in rows)


def test_spinring_errors(capsys):
    assert cli.main(["spinring", "--n", "15", "--seed", "0"]) == 2
    assert "exceeds" in capsys.readouterr().err
    assert cli.main(["spinring", "--n", "x", "--seed", "0"]) == 2
    assert cli.main(["spinring", "--b-grid", "1:0.1:5", "--seed", "0"]) == 2
    assert cli.main(["spinring", "--temps", "-1", "--seed", "0"]) == 2


def test_spinring_curve(tmp_path):
    out = tmp_path / "curve.csv"
    assert cli.main(["spinring", "--n", "2", "--temps", "1e-4,1e-3", "--b-grid", "0.01:2:8",
                     "--curve", "--seed", "0", "--restarts", "2", "--out", str(out)]) == 0
    _, rows = io.read_csv(out)
    deficits = [float(r["one_minus_gamma_max"]) for r in rows]
    assert deficits[0] < deficits[1]
    assert float(rows[0]["b_fwhm"]) == pytest.approx(1.0)


def test_parse_helpers():
    assert cli.parse_spins("2..5") == [2, 3, 4, 5]
    assert cli.parse_spins("3,4") == [3, 4]
    assert len(cli.parse_b_grid("default")) == 161
    assert np.allclose(cli.parse_b_grid("0.1:1:2"), [0.1, 1.0])
    assert np.allclose(cli.parse_b_grid("0.2,0.5"), [0.2, 0.5])
    with pytest.raises(InvalidInputError):
        cli.parse_b_grid("0,1")


def test_benchmark_ghzw_pure_point(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    code = cli.main(["benchmark", "ghzw", "--etas", "0.2,2", "--algorithm", "qn",
                     "--restarts", "2", "--seed", "4", "--out", str(out)])
    assert code == 0
    summary = capsys.readouterr().out
    assert "success" in summary
    _, rows = io.read_csv(out)
    pure = [r for r in rows if r["case"].startswith("eta=2*")]
    # eta clipped to 1: the GHZ state, tangle exactly 1 with no iterations
    assert float(pure[0]["value"]) == pytest.approx(1.0, abs=1e-12)
    assert float(pure[0]["error"]) < 1e-12


def test_benchmark_eof_traces(tmp_path):
    out = tmp_path / "eof.csv"
    assert cli.main(["benchmark", "eof", "--algorithm", "cg", "--restarts", "1", "--seed", "0",
                     "--out", str(out)]) == 0
    _, rows = io.read_csv(out)
    cases = {r["case"] for r in rows}
    assert len(cases) == 10
    for case in cases:
        errs = [float(r["error"]) for r in rows if r["case"] == case]
        assert errs[-1] <= errs[0]
