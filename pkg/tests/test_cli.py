import json

import pytest

from monadforge import acceptance, configuration
from monadforge.cli import main
from monadforge.sampling import canonical_examples
from monadforge.serialization import dump

CORPUS = {e.name: e.configuration for e in canonical_examples()}


@pytest.fixture
def corpus_dir(tmp_path):
    for name, C in CORPUS.items():
        dump(C, tmp_path / f"{name}.json")
    return tmp_path


@pytest.mark.parametrize("name,code", [
    ("valid-k1-n2", 0),
    ("zero-k1-n1", 3),
    ("scalar-dual-k1-n1", 3),
    ("nilpotent-k2-n2", 4),
    ("empty-k0-n2", 0),
])
def test_validate_exit_codes(corpus_dir, name, code):
    assert main(["validate", str(corpus_dir / f"{name}.json")]) == code


def test_validate_json(corpus_dir, capsys):
    assert main(["validate", str(corpus_dir / "zero-k1-n1.json"), "--json"]) == 3
    out = json.loads(capsys.readouterr().out)
    assert out["reason"] == "degenerate"
    assert out["witness"]["side"] == "forward"
    assert out["witness"]["mu"] == [[1.0, 0.0], [0.0, 0.0]]


def test_validate_io_and_schema_errors(tmp_path):
    assert main(["validate", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": "monad-forge/1", "k": 1}')
    assert main(["validate", str(bad)]) == 2


def test_tolerance_precedence(corpus_dir, monkeypatch):
    path = str(corpus_dir / "valid-k1-n2.json")
    monkeypatch.setenv("MONADFORGE_TOL", "1.0")
    assert main(["validate", path]) == 3
    assert main(["validate", path, "--tol", "1e-9"]) == 0
    monkeypatch.delenv("MONADFORGE_TOL")
    assert main(["validate", path]) == 0


def test_sample_is_reproducible(tmp_path):
    out1, out2 = tmp_path / "one", tmp_path / "two"
    args = ["sample", "--k", "2", "--n", "3", "--seed", "4", "--count", "2"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    names = sorted(p.name for p in out1.iterdir())
    assert len(names) == 2
    for name in names:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        assert main(["validate", str(out1 / name)]) == 0


def test_sample_regime_errors(tmp_path):
    assert main(["sample", "--k", "1", "--n", "1", "--out", str(tmp_path)]) == 6
    assert main(["sample", "--k", "3", "--n", "2", "--out", str(tmp_path)]) == 6


def test_homotopy_command(corpus_dir, capsys):
    assert main(["homotopy", str(corpus_dir / "valid-k1-n2.json"), "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["passed"]
    assert out["samples"][0]["note"] == "equals rank embedding"
    assert out["samples"][-1]["note"] == "constant endpoint"
    assert main(["homotopy", str(corpus_dir / "zero-k1-n2.json")]) == 3


def test_reports(capsys):
    assert main(["report", "dimension", "--grid", "2", "3", "--json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows
    assert main(["report", "freeness", "--grid", "2", "2"]) == 0
    assert main(["report", "invariance", "--grid", "2", "2"]) == 0


def test_selftest_list(capsys):
    assert main(["selftest", "--list"]) == 0
    ids = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
    assert ids == [c.id for c in acceptance.CRITERIA]


def test_sign_error_in_residual_is_caught(monkeypatch):
    # a wrong sign on the b c term must make the sampling criterion fail
    def wrong(C):
        return C.a1 @ C.x @ C.a2 - C.a2 @ C.x @ C.a1 - C.b @ C.c

    monkeypatch.setattr(configuration, "integrability_residual", wrong)
    assert main(["selftest", "--only", "AC2"]) == 7
