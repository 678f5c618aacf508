import json

import pytest

from kovtop.cli import main
from kovtop.corpus import CORPUS_ENV


@pytest.fixture
def mol(corpus_dir):
    return lambda i: str(corpus_dir / "molecules" / f"m{i:02d}.mol")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_default_and_mutated(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0 and "FAIL" not in out
    code, out, _ = run(capsys, "verify", "--mutate", "K")
    assert code == 1 and "FAIL {H,K} = " in out
    code, out, _ = run(capsys, "--json", "verify", "--mutate", "f1")
    data = json.loads(out)
    assert code == 1 and data["schema"] == 1 and not data["passed"]
    assert any(not c["pass"] and c["residual"] != "0" for c in data["checks"])


def test_homology_and_classify(capsys, mol):
    assert run(capsys, "homology", mol(13))[:2] == (0, "H1 = Z^1\n")
    code, out, _ = run(capsys, "homology", "--json", mol(25))
    assert json.loads(out) == {"schema": 1, "rank": 3, "torsion": []}
    code, out, _ = run(capsys, "classify", mol(25))
    assert code == 0 and out.splitlines()[0] == "(S^1xS^2)#(S^1xS^2)#(S^1xS^2)"
    code, out, _ = run(capsys, "classify", "--json", "--trace", mol(25))
    data = json.loads(out)
    assert data["class"] == "(S^1xS^2)#(S^1xS^2)#(S^1xS^2)" and len(data["trace"]) == 3


def test_propagate(capsys, corpus_dir):
    code, out, _ = run(capsys, "propagate", str(corpus_dir))
    assert code == 0
    assert "S^3: 1, 2, 3, 8, 9, 10, 11, 16, 17, 18, 21, 23" in out
    assert out.rstrip().endswith("unreached: 5, 26, 30")


def test_corpus_env_override(capsys, monkeypatch, tmp_path):
    monkeypatch.setenv(CORPUS_ENV, str(tmp_path / "missing"))
    assert run(capsys, "propagate")[0] == 2


def test_molecule_check(capsys, mol):
    code, out, _ = run(capsys, "molecule", "check", mol(1), mol(25))
    assert code == 0 and out.count("ok ") == 2
    code, out, _ = run(capsys, "molecule", "check", "--format", mol(25))
    assert out == open(mol(25)).read()


def test_scan(capsys, tmp_path):
    out_json = tmp_path / "r.json"
    csv_dir = tmp_path / "csv"
    code, out, _ = run(capsys, "scan", "--kappa", "1", "--a", "2", "--b", "0.5", "--h", "0:1:2",
                       "--samples", "800", "--seed", "5", "--json", str(out_json), "--csv", str(csv_dir))
    assert code == 0 and "components=1" in out
    data = json.loads(out_json.read_text())
    assert data["schema"] == 1 and data["seed"] == 5 and len(data["rows"]) == 2
    assert sorted(p.name for p in csv_dir.iterdir()) == ["cloud_000.csv", "cloud_001.csv"]


@pytest.mark.parametrize("argv", [
    ["--json", "classify", "{m25}"],
    ["propagate", "--json"],
    ["--json", "--seed", "9", "scan", "--kappa", "1", "--a", "2", "--b", "0.5", "--h", "1", "--samples", "500"],
    ["verify", "--json"],
])
def test_json_is_byte_identical(capsys, mol, argv):
    argv = [a.replace("{m25}", mol(25)) for a in argv]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second and first[0] == 0
    assert json.loads(first[1])["schema"] == 1


BAD_SYNTAX = "atom a1 A\n"
BAD_VALID = "atom a1 A; atom a2 A; edge a1.1 a2.1 r=3/2 eps=+1;\n"
UNKNOWN = "atom s saddle(1,1,0); atom a A; edge s.1 a.1 r=1/3 eps=+1;\n"


@pytest.mark.parametrize("cmd", ["homology", "classify"])
@pytest.mark.parametrize("content,expected", [(BAD_SYNTAX, 2), (BAD_VALID, 1), (None, 2)])
def test_exit_code_matrix(capsys, tmp_path, cmd, content, expected):
    path = tmp_path / "m.mol"
    if content is not None:
        path.write_text(content)
    code, _, err = run(capsys, cmd, str(path))
    assert code == expected and err.startswith("error:")


def test_domain_failures_exit_1(capsys, tmp_path):
    path = tmp_path / "u.mol"
    path.write_text(UNKNOWN)
    assert run(capsys, "classify", str(path))[0] == 1
    assert run(capsys, "scan", "--kappa", "1", "--a", "2", "--b", "1", "--h", "0", "--samples", "10")[0] == 1
    assert run(capsys, "scan", "--kappa", "1", "--a", "2", "--b", "0.5", "--h", "1:0:3")[0] == 2


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2
