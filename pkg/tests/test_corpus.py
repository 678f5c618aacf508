import shutil

import pytest

from kovtop.classify import TypeConflict, parse_class
from kovtop.corpus import (
    CORPUS_ENV, default_corpus_dir, load_corpus, load_molecule_file, parse_arrows, run_propagation,
)
from kovtop.homology import first_homology

# reference classification of the 32 molecule ids
REFERENCE = {
    "S3": [1, 2, 3, 8, 9, 10, 11, 16, 17, 18, 21, 23],
    "2S3": [6, 7, 22],
    "S1xS2": [5, 12, 13, 14, 15, 20, 29, 32],
    "2(S1xS2)": [27, 31],
    "RP3": [4, 19, 24],
    "#2(S1xS2)": [26, 28, 30],
    "#3(S1xS2)": [25],
}
EXPECTED = {i: parse_class(t) for t, ids in REFERENCE.items() for i in ids}


def test_arrow_file_parsing():
    ids, seeds, arrows = parse_arrows(
        "ids 1-4\n# comment\nseed 2 (S1xS2)#(S1xS2) src  # trailing\narrow 1 2 y2,V.8\n"
    )
    assert ids == [1, 2, 3, 4]
    assert seeds[2][0] == parse_class("#2(S1xS2)")
    assert arrows == [(1, 2, "y2,V.8")]
    with pytest.raises(ValueError):
        parse_arrows("bogus 1 2")


def test_shipped_corpus_loads(corpus_dir):
    c = load_corpus(corpus_dir)
    assert c.ids == list(range(1, 33))
    assert sorted(c.molecules) == [1, 7, 11, 13, 25, 31]
    for i, m in c.molecules.items():
        assert first_homology(m) == EXPECTED[i].h1()


def test_propagation_matches_table(corpus_dir):
    report = run_propagation(load_corpus(corpus_dir))
    for i, t in report.types.items():
        assert t == EXPECTED[i], i
    assert report.unreached == [5, 26, 30]
    assert report.to_json()["schema"] == 1


def test_reversed_convention_gives_same_molecule(tmp_path, corpus_dir):
    src = corpus_dir / "molecules" / "m25.mol"
    text = src.read_text().replace("convention: canonical", "convention: reversed")
    path = tmp_path / "m25r.mol"
    path.write_text(text)
    m = load_molecule_file(path)
    assert first_homology(m) == first_homology(load_molecule_file(src))
    path.write_text(text.replace("reversed", "sideways"))
    with pytest.raises(ValueError):
        load_molecule_file(path)


def test_conflicting_seed_is_reported(tmp_path, corpus_dir):
    shutil.copytree(corpus_dir, tmp_path / "c")
    arrows = tmp_path / "c" / "table1_arrows.txt"
    arrows.write_text(arrows.read_text() + "\nseed 2 RP3 planted\n")
    with pytest.raises(TypeConflict):
        run_propagation(load_corpus(tmp_path / "c"))


def test_env_override(monkeypatch, tmp_path):
    monkeypatch.setenv(CORPUS_ENV, str(tmp_path))
    assert default_corpus_dir() == tmp_path
