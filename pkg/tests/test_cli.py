import csv
import json

import numpy as np
import pytest

from dpsw import cli
from dpsw.dataset import write_pgm, write_synthetic_corpus
from dpsw.pixel_map import Raster, full_connectivity_edge_count


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    write_synthetic_corpus(root, seed=0, samples=4, size=16)
    return root


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_parse_int_set():
    assert cli.parse_int_set("0..6") == tuple(range(7))
    assert cli.parse_int_set("5,0,2") == (0, 2, 5)
    assert cli.parse_int_set("0..2,7") == (0, 1, 2, 7)
    with pytest.raises(Exception):
        cli.parse_int_set("3..1")
    assert cli.format_set([0, 1, 2]) == "0..2"
    assert cli.format_set([0, 2]) == "0,2"


def test_help_lists_flags(capsys):
    for sub in ("extract", "evaluate", "sweep", "export-map"):
        with pytest.raises(SystemExit):
            run(sub, "--help")
        text = capsys.readouterr().out
        assert "--input" in text and "--output" in text
    with pytest.raises(SystemExit):
        run("extract", "--help")
    text = capsys.readouterr().out
    for flag in ("--rule", "--memories", "--thresholds", "--jobs", "0..6", "0..9"):
        assert flag in text
    with pytest.raises(SystemExit):
        run("evaluate", "--help")
    text = capsys.readouterr().out
    for flag in ("--folds", "--seed", "--ridge"):
        assert flag in text


def test_extract_default_columns(corpus, tmp_path):
    out = tmp_path / "f.csv"
    assert run("extract", "--input", corpus, "--output", out) == 0
    rows = read_csv(out)
    assert rows[0][:3] == ["label", "path", "f0"]
    assert len(rows[0]) == 2 + 280
    assert len(rows) == 1 + 32
    layout = json.loads((tmp_path / "f.layout.json").read_text())
    assert len(layout["columns"]) == 280
    assert layout["columns"][0] == {"rule": "min", "k": 0, "mu": 0, "l": 1}
    assert layout["columns"][-1] == {"rule": "min", "k": 9, "mu": 6, "l": 10}


def test_extract_both_and_traditional(corpus, tmp_path):
    both = tmp_path / "both.csv"
    trad = tmp_path / "trad.csv"
    full = tmp_path / "full.csv"
    assert run("extract", "--input", corpus, "--output", both, "--rule", "both", "--thresholds", "0..1") == 0
    assert len(read_csv(both)[0]) == 2 + 2 * 2 * 28
    assert run("extract", "--input", corpus, "--output", trad, "--thresholds", "0") == 0
    assert run("extract", "--input", corpus, "--output", full) == 0
    t = read_csv(trad)
    f = read_csv(full)
    assert len(t[0]) == 2 + 28
    # the k=0 block leads the full vector
    assert all(a[2:] == b[2:30] for a, b in zip(t[1:], f[1:]))


def test_extract_jobs_bit_identical(corpus, tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    run("extract", "--input", corpus, "--output", a, "--thresholds", "0,3", "--memories", "0..2")
    run("extract", "--input", corpus, "--output", b, "--thresholds", "0,3", "--memories", "0..2", "--jobs", "3")
    assert a.read_bytes() == b.read_bytes()


def test_extract_bad_image_names_file(tmp_path, capsys):
    (tmp_path / "c1").mkdir()
    (tmp_path / "c1" / "broken.pgm").write_bytes(b"P5\n9 9\n255\n\x00")
    code = run("extract", "--input", tmp_path, "--output", tmp_path / "x.csv")
    assert code != 0
    assert "broken.pgm" in capsys.readouterr().err


def test_evaluate(corpus, tmp_path, capsys):
    feats = tmp_path / "f.csv"
    run("extract", "--input", corpus, "--output", feats, "--thresholds", "0..2")
    capsys.readouterr()
    rep = tmp_path / "r.json"
    assert run("evaluate", "--input", feats, "--output", rep, "--folds", "4") == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("CCR: ") and "(± " in line and line.endswith(")")
    doc = json.loads(rep.read_text())
    assert len(doc["per_fold"]) == 4
    assert doc["config"]["thresholds"] == [0, 1, 2]
    assert doc["config"]["rules"] == ["min"]
    first = rep.read_bytes()
    run("evaluate", "--input", feats, "--output", rep, "--folds", "4")
    assert rep.read_bytes() == first


def test_evaluate_malformed_csv(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("label,path,f0,f1\na,x,0.1,0.2\nb,y,0.3\n")
    assert run("evaluate", "--input", bad) != 0
    assert ":3:" in capsys.readouterr().err
    bad.write_text("label,path,f0\na,x,zero\n")
    assert run("evaluate", "--input", bad) != 0
    assert ":2:" in capsys.readouterr().err


def test_sweep_from_feature_file(corpus, tmp_path):
    feats = tmp_path / "both.csv"
    run("extract", "--input", corpus, "--output", feats, "--rule", "both",
        "--thresholds", "0..2", "--memories", "0..2")
    outdir = tmp_path / "sweeps"
    assert run("sweep", "--input", feats, "--output", outdir, "--folds", "4") == 0
    mem = read_csv(outdir / "memory.csv")
    comb = read_csv(outdir / "memory-combination.csv")
    thr = read_csv(outdir / "threshold.csv")
    assert mem[0] == ["setting", "ccr_min", "std_min", "ccr_max", "std_max", "ccr_both", "std_both"]
    assert len(comb) - 1 == 3 and len(mem) - 1 == 3 and len(thr) - 1 == 3
    assert [r[0] for r in comb[1:]] == ["0", "0..1", "0..2"]

    # the k=0 threshold row is the traditional configuration evaluated directly
    trad = tmp_path / "trad.csv"
    run("extract", "--input", corpus, "--output", trad, "--thresholds", "0", "--memories", "0..2")
    rep = tmp_path / "trad.json"
    run("evaluate", "--input", trad, "--output", rep, "--folds", "4")
    doc = json.loads(rep.read_text())
    assert float(thr[1][1]) == pytest.approx(round(doc["ccr_mean"], 4), abs=1e-9)
    assert float(thr[1][2]) == pytest.approx(round(doc["ccr_std"], 4), abs=1e-9)


def test_sweep_single_axis_from_corpus(corpus, tmp_path):
    out = tmp_path / "thr.csv"
    assert run("sweep", "--input", corpus, "--output", out, "--axis", "threshold-combination",
               "--thresholds", "0..1", "--memories", "0,1", "--folds", "4") == 0
    rows = read_csv(out)
    assert len(rows) == 3


def test_export_map(tmp_path):
    img = tmp_path / "u.pgm"
    write_pgm(img, Raster(np.full((5, 6), 90, dtype=np.uint8)))
    out = tmp_path / "edges.txt"
    assert run("export-map", "--input", img, "--output", out, "--rule", "min", "--threshold", "1") == 0
    assert out.read_text() == ""
    assert run("export-map", "--input", img, "--output", out, "--threshold", "0") == 0
    assert len(out.read_text().splitlines()) == full_connectivity_edge_count(6, 5)


def test_export_map_monotone(tmp_path):
    img = tmp_path / "n.pgm"
    write_pgm(img, Raster(np.random.default_rng(4).integers(0, 256, (9, 9), dtype=np.uint8)))
    counts = []
    for k in range(6):
        out = tmp_path / f"e{k}.txt"
        run("export-map", "--input", img, "--output", out, "--threshold", k)
        edges = set(out.read_text().splitlines())
        counts.append(edges)
    assert all(b <= a for a, b in zip(counts, counts[1:]))


def test_synth_command(tmp_path):
    assert run("synth", "--output", tmp_path / "s", "--samples", "2", "--size", "16") == 0
    rows = read_csv(tmp_path / "s" / "manifest.csv")
    assert rows[0] == ["path", "label"] and len(rows) == 1 + 16
