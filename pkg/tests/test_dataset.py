import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from dpsw.dataset import (
    FAMILIES,
    SYNTH_CLASSES,
    EmptyCorpusError,
    IngestionError,
    SynthSpec,
    UnsupportedDepthError,
    build_manifest,
    load_grayscale,
    luma,
    open_corpus,
    read_manifest,
    read_pgm,
    synth_texture,
    synthetic_corpus,
    write_pgm,
)
from dpsw.pixel_map import Raster


def test_read_binary_pgm(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 7]))
    r = load_grayscale(p)
    assert (r.width, r.height) == (2, 2)
    assert list(r.intensities) == [0, 255, 128, 7]


def test_read_ascii_pgm_with_comments(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P2\n# made by hand\n3 1\n255\n10 # first\n 20\n30\n")
    assert list(read_pgm(p).intensities) == [10, 20, 30]


def test_header_whitespace_byte_can_be_a_sample(tmp_path):
    # sample value 10 is '\n': the parser must not swallow it as header whitespace
    p = tmp_path / "nl.pgm"
    p.write_bytes(b"P5 2 1 255\n" + bytes([10, 32]))
    assert list(read_pgm(p).intensities) == [10, 32]


@settings(max_examples=30, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 9), st.integers(1, 9))), st.booleans())
def test_pgm_round_trip(tmp_path_factory, img, binary):
    p = tmp_path_factory.mktemp("rt") / "x.pgm"
    write_pgm(p, Raster(img), binary=binary)
    back = load_grayscale(p)
    assert np.array_equal(back.pixels, img)
    write_pgm(p, back, binary=binary)
    assert load_grayscale(p) == back


def test_truncated_pgm(tmp_path):
    p = tmp_path / "t.pgm"
    p.write_bytes(b"P5\n4 4\n255\n" + bytes(10))
    with pytest.raises(IngestionError) as e:
        load_grayscale(p)
    assert "t.pgm" in str(e.value)
    p.write_bytes(b"P5\n4")
    with pytest.raises(IngestionError):
        load_grayscale(p)
    p.write_bytes(b"P2\n2 2\n255\n1 2 3\n")
    with pytest.raises(IngestionError):
        load_grayscale(p)


def test_sixteen_bit_rejected(tmp_path):
    p = tmp_path / "deep.pgm"
    p.write_bytes(b"P5\n1 1\n65535\n\x01\x02")
    with pytest.raises(UnsupportedDepthError):
        load_grayscale(p)
    q = tmp_path / "deep.png"
    Image.fromarray(np.full((3, 3), 4000, dtype=np.uint16)).save(q)
    with pytest.raises(UnsupportedDepthError):
        load_grayscale(q)


def test_missing_and_garbage_files(tmp_path):
    with pytest.raises(IngestionError):
        load_grayscale(tmp_path / "nope.pgm")
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not an image at all")
    with pytest.raises(IngestionError):
        load_grayscale(bad)


def test_color_gray_is_identity(tmp_path):
    vals = np.arange(0, 256, 17, dtype=np.uint8).reshape(4, 4)
    rgb = np.stack([vals] * 3, axis=-1)
    p = tmp_path / "g.png"
    Image.fromarray(rgb, "RGB").save(p)
    assert np.array_equal(load_grayscale(p).pixels, vals)


def test_luma_rounding():
    # 299*1 + 587*0 + 114*1 = 413 -> 0.413 -> 0 ; 299*2 = 598 -> 1 ; exact half rounds up
    px = np.array([[[1, 0, 1], [2, 0, 0], [255, 255, 255]]])
    assert luma(px).tolist() == [[0, 1, 255]]
    assert luma(np.array([[[0, 0, 0]]])).tolist() == [[0]]
    # find a pixel whose weighted sum ends in exactly 500
    half = [(r, g, b) for r in range(4) for g in range(4) for b in range(10)
            if (299 * r + 587 * g + 114 * b) % 1000 == 500]
    for r, g, b in half:
        assert int(luma(np.array([[[r, g, b]]]))[0, 0]) == (299 * r + 587 * g + 114 * b + 500) // 1000


def test_png_grayscale_lossless(tmp_path):
    img = np.random.default_rng(0).integers(0, 256, (7, 5), dtype=np.uint8)
    p = tmp_path / "x.png"
    Image.fromarray(img, "L").save(p)
    assert np.array_equal(load_grayscale(p).pixels, img)


def test_checker_closed_form():
    r = synth_texture(SynthSpec("checker", period=4, amplitude=0, seed=3, width=16, height=16))
    vals = np.unique(r.pixels)
    assert vals.tolist() == [96, 160]
    px = r.pixels
    # constant 4x4 cells alternating along both axes
    on = px == 160
    assert np.array_equal(on[:, 4:], ~on[:, :-4])
    assert np.array_equal(on[4:, :], ~on[:-4, :])


def test_synth_deterministic_and_seed_sensitive():
    for fam in FAMILIES:
        spec = SynthSpec(fam, period=6, amplitude=10, seed=42)
        assert synth_texture(spec) == synth_texture(spec)
        other = SynthSpec(fam, period=6, amplitude=10, seed=43)
        assert synth_texture(spec) != synth_texture(other)


def test_stripes_transpose():
    a = synth_texture(SynthSpec("stripes", period=5, orientation=0, seed=9, width=32, height=32))
    b = synth_texture(SynthSpec("stripes", period=5, orientation=90, seed=9, width=32, height=32))
    assert np.array_equal(a.pixels.T, b.pixels)


@pytest.mark.parametrize("bad", [
    dict(family="plaid"),
    dict(family="checker", amplitude=129),
    dict(family="checker", width=7),
    dict(family="stripes", orientation=30),
    dict(family="checker", period=0),
])
def test_synth_invalid(bad):
    with pytest.raises(ValueError):
        synth_texture(SynthSpec(**bad))


def test_synthetic_corpus_shape():
    corpus = synthetic_corpus(seed=1, samples=3, size=16)
    assert len(corpus) == 3 * len(SYNTH_CLASSES)
    assert len({label for _, label, _ in corpus}) == len(SYNTH_CLASSES) == 8
    assert all(r.width == r.height == 16 for _, _, r in corpus)
    again = synthetic_corpus(seed=1, samples=3, size=16)
    assert all(a[2] == b[2] for a, b in zip(corpus, again))


def make_tree(root):
    for cls, n in (("a", 2), ("b", 3)):
        d = root / cls
        d.mkdir(parents=True)
        for i in range(n):
            write_pgm(d / f"{i}.pgm", Raster(np.full((2, 2), i, dtype=np.uint8)))
    (root / "a" / "notes.txt").write_text("ignored")
    deep = root / "b" / "nested"
    deep.mkdir()
    write_pgm(deep / "deep.pgm", Raster(np.zeros((2, 2), dtype=np.uint8)))
    write_pgm(root / "loose.pgm", Raster(np.zeros((2, 2), dtype=np.uint8)))


def test_build_manifest(tmp_path):
    make_tree(tmp_path)
    m = build_manifest(tmp_path)
    assert len(m) == 5
    assert m.classes == ["a", "b"]
    assert m.labels == ["a", "a", "b", "b", "b"]
    assert all("nested" not in str(p) for p, _ in m.entries)
    assert build_manifest(tmp_path) == m


def test_manifest_csv_round_trip(tmp_path):
    make_tree(tmp_path / "corpus")
    m = build_manifest(tmp_path / "corpus")
    out = tmp_path / "corpus" / "manifest.csv"
    m.write_csv(out)
    assert out.read_text().splitlines()[:2] == ["path,label", "a/0.pgm,a"]
    back = read_manifest(out)
    assert [(p.resolve(), l) for p, l in back.entries] == [(p.resolve(), l) for p, l in m.entries]
    assert open_corpus(out).labels == m.labels


def test_empty_corpus(tmp_path):
    with pytest.raises(EmptyCorpusError):
        build_manifest(tmp_path)
    (tmp_path / "m.csv").write_text("path,label\n")
    with pytest.raises(EmptyCorpusError):
        read_manifest(tmp_path / "m.csv")
    with pytest.raises(FileNotFoundError):
        build_manifest(tmp_path / "missing")
