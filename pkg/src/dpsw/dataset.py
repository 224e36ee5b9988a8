"""Corpus ingestion, PGM read/write, seeded synthetic textures and labeled manifests."""

from __future__ import annotations

import csv
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .pixel_map import Raster

PathLike = Union[str, os.PathLike]

IMAGE_SUFFIXES = {".pgm", ".pnm", ".ppm", ".png", ".bmp", ".tif", ".tiff", ".jpg", ".jpeg", ".gif"}


class IngestionError(Exception):
    def __init__(self, path, reason):
        self.path = str(path)
        self.reason = reason
        super().__init__(f"{path}: {reason}")


class UnsupportedDepthError(IngestionError):
    pass


class EmptyCorpusError(Exception):
    pass


# ---------------------------------------------------------------------------
# PGM

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _pgm_header(data: bytes, path) -> tuple[bytes, int, int, int, int]:
    pos = 0
    fields = []
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise IngestionError(path, "truncated PGM header")
        fields.append(m.group(1))
        pos = m.end()
    magic = fields[0]
    if magic not in (b"P2", b"P5"):
        raise IngestionError(path, f"not a grayscale PGM (magic {magic!r})")
    try:
        width, height, maxval = (int(f) for f in fields[1:])
    except ValueError:
        raise IngestionError(path, "malformed PGM header") from None
    if width < 1 or height < 1:
        raise IngestionError(path, f"invalid PGM size {width}x{height}")
    if maxval > 255:
        raise UnsupportedDepthError(path, f"maxval {maxval} needs 16-bit samples; only 8-bit is supported")
    if maxval < 1:
        raise IngestionError(path, f"invalid PGM maxval {maxval}")
    return magic, width, height, maxval, pos


def read_pgm(path: PathLike) -> Raster:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise IngestionError(path, e.strerror or str(e)) from e
    magic, width, height, maxval, pos = _pgm_header(data, path)
    n = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates the header from the samples
        body = data[pos + 1: pos + 1 + n]
        if len(body) < n:
            raise IngestionError(path, f"truncated PGM data: {len(body)} of {n} bytes")
        vals = np.frombuffer(body, dtype=np.uint8)
    else:
        text = re.sub(rb"#[^\n]*", b"", data[pos:])
        toks = text.split()
        if len(toks) < n:
            raise IngestionError(path, f"truncated PGM data: {len(toks)} of {n} samples")
        try:
            vals = np.array([int(t) for t in toks[:n]], dtype=np.int64)
        except ValueError:
            raise IngestionError(path, "non-integer sample in ASCII PGM") from None
    if vals.max() > maxval:
        raise IngestionError(path, f"sample value exceeds maxval {maxval}")
    return Raster(vals.reshape(height, width).astype(np.uint8))


def write_pgm(path: PathLike, raster: Raster, binary: bool = True) -> None:
    header = f"{'P5' if binary else 'P2'}\n{raster.width} {raster.height}\n255\n".encode("ascii")
    if binary:
        body = raster.pixels.tobytes()
    else:
        body = "".join(" ".join(str(int(v)) for v in row) + "\n" for row in raster.pixels).encode("ascii")
    tmp = Path(str(path) + ".tmp")
    tmp.write_bytes(header + body)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# generic loading


def luma(rgb: np.ndarray) -> np.ndarray:
    """Integer luma ``round((299 R + 587 G + 114 B) / 1000)``, halves rounded up."""
    rgb = rgb.astype(np.int64)
    return ((299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000).astype(np.uint8)


def load_grayscale(path: PathLike) -> Raster:
    path = Path(path)
    with open_or_raise(path) as fh:
        head = fh.read(2)
    if head in (b"P2", b"P5"):
        return read_pgm(path)
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode.startswith("I;16") or mode in ("I", "F"):
                raise UnsupportedDepthError(path, f"image mode {mode} is not 8-bit")
            if mode == "L":
                arr = np.asarray(im, dtype=np.uint8)
            else:
                arr = luma(np.asarray(im.convert("RGB")))
    except UnsupportedDepthError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as e:
        raise IngestionError(path, f"unreadable image ({e})") from e
    return Raster(np.ascontiguousarray(arr))


class open_or_raise:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        try:
            self.fh = open(self.path, "rb")
        except OSError as e:
            raise IngestionError(self.path, e.strerror or str(e)) from e
        return self.fh

    def __exit__(self, *exc):
        self.fh.close()


# ---------------------------------------------------------------------------
# synthetic textures

FAMILIES = ("checker", "stripes", "blob-noise", "gradient-noise")
ORIENTATIONS = (0, 45, 90, 135)


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic texture.

    ``period`` is the cell/stripe/feature size in pixels, ``orientation`` the
    stripe direction in degrees (stripes only), ``amplitude`` the half-width of
    the uniform per-pixel noise, ``contrast`` the spread between the dark and
    bright levels around mid-gray.
    """

    family: str
    period: int = 8
    orientation: int = 0
    amplitude: int = 0
    contrast: int = 64
    seed: int = 0
    width: int = 64
    height: int = 64

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.width < 8 or self.height < 8:
            raise ValueError(f"size must be at least 8x8, got {self.width}x{self.height}")
        if not 0 <= self.amplitude <= 128:
            raise ValueError(f"noise amplitude must lie in [0, 128], got {self.amplitude}")
        if self.period < 1:
            raise ValueError(f"period must be >= 1, got {self.period}")
        if not 0 <= self.contrast <= 255:
            raise ValueError(f"contrast must lie in [0, 255], got {self.contrast}")
        if self.family == "stripes" and self.orientation not in ORIENTATIONS:
            raise ValueError(f"stripe orientation must be one of {ORIENTATIONS}, got {self.orientation}")


def _levels(contrast: int) -> tuple[int, int]:
    lo = 128 - contrast // 2
    return lo, lo + contrast


def _square_wave(coord: np.ndarray, period: int) -> np.ndarray:
    return (coord // period) % 2


def _value_noise(rng, h, w, cell) -> np.ndarray:
    gh, gw = h // cell + 2, w // cell + 2
    grid = rng.random((gh, gw))
    ys = np.arange(h) / cell
    xs = np.arange(w) / cell
    y0 = ys.astype(int)
    x0 = xs.astype(int)
    fy = ys - y0
    fx = xs - x0
    fy = fy * fy * (3 - 2 * fy)
    fx = fx * fx * (3 - 2 * fx)
    a = grid[y0][:, x0]
    b = grid[y0][:, x0 + 1]
    c = grid[y0 + 1][:, x0]
    d = grid[y0 + 1][:, x0 + 1]
    top = a + (b - a) * fx
    bot = c + (d - c) * fx
    return top + (bot - top) * fy[:, None]


def _gradient_noise(rng, h, w, cell) -> np.ndarray:
    gh, gw = h // cell + 2, w // cell + 2
    ang = rng.random((gh, gw)) * 2 * np.pi
    gx, gy = np.cos(ang), np.sin(ang)
    ys = np.arange(h) / cell
    xs = np.arange(w) / cell
    y0 = ys.astype(int)[:, None]
    x0 = xs.astype(int)[None, :]
    fy = (ys - ys.astype(int))[:, None]
    fx = (xs - xs.astype(int))[None, :]

    def dot(iy, ix, dy, dx):
        return gx[y0 + iy, x0 + ix] * (fx - dx) + gy[y0 + iy, x0 + ix] * (fy - dy)

    ux = fx ** 3 * (fx * (fx * 6 - 15) + 10)
    uy = fy ** 3 * (fy * (fy * 6 - 15) + 10)
    top = dot(0, 0, 0, 0) + (dot(0, 1, 0, 1) - dot(0, 0, 0, 0)) * ux
    bot = dot(1, 0, 1, 0) + (dot(1, 1, 1, 1) - dot(1, 0, 1, 0)) * ux
    n = top + (bot - top) * uy
    # Perlin noise in 2-D stays within about +-0.71
    return np.clip(n / 1.42 + 0.5, 0.0, 1.0)


def synth_texture(spec: SynthSpec) -> Raster:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    h, w = spec.height, spec.width
    lo, hi = _levels(spec.contrast)
    p = spec.period
    if spec.family == "checker":
        phase_x, phase_y = (int(v) for v in rng.integers(0, 2 * p, size=2))
        xs = np.arange(w)[None, :] + phase_x
        ys = np.arange(h)[:, None] + phase_y
        on = (_square_wave(xs, p) + _square_wave(ys, p)) % 2
        base = np.where(on == 1, hi, lo).astype(np.float64)
    elif spec.family == "stripes":
        # one phase for both axes keeps 0 and 90 degrees transposes of each other
        phase = int(rng.integers(0, 2 * p))
        xs = np.arange(w)[None, :] + phase
        ys = np.arange(h)[:, None] + phase
        proj = {
            0: np.broadcast_to(xs, (h, w)),
            90: np.broadcast_to(ys, (h, w)),
            45: xs + ys,
            135: xs - ys + 2 * h,
        }[spec.orientation]
        base = np.where(_square_wave(proj, p) == 1, hi, lo).astype(np.float64)
    elif spec.family == "blob-noise":
        base = lo + (hi - lo) * _value_noise(rng, h, w, p)
    else:
        base = lo + (hi - lo) * _gradient_noise(rng, h, w, p)
    img = np.rint(base).astype(np.int64)
    if spec.amplitude:
        img = img + rng.integers(-spec.amplitude, spec.amplitude + 1, size=(h, w))
    return Raster(np.clip(img, 0, 255).astype(np.uint8))


# ---------------------------------------------------------------------------
# manifests


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple  # ((Path, label), ...)
    root: Optional[Path] = None

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((Path(p), str(l)) for p, l in self.entries))

    def __len__(self):
        return len(self.entries)

    @property
    def labels(self) -> list[str]:
        return [l for _, l in self.entries]

    @property
    def classes(self) -> list[str]:
        return sorted(set(self.labels))

    def display_path(self, path: Path) -> str:
        if self.root is not None:
            try:
                return path.relative_to(self.root).as_posix()
            except ValueError:
                pass
        return path.as_posix()

    def write_csv(self, path: PathLike) -> None:
        path = Path(path)
        base = self.root if self.root is not None else path.parent
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["path", "label"])
            for p, label in self.entries:
                try:
                    rel = os.path.relpath(p, path.parent)
                except ValueError:
                    rel = str(p)
                wr.writerow([Path(rel).as_posix(), label])


def build_manifest(root: PathLike) -> CorpusManifest:
    """One class per immediate subdirectory of ``root``; deeper files are ignored."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus root {root} is not a directory")
    entries = []
    for sub in sorted(d for d in root.iterdir() if d.is_dir()):
        for f in sorted(sub.iterdir()):
            if f.is_file() and f.suffix.lower() in IMAGE_SUFFIXES:
                entries.append((f, sub.name))
    if not entries:
        raise EmptyCorpusError(f"no images found under {root}")
    entries.sort(key=lambda e: e[0].as_posix())
    return CorpusManifest(tuple(entries), root)


def read_manifest(path: PathLike) -> CorpusManifest:
    """Read a ``path,label`` CSV; relative paths resolve against the CSV's folder."""
    path = Path(path)
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None or [h.strip() for h in header[:2]] != ["path", "label"]:
            raise ValueError(f"{path}: manifest must start with a 'path,label' header")
        for lineno, row in enumerate(rd, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            p = Path(row[0])
            entries.append((p if p.is_absolute() else path.parent / p, row[1]))
    if not entries:
        raise EmptyCorpusError(f"manifest {path} lists no images")
    return CorpusManifest(tuple(entries), path.parent)


def open_corpus(path: PathLike) -> CorpusManifest:
    """A directory is scanned with ``build_manifest``; a file is read as a manifest CSV."""
    path = Path(path)
    return build_manifest(path) if path.is_dir() else read_manifest(path)


# ---------------------------------------------------------------------------
# shipped synthetic corpus

SYNTH_CLASSES: tuple[SynthSpec, ...] = (
    SynthSpec("checker", period=4, amplitude=2),
    SynthSpec("checker", period=8, amplitude=2),
    SynthSpec("stripes", period=4, orientation=0, amplitude=2),
    SynthSpec("stripes", period=6, orientation=45, amplitude=2),
    SynthSpec("blob-noise", period=6, amplitude=2),
    SynthSpec("blob-noise", period=12, amplitude=2),
    SynthSpec("gradient-noise", period=8, amplitude=2),
    SynthSpec("gradient-noise", period=16, amplitude=2),
)
CORPUS_SEEDS = (0, 1, 2)


def synthetic_corpus(seed: int = 0, samples: int = 10, size: int = 64,
                     classes: Iterable[SynthSpec] = SYNTH_CLASSES) -> list[tuple[str, str, Raster]]:
    """``(name, label, raster)`` for every sample of the synthetic corpus.

    Per-sample seeds derive from ``(seed, class, sample)`` so any sample can be
    regenerated on its own.
    """
    out = []
    for ci, base in enumerate(classes):
        label = f"{ci:02d}-{base.family}-p{base.period}" + (f"-o{base.orientation}" if base.family == "stripes" else "")
        for si in range(samples):
            sample_seed = int(np.random.SeedSequence([seed, ci, si]).generate_state(1)[0])
            spec = replace(base, seed=sample_seed, width=size, height=size)
            out.append((f"{label}/{si:03d}.pgm", label, synth_texture(spec)))
    return out


def write_synthetic_corpus(root: PathLike, seed: int = 0, samples: int = 10, size: int = 64) -> CorpusManifest:
    root = Path(root)
    for name, _, raster in synthetic_corpus(seed, samples, size):
        dest = root / name
        dest.parent.mkdir(parents=True, exist_ok=True)
        write_pgm(dest, raster)
    return build_manifest(root)
