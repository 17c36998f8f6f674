"""Synthetic multi-energy volumes and everything between disk and batch.

Covers: the ellipse phantom generator, background-aware normalization,
corner-aligned bilinear resize, geometric augmentation, deterministic
stratified splitting, and the SVOL tensor container plus its JSON
manifest.

Preprocessing order is: normalize the raw volume (background sentinel
maps to 0), zero-pad to square, then resize to the network's input size.
Padding and rotation fill with 0 because that is the post-normalization
background value.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rngs
from .errors import (
    ConfigError,
    DataError,
    DegenerateRangeError,
    FormatError,
    ShapeError,
    StratificationError,
)

BACKGROUND = -2000.0
ENERGY_LEVELS_KEV = tuple(range(40, 150, 10))  # 11 channels, 40..140 keV
NUM_CHANNELS = len(ENERGY_LEVELS_KEV)

LABEL_TOKENS = ("N0", "N1-2", "N3plus")
LABEL_INDEX = {tok: i for i, tok in enumerate(LABEL_TOKENS)}


# ---------------------------------------------------------------------------
# SVOL container: b"SVOL1" | u32 rank | u32 dims[rank] | f32 payload | u32 crc
# (little-endian throughout; crc32 covers all preceding bytes).
# ---------------------------------------------------------------------------

SVOL_MAGIC = b"SVOL1"


def svol_encode(arr: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(arr, dtype="<f4")
    header = SVOL_MAGIC + struct.pack("<I", arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    body = header + arr.tobytes()
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def svol_decode(buf: bytes, offset: int = 0) -> tuple[np.ndarray, int]:
    """Decode one record starting at offset; returns (array, next offset)."""
    if buf[offset : offset + 5] != SVOL_MAGIC:
        raise FormatError(f"bad magic at offset {offset}")
    pos = offset + 5
    if len(buf) < pos + 4:
        raise FormatError("truncated header")
    (rank,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    if rank > 8:
        raise FormatError(f"implausible rank {rank}")
    if len(buf) < pos + 4 * rank:
        raise FormatError("truncated dims")
    dims = struct.unpack_from(f"<{rank}I", buf, pos)
    pos += 4 * rank
    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    payload_end = pos + 4 * count
    if len(buf) < payload_end + 4:
        raise FormatError("payload shorter than header dims imply")
    (stored_crc,) = struct.unpack_from("<I", buf, payload_end)
    if zlib.crc32(buf[offset:payload_end]) & 0xFFFFFFFF != stored_crc:
        raise FormatError("checksum mismatch")
    arr = np.frombuffer(buf[pos:payload_end], dtype="<f4").reshape(dims)
    return arr.copy(), payload_end + 4


def svol_write(path: str | Path, arr: np.ndarray) -> None:
    Path(path).write_bytes(svol_encode(arr))


def svol_read(path: str | Path) -> np.ndarray:
    buf = Path(path).read_bytes()
    arr, end = svol_decode(buf)
    if end != len(buf):
        raise FormatError(f"{len(buf) - end} trailing bytes after record")
    return arr


def svol_write_stack(path: str | Path, arrays: list[np.ndarray]) -> None:
    Path(path).write_bytes(b"".join(svol_encode(a) for a in arrays))


def svol_read_stack(path: str | Path) -> list[np.ndarray]:
    buf = Path(path).read_bytes()
    out, pos = [], 0
    while pos < len(buf):
        arr, pos = svol_decode(buf, pos)
        out.append(arr)
    return out


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalizationStats:
    """Affine range computed on training data only; `source` records the
    provenance so leakage is assertable."""

    p_min: float
    p_max: float
    source: str

    def __post_init__(self):
        if not self.source.startswith("train"):
            raise DataError(f"normalization stats must come from training data, got {self.source!r}")


def fit_normalization(volumes: list[np.ndarray], source: str = "train") -> NormalizationStats:
    """Min and max over non-background pixels of the given raw volumes."""
    lo, hi = np.inf, -np.inf
    for vol in volumes:
        fg = vol[vol != BACKGROUND]
        if fg.size:
            lo = min(lo, float(fg.min()))
            hi = max(hi, float(fg.max()))
    if not np.isfinite(lo) or not np.isfinite(hi):
        raise DataError("no non-background pixels in training volumes")
    return NormalizationStats(p_min=lo, p_max=hi, source=source)


def normalize(raw: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    """Background (== -2000) -> 0; everything else affinely mapped by the
    training-fold range and clamped into [0, 1]."""
    if stats.p_max == stats.p_min:
        raise DegenerateRangeError("training intensity range is a single value")
    out = (raw - stats.p_min) / (stats.p_max - stats.p_min)
    np.clip(out, 0.0, 1.0, out=out)
    out[raw == BACKGROUND] = 0.0
    return out.astype(np.float32)


# ---------------------------------------------------------------------------
# Geometry: resize, pad, flip, rotate, augment
# ---------------------------------------------------------------------------


def _axis_coords(n_out: int, n_in: int) -> np.ndarray:
    """Corner-aligned source coordinates: endpoints map to endpoints."""
    if n_out == 1 or n_in == 1:
        return np.zeros(n_out)
    return np.arange(n_out) * ((n_in - 1) / (n_out - 1))


def resize_bilinear(image: np.ndarray, out_hw: tuple[int, int]) -> np.ndarray:
    """Corner-aligned bilinear resize of (H, W) or (H, W, C) arrays."""
    if image.ndim not in (2, 3):
        raise ShapeError(f"resize expects 2-D or 3-D input, got {image.shape}")
    h, w = image.shape[:2]
    if h < 2 or w < 2:
        raise ShapeError(f"input spatial dims must be >= 2, got {(h, w)}")
    ys = _axis_coords(out_hw[0], h)
    xs = _axis_coords(out_hw[1], w)
    y0 = ys.astype(np.intp)
    x0 = xs.astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    # Integral coordinates get weight exactly 0, so identity resizes are exact.
    wy = (ys - y0).astype(image.dtype)
    wx = (xs - x0).astype(image.dtype)
    if image.ndim == 3:
        wy = wy[:, None, None]
        wx = wx[None, :, None]
    else:
        wy = wy[:, None]
        wx = wx[None, :]
    tl = image[np.ix_(y0, x0)]
    tr = image[np.ix_(y0, x1)]
    bl = image[np.ix_(y1, x0)]
    br = image[np.ix_(y1, x1)]
    top = tl + (tr - tl) * wx
    bot = bl + (br - bl) * wx
    return top + (bot - top) * wy


def pad_to_square(pixels: np.ndarray, fill: float = 0.0) -> np.ndarray:
    """Center the image on a square canvas, padding with `fill`."""
    h, w = pixels.shape[:2]
    side = max(h, w)
    if h == w:
        return pixels
    ph, pw = side - h, side - w
    pads = [(ph // 2, ph - ph // 2), (pw // 2, pw - pw // 2)] + [(0, 0)] * (pixels.ndim - 2)
    return np.pad(pixels, pads, constant_values=fill)


def flip_horizontal(pixels: np.ndarray) -> np.ndarray:
    """Left-right mirror (all channels together)."""
    return np.flip(pixels, axis=1).copy()


_grid_cache: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}


def _centered_grid(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    if (h, w) not in _grid_cache:
        cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
        _grid_cache[(h, w)] = np.meshgrid(np.arange(h) - cy, np.arange(w) - cx, indexing="ij")
    return _grid_cache[(h, w)]


def rotate_bilinear(pixels: np.ndarray, angle_deg: float, fill: float = 0.0) -> np.ndarray:
    """Rotate about the image center with bilinear resampling; pixels that
    sample outside the frame get `fill`. Channels share the transform."""
    h, w = pixels.shape[:2]
    theta = np.deg2rad(angle_deg)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = _centered_grid(h, w)
    # Inverse map: output pixel pulls from the input rotated by -theta.
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    src_y = cos_t * yy + sin_t * xx + cy
    src_x = -sin_t * yy + cos_t * xx + cx
    inside = (src_y >= 0) & (src_y <= h - 1) & (src_x >= 0) & (src_x <= w - 1)
    sy = np.clip(src_y, 0, h - 1)
    sx = np.clip(src_x, 0, w - 1)
    y0 = sy.astype(np.intp)
    x0 = sx.astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (sy - y0).astype(pixels.dtype)
    wx = (sx - x0).astype(pixels.dtype)
    flat = pixels.reshape(h * w, -1)
    tl = flat.take((y0 * w + x0).ravel(), axis=0)
    tr = flat.take((y0 * w + x1).ravel(), axis=0)
    bl = flat.take((y1 * w + x0).ravel(), axis=0)
    br = flat.take((y1 * w + x1).ravel(), axis=0)
    wxf, wyf = wx.reshape(-1, 1), wy.reshape(-1, 1)
    top = tl + (tr - tl) * wxf
    bot = bl + (br - bl) * wxf
    out = (top + (bot - top) * wyf).reshape(pixels.shape)
    if pixels.ndim == 3:
        out[~inside] = fill
    else:
        out = np.where(inside, out, pixels.dtype.type(fill))
    return out


MAX_ROTATION_DEG = 18.0


def augment(pixels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Horizontal flip (p=0.5) then rotation by U(-18, 18) degrees (p=0.5),
    identical across all channels, bilinear, zero fill."""
    out = pixels
    if rng.random() < 0.5:
        out = flip_horizontal(out)
    if rng.random() < 0.5:
        angle = rng.uniform(-MAX_ROTATION_DEG, MAX_ROTATION_DEG)
        out = rotate_bilinear(out, angle, fill=0.0)
    return out


def prepare_volume(raw: np.ndarray, stats: NormalizationStats, out_hw: int = 176) -> np.ndarray:
    """Raw (h, w, C) volume -> normalized, square, resized float32 pixels."""
    norm = normalize(raw, stats)
    norm = pad_to_square(norm, fill=0.0)
    if norm.shape[0] != out_hw:
        norm = resize_bilinear(norm, (out_hw, out_hw))
    return np.ascontiguousarray(norm, dtype=np.float32)


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------


@dataclass
class FoldSplit:
    """k-fold assignment over the training cases plus the fixed holdout."""

    k: int
    fold_of: dict[str, int]
    holdout: list[str]

    def val_ids(self, fold: int) -> list[str]:
        return sorted(cid for cid, f in self.fold_of.items() if f == fold)

    def train_ids(self, fold: int) -> list[str]:
        return sorted(cid for cid, f in self.fold_of.items() if f != fold)

    def to_json(self) -> dict:
        return {"k": self.k, "fold_of": dict(sorted(self.fold_of.items())),
                "holdout": sorted(self.holdout)}

    @classmethod
    def from_json(cls, obj: dict) -> "FoldSplit":
        return cls(k=int(obj["k"]), fold_of={k: int(v) for k, v in obj["fold_of"].items()},
                   holdout=list(obj["holdout"]))


def _by_class(case_ids, labels) -> dict[int, list[str]]:
    """Canonically ordered ids per class (sorted by case_id)."""
    if len(case_ids) != len(labels):
        raise DataError("case_ids and labels length mismatch")
    groups: dict[int, list[str]] = {}
    for cid, lab in sorted(zip(case_ids, labels)):
        groups.setdefault(int(lab), []).append(cid)
    return groups


def stratified_split(
    case_ids: list[str], labels: list[int], train_n: int, test_n: int, seed: int
) -> tuple[list[str], list[str]]:
    """Deterministic stratified holdout. Per-class test counts follow the
    global test proportion via largest-remainder rounding (off by at most
    one case per class)."""
    n = len(case_ids)
    if train_n + test_n != n:
        raise ConfigError(f"train_n + test_n = {train_n + test_n} != {n} cases")
    if test_n < 1 or train_n < 1:
        raise ConfigError("both partitions must be non-empty")
    groups = _by_class(case_ids, labels)
    if any(len(g) < 2 for g in groups.values()):
        raise StratificationError("every class needs at least 2 cases to split")
    quotas = {c: test_n * len(g) / n for c, g in groups.items()}
    take = {c: int(np.floor(q)) for c, q in quotas.items()}
    short = test_n - sum(take.values())
    for c in sorted(quotas, key=lambda c: (-(quotas[c] - take[c]), c))[:short]:
        take[c] += 1
    rng = rngs.stream(seed, rngs.SPLIT)
    train, test = [], []
    for c in sorted(groups):
        ids = list(groups[c])
        rng.shuffle(ids)
        test.extend(ids[: take[c]])
        train.extend(ids[take[c] :])
    return sorted(train), sorted(test)


def stratified_kfold(case_ids: list[str], labels: list[int], k: int, seed: int) -> dict[str, int]:
    """Deterministic stratified fold assignment: per-class shuffled deal,
    so per-class fold counts differ by at most 1."""
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    groups = _by_class(case_ids, labels)
    for c, g in groups.items():
        if len(g) < k:
            raise StratificationError(f"class {c} has {len(g)} cases, fewer than k={k}")
    rng = rngs.stream(seed, rngs.KFOLD)
    fold_of: dict[str, int] = {}
    for c in sorted(groups):
        ids = list(groups[c])
        rng.shuffle(ids)
        for i, cid in enumerate(ids):
            fold_of[cid] = i % k
    return fold_of


def make_fold_split(
    case_ids: list[str], labels: list[int], train_n: int, test_n: int, k: int, seed: int
) -> FoldSplit:
    """Holdout split followed by k-fold assignment of the training cases."""
    label_of = dict(zip(case_ids, labels))
    train, test = stratified_split(case_ids, labels, train_n, test_n, seed)
    fold_of = stratified_kfold(train, [label_of[c] for c in train], k, seed)
    return FoldSplit(k=k, fold_of=fold_of, holdout=test)


# ---------------------------------------------------------------------------
# Phantom generator
# ---------------------------------------------------------------------------


@dataclass
class PhantomSpec:
    """One synthetic case: an elliptical node on a -2000 background whose
    spectral curve is HU(E) = a * E^(-b) + c plus Gaussian noise.

    The optional knobs exist to tune class ambiguity: `intensity_jitter`
    shifts the whole case by one random offset (makes single energies
    overlap across classes while curve shape stays informative), and
    `glitch_channels` corrupts that many randomly chosen energy channels
    with an extra constant offset of scale `glitch_sigma` (adaptive
    channel gating can learn to suppress these; a fixed channel mix
    cannot)."""

    label: int
    canvas: int = 120
    axes: tuple[float, float] = (30.0, 22.0)
    curve_a: float = 30000.0
    curve_b: float = 1.0
    curve_c: float = 40.0
    noise_sigma: float = 0.0
    seed: int = 42
    intensity_jitter: float = 0.0
    glitch_channels: int = 0
    glitch_sigma: float = 0.0
    axis_jitter: float = 0.0
    center_jitter: float = 0.0

    def __post_init__(self):
        if self.label not in range(len(LABEL_TOKENS)):
            raise DataError(f"label must be one of 0..{len(LABEL_TOKENS)-1}")
        if self.canvas < 8:
            raise DataError("canvas must be at least 8 pixels")
        if max(self.axes) * 2 >= self.canvas:
            raise DataError(f"ellipse axes {self.axes} exceed canvas {self.canvas}")
        if self.glitch_channels < 0 or self.glitch_channels > NUM_CHANNELS:
            raise DataError("glitch_channels out of range")


def spectral_curve(spec: PhantomSpec) -> np.ndarray:
    """Closed-form HU value per energy level: a * E^(-b) + c."""
    e = np.asarray(ENERGY_LEVELS_KEV, dtype=np.float64)
    return spec.curve_a * e ** (-spec.curve_b) + spec.curve_c


def generate_phantom(spec: PhantomSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """Raw (canvas, canvas, 11) float32 volume for one case."""
    if rng is None:
        rng = rngs.stream(spec.seed, rngs.PHANTOM)
    n = spec.canvas
    ax_a, ax_b = spec.axes
    if spec.axis_jitter:
        ax_a *= 1.0 + rng.uniform(-spec.axis_jitter, spec.axis_jitter)
        ax_b *= 1.0 + rng.uniform(-spec.axis_jitter, spec.axis_jitter)
    cy = cx = (n - 1) / 2.0
    if spec.center_jitter:
        cy += rng.uniform(-spec.center_jitter, spec.center_jitter) * n
        cx += rng.uniform(-spec.center_jitter, spec.center_jitter) * n
    phi = rng.uniform(0, np.pi) if spec.axis_jitter or spec.center_jitter else 0.0
    yy, xx = np.meshgrid(np.arange(n) - cy, np.arange(n) - cx, indexing="ij")
    u = xx * np.cos(phi) + yy * np.sin(phi)
    v = -xx * np.sin(phi) + yy * np.cos(phi)
    mask = (u / ax_a) ** 2 + (v / ax_b) ** 2 <= 1.0

    curve = spectral_curve(spec)
    vol = np.full((n, n, NUM_CHANNELS), BACKGROUND, dtype=np.float64)
    node = np.broadcast_to(curve, (int(mask.sum()), NUM_CHANNELS)).copy()
    if spec.intensity_jitter:
        node += rng.normal(0.0, spec.intensity_jitter)
    if spec.glitch_channels:
        chans = rng.choice(NUM_CHANNELS, size=spec.glitch_channels, replace=False)
        node[:, chans] += rng.normal(0.0, spec.glitch_sigma, size=spec.glitch_channels)
    if spec.noise_sigma:
        node += rng.normal(0.0, spec.noise_sigma, size=node.shape)
    vol[mask] = node
    return vol.astype(np.float32)


# ---------------------------------------------------------------------------
# Dataset on disk: SVOL volumes + manifest.json
# ---------------------------------------------------------------------------


@dataclass
class CaseRecord:
    case_id: str
    label: str  # token from LABEL_TOKENS
    path: str   # relative to the manifest directory
    split: str  # "train" | "test" | "unassigned"


def write_manifest(path: str | Path, records: list[CaseRecord]) -> None:
    payload = [{"case_id": r.case_id, "label": r.label, "path": r.path, "split": r.split}
               for r in sorted(records, key=lambda r: r.case_id)]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_manifest(path: str | Path) -> list[CaseRecord]:
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    records = []
    for item in payload:
        if item["label"] not in LABEL_INDEX:
            raise DataError(f"unknown label token {item['label']!r} in manifest")
        records.append(CaseRecord(case_id=item["case_id"], label=item["label"],
                                  path=item["path"], split=item["split"]))
    return records


class CaseStore:
    """Lazy access to a generated dataset directory (manifest + volumes)."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        manifest = self.root / "manifest.json"
        if not manifest.exists():
            raise DataError(f"no manifest.json under {self.root}")
        self.records = {r.case_id: r for r in read_manifest(manifest)}
        self._cache: dict[str, np.ndarray] = {}

    def case_ids(self) -> list[str]:
        return sorted(self.records)

    def label(self, case_id: str) -> int:
        return LABEL_INDEX[self.records[case_id].label]

    def labels(self, case_ids: list[str]) -> np.ndarray:
        return np.array([self.label(c) for c in case_ids], dtype=np.intp)

    def split_ids(self, split: str) -> list[str]:
        return sorted(c for c, r in self.records.items() if r.split == split)

    def get_raw(self, case_id: str) -> np.ndarray:
        if case_id not in self._cache:
            rec = self.records[case_id]
            vol = svol_read(self.root / rec.path)
            if vol.ndim != 3 or vol.shape[2] != NUM_CHANNELS:
                raise DataError(f"case {case_id}: expected (h,w,{NUM_CHANNELS}) volume, got {vol.shape}")
            self._cache[case_id] = vol
        return self._cache[case_id]


def generate_dataset(
    out_dir: str | Path,
    class_specs: dict[str, PhantomSpec],
    n_per_class: tuple[int, int, int],
    seed: int,
) -> list[CaseRecord]:
    """Write one SVOL volume per case plus manifest.json. Per-case rng
    streams are keyed by global case index, so generation order (or
    parallelism) cannot change the data."""
    if len(n_per_class) != len(LABEL_TOKENS):
        raise ConfigError(f"n_per_class needs {len(LABEL_TOKENS)} entries")
    if any(n < 1 for n in n_per_class):
        raise ConfigError("every class needs at least one case")
    missing = [tok for tok in LABEL_TOKENS if tok not in class_specs]
    if missing:
        raise ConfigError(f"phantom spec missing classes: {missing}")
    out = Path(out_dir)
    (out / "volumes").mkdir(parents=True, exist_ok=True)
    records, idx = [], 0
    for class_i, token in enumerate(LABEL_TOKENS):
        base = class_specs[token]
        for _ in range(n_per_class[class_i]):
            case_id = f"case-{idx:04d}"
            rng = rngs.stream(seed, rngs.PHANTOM, idx)
            vol = generate_phantom(base, rng)
            rel = f"volumes/{case_id}.svol"
            svol_write(out / rel, vol)
            records.append(CaseRecord(case_id=case_id, label=token, path=rel, split="unassigned"))
            idx += 1
    write_manifest(out / "manifest.json", records)
    return records


# ---------------------------------------------------------------------------
# Phantom spec files (JSON)
# ---------------------------------------------------------------------------

_GLOBAL_KEYS = ("canvas", "noise_sigma", "intensity_jitter", "glitch_channels",
                "glitch_sigma", "axis_jitter", "center_jitter")


def load_phantom_config(path: str | Path) -> dict[str, PhantomSpec]:
    """Parse a phantom spec file into one PhantomSpec per class.

    Schema: {"canvas": int, "noise_sigma": float, ... , "classes": {
    "N0": {"axes": [a, b], "curve": {"a":, "b":, "c":}}, ...}}. Global
    knobs may be overridden per class."""
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read phantom spec {path}: {exc}") from exc
    return phantom_config_from_dict(obj)


def phantom_config_from_dict(obj: dict) -> dict[str, PhantomSpec]:
    classes = obj.get("classes")
    if not isinstance(classes, dict):
        raise ConfigError("phantom spec needs a 'classes' mapping")
    specs = {}
    for token, entry in classes.items():
        if token not in LABEL_INDEX:
            raise ConfigError(f"unknown class token {token!r}")
        merged = {k: obj[k] for k in _GLOBAL_KEYS if k in obj}
        merged.update({k: v for k, v in entry.items() if k in _GLOBAL_KEYS})
        curve = entry.get("curve", {})
        try:
            specs[token] = PhantomSpec(
                label=LABEL_INDEX[token],
                axes=tuple(entry.get("axes", (30.0, 22.0))),
                curve_a=float(curve.get("a", 30000.0)),
                curve_b=float(curve.get("b", 1.0)),
                curve_c=float(curve.get("c", 40.0)),
                **merged,
            )
        except (TypeError, DataError) as exc:
            raise ConfigError(f"invalid phantom spec for {token}: {exc}") from exc
    missing = [tok for tok in LABEL_TOKENS if tok not in specs]
    if missing:
        raise ConfigError(f"phantom spec missing classes: {missing}")
    return specs


def separable_phantom_config() -> dict:
    """Widely separated classes (contrast >> noise): a sanity-check set on
    which any working pipeline should reach near-perfect AUC."""
    return {
        "canvas": 120,
        "noise_sigma": 15.0,
        "axis_jitter": 0.15,
        "center_jitter": 0.05,
        "classes": {
            "N0": {"axes": [30, 24], "curve": {"a": 24000.0, "b": 1.0, "c": 40.0}},
            "N1-2": {"axes": [30, 24], "curve": {"a": 36000.0, "b": 1.0, "c": 340.0}},
            "N3plus": {"axes": [30, 24], "curve": {"a": 48000.0, "b": 1.0, "c": 640.0}},
        },
    }


def ambiguous_phantom_config() -> dict:
    """Classes that overlap at any single energy (per-case intensity
    jitter swamps the offsets) but differ in spectral decay rate, with a
    couple of randomly corrupted channels per case. Calibrated so the
    ablation grid orders: baseline < each single component < full."""
    return {
        "canvas": 120,
        "noise_sigma": 60.0,
        "intensity_jitter": 120.0,
        "glitch_channels": 2,
        "glitch_sigma": 250.0,
        "axis_jitter": 0.15,
        "center_jitter": 0.05,
        "classes": {
            "N0": {"axes": [30, 24], "curve": {"a": 26000.0, "b": 0.92, "c": 120.0}},
            "N1-2": {"axes": [30, 24], "curve": {"a": 30000.0, "b": 1.0, "c": 160.0}},
            "N3plus": {"axes": [30, 24], "curve": {"a": 34000.0, "b": 1.08, "c": 200.0}},
        },
    }
