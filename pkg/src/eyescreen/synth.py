"""Deterministic synthetic ground-truth generators.

Two families: eye-surface images (anti-aliased pupil/iris/sclera disks
with four-class label masks) for localization and segmentation tests, and
photorefraction ring images whose mean diameter is set by the forward
linear diopter model, closing the measurement round trip.

All generation is a pure function of (spec, seed). Noise comes from a
PCG64 generator seeded with the spec's seed entropy, so regeneration is
bit-identical; corpus drivers derive per-image seeds from
(master seed, image index, stream) and record them in the manifest.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ParameterError
from .image import save_png
from .ring import DEFAULT_REFRACTION_MODEL, RingGeometry

CLASS_BACKGROUND = 0
CLASS_SCLERA = 1
CLASS_PUPIL = 2
CLASS_IRIS = 3

DEFAULT_EYE_LEVELS = {"pupil": 20.0, "iris": 140.0, "sclera": 230.0, "background": 180.0}


def _rng(seed) -> np.random.Generator:
    entropy = tuple(seed) if isinstance(seed, (list, tuple)) else seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class SynthEyeSpec:
    """Concentric pupil/iris/sclera scene on a flat background."""

    width: int = 320
    height: int = 320
    cx: float = 160.0
    cy: float = 160.0
    pupil_radius: float = 32.0
    iris_radius: float = 64.0
    sclera_radius: float | None = None  # default 1.6 x iris radius
    levels: dict = field(default_factory=lambda: dict(DEFAULT_EYE_LEVELS))
    noise_sigma: float = 0.0
    seed: object = 0

    def __post_init__(self):
        if self.width < 8 or self.height < 8:
            raise ParameterError("image too small")
        if not 0 < self.pupil_radius < self.iris_radius:
            raise ParameterError("need 0 < pupil_radius < iris_radius")
        if self.resolved_sclera_radius() <= self.iris_radius:
            raise ParameterError("sclera radius must exceed iris radius")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ParameterError("pupil center outside the frame")
        for name, value in self.levels.items():
            if not 0 <= value <= 255:
                raise ParameterError(f"level {name}={value} outside [0, 255]")
        if self.noise_sigma < 0:
            raise ParameterError("noise_sigma must be >= 0")

    def resolved_sclera_radius(self) -> float:
        return self.sclera_radius if self.sclera_radius is not None else 1.6 * self.iris_radius

    def to_dict(self) -> dict:
        return {
            "kind": "eye",
            "width": self.width, "height": self.height,
            "cx": self.cx, "cy": self.cy,
            "pupil_radius": self.pupil_radius,
            "iris_radius": self.iris_radius,
            "sclera_radius": self.resolved_sclera_radius(),
            "levels": dict(self.levels),
            "noise_sigma": self.noise_sigma,
            "seed": list(self.seed) if isinstance(self.seed, (list, tuple)) else self.seed,
        }

    @staticmethod
    def from_dict(raw: dict) -> "SynthEyeSpec":
        return SynthEyeSpec(
            width=int(raw["width"]), height=int(raw["height"]),
            cx=float(raw["cx"]), cy=float(raw["cy"]),
            pupil_radius=float(raw["pupil_radius"]),
            iris_radius=float(raw["iris_radius"]),
            sclera_radius=float(raw["sclera_radius"]) if raw.get("sclera_radius") is not None else None,
            levels={k: float(v) for k, v in raw["levels"].items()},
            noise_sigma=float(raw["noise_sigma"]),
            seed=raw["seed"],
        )


@dataclass
class EyeTruth:
    """Exact generation parameters plus the rasterized label mask."""

    cx: float
    cy: float
    radius: float
    labels: np.ndarray  # (H, W) uint8 class ids
    pupil_area: int

    def to_record(self) -> dict:
        return {
            "cx": self.cx,
            "cy": self.cy,
            "radius_px": self.radius,
            "pupil_area_px": self.pupil_area,
        }


def synth_eye(spec: SynthEyeSpec) -> tuple[np.ndarray, EyeTruth]:
    """Render the eye scene with coverage-weighted (anti-aliased) disk
    edges and additive clamped Gaussian noise."""
    yy, xx = np.mgrid[0:spec.height, 0:spec.width]
    d = np.hypot(xx - spec.cx, yy - spec.cy)

    img = np.full(d.shape, spec.levels["background"], dtype=np.float64)
    sclera_r = spec.resolved_sclera_radius()
    for radius, level in (
        (sclera_r, spec.levels["sclera"]),
        (spec.iris_radius, spec.levels["iris"]),
        (spec.pupil_radius, spec.levels["pupil"]),
    ):
        coverage = np.clip(radius - d + 0.5, 0.0, 1.0)
        img = img * (1.0 - coverage) + level * coverage

    if spec.noise_sigma > 0:
        noise = _rng(spec.seed).standard_normal(d.shape)
        img = img + spec.noise_sigma * noise
    img = np.clip(img, 0.0, 255.0)

    labels = np.full(d.shape, CLASS_BACKGROUND, dtype=np.uint8)
    labels[d <= sclera_r] = CLASS_SCLERA
    labels[d <= spec.iris_radius] = CLASS_IRIS
    labels[d <= spec.pupil_radius] = CLASS_PUPIL
    truth = EyeTruth(
        cx=spec.cx, cy=spec.cy, radius=spec.pupil_radius,
        labels=labels, pupil_area=int(np.count_nonzero(labels == CLASS_PUPIL)),
    )
    return img, truth


@dataclass(frozen=True)
class SynthRingSpec:
    """Gaussian-profile annulus whose mean diameter encodes a diopter
    value through the forward linear model."""

    width: int = 320
    height: int = 320
    cx: float | None = None  # default: frame center
    cy: float | None = None
    diopters: float = 0.0
    slope: float = DEFAULT_REFRACTION_MODEL.slope
    intercept: float = DEFAULT_REFRACTION_MODEL.intercept
    feature_scale: float = 10.0  # px per feature unit
    eccentricity: float = 0.0
    rotation: float = 0.0
    cross_sigma: float = 3.0
    peak: float = 220.0
    background: float = 8.0
    noise_sigma: float = 0.0
    seed: object = 0

    def __post_init__(self):
        if self.cross_sigma <= 0:
            raise ParameterError("cross_sigma must be positive")
        if not 0.0 <= self.eccentricity < 1.0:
            raise ParameterError("eccentricity must be in [0, 1)")
        if not 0 <= self.background < self.peak <= 255:
            raise ParameterError("need 0 <= background < peak <= 255")
        r = self.mean_radius_px()
        if r <= 3.0 * self.cross_sigma:
            raise ParameterError(
                f"ring radius {r:.2f}px must exceed 3 x cross_sigma ({3 * self.cross_sigma:.2f}px)"
            )
        cx, cy = self.center()
        margin = self.semi_major_px() + 3.0 * self.cross_sigma
        if (cx - margin < 0 or cx + margin > self.width - 1
                or cy - margin < 0 or cy + margin > self.height - 1):
            raise ParameterError("ring does not fit inside the frame")

    def center(self) -> tuple[float, float]:
        cx = (self.width - 1) / 2.0 if self.cx is None else self.cx
        cy = (self.height - 1) / 2.0 if self.cy is None else self.cy
        return cx, cy

    def feature_units(self) -> float:
        return self.slope * self.diopters + self.intercept

    def mean_radius_px(self) -> float:
        return self.feature_units() * self.feature_scale / 2.0

    def _axis_scale(self) -> tuple[float, float]:
        """Semi-axes (a, b) in px whose mean polar radius equals
        mean_radius_px."""
        b_over_a = float(np.sqrt(1.0 - self.eccentricity ** 2))
        phi = np.linspace(0.0, 2.0 * np.pi, 8192, endpoint=False)
        unit_r = b_over_a / np.hypot(b_over_a * np.cos(phi), np.sin(phi))
        k = self.mean_radius_px() / float(unit_r.mean())
        return k, k * b_over_a

    def semi_major_px(self) -> float:
        return self._axis_scale()[0]

    def to_dict(self) -> dict:
        cx, cy = self.center()
        return {
            "kind": "ring",
            "width": self.width, "height": self.height,
            "cx": cx, "cy": cy,
            "diopters": self.diopters,
            "slope": self.slope, "intercept": self.intercept,
            "feature_scale": self.feature_scale,
            "eccentricity": self.eccentricity,
            "rotation": self.rotation,
            "cross_sigma": self.cross_sigma,
            "peak": self.peak, "background": self.background,
            "noise_sigma": self.noise_sigma,
            "seed": list(self.seed) if isinstance(self.seed, (list, tuple)) else self.seed,
        }

    @staticmethod
    def from_dict(raw: dict) -> "SynthRingSpec":
        return SynthRingSpec(
            width=int(raw["width"]), height=int(raw["height"]),
            cx=float(raw["cx"]), cy=float(raw["cy"]),
            diopters=float(raw["diopters"]),
            slope=float(raw["slope"]), intercept=float(raw["intercept"]),
            feature_scale=float(raw["feature_scale"]),
            eccentricity=float(raw["eccentricity"]),
            rotation=float(raw["rotation"]),
            cross_sigma=float(raw["cross_sigma"]),
            peak=float(raw["peak"]), background=float(raw["background"]),
            noise_sigma=float(raw["noise_sigma"]),
            seed=raw["seed"],
        )


@dataclass
class RingTruth:
    """Exact ring geometry and the diopter value it encodes."""

    geometry: RingGeometry
    diopters: float
    feature_units: float
    mean_diameter_px: float

    def to_record(self) -> dict:
        return {
            "diopters": self.diopters,
            "feature": self.feature_units,
            "mean_diameter_px": self.mean_diameter_px,
            "geometry": {
                "cx": self.geometry.cx, "cy": self.geometry.cy,
                "a": self.geometry.a, "b": self.geometry.b,
                "rotation": self.geometry.rotation,
            },
        }


def synth_ring(spec: SynthRingSpec) -> tuple[np.ndarray, RingTruth]:
    """Render the ring as a Gaussian radial profile around an ellipse."""
    cx, cy = spec.center()
    a, b = spec._axis_scale()

    yy, xx = np.mgrid[0:spec.height, 0:spec.width]
    dx = xx - cx
    dy = yy - cy
    cos_r, sin_r = np.cos(spec.rotation), np.sin(spec.rotation)
    u = dx * cos_r + dy * sin_r
    v = -dx * sin_r + dy * cos_r
    r_px = np.hypot(dx, dy)
    r_uv = np.hypot(u, v)
    denom = np.hypot(b * u, a * v)
    # the exact center has no defined polar angle; any positive radius
    # keeps it dark
    r_ellipse = np.where(r_uv == 0, a, a * b * r_uv / np.where(denom == 0, 1.0, denom))

    img = spec.background + (spec.peak - spec.background) * np.exp(
        -((r_px - r_ellipse) ** 2) / (2.0 * spec.cross_sigma ** 2)
    )
    if spec.noise_sigma > 0:
        img = img + spec.noise_sigma * _rng(spec.seed).standard_normal(img.shape)
    img = np.clip(img, 0.0, 255.0)

    truth = RingTruth(
        geometry=RingGeometry(cx=cx, cy=cy, a=a, b=b, rotation=spec.rotation % np.pi),
        diopters=spec.diopters,
        feature_units=spec.feature_units(),
        mean_diameter_px=2.0 * spec.mean_radius_px(),
    )
    return img, truth


# ---------------------------------------------------------------------------
# corpus generation


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _draw_eye_spec(config: dict, index: int) -> SynthEyeSpec:
    master = int(config.get("seed", 0))
    rng = _rng((master, index, 0))
    width = int(config.get("width", 320))
    height = int(config.get("height", 320))
    jitter = float(config.get("center_jitter", 24.0))
    r_lo, r_hi = config.get("pupil_radius", [25.0, 40.0])
    i_lo, i_hi = config.get("iris_ratio", [1.8, 2.2])
    levels = {**DEFAULT_EYE_LEVELS, **config.get("levels", {})}
    pupil_r = float(rng.uniform(r_lo, r_hi))
    return SynthEyeSpec(
        width=width, height=height,
        cx=float(width / 2.0 + rng.uniform(-jitter, jitter)),
        cy=float(height / 2.0 + rng.uniform(-jitter, jitter)),
        pupil_radius=pupil_r,
        iris_radius=float(pupil_r * rng.uniform(i_lo, i_hi)),
        sclera_radius=None,
        levels=levels,
        noise_sigma=float(config.get("noise_sigma", 0.0)),
        seed=(master, index, 1),
    )


def _draw_ring_spec(config: dict, index: int) -> SynthRingSpec:
    master = int(config.get("seed", 0))
    rng = _rng((master, index, 0))
    diopters = config.get("diopters", [0.0])
    if isinstance(diopters, dict):
        d = float(rng.uniform(diopters["low"], diopters["high"]))
    else:
        d = float(diopters[index % len(diopters)])
    ecc = config.get("eccentricity", 0.0)
    if isinstance(ecc, (list, tuple)):
        ecc = float(rng.uniform(ecc[0], ecc[1]))
    rotation = config.get("rotation", 0.0)
    if rotation == "random":
        rotation = float(rng.uniform(0.0, np.pi))
    model = config.get("model", {})
    return SynthRingSpec(
        width=int(config.get("width", 320)),
        height=int(config.get("height", 320)),
        diopters=d,
        slope=float(model.get("slope", DEFAULT_REFRACTION_MODEL.slope)),
        intercept=float(model.get("intercept", DEFAULT_REFRACTION_MODEL.intercept)),
        feature_scale=float(config.get("feature_scale", 10.0)),
        eccentricity=float(ecc),
        rotation=float(rotation),
        cross_sigma=float(config.get("cross_sigma", 3.0)),
        peak=float(config.get("peak", 220.0)),
        background=float(config.get("background", 8.0)),
        noise_sigma=float(config.get("noise_sigma", 0.0)),
        seed=(master, index, 1),
    )


def _render_record(spec_dict: dict, index: int) -> tuple[dict, np.ndarray, np.ndarray | None]:
    """(manifest record, image, optional label mask) for one resolved spec."""
    if spec_dict["kind"] == "eye":
        spec = SynthEyeSpec.from_dict(spec_dict)
        img, truth = synth_eye(spec)
        record = {
            "index": index,
            "path": f"images/eye_{index:04d}.png",
            "mask_path": f"masks/eye_{index:04d}_mask.png",
            "spec": spec_dict,
            "truth": truth.to_record(),
        }
        return record, img, truth.labels
    if spec_dict["kind"] == "ring":
        spec = SynthRingSpec.from_dict(spec_dict)
        img, truth = synth_ring(spec)
        record = {
            "index": index,
            "path": f"images/ring_{index:04d}.png",
            "spec": spec_dict,
            "truth": truth.to_record(),
        }
        return record, img, None
    raise ParameterError(f"unknown corpus kind: {spec_dict['kind']!r}")


def synth_corpus(config: dict, out_dir) -> dict:
    """Generate a corpus: images (+ label masks for eyes), a JSON-lines
    manifest of per-image specs and exact truths, and a summary with the
    manifest hash for reproducibility checks."""
    kind = config.get("kind")
    if kind not in ("eye", "ring"):
        raise ParameterError(f"config kind must be 'eye' or 'ring', got {kind!r}")
    count = int(config.get("count", 1))
    if count < 1:
        raise ParameterError("count must be >= 1")

    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    if kind == "eye":
        (out / "masks").mkdir(exist_ok=True)

    records = []
    for i in range(count):
        spec = _draw_eye_spec(config, i) if kind == "eye" else _draw_ring_spec(config, i)
        record, img, labels = _render_record(spec.to_dict(), i)
        save_png(img, out / record["path"])
        if labels is not None:
            Image.fromarray(labels, mode="L").save(str(out / record["mask_path"]), format="PNG")
        records.append(record)

    manifest_text = "".join(_canonical_json(r) + "\n" for r in records)
    manifest_path = out / "manifest.jsonl"
    manifest_path.write_text(manifest_text, encoding="utf-8")
    summary = {
        "kind": kind,
        "count": count,
        "seed": int(config.get("seed", 0)),
        "config": config,
        "manifest_sha256": hashlib.sha256(manifest_text.encode("utf-8")).hexdigest(),
    }
    (out / "corpus.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return summary


def load_manifest(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def regenerate_from_manifest(manifest_path, out_dir) -> dict:
    """Rebuild a corpus byte-identically from its manifest."""
    records = load_manifest(manifest_path)
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    new_records = []
    for rec in records:
        record, img, labels = _render_record(rec["spec"], rec["index"])
        save_png(img, out / record["path"])
        if labels is not None:
            (out / "masks").mkdir(exist_ok=True)
            Image.fromarray(labels, mode="L").save(str(out / record["mask_path"]), format="PNG")
        new_records.append(record)
    manifest_text = "".join(_canonical_json(r) + "\n" for r in new_records)
    (out / "manifest.jsonl").write_text(manifest_text, encoding="utf-8")
    return {
        "count": len(new_records),
        "manifest_sha256": hashlib.sha256(manifest_text.encode("utf-8")).hexdigest(),
    }
