"""Command-line interface.

Subcommands: locate, ring-fit, losses, quality, segeval, synth. Outputs
are machine-readable (JSON-lines records + JSON summaries, CSV where
tabular), validate against the schemas shipped with the package, and are
byte-identical across runs with the same inputs, flags and seed.

Every tunable has both a flag and a config-file key (--config JSON);
explicit flags win. The effective configuration is echoed into each
summary. EYESCREEN_OUT sets the default output directory.

Per-image pipeline failures (no pupil found, too little ring signal) are
recorded in the JSON-lines output with ok=false; the exit code is nonzero
only for hard failures such as unreadable inputs or invalid
configuration.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np
from click.core import ParameterSource
from PIL import Image as PILImage

from . import losses as losses_mod
from . import metrics, reports, ring, synth
from .distance import save_sdm, signed_distance_map
from .edges import CannyConfig
from .errors import DegenerateInputError, EyescreenError
from .image import load_image
from .preprocess import PreprocessConfig, apply_preprocessing
from .pupil import alignment_offset, locate_pupil

OUT_ENVVAR = "EYESCREEN_OUT"


def _out_dir(out) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"cannot read config {path}: {exc}")


def _effective(ctx, config: dict, **params) -> dict:
    """Merge flag values with config-file values; explicit flags win."""
    merged = {}
    for name, value in params.items():
        source = ctx.get_parameter_source(name)
        if source == ParameterSource.COMMANDLINE or name not in config:
            merged[name] = value
        else:
            merged[name] = config[name]
    return merged


def _error_info(exc: Exception) -> dict:
    return {
        "type": type(exc).__name__,
        "message": str(exc),
        "stage": getattr(exc, "stage", None),
    }


def _write_jsonl(path: Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(reports.canonical_json(rec) + "\n")


def _resolve_inputs(images, corpus) -> tuple[list[tuple[Path, dict | None]], Path | None]:
    """Expand CLI inputs to (image path, manifest truth or None) pairs."""
    pairs: list[tuple[Path, dict | None]] = []
    base = None
    if corpus:
        base = Path(corpus)
        manifest = base / "manifest.jsonl"
        if not manifest.is_file():
            raise click.ClickException(f"no manifest.jsonl in corpus directory {base}")
        for rec in synth.load_manifest(manifest):
            pairs.append((base / rec["path"], rec))
    for img in images:
        pairs.append((Path(img), None))
    if not pairs:
        raise click.ClickException("no input images (pass files or --corpus)")
    return pairs, base


@click.group()
@click.version_option(package_name="eyescreen")
def main():
    """Screening-device image pipeline: pupil localization, segmentation
    losses, image quality metrics, photorefraction ring analysis, and
    synthetic ground-truth corpora."""


# ---------------------------------------------------------------------------
# locate


def _locate_one(args) -> dict:
    path_str, truth, cfg_kwargs, min_len, target, overlay_path, preprocess, mm_per_px = args
    record: dict = {"path": path_str, "ok": False, "error": None}
    try:
        img = load_image(path_str)
    except Exception as exc:
        record["error"] = _error_info(exc)
        record["hard_failure"] = True
        return record
    try:
        if preprocess is not None:
            img = apply_preprocessing(img, PreprocessConfig(**preprocess))
        est = locate_pupil(img, CannyConfig(**cfg_kwargs), min_contour_length=min_len)
    except EyescreenError as exc:
        record["error"] = _error_info(exc)
        return record
    tgt = target if target is not None else ((img.shape[1] - 1) / 2.0, (img.shape[0] - 1) / 2.0)
    dx, dy = alignment_offset(est, tgt)
    record.update(
        ok=True,
        estimate=est.to_record(mm_per_px=mm_per_px),
        offset={"dx": dx, "dy": dy, "target": [tgt[0], tgt[1]]},
    )
    if truth is not None:
        t = truth["truth"]
        record["truth"] = {
            "cx": t["cx"], "cy": t["cy"], "radius_px": t["radius_px"],
            "ede": metrics.ede((est.cx, est.cy), (t["cx"], t["cy"])),
        }
    if overlay_path is not None:
        _render_pupil_overlay(img, est, tgt, overlay_path)
    return record


def _render_pupil_overlay(img, est, target, path) -> None:
    rgb = np.repeat(np.clip(np.rint(img), 0, 255).astype(np.uint8)[:, :, None], 3, axis=2)
    pts = est.contour.points
    rgb[pts[:, 1], pts[:, 0]] = (0, 255, 0)
    h, w = img.shape
    cx, cy = int(round(est.cx)), int(round(est.cy))
    for d in range(-6, 7):
        if 0 <= cx + d < w and 0 <= cy < h:
            rgb[cy, cx + d] = (255, 0, 0)
        if 0 <= cx < w and 0 <= cy + d < h:
            rgb[cy + d, cx] = (255, 0, 0)
    tx, ty = int(round(target[0])), int(round(target[1]))
    if 0 <= tx < w and 0 <= ty < h:
        rgb[ty, tx] = (0, 128, 255)
    PILImage.fromarray(rgb, mode="RGB").save(str(path), format="PNG")


@main.command()
@click.argument("images", nargs=-1, type=click.Path())
@click.option("--corpus", type=click.Path(), help="Corpus directory with manifest.jsonl (adds truth EDE summary).")
@click.option("--out", default=None, envvar=OUT_ENVVAR, show_default="./out or $EYESCREEN_OUT")
@click.option("--config", "config_path", type=click.Path(), help="JSON config file; flags override it.")
@click.option("--canny-high-quantile", default=0.99, show_default=True)
@click.option("--canny-low-ratio", default=0.4, show_default=True)
@click.option("--median-kernel", default=3, show_default=True)
@click.option("--min-contour-length", default=100, show_default=True)
@click.option("--target", default=None, help="Alignment target 'x,y' (default: image center).")
@click.option("--gamma", default=None, type=float,
              help="Apply gamma correction (+ optional equalization) before detection.")
@click.option("--equalize", is_flag=True, help="Histogram-equalize before detection.")
@click.option("--mm-per-px", default=None, type=float,
              help="Scale calibration; adds radius_mm to each record.")
@click.option("--overlay", is_flag=True, help="Emit a contour + crosshair PNG per image.")
@click.option("--jobs", default=1, show_default=True)
@click.pass_context
def locate(ctx, images, corpus, out, config_path, canny_high_quantile,
           canny_low_ratio, median_kernel, min_contour_length, target,
           gamma, equalize, mm_per_px, overlay, jobs):
    """Locate the pupil center in each image; with a corpus manifest,
    summarize EDE statistics against the recorded truth."""
    config = _load_config(config_path)
    eff = _effective(
        ctx, config,
        canny_high_quantile=canny_high_quantile,
        canny_low_ratio=canny_low_ratio,
        median_kernel=median_kernel,
        min_contour_length=min_contour_length,
        target=target,
        gamma=gamma,
        equalize=equalize,
        mm_per_px=mm_per_px,
        jobs=jobs,
    )
    out_path = _out_dir(out if out is not None else config.get("out", "out"))
    pairs, _ = _resolve_inputs(images, corpus)

    tgt = None
    if eff["target"] is not None:
        try:
            x, y = str(eff["target"]).split(",")
            tgt = (float(x), float(y))
        except ValueError:
            raise click.ClickException(f"--target must be 'x,y', got {eff['target']!r}")

    overlay_dir = None
    if overlay:
        overlay_dir = out_path / "overlays"
        overlay_dir.mkdir(exist_ok=True)

    cfg_kwargs = {
        "high_quantile": float(eff["canny_high_quantile"]),
        "low_ratio": float(eff["canny_low_ratio"]),
        "median_kernel": int(eff["median_kernel"]),
    }
    preprocess = None
    if eff["gamma"] is not None or eff["equalize"]:
        preprocess = {
            "gamma": float(eff["gamma"]) if eff["gamma"] is not None else 1.0,
            "equalize": bool(eff["equalize"]),
        }
    scale = float(eff["mm_per_px"]) if eff["mm_per_px"] is not None else None
    tasks = []
    for path, truth in pairs:
        overlay_path = overlay_dir / f"{path.stem}_overlay.png" if overlay_dir else None
        tasks.append((str(path), truth, cfg_kwargs, int(eff["min_contour_length"]),
                      tgt, overlay_path, preprocess, scale))

    if int(eff["jobs"]) > 1:
        with ProcessPoolExecutor(max_workers=int(eff["jobs"])) as pool:
            records = list(pool.map(_locate_one, tasks))
    else:
        records = [_locate_one(t) for t in tasks]

    for rec in records:
        reports.validate("pupil_record", rec)
    _write_jsonl(out_path / "locate_records.jsonl", records)

    n_failed = sum(1 for r in records if not r["ok"])
    summary = {
        "command": "locate",
        "n_images": len(records),
        "n_failed": n_failed,
        "config": {**cfg_kwargs, "min_contour_length": int(eff["min_contour_length"]),
                   "preprocess": preprocess, "mm_per_px": scale},
    }
    edes = [r["truth"]["ede"] for r in records if r.get("truth")]
    radii = [r["truth"]["radius_px"] for r in records if r.get("truth")]
    if edes:
        mean_ede = float(np.mean(edes))
        summary["ede"] = {
            "mean": mean_ede,
            "max": float(np.max(edes)),
            "ne": mean_ede / float(np.mean(radii)),
            "mse": metrics.mse_of_edes(edes),
            "n": len(edes),
        }
    reports.validate("locate_summary", summary)
    (out_path / "locate_summary.json").write_text(reports.pretty_json(summary), encoding="utf-8")

    click.echo(f"locate: {len(records) - n_failed}/{len(records)} ok -> {out_path}")
    if "ede" in summary:
        e = summary["ede"]
        click.echo(f"  EDE mean={e['mean']:.3f}px max={e['max']:.3f}px NE={e['ne']:.4f} MSE={e['mse']:.3f}")
    hard = any(r.get("hard_failure") for r in records)
    if hard:
        bad = [r["path"] for r in records if r.get("hard_failure")]
        raise click.ClickException("unreadable input(s): " + ", ".join(bad))


# ---------------------------------------------------------------------------
# ring-fit


def _ring_one(args) -> dict:
    path_str, truth, model_dict, cfg_kwargs, overlay_path = args
    record: dict = {"path": path_str, "ok": False, "error": None}
    model = ring.RefractionModel(**model_dict)
    try:
        img = load_image(path_str)
    except Exception as exc:
        record["error"] = _error_info(exc)
        record["hard_failure"] = True
        return record
    try:
        result = ring.measure_refraction(img, model, ring.RingScanConfig(**cfg_kwargs))
    except EyescreenError as exc:
        record["error"] = _error_info(exc)
        return record
    record.update(ok=True, **result.to_dict())
    if truth is not None:
        record["truth"] = dict(truth["truth"])
        record["truth"]["abs_error"] = abs(result.diopters - truth["truth"]["diopters"])
    if overlay_path is not None:
        _render_ring_overlay(img, result, overlay_path)
    return record


def _render_ring_overlay(img, result, path) -> None:
    rgb = np.repeat(np.clip(np.rint(img), 0, 255).astype(np.uint8)[:, :, None], 3, axis=2)
    h, w = img.shape
    geom = result.ring
    theta = np.linspace(0, 2 * np.pi, 720, endpoint=False)
    ex = geom.cx + geom.a * np.cos(theta) * math.cos(geom.rotation) - geom.b * np.sin(theta) * math.sin(geom.rotation)
    ey = geom.cy + geom.a * np.cos(theta) * math.sin(geom.rotation) + geom.b * np.sin(theta) * math.cos(geom.rotation)
    exi = np.clip(np.rint(ex), 0, w - 1).astype(int)
    eyi = np.clip(np.rint(ey), 0, h - 1).astype(int)
    rgb[eyi, exi] = (0, 255, 255)
    for s in geom.samples:
        px, py = int(round(s.peak_point[0])), int(round(s.peak_point[1]))
        if 0 <= px < w and 0 <= py < h:
            rgb[py, px] = (255, 255, 0)
    cx, cy = int(round(geom.cx)), int(round(geom.cy))
    for d in range(-4, 5):
        if 0 <= cx + d < w and 0 <= cy < h:
            rgb[cy, cx + d] = (255, 0, 0)
        if 0 <= cx < w and 0 <= cy + d < h:
            rgb[cy + d, cx] = (255, 0, 0)
    PILImage.fromarray(rgb, mode="RGB").save(str(path), format="PNG")


@main.command(name="ring-fit")
@click.argument("images", nargs=-1, type=click.Path())
@click.option("--corpus", type=click.Path(), help="Ring corpus directory with manifest.jsonl.")
@click.option("--model", "model_path", type=click.Path(), help="Refraction model JSON.")
@click.option("--fit", "fit_path", type=click.Path(),
              help="Calibrate: JSON list of (diopter, feature) pairs; writes a model file.")
@click.option("--model-out", type=click.Path(), help="Where --fit writes the model (default <out>/model.json).")
@click.option("--feature-scale", default=1.0, show_default=True,
              help="px per feature unit recorded in a fitted model.")
@click.option("--out", default=None, envvar=OUT_ENVVAR)
@click.option("--config", "config_path", type=click.Path())
@click.option("--blur-sigma", default=2.0, show_default=True)
@click.option("--n-rays", default=360, show_default=True)
@click.option("--peak-fraction", default=0.5, show_default=True)
@click.option("--overlay", is_flag=True)
@click.option("--jobs", default=1, show_default=True)
@click.pass_context
def ring_fit(ctx, images, corpus, model_path, fit_path, model_out,
             feature_scale, out, config_path, blur_sigma, n_rays,
             peak_fraction, overlay, jobs):
    """Measure diopters from ring images, or calibrate the linear model
    from (diopter, feature) pairs with --fit."""
    config = _load_config(config_path)
    eff = _effective(
        ctx, config,
        blur_sigma=blur_sigma, n_rays=n_rays, peak_fraction=peak_fraction,
        feature_scale=feature_scale, jobs=jobs,
    )
    out_path = _out_dir(out if out is not None else config.get("out", "out"))

    if fit_path:
        try:
            with open(fit_path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise click.ClickException(f"cannot read pairs file {fit_path}: {exc}")
        pairs = raw["pairs"] if isinstance(raw, dict) else raw
        try:
            model = ring.fit_refraction_model(pairs, feature_scale=float(eff["feature_scale"]))
        except EyescreenError as exc:
            raise click.ClickException(str(exc))
        dest = Path(model_out) if model_out else out_path / "model.json"
        reports.validate("refraction_model", model.to_dict())
        ring.save_model(model, dest)
        click.echo(f"model: slope={model.slope:.6f} intercept={model.intercept:.6f} "
                   f"r2={model.r2:.6f} -> {dest}")
        if not images and not corpus:
            return

    if not fit_path and not model_path:
        raise click.UsageError("provide --model FILE or --fit PAIRS")
    if model_path:
        try:
            model = ring.load_model(model_path)
        except (OSError, EyescreenError) as exc:
            raise click.ClickException(f"cannot load model {model_path}: {exc}")

    pairs_in, _ = _resolve_inputs(images, corpus)
    overlay_dir = None
    if overlay:
        overlay_dir = out_path / "overlays"
        overlay_dir.mkdir(exist_ok=True)
    cfg_kwargs = {
        "blur_sigma": float(eff["blur_sigma"]),
        "n_rays": int(eff["n_rays"]),
        "peak_fraction": float(eff["peak_fraction"]),
    }
    model_dict = {
        "slope": model.slope, "intercept": model.intercept,
        "feature_scale": model.feature_scale,
        "r2": model.r2, "fitted_on": model.fitted_on,
    }
    tasks = []
    for path, truth in pairs_in:
        overlay_path = overlay_dir / f"{path.stem}_overlay.png" if overlay_dir else None
        tasks.append((str(path), truth, model_dict, cfg_kwargs, overlay_path))

    if int(eff["jobs"]) > 1:
        with ProcessPoolExecutor(max_workers=int(eff["jobs"])) as pool:
            records = list(pool.map(_ring_one, tasks))
    else:
        records = [_ring_one(t) for t in tasks]

    for rec in records:
        reports.validate("ring_record", rec)
    _write_jsonl(out_path / "ring_records.jsonl", records)

    n_failed = sum(1 for r in records if not r["ok"])
    summary = {
        "command": "ring-fit",
        "n_images": len(records),
        "n_failed": n_failed,
        "model": model_dict | {"fitted_on": [list(p) for p in model_dict["fitted_on"]]},
        "config": cfg_kwargs,
    }
    abs_errors = [r["truth"]["abs_error"] for r in records if r.get("truth")]
    if abs_errors:
        summary["diopter_abs_error"] = {
            "mean": float(np.mean(abs_errors)),
            "max": float(np.max(abs_errors)),
            "n": len(abs_errors),
        }
    (out_path / "ring_summary.json").write_text(reports.pretty_json(summary), encoding="utf-8")
    click.echo(f"ring-fit: {len(records) - n_failed}/{len(records)} ok -> {out_path}")
    if abs_errors:
        d = summary["diopter_abs_error"]
        click.echo(f"  |D error| mean={d['mean']:.3f}D max={d['max']:.3f}D")
    if any(r.get("hard_failure") for r in records):
        bad = [r["path"] for r in records if r.get("hard_failure")]
        raise click.ClickException("unreadable input(s): " + ", ".join(bad))


# ---------------------------------------------------------------------------
# losses


def load_prob_map_json(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    values = np.asarray(raw["values"], dtype=np.float64)
    if values.ndim != 3:
        raise click.ClickException(f"prob map in {path} must be H x W x C")
    return values


def load_label_mask(path, num_classes: int | None = None) -> np.ndarray:
    """Label mask from JSON ({"labels": [[...]]}) or a PNG label image."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        labels = np.asarray(raw["labels"], dtype=np.intp)
    else:
        with PILImage.open(path) as im:
            labels = np.asarray(im, dtype=np.intp)
    if labels.ndim != 2:
        raise click.ClickException(f"label mask in {path} must be 2-D")
    if num_classes is not None and labels.max() >= num_classes:
        raise click.ClickException(
            f"label {labels.max()} outside the {num_classes}-class range in {path}"
        )
    return labels


@main.command()
@click.option("--pred", "pred_path", required=True, type=click.Path(),
              help="Probability map JSON {\"values\": H x W x C}.")
@click.option("--truth", "truth_path", required=True, type=click.Path(),
              help="Label mask JSON {\"labels\": H x W} or label PNG.")
@click.option("--epoch", default=0, show_default=True)
@click.option("--total-epochs", default=150, show_default=True)
@click.option("--lambda1", default=1.0, show_default=True)
@click.option("--lambda2", default=10.0, show_default=True)
@click.option("--alpha-max", default=1.0, show_default=True)
@click.option("--band-tau", default=2.0, show_default=True)
@click.option("--gradcheck", is_flag=True,
              help="Verify analytic gradients against finite differences.")
@click.option("--export-sdm", "export_sdm", is_flag=True,
              help="Write per-class truth signed distance maps as float32 grids.")
@click.option("--out", default=None, envvar=OUT_ENVVAR)
@click.option("--config", "config_path", type=click.Path())
@click.pass_context
def losses(ctx, pred_path, truth_path, epoch, total_epochs, lambda1, lambda2,
           alpha_max, band_tau, gradcheck, export_sdm, out, config_path):
    """Evaluate the combined segmentation loss on a probability map."""
    config = _load_config(config_path)
    eff = _effective(
        ctx, config,
        epoch=epoch, total_epochs=total_epochs, lambda1=lambda1,
        lambda2=lambda2, alpha_max=alpha_max, band_tau=band_tau,
    )
    out_path = _out_dir(out if out is not None else config.get("out", "out"))

    pred = load_prob_map_json(pred_path)
    labels = load_label_mask(truth_path, num_classes=pred.shape[2])
    if labels.shape != pred.shape[:2]:
        raise click.ClickException(
            f"shape mismatch: prob map {pred.shape[:2]} vs mask {labels.shape}"
        )
    losses_mod.validate_prob_map(pred)
    truth = losses_mod.one_hot(labels, pred.shape[2])

    weights = losses_mod.LossWeights(
        lambda1=float(eff["lambda1"]), lambda2=float(eff["lambda2"]),
        alpha_max=float(eff["alpha_max"]), band_tau=float(eff["band_tau"]),
    )
    report = losses_mod.combined_loss(
        pred, truth, weights, epoch=int(eff["epoch"]),
        total_epochs=int(eff["total_epochs"]),
    ).to_dict()

    exit_bad = False
    if gradcheck:
        check = losses_mod.finite_difference_gradcheck(
            pred, truth, eps=weights.epsilon, band_tau=weights.band_tau)
        check["pass"] = bool(
            check["max_rel_error"] <= 1e-4 and check["surrogate_max_abs_error"] <= 1e-8
        )
        report["gradcheck"] = check
        exit_bad = not check["pass"]

    if export_sdm:
        for c in range(pred.shape[2]):
            plane = labels == c
            try:
                save_sdm(signed_distance_map(plane), out_path / f"sdm_class{c}.npy")
            except DegenerateInputError:
                pass  # absent or full-frame classes have no boundary

    reports.validate("loss_report", report)
    (out_path / "loss_report.json").write_text(reports.pretty_json(report), encoding="utf-8")
    click.echo(reports.pretty_json(report), nl=False)
    if exit_bad:
        raise click.ClickException("gradient check failed")


# ---------------------------------------------------------------------------
# quality


def _quality_one(path_str: str) -> dict:
    record: dict = {"path": path_str}
    try:
        img = load_image(path_str)
    except Exception as exc:
        record["error"] = _error_info(exc)
        record["hard_failure"] = True
        return record
    record.update(metrics.quality_report(img).to_dict())
    return record


@main.command()
@click.argument("images", nargs=-1, type=click.Path())
@click.option("--corpus", type=click.Path())
@click.option("--out", default=None, envvar=OUT_ENVVAR)
@click.option("--jobs", default=1, show_default=True)
def quality(images, corpus, out, jobs):
    """Image quality metrics per image plus a CSV corpus summary."""
    out_path = _out_dir(out if out is not None else "out")
    pairs, _ = _resolve_inputs(images, corpus)
    paths = [str(p) for p, _ in pairs]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_quality_one, paths))
    else:
        records = [_quality_one(p) for p in paths]

    good = [r for r in records if "hard_failure" not in r]
    for rec in good:
        reports.validate("quality_report", rec)
    _write_jsonl(out_path / "quality_records.jsonl", records)

    fields = ["path", "brightness", "rms_contrast", "snr_db",
              "spatial_sharpness", "frequency_sharpness"]
    with open(out_path / "quality_summary.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        for rec in good:
            writer.writerow(rec)

    click.echo(f"quality: {len(good)}/{len(records)} ok -> {out_path}")
    if len(good) != len(records):
        bad = [r["path"] for r in records if r.get("hard_failure")]
        raise click.ClickException("unreadable input(s): " + ", ".join(bad))


# ---------------------------------------------------------------------------
# segeval


@main.command()
@click.option("--pred", "pred_path", required=True, type=click.Path())
@click.option("--truth", "truth_path", required=True, type=click.Path())
@click.option("--classes", "num_classes", default=4, show_default=True)
@click.option("--out", default=None, envvar=OUT_ENVVAR)
def segeval(pred_path, truth_path, num_classes, out):
    """F1 and mean IoU between predicted and truth label masks."""
    out_path = _out_dir(out if out is not None else "out")
    pred = load_label_mask(pred_path)
    truth = load_label_mask(truth_path)
    if pred.shape != truth.shape:
        raise click.ClickException(f"shape mismatch: {pred.shape} vs {truth.shape}")
    report = {
        "f1": metrics.macro_f1(pred, truth, num_classes),
        "miou": metrics.miou(pred, truth, num_classes),
        "per_class_iou": {str(k): v for k, v in metrics.per_class_iou(pred, truth, num_classes).items()},
        "per_class_f1": {str(c): metrics.f1_score(pred, truth, c)
                         for c in range(num_classes)},
    }
    reports.validate("segeval_report", report)
    (out_path / "segeval.json").write_text(reports.pretty_json(report), encoding="utf-8")
    click.echo(reports.pretty_json(report), nl=False)


# ---------------------------------------------------------------------------
# synth


@main.command(name="synth")
@click.option("--config", "config_path", type=click.Path(),
              help="Corpus config JSON (kind, count, seed, geometry ranges).")
@click.option("--from-manifest", "manifest_path", type=click.Path(),
              help="Regenerate a corpus byte-identically from its manifest.")
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", default=None, type=int, help="Override the config seed.")
def synth_cmd(config_path, manifest_path, out, seed):
    """Generate (or regenerate) a synthetic ground-truth corpus."""
    if bool(config_path) == bool(manifest_path):
        raise click.UsageError("provide exactly one of --config or --from-manifest")
    if manifest_path:
        result = synth.regenerate_from_manifest(manifest_path, out)
        click.echo(f"synth: regenerated {result['count']} images -> {out}")
        click.echo(f"  manifest sha256 {result['manifest_sha256']}")
        return
    config = _load_config(config_path)
    if seed is not None:
        config["seed"] = seed
    try:
        summary = synth.synth_corpus(config, out)
    except EyescreenError as exc:
        raise click.ClickException(str(exc))
    reports.validate("corpus_summary", summary)
    for rec in synth.load_manifest(Path(out) / "manifest.jsonl"):
        reports.validate("manifest_record", rec)
    click.echo(f"synth: {summary['count']} x {summary['kind']} images -> {out}")
    click.echo(f"  manifest sha256 {summary['manifest_sha256']}")


if __name__ == "__main__":
    main()
