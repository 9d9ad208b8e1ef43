"""Pupil localization walkthrough.

Renders a synthetic eye (dark pupil, iris annulus, sclera) with sensor
noise, then runs each stage of the localization pipeline separately:
median denoising, Sobel gradients, non-maximum suppression, hysteresis
edge tracking, closed-contour tracing, and finally the filled-region
centroid. Stage snapshots are written next to this script.

Run:  python3 demos/pupil_localization_demo.py
"""
import pathlib

import numpy as np

from eyescreen import (
    CannyConfig,
    SynthEyeSpec,
    alignment_offset,
    extract_closed_contours,
    fill_region,
    hysteresis,
    locate_pupil,
    median_filter,
    nonmax_suppress,
    save_png,
    smallest_valid_region,
    sobel_gradients,
    synth_eye,
)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)


def main():
    spec = SynthEyeSpec(width=320, height=320, cx=172.0, cy=149.0,
                        pupil_radius=31.0, iris_radius=62.0,
                        noise_sigma=8.0, seed=7)
    img, truth = synth_eye(spec)
    save_png(img, OUT / "eye_input.png")
    print(f"synthetic eye: pupil at ({truth.cx:.1f}, {truth.cy:.1f}), "
          f"radius {truth.radius:.1f} px, noise sigma {spec.noise_sigma}")

    cfg = CannyConfig()
    filtered = median_filter(img, cfg.median_kernel)
    field = sobel_gradients(filtered)
    print(f"gradients: max magnitude {field.magnitude.max():.1f}")

    suppressed = nonmax_suppress(field)
    survivors = int((suppressed.magnitude > 0).sum())
    print(f"non-maximum suppression: {survivors} ridge pixels survive")

    edges = hysteresis(suppressed, cfg)
    print(f"hysteresis: {int(edges.sum())} edge pixels")
    save_png(np.where(edges, 255.0, 0.0), OUT / "eye_edges.png")

    contours = extract_closed_contours(edges, min_length=100)
    print(f"closed contours of length >= 100: {len(contours)} "
          f"(lengths {[c.length for c in contours]})")

    best = smallest_valid_region(contours)
    region = fill_region(best)
    print(f"smallest enclosed region: {len(region)} px")

    est = locate_pupil(img)
    err = np.hypot(est.cx - truth.cx, est.cy - truth.cy)
    dx, dy = alignment_offset(est, ((spec.width - 1) / 2, (spec.height - 1) / 2))
    print(f"estimate: center ({est.cx:.2f}, {est.cy:.2f}), radius {est.radius:.2f} px")
    print(f"error vs truth: {err:.3f} px; motor offset to frame center: "
          f"({dx:+.2f}, {dy:+.2f}) px")

    overlay = np.repeat(np.clip(np.rint(img), 0, 255).astype(np.uint8)[:, :, None], 3, axis=2)
    pts = est.contour.points
    overlay[pts[:, 1], pts[:, 0]] = (0, 255, 0)
    save_png(overlay[:, :, 1].astype(float), OUT / "eye_contour.png")
    print(f"stage snapshots in {OUT}")


if __name__ == "__main__":
    main()
