"""Segmentation loss walkthrough.

Builds a four-class label scene (background / sclera / pupil / iris),
perturbs a probability map away from the truth, and tracks the combined
loss and its four terms across the training schedule: the Dice weight
fades out as the surface-loss weight ramps in, reaching its maximum at
half the epochs. Ends with a finite-difference check of the analytic
gradients.

Run:  python3 demos/segmentation_losses_demo.py
"""
import numpy as np

from eyescreen import (
    SynthEyeSpec,
    combined_loss,
    finite_difference_gradcheck,
    one_hot,
    signed_distance_map,
    synth_eye,
)


def main():
    spec = SynthEyeSpec(width=64, height=64, cx=32.0, cy=32.0,
                        pupil_radius=9.0, iris_radius=18.0, seed=0)
    _, truth_info = synth_eye(spec)
    labels = truth_info.labels.astype(int)
    truth = one_hot(labels, 4)
    print("scene class counts:", {c: int((labels == c).sum()) for c in range(4)})

    rng = np.random.default_rng(3)
    blur = rng.uniform(0.0, 0.35, labels.shape + (1,))
    noise = rng.uniform(0.0, 1.0, labels.shape + (4,))
    pred = (1.0 - blur) * truth + blur * noise / noise.sum(axis=2, keepdims=True)
    # mislabel a few px near the pupil boundary so the surface term engages
    flip = (np.abs(signed_distance_map(labels == 2)) <= 1.5) & (rng.random(labels.shape) < 0.4)
    pred[flip] = one_hot(np.where(labels[flip] == 2, 3, 2), 4)
    pred /= pred.sum(axis=2, keepdims=True)

    total_epochs = 150
    print(f"\nschedule over {total_epochs} epochs "
          "(lambda = [CE, boundary, dice, surface]):")
    for epoch in (0, 25, 50, 75, 100, 150):
        r = combined_loss(pred, truth, epoch=epoch, total_epochs=total_epochs)
        lam = ", ".join(f"{v:.2f}" for v in r.lambdas)
        print(f"  epoch {epoch:3d}: total {r.total:.4f}  "
              f"(cel {r.cel:.4f}, bal {r.bal:.4f}, dice {r.dice:.4f}, "
              f"surface {r.surface:.4f}; lambda [{lam}])")

    pupil_sdm = signed_distance_map(labels == 2)
    print(f"\npupil signed distances: min {pupil_sdm.min():.2f} (deep inside), "
          f"max {pupil_sdm.max():.2f} (far outside)")

    small_pred = pred[:8, :8]
    small_pred = small_pred / small_pred.sum(axis=2, keepdims=True)
    check = finite_difference_gradcheck(small_pred, truth[:8, :8])
    print(f"gradient check on an 8x8 crop: max relative error "
          f"{check['max_rel_error']:.2e}, surrogate max abs "
          f"{check['surrogate_max_abs_error']:.2e}")


if __name__ == "__main__":
    main()
