"""Segmentation losses over per-pixel class probabilities, their analytic
gradients, and the epoch-scheduled combination.

Predictions and one-hot truths are (H, W, C) arrays with C = 4 classes
(background, sclera, pupil, iris) in the screening pipeline, though every
function works for any C. Probability normalization is checked by
:func:`validate_prob_map` at I/O boundaries rather than inside each loss,
so finite-difference probing of single entries remains possible.

The loss family: cross-entropy (assumes balanced classes), class-weighted
soft Dice, a boundary-aware Dice restricted to a band around the
ground-truth boundary, and a surface loss comparing signed distance maps.
The combined loss weights them (lambda1, lambda2, lambda3*(1-alpha),
lambda4*alpha) with alpha ramping linearly to its maximum at half the
training epochs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import boundary_band, signed_distance_map
from .errors import DegenerateInputError, ParameterError

LOG_CLAMP = 1e-12


@dataclass(frozen=True)
class LossWeights:
    """Combination weights; lambda3/lambda4 are scaled by the alpha ramp."""

    lambda1: float = 1.0   # cross-entropy
    lambda2: float = 10.0  # boundary-aware
    lambda3: float = 1.0   # dice, effective weight lambda3 * (1 - alpha)
    lambda4: float = 1.0   # surface, effective weight lambda4 * alpha
    alpha_max: float = 1.0
    epsilon: float = 1e-6
    band_tau: float = 2.0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3", "lambda4"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")
        if not 0.0 < self.alpha_max <= 1.0:
            raise ParameterError(f"alpha_max must be in (0, 1], got {self.alpha_max}")
        if self.epsilon <= 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        if self.band_tau < 0:
            raise ParameterError(f"band_tau must be >= 0, got {self.band_tau}")


def _check_pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.shape != t.shape:
        raise ParameterError(f"shape mismatch: pred {p.shape} vs truth {t.shape}")
    if p.ndim != 3:
        raise ParameterError(f"expected (H, W, C) arrays, got shape {p.shape}")
    return p, t


def validate_prob_map(pred, tol: float = 1e-6) -> np.ndarray:
    """Check per-pixel probability vectors: values in [0, 1], sums == 1."""
    p = np.asarray(pred, dtype=np.float64)
    if p.ndim != 3:
        raise ParameterError(f"expected an (H, W, C) array, got shape {p.shape}")
    if p.min() < -tol or p.max() > 1 + tol:
        raise ParameterError("probabilities outside [0, 1]")
    sums = p.sum(axis=2)
    if np.abs(sums - 1.0).max() > tol:
        raise ParameterError("per-pixel probabilities do not sum to 1")
    return p


def validate_one_hot(truth) -> np.ndarray:
    """Check a one-hot mask: binary values, exactly one class per pixel."""
    t = np.asarray(truth, dtype=np.float64)
    if t.ndim != 3:
        raise ParameterError(f"expected an (H, W, C) array, got shape {t.shape}")
    if not np.isin(t, (0.0, 1.0)).all():
        raise ParameterError("one-hot mask must contain only 0 and 1")
    if not (t.sum(axis=2) == 1.0).all():
        raise ParameterError("each pixel must have exactly one class")
    return t


def one_hot(labels, num_classes: int) -> np.ndarray:
    """Integer label mask (H, W) to a one-hot (H, W, C) array."""
    lab = np.asarray(labels)
    if lab.min() < 0 or lab.max() >= num_classes:
        raise ParameterError("labels outside [0, num_classes)")
    return np.eye(num_classes, dtype=np.float64)[lab]


def cross_entropy(pred, truth, clamp: float = LOG_CLAMP) -> float:
    """Mean per-pixel cross-entropy, predictions clamped before the log."""
    p, t = _check_pair(pred, truth)
    n = p.shape[0] * p.shape[1]
    return float(-(t * np.log(np.clip(p, clamp, 1.0))).sum() / n) + 0.0


def class_weights(truth) -> np.ndarray:
    """Inverse-frequency class weights, normalized to sum 1 over classes
    present in the mask; absent classes get weight 0."""
    t = np.asarray(truth, dtype=np.float64)
    counts = t.sum(axis=(0, 1))
    raw = np.zeros_like(counts)
    present = counts > 0
    raw[present] = 1.0 / counts[present]
    total = raw.sum()
    if total == 0:
        return raw
    return raw / total


def dice_loss(pred, truth, weights=None, eps: float = 1e-6) -> float:
    """Class-weighted soft Dice loss.

    Per class: 1 - (2 * intersection + eps) / (pred sum + truth sum + eps),
    aggregated with `weights` (inverse-frequency normalized weights when
    omitted). Absent classes carry zero weight and are excluded.
    """
    p, t = _check_pair(pred, truth)
    w = class_weights(t) if weights is None else np.asarray(weights, dtype=np.float64)
    inter = (p * t).sum(axis=(0, 1))
    psum = p.sum(axis=(0, 1))
    tsum = t.sum(axis=(0, 1))
    num = 2.0 * inter + eps
    den = psum + tsum + eps
    terms = np.divide(num, den, out=np.zeros_like(num), where=(w > 0) & (den != 0))
    return float(1.0 - (w * terms).sum())


def boundary_aware_loss(pred, truth, band, eps: float = 1e-6) -> float:
    """Soft Dice restricted to the pixels of `band`.

    `band` is a boolean mask broadcastable to the prediction shape (per
    class when 3-D). A single aggregate overlap ratio is formed over the
    band; an empty band yields loss 0 (nothing to constrain).
    """
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.shape != t.shape:
        raise ParameterError(f"shape mismatch: pred {p.shape} vs truth {t.shape}")
    b = np.broadcast_to(np.asarray(band, dtype=bool), p.shape)
    if not b.any():
        return 0.0
    inter = (p * t)[b].sum()
    psum = p[b].sum()
    tsum = t[b].sum()
    return float(1.0 - (2.0 * inter + eps) / (psum + tsum + eps))


def class_boundary_bands(truth, tau: float) -> np.ndarray:
    """Per-class boundary bands of a one-hot mask, stacked (H, W, C).

    Classes that are absent, or that cover the whole frame (no in-frame
    boundary), contribute empty bands.
    """
    t = np.asarray(truth)
    bands = np.zeros(t.shape, dtype=bool)
    for c in range(t.shape[2]):
        plane = t[:, :, c] > 0.5
        if plane.any():
            bands[:, :, c] = boundary_band(plane, tau)
    return bands


def binarize(plane, threshold: float = 0.5) -> np.ndarray:
    """Probability plane to a binary mask (>= threshold)."""
    return np.asarray(plane, dtype=np.float64) >= threshold


def surface_loss(pred_mask, truth_mask) -> float:
    """Mean absolute difference of the two signed distance maps over the
    whole frame. Symmetric; zero iff the masks coincide."""
    sp = signed_distance_map(pred_mask)
    st = signed_distance_map(truth_mask)
    if sp.shape != st.shape:
        raise ParameterError(f"shape mismatch: {sp.shape} vs {st.shape}")
    return float(np.abs(st - sp).mean())


def surface_loss_surrogate(pred_plane, truth_sdm) -> float:
    """Differentiable stand-in for the surface loss: mean(pred * SDM).

    The literal surface loss binarizes the prediction and has zero
    gradient almost everywhere; this linear functional of the prediction
    pushes probabilities down where the truth SDM is positive (outside)
    and up where it is negative (inside).
    """
    p = np.asarray(pred_plane, dtype=np.float64)
    s = np.asarray(truth_sdm, dtype=np.float64)
    if p.shape != s.shape:
        raise ParameterError(f"shape mismatch: pred {p.shape} vs sdm {s.shape}")
    return float((p * s).mean())


def surface_loss_surrogate_gradient(pred_plane, truth_sdm) -> np.ndarray:
    """Gradient of the surrogate surface loss: SDM / pixel count,
    constant in the prediction."""
    p = np.asarray(pred_plane, dtype=np.float64)
    s = np.asarray(truth_sdm, dtype=np.float64)
    if p.shape != s.shape:
        raise ParameterError(f"shape mismatch: pred {p.shape} vs sdm {s.shape}")
    return s / s.size


def alpha_schedule(epoch: int, total_epochs: int, alpha_max: float = 1.0) -> float:
    """Linear ramp hitting alpha_max at half the total epochs, clamped."""
    if total_epochs < 2:
        raise ParameterError(f"total_epochs must be >= 2, got {total_epochs}")
    if epoch < 0:
        raise ParameterError(f"epoch must be >= 0, got {epoch}")
    return alpha_max * min(1.0, epoch / (total_epochs / 2.0))


@dataclass
class CombinedLossReport:
    """Total loss plus the four unweighted terms and their weights."""

    cel: float
    bal: float
    dice: float
    surface: float
    lambdas: tuple[float, float, float, float]
    alpha: float
    epoch: int
    total_epochs: int
    total: float
    diagnostics: dict

    def to_dict(self) -> dict:
        return {
            "cel": self.cel,
            "bal": self.bal,
            "dice": self.dice,
            "surface": self.surface,
            "lambda": list(self.lambdas),
            "alpha": self.alpha,
            "epoch": self.epoch,
            "total_epochs": self.total_epochs,
            "total": self.total,
            "diagnostics": self.diagnostics,
        }


def combined_loss(pred, truth, cfg: LossWeights | None = None,
                  epoch: int = 0, total_epochs: int = 150) -> CombinedLossReport:
    """Scheduled weighted sum of the four losses.

    The surface term averages the literal (binarized) surface loss over
    the classes whose prediction and truth planes are both non-degenerate;
    skipped classes are listed in the diagnostics.
    """
    cfg = cfg or LossWeights()
    p, t = _check_pair(pred, truth)
    alpha = alpha_schedule(epoch, total_epochs, cfg.alpha_max)
    lambdas = (cfg.lambda1, cfg.lambda2, cfg.lambda3 * (1.0 - alpha), cfg.lambda4 * alpha)

    cel = cross_entropy(p, t)
    bands = class_boundary_bands(t, cfg.band_tau)
    bal = boundary_aware_loss(p, t, bands, cfg.epsilon)
    dice = dice_loss(p, t, None, cfg.epsilon)

    surface_terms = []
    surface_skipped = []
    for c in range(t.shape[2]):
        pm = binarize(p[:, :, c])
        tm = t[:, :, c] > 0.5
        try:
            surface_terms.append(surface_loss(pm, tm))
        except DegenerateInputError:
            surface_skipped.append(c)
    surface = float(np.mean(surface_terms)) if surface_terms else 0.0

    diagnostics = {
        "band_empty": not bands.any(),
        "surface_classes_skipped": surface_skipped,
        "surface_classes_used": t.shape[2] - len(surface_skipped),
    }
    total = (
        lambdas[0] * cel + lambdas[1] * bal + lambdas[2] * dice + lambdas[3] * surface
    )
    return CombinedLossReport(
        cel=cel, bal=bal, dice=dice, surface=surface,
        lambdas=lambdas, alpha=alpha, epoch=epoch, total_epochs=total_epochs,
        total=float(total), diagnostics=diagnostics,
    )


def loss_gradients(pred, truth, which: str, *, eps: float = 1e-6,
                   band_tau: float = 2.0, band=None) -> np.ndarray:
    """Closed-form gradient of a loss with respect to the predictions.

    `which` selects "cross_entropy", "dice", or "boundary". The boundary
    gradient uses the per-class bands of the truth unless `band` is given
    explicitly.
    """
    p, t = _check_pair(pred, truth)
    if which == "cross_entropy":
        if p.min() <= 0.0 or p.max() > 1.0:
            raise ParameterError("cross-entropy gradient needs predictions in (0, 1]")
        n = p.shape[0] * p.shape[1]
        return -t / (n * p)
    if which == "dice":
        w = class_weights(t)
        inter = (p * t).sum(axis=(0, 1))
        psum = p.sum(axis=(0, 1))
        tsum = t.sum(axis=(0, 1))
        num = 2.0 * inter + eps
        den = psum + tsum + eps
        grad = np.zeros_like(p)
        for c in range(p.shape[2]):
            if w[c] == 0:
                continue
            grad[:, :, c] = -w[c] * (2.0 * t[:, :, c] * den[c] - num[c]) / (den[c] ** 2)
        return grad
    if which == "boundary":
        b = class_boundary_bands(t, band_tau) if band is None else np.broadcast_to(
            np.asarray(band, dtype=bool), p.shape)
        if not b.any():
            return np.zeros_like(p)
        inter = (p * t)[b].sum()
        psum = p[b].sum()
        tsum = t[b].sum()
        num = 2.0 * inter + eps
        den = psum + tsum + eps
        grad = np.where(b, -(2.0 * t * den - num) / (den ** 2), 0.0)
        return grad
    raise ParameterError(f"unknown loss selector: {which!r}")


def finite_difference_gradcheck(pred, truth, *, eps: float = 1e-6,
                                band_tau: float = 2.0, h: float = 1e-5) -> dict:
    """Compare analytic gradients against central finite differences.

    Returns the maximum relative error over the cross-entropy, Dice and
    boundary losses, and the maximum absolute error of the surrogate
    surface gradient, on the given instance. The relative error uses
    max(|analytic|, |numeric|, 1e-8) as its denominator.
    """
    p, t = _check_pair(pred, truth)
    bands = class_boundary_bands(t, band_tau)

    def scalar(which):
        if which == "cross_entropy":
            return lambda q: cross_entropy(q, t)
        if which == "dice":
            return lambda q: dice_loss(q, t, None, eps)
        return lambda q: boundary_aware_loss(q, t, bands, eps)

    max_rel = 0.0
    for which in ("cross_entropy", "dice", "boundary"):
        analytic = loss_gradients(p, t, which, eps=eps, band=bands if which == "boundary" else None)
        fn = scalar(which)
        numeric = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            plus = p.copy()
            plus[idx] += h
            minus = p.copy()
            minus[idx] -= h
            numeric[idx] = (fn(plus) - fn(minus)) / (2.0 * h)
            it.iternext()
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
        rel = np.abs(analytic - numeric) / denom
        max_rel = max(max_rel, float(rel.max()))

    # surrogate surface gradient on the class-0 plane of a crafted SDM
    sdm = signed_distance_map(t[:, :, 0] > 0.5) if (t[:, :, 0] > 0.5).any() and not (
        t[:, :, 0] > 0.5).all() else np.zeros(p.shape[:2])
    plane = p[:, :, 0]
    analytic = surface_loss_surrogate_gradient(plane, sdm)
    numeric = np.zeros_like(plane)
    it = np.nditer(plane, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        plus = plane.copy()
        plus[idx] += h
        minus = plane.copy()
        minus[idx] -= h
        numeric[idx] = (surface_loss_surrogate(plus, sdm) - surface_loss_surrogate(minus, sdm)) / (2.0 * h)
        it.iternext()
    surrogate_max_abs = float(np.abs(analytic - numeric).max())
    return {"max_rel_error": max_rel, "surrogate_max_abs_error": surrogate_max_abs}
