"""Image-analysis pipeline for an integrated fundus/refraction screening
device: pupil segmentation losses and metrics, edge-based pupil center
localization, image quality assessment, and photorefraction ring analysis
with diopter estimation.
"""

from .contours import Contour, extract_closed_contours, fill_region, region_area, smallest_valid_region
from .distance import (
    boundary_band,
    exact_edt,
    load_sdm,
    region_boundary,
    save_sdm,
    signed_distance_map,
)
from .edges import (
    CannyConfig,
    GradientField,
    apply_hysteresis,
    canny,
    edge_mask_to_image,
    hysteresis,
    hysteresis_thresholds,
    nonmax_suppress,
    sobel_gradients,
)
from .errors import (
    DegenerateInputError,
    EyescreenError,
    FitFailureError,
    InsufficientSignalError,
    ModelError,
    ParameterError,
    RegionNotFoundError,
)
from .image import as_image, load_image, quantize_u8, save_pgm, save_png
from .losses import (
    CombinedLossReport,
    LossWeights,
    alpha_schedule,
    boundary_aware_loss,
    class_boundary_bands,
    class_weights,
    combined_loss,
    cross_entropy,
    dice_loss,
    finite_difference_gradcheck,
    loss_gradients,
    one_hot,
    surface_loss,
    surface_loss_surrogate,
    surface_loss_surrogate_gradient,
    validate_one_hot,
    validate_prob_map,
)
from .metrics import (
    QualityReport,
    brightness,
    ede,
    f1_score,
    frequency_sharpness,
    macro_f1,
    miou,
    mse_of_edes,
    normalized_error,
    per_class_iou,
    quality_report,
    rms_contrast,
    snr_db,
    spatial_sharpness,
)
from .preprocess import (
    PreprocessConfig,
    apply_preprocessing,
    gamma_correct,
    gaussian_blur,
    gaussian_kernel1d,
    hist_equalize,
    median_filter,
)
from .pupil import (
    PupilEstimate,
    ScaleCalibration,
    alignment_offset,
    calibrate_scale,
    centroid,
    locate_pupil,
)
from .ring import (
    DEFAULT_REFRACTION_MODEL,
    RaySample,
    RefractionModel,
    RefractionResult,
    RingGeometry,
    RingScanConfig,
    fit_ellipse,
    fit_refraction_model,
    load_model,
    measure_refraction,
    moments_centroid,
    otsu_threshold,
    radial_scan,
    refraction_from_feature,
    ring_feature,
    save_model,
)
from .synth import (
    EyeTruth,
    RingTruth,
    SynthEyeSpec,
    SynthRingSpec,
    load_manifest,
    regenerate_from_manifest,
    synth_corpus,
    synth_eye,
    synth_ring,
)

__version__ = "0.1.0"
