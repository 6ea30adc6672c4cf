"""Displacement and vibration measurement for rigid targets on camera.

The package covers the full chain from frames to physical quantities:
detection ingest and bounding-box association (:mod:`labmotion.detections`),
keypoint detection/matching (:mod:`labmotion.features`), pyramidal optical
flow (:mod:`labmotion.flow`), the measurement modes tying them together
(:mod:`labmotion.tracking`), signal filtering and spectral analysis
(:mod:`labmotion.dsp`), calibration and accuracy metrics
(:mod:`labmotion.measure`), and a synthetic-scene generator with exact
ground truth (:mod:`labmotion.scene`).
"""

from .detections import (
    AssociationPolicy,
    BoxTrack,
    Detection,
    DetectionSet,
    Mask,
    TrackEntry,
    associate,
    bbox_translation,
    encode_mask,
    parse_detections,
    serialize_detections,
)
from .dsp import (
    IIRFilter,
    Peak,
    Signal,
    Spectrum,
    butterworth_design,
    fft,
    filtfilt,
    find_peaks,
    savgol_coefficients,
    savgol_filter,
    sosfilt,
    spectrum,
    windowed_spectrum,
)
from .errors import (
    DetectionFileError,
    LabmotionError,
    MatchingError,
    NoConsensusError,
    PgmError,
    SceneSpecError,
    TrackingError,
)
from .features import (
    Keypoint,
    Match,
    ScaleSpaceConfig,
    average_displacement,
    build_dog_pyramid,
    compute_descriptors,
    detect_keypoints,
    filter_matches_by_motion,
    gaussian_blur,
    match_descriptors,
)
from .flow import (
    LKConfig,
    TrackedPoint,
    accumulate_displacement,
    track_points_lk,
    track_sequence_lk,
)
from .imagedata import (
    Frame,
    FrameSequence,
    Rect,
    bilinear_sample,
    crop,
    load_pgm,
    load_pgm_file,
    save_pgm,
    save_pgm_file,
)
from .measure import (
    Calibration,
    EvalReport,
    PhysicalSeries,
    ReferenceSeries,
    calibrate_from_reference,
    frequency_error,
    load_truth_csv,
    mae,
    to_physical,
)
from .scene import (
    GroundTruth,
    MotionProfile,
    SceneSpec,
    multi_target_scene,
    render_scene,
    scene_specs_from_json,
    write_truth_csv,
)
from .series import MeasurementSeries, series_from_csv
from .tracking import (
    MODES,
    TargetResult,
    TrackerConfig,
    measure_multi,
    measure_target,
)

__version__ = "0.1.0"
