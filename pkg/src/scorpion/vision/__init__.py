"""Classical vision stack: synthetic rendering, color segmentation,
marker validation, calibrated measurement and detection evaluation."""

from .render import (  # noqa: F401
    CameraIntrinsics,
    Disc,
    GroundTruth,
    ImageFrame,
    Rect,
    RenderNoise,
    TMarker,
    load_png,
    render_scene,
    save_png,
)
from .color import hsv_segment, hsv_to_rgb, morph_refine, rgb_to_hsv  # noqa: F401
from .markers import (  # noqa: F401
    Contour,
    MarkerDetection,
    TShapeResult,
    detect_markers,
    extract_contours,
    validate_t_shape,
)
from .measure import (  # noqa: F401
    CalibrationError,
    CalibrationScale,
    calibrate,
    distort_point,
    measure_length,
    undistort_point,
)
from .evaluate import Detection, EvalResult, box_iou, evaluate_detections  # noqa: F401
from .detector import DetectorNoise, synthetic_detector  # noqa: F401
