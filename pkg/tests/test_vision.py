"""Vision stack tests: rendering, color, markers, measurement, evaluation."""

import numpy as np
import pytest

from scorpion.config import DEFAULT_BANDS
from scorpion.vision import (
    CameraIntrinsics,
    CalibrationError,
    Detection,
    DetectorNoise,
    Disc,
    GroundTruth,
    ImageFrame,
    Rect,
    RenderNoise,
    TMarker,
    box_iou,
    calibrate,
    detect_markers,
    distort_point,
    evaluate_detections,
    extract_contours,
    hsv_segment,
    hsv_to_rgb,
    measure_length,
    morph_refine,
    render_scene,
    rgb_to_hsv,
    synthetic_detector,
    undistort_point,
    validate_t_shape,
)
from scorpion.vision.color import dilate, disc_element, erode, mask_close, mask_open
from scorpion.vision.corpus import (
    detection_corpus,
    marker_accuracy,
    marker_corpus,
    measurement_corpus,
)
from scorpion.vision.markers import MIN_T_AREA
from scorpion.vision.records import (
    load_detections,
    load_ground_truth,
    save_detections,
    save_ground_truth,
)

INTR = CameraIntrinsics()


def solid_frame(rgb, width=32, height=24):
    px = np.zeros((height, width, 3), dtype=np.uint8)
    px[:] = rgb
    return ImageFrame(width=width, height=height, pixels=px)


def band_bounds(band):
    return (band.hue_lo, band.sat_min, band.val_min), (band.hue_hi, 1.0, 1.0)


# ---------------------------------------------------------------------------
# color space


class TestHsv:
    @pytest.mark.parametrize(
        "rgb,hsv",
        [
            ((1.0, 0.0, 0.0), (0.0, 1.0, 1.0)),
            ((0.0, 1.0, 0.0), (120.0, 1.0, 1.0)),
            ((0.0, 0.0, 1.0), (240.0, 1.0, 1.0)),
            ((1.0, 1.0, 0.0), (60.0, 1.0, 1.0)),
            ((0.0, 1.0, 1.0), (180.0, 1.0, 1.0)),
            ((1.0, 0.0, 1.0), (300.0, 1.0, 1.0)),
            ((0.5, 0.5, 0.5), (0.0, 0.0, 0.5)),
            ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0)),
            # max=r, h = 60*(g-b)/c = 60*(128/255)
            ((1.0, 128 / 255, 0.0), (60.0 * 128 / 255, 1.0, 1.0)),
        ],
    )
    def test_known_conversions(self, rgb, hsv):
        got = rgb_to_hsv(np.array(rgb))
        assert got == pytest.approx(hsv, abs=1e-12)

    def test_round_trip_lattice(self):
        # every combination of 16 levels per channel survives the round trip
        levels = np.linspace(0.0, 1.0, 16)
        r, g, b = np.meshgrid(levels, levels, levels, indexing="ij")
        rgb = np.stack([r, g, b], axis=-1).reshape(-1, 3)
        back = hsv_to_rgb(rgb_to_hsv(rgb))
        assert np.max(np.abs(back - rgb)) < 1e-12

    def test_hue_range(self):
        rng = np.random.default_rng(3)
        hsv = rgb_to_hsv(rng.random((500, 3)))
        assert np.all(hsv[:, 0] >= 0.0) and np.all(hsv[:, 0] < 360.0)
        assert np.all(hsv[:, 1:] >= 0.0) and np.all(hsv[:, 1:] <= 1.0)


# ---------------------------------------------------------------------------
# rendering and ground truth


class TestRender:
    def test_optical_axis_projects_to_center(self):
        frame, gts = render_scene(
            [Disc("dot", (255, 0, 0), (0.0, 0.0, 3.0), 0.05)], INTR, 640, 480
        )
        (g,) = gts
        x0, y0, x1, y1 = g.box
        assert (x0 + x1) / 2 == pytest.approx(INTR.cx + 0.5, abs=1.0)
        assert (y0 + y1) / 2 == pytest.approx(INTR.cy + 0.5, abs=1.0)

    def test_meter_bar_pixel_width(self):
        # fx * width / z = 520 * 1.0 / 5.2 = exactly 100 px
        frame, gts = render_scene(
            [Rect("bar", (255, 255, 255), (0.0, 0.0, 5.2), 1.0, 0.2)], INTR, 640, 480
        )
        (g,) = gts
        x0, _, x1, _ = g.box
        assert x1 - x0 == 100
        (e1, e2) = g.endpoints
        assert e2[0] - e1[0] == pytest.approx(100.0, abs=1e-9)
        assert g.length_m == 1.0

    def test_ground_truth_area_matches_rendered_mask(self):
        frame, gts = render_scene(
            [TMarker("t", (215, 30, 30), (0.1, -0.05, 2.0), 0.4)], INTR, 640, 480
        )
        (g,) = gts
        mask = hsv_segment(frame, (345, 0.4, 0.25), (15, 1.0, 1.0))
        assert int(mask.sum()) == g.pixel_area
        ys, xs = np.nonzero(mask)
        assert (xs.min(), ys.min(), xs.max() + 1, ys.max() + 1) == g.box

    def test_noise_is_seeded(self):
        objs = [Disc("d", (30, 60, 215), (0.0, 0.0, 2.0), 0.3)]
        noise = RenderNoise(gaussian_sigma=3.0, salt_prob=0.01, hue_jitter_deg=4.0)
        f1, _ = render_scene(objs, INTR, 320, 240, noise=noise, seed=9)
        f2, _ = render_scene(objs, INTR, 320, 240, noise=noise, seed=9)
        f3, _ = render_scene(objs, INTR, 320, 240, noise=noise, seed=10)
        assert np.array_equal(f1.pixels, f2.pixels)
        assert not np.array_equal(f1.pixels, f3.pixels)

    def test_distortion_round_trip(self):
        intr = CameraIntrinsics(k1=-0.08, k2=0.01)
        rng = np.random.default_rng(1)
        for _ in range(50):
            p = (float(rng.uniform(40, 600)), float(rng.uniform(40, 440)))
            d = distort_point(p, intr)
            back = undistort_point(d, intr)
            assert back == pytest.approx(p, abs=1e-9)

    def test_distortion_shifts_offaxis_box(self):
        plain, (g0,) = render_scene(
            [Rect("bar", (255, 255, 255), (0.8, 0.6, 3.0), 0.4, 0.1)], INTR, 640, 480
        )
        bent, (g1,) = render_scene(
            [Rect("bar", (255, 255, 255), (0.8, 0.6, 3.0), 0.4, 0.1)],
            CameraIntrinsics(k1=-0.05),
            640,
            480,
        )
        # barrel distortion pulls off-axis content toward the center and
        # compresses it; the far corner moves the most
        assert g1.box[2] < g0.box[2]
        assert g1.pixel_area < g0.pixel_area


# ---------------------------------------------------------------------------
# segmentation


class TestSegmentation:
    def test_wrap_around_band_catches_red(self):
        frame = solid_frame((215, 30, 30))
        mask = hsv_segment(frame, (345, 0.4, 0.25), (15, 1.0, 1.0))
        assert mask.all()

    def test_wrap_around_band_rejects_blue(self):
        frame = solid_frame((30, 60, 215))
        mask = hsv_segment(frame, (345, 0.4, 0.25), (15, 1.0, 1.0))
        assert not mask.any()

    def test_non_wrap_band(self):
        frame = solid_frame((30, 60, 215))  # hue ~230
        assert hsv_segment(frame, (200, 0.4, 0.25), (260, 1.0, 1.0)).all()
        assert not hsv_segment(frame, (45, 0.4, 0.25), (75, 1.0, 1.0)).any()

    def test_value_floor_excludes_dark_background(self):
        frame = solid_frame((10, 36, 52))  # hue ~203 but V = 52/255 < 0.25
        assert not hsv_segment(frame, (200, 0.4, 0.25), (260, 1.0, 1.0)).any()

    def test_widening_band_is_monotone(self):
        frame, _ = render_scene(
            [
                TMarker("t", (215, 30, 30), (-0.3, 0.0, 2.0), 0.35),
                Disc("d", (220, 120, 60), (0.4, 0.1, 2.0), 0.2),
            ],
            INTR,
            640,
            480,
            noise=RenderNoise(gaussian_sigma=4.0, hue_jitter_deg=3.0),
            seed=4,
        )
        narrow = hsv_segment(frame, (355, 0.5, 0.3), (5, 1.0, 1.0))
        wide = hsv_segment(frame, (340, 0.4, 0.25), (30, 1.0, 1.0))
        assert np.all(wide[narrow])  # wider interval contains the narrow mask

    def test_noisy_mask_area_close_to_truth(self):
        obj = TMarker("t", (215, 30, 30), (0.0, 0.0, 2.0), 0.4)
        noise = RenderNoise(salt_prob=0.01, hue_jitter_deg=4.0)
        frame, (g,) = render_scene([obj], INTR, 640, 480, noise=noise, seed=5)
        mask = morph_refine(hsv_segment(frame, *band_bounds(DEFAULT_BANDS["red"])), 1, 2)
        assert abs(int(mask.sum()) - g.pixel_area) <= 0.02 * g.pixel_area


# ---------------------------------------------------------------------------
# morphology


def random_mask(seed, shape=(60, 80), density=0.45):
    return np.random.default_rng(seed).random(shape) < density


class TestMorphology:
    def test_radius_zero_is_identity(self):
        m = random_mask(0)
        for op in (erode, dilate, mask_open, mask_close):
            assert np.array_equal(op(m, 0), m)

    def test_disc_element_shapes(self):
        assert np.array_equal(disc_element(0), np.ones((1, 1), bool))
        plus = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], bool)
        assert np.array_equal(disc_element(1), plus)

    def test_open_removes_isolated_pixel(self):
        m = np.zeros((20, 20), bool)
        m[10, 10] = True
        m[2:8, 2:8] = True
        out = mask_open(m, 1)
        assert not out[10, 10]
        assert out[3:7, 3:7].all()

    def test_close_fills_single_hole(self):
        m = np.ones((20, 20), bool)
        m[10, 10] = False
        assert mask_close(m, 1).all()

    def test_open_close_idempotent(self):
        for seed in range(5):
            m = random_mask(seed)
            for r in (1, 2):
                o = mask_open(m, r)
                assert np.array_equal(mask_open(o, r), o)
                c = mask_close(m, r)
                assert np.array_equal(mask_close(c, r), c)

    def test_erode_dilate_duality(self):
        for seed in range(5):
            m = random_mask(seed + 10)
            for r in (1, 2):
                assert np.array_equal(erode(~m, r), ~dilate(m, r))

    def test_solid_rect_under_open_and_close(self):
        m = np.zeros((30, 40), bool)
        m[5:25, 8:32] = True
        # a convex solid is already closed
        assert np.array_equal(mask_close(m, 2), m)
        # opening is anti-extensive and only shaves the right-angle
        # corners (three pixels each), never the interior
        o = mask_open(m, 2)
        assert not (o & ~m).any()
        assert o[7:23, 10:30].all()
        assert (m & ~o).sum() == 12

    def test_salt_noise_cleanup(self):
        obj = TMarker("t", (215, 30, 30), (0.0, 0.0, 2.0), 0.45)
        lo, hi = band_bounds(DEFAULT_BANDS["red"])
        clean_frame, _ = render_scene([obj], INTR, 640, 480)
        noisy_frame, _ = render_scene(
            [obj], INTR, 640, 480, noise=RenderNoise(salt_prob=0.01), seed=6
        )
        clean = hsv_segment(clean_frame, lo, hi)
        refined = morph_refine(hsv_segment(noisy_frame, lo, hi), 1, 2)
        disagree = int(np.count_nonzero(refined != clean))
        assert disagree <= 0.01 * int(clean.sum())


# ---------------------------------------------------------------------------
# contours and marker validation


class TestContours:
    def test_empty_mask(self):
        assert extract_contours(np.zeros((10, 10), bool)) == []

    def test_full_frame(self):
        (c,) = extract_contours(np.ones((10, 12), bool))
        assert c.area == 120
        assert c.box == (0, 0, 12, 10)
        assert c.centroid == pytest.approx((5.5, 4.5))

    def test_two_blobs_sorted_by_area(self):
        m = np.zeros((40, 40), bool)
        m[2:10, 2:10] = True  # 64 px
        m[20:36, 20:36] = True  # 256 px
        big, small = extract_contours(m)
        assert big.area == 256 and small.area == 64
        assert big.box == (20, 20, 36, 36)

    def test_diagonal_pixels_are_connected(self):
        m = np.zeros((10, 10), bool)
        m[3, 3] = m[4, 4] = True
        assert len(extract_contours(m)) == 1


class TestTValidation:
    @staticmethod
    def render_and_validate(obj):
        frame, _ = render_scene([obj], INTR, 640, 480)
        mask = hsv_segment(frame, *band_bounds(DEFAULT_BANDS["red"]))
        (contour,) = extract_contours(mask)
        return validate_t_shape(contour, mask)

    @pytest.mark.parametrize("angle", [0.0, 90.0, 180.0, 270.0])
    def test_t_marker_all_rotations(self, angle):
        res = self.render_and_validate(
            TMarker("t", (215, 30, 30), (0.05, -0.08, 2.0), 0.4, angle_deg=angle)
        )
        assert res.is_t and res.score == 1.0

    def test_square_is_not_t(self):
        res = self.render_and_validate(
            Rect("sq", (215, 30, 30), (0.0, 0.0, 2.0), 0.4, 0.4)
        )
        # a solid square occupies all 9 cells; the T template has 5 ones
        # and 4 zeros, so the best match over rotations is 5/9
        assert not res.is_t
        assert res.score == pytest.approx(5 / 9, abs=1e-9)

    def test_thin_bar_is_not_t(self):
        res = self.render_and_validate(
            Rect("bar", (215, 30, 30), (0.0, 0.0, 2.0), 0.6, 0.1)
        )
        assert not res.is_t

    def test_tiny_blob_rejected_for_size(self):
        m = np.zeros((20, 20), bool)
        m[5:9, 5:11] = True  # 24 px < MIN_T_AREA
        (c,) = extract_contours(m)
        assert c.area < MIN_T_AREA
        res = validate_t_shape(c, m)
        assert not res.is_t
        assert "small" in res.reason

    def test_detect_markers_end_to_end(self):
        frame, gts = render_scene(
            [
                TMarker("t", (215, 30, 30), (-0.4, 0.0, 2.0), 0.4, color_name="red"),
                Rect("sq", (30, 60, 215), (0.4, 0.0, 2.0), 0.3, 0.3, color_name="blue"),
            ],
            INTR,
            640,
            480,
        )
        dets = detect_markers(frame, DEFAULT_BANDS)
        reds = [d for d in dets if d.color_name == "red"]
        blues = [d for d in dets if d.color_name == "blue"]
        assert len(reds) == 1 and reds[0].shape.is_t
        assert len(blues) == 1 and not blues[0].shape.is_t
        t_gt = next(g for g in gts if g.label == "t")
        assert box_iou(reds[0].contour.box, t_gt.box) > 0.95


# ---------------------------------------------------------------------------
# measurement


class TestMeasurement:
    def test_calibrate_example(self):
        scale = calibrate((100.0, 200.0), (200.0, 200.0), 1.0)
        assert scale.pixels_per_meter == pytest.approx(100.0)
        got = measure_length((0.0, 0.0), (0.0, 250.0), scale)
        assert got == pytest.approx(2.5)

    def test_calibrate_half_meter(self):
        scale = calibrate((0.0, 0.0), (0.0, 25.0), 0.5)
        assert scale.pixels_per_meter == pytest.approx(50.0)

    def test_scale_invariance(self):
        # same segment measured under scales from references of different
        # lengths gives the same answer
        s1 = calibrate((0.0, 0.0), (80.0, 0.0), 0.4)
        s2 = calibrate((10.0, 10.0), (10.0, 210.0), 1.0)
        p, q = (5.0, 5.0), (5.0, 105.0)
        assert measure_length(p, q, s1) == pytest.approx(measure_length(p, q, s2))

    def test_degenerate_calibration_rejected(self):
        with pytest.raises(CalibrationError):
            calibrate((10.0, 10.0), (10.0, 10.0), 1.0)
        with pytest.raises(CalibrationError):
            calibrate((0.0, 0.0), (10.0, 0.0), 0.0)

    def test_calibration_corrects_distortion(self):
        # points an equal pinhole distance apart, pushed through barrel
        # distortion; undistorting inside calibrate recovers the true scale
        intr = CameraIntrinsics(k1=-0.1)
        p1, p2 = (420.0, 239.5), (520.0, 239.5)  # 100 px apart, off-axis
        d1, d2 = distort_point(p1, intr), distort_point(p2, intr)
        raw = np.hypot(d2[0] - d1[0], d2[1] - d1[1])
        assert abs(raw - 100.0) > 1.0  # distortion visibly moved them
        scale = calibrate(d1, d2, 0.5, intrinsics=intr)
        assert scale.pixels_per_meter == pytest.approx(200.0, rel=1e-3)

    def test_measure_rendered_bar_exactly(self):
        frame, (g,) = render_scene(
            [Rect("bar", (235, 235, 235), (0.0, 0.0, 5.2), 1.0, 0.2)], INTR, 640, 480
        )
        scale = calibrate(*g.endpoints, g.length_m)
        got = measure_length(*g.endpoints, scale, subpixel=False)
        assert got == pytest.approx(1.0, abs=1e-12)

    def test_subpixel_snap_pulls_back_jittered_clicks(self):
        frame, (g,) = render_scene(
            [Rect("bar", (235, 235, 235), (0.0, 0.1, 3.0), 0.9, 0.15)], INTR, 640, 480
        )
        scale = calibrate(*g.endpoints, g.length_m)
        rng = np.random.default_rng(8)
        errs_snap, errs_raw = [], []
        for _ in range(10):
            jit = rng.uniform(-1.5, 1.5, size=4)
            p1 = (g.endpoints[0][0] + jit[0], g.endpoints[0][1] + jit[1])
            p2 = (g.endpoints[1][0] + jit[2], g.endpoints[1][1] + jit[3])
            snapped = measure_length(p1, p2, scale, frame=frame, subpixel=True)
            raw = measure_length(p1, p2, scale, frame=frame, subpixel=False)
            errs_snap.append(abs(snapped - g.length_m))
            errs_raw.append(abs(raw - g.length_m))
        assert np.mean(errs_snap) < np.mean(errs_raw)
        assert max(errs_snap) < 0.02 * g.length_m

    def test_point_outside_frame_rejected(self):
        frame, _ = render_scene([], INTR, 64, 48)
        scale = calibrate((0.0, 0.0), (10.0, 0.0), 1.0)
        with pytest.raises(ValueError):
            measure_length((-3.0, 2.0), (5.0, 5.0), scale, frame=frame)


# ---------------------------------------------------------------------------
# detection evaluation


def det(label, box, conf):
    return Detection(label=label, box=box, confidence=conf)


def gt(label, box):
    return GroundTruth(
        label=label, box=box, length_m=0.0, position=(0, 0, 0),
        endpoints=((0.0, 0.0), (0.0, 0.0)), pixel_area=0,
    )


class TestEvaluation:
    def test_iou_examples(self):
        assert box_iou((0, 0, 10, 10), (0, 0, 10, 10)) == 1.0
        assert box_iou((0, 0, 10, 10), (20, 20, 30, 30)) == 0.0
        # 1x1 overlap, union 4 + 4 - 1 = 7
        assert box_iou((0, 0, 2, 2), (1, 1, 3, 3)) == pytest.approx(1 / 7)
        # boxes touching edge to edge do not intersect
        assert box_iou((0, 0, 10, 10), (10, 0, 20, 10)) == 0.0

    def test_single_exact_detection(self):
        res = evaluate_detections(
            [det("m", (5, 5, 25, 25), 1.0)], [gt("m", (5, 5, 25, 25))]
        )
        assert res.ap_per_class["m"] == 1.0
        assert res.mean_ap == 1.0
        assert res.precision == 1.0 and res.recall == 1.0
        assert res.flagged_classes == ()

    def test_five_detection_staircase(self):
        # Ranked by confidence: TP TP FP FP TP against 3 ground truths.
        #   k  P      R
        #   1  1      1/3
        #   2  1      2/3
        #   3  2/3    2/3
        #   4  1/2    2/3
        #   5  3/5    1
        # All-point interpolation: envelope is 1 up to R=2/3 then 3/5, so
        # AP = 1/3*1 + 1/3*1 + 1/3*(3/5) = 13/15.
        gts = [gt("m", (0, 0, 10, 10)), gt("m", (20, 20, 30, 30)),
               gt("m", (40, 40, 50, 50))]
        dets = [
            det("m", (0, 0, 10, 10), 0.95),       # TP (IoU 1.0)
            det("m", (21, 21, 31, 31), 0.90),     # TP (IoU 81/119)
            det("m", (100, 100, 110, 110), 0.80), # FP (no overlap)
            det("m", (0, 0, 10, 10), 0.70),       # FP (gt already matched)
            det("m", (40, 40, 50, 50), 0.60),     # TP (IoU 1.0)
        ]
        res = evaluate_detections(dets, gts)
        assert res.ap_per_class["m"] == pytest.approx(13 / 15, abs=1e-12)
        assert res.precision == pytest.approx(3 / 5)
        assert res.recall == pytest.approx(1.0)

    def test_multi_class_with_flagged(self):
        gts = [gt("a", (0, 0, 10, 10)), gt("a", (20, 0, 30, 10)),
               gt("b", (0, 20, 10, 30))]
        dets = [
            det("a", (0, 0, 10, 10), 0.9),
            # IoU with (20,0,30,10): 50 / (100 + 50 - 50) = 0.5, on threshold
            det("a", (20, 0, 25, 10), 0.8),
            det("b", (0, 20, 10, 30), 0.7),
            det("c", (50, 50, 60, 60), 0.6),  # no gt of class c anywhere
        ]
        res = evaluate_detections(dets, gts)
        assert res.ap_per_class["a"] == 1.0
        assert res.ap_per_class["b"] == 1.0
        assert res.ap_per_class["c"] == 0.0
        assert res.flagged_classes == ("c",)
        # mean over gt classes only; the flagged det still costs precision
        assert res.mean_ap == 1.0
        assert res.precision == pytest.approx(3 / 4)
        assert res.recall == pytest.approx(1.0)

    def test_confidence_tie_broken_by_input_order(self):
        # both at 0.9: the earlier det (a miss) ranks first, so the
        # precision at full recall is 1/2 and AP = 1/2
        gts = [gt("m", (0, 0, 10, 10))]
        dets = [
            det("m", (50, 50, 60, 60), 0.9),
            det("m", (0, 0, 10, 10), 0.9),
        ]
        res = evaluate_detections(dets, gts)
        assert res.ap_per_class["m"] == pytest.approx(0.5)

    def test_duplicate_detection_is_fp_but_ap_stays_one(self):
        gts = [gt("m", (0, 0, 10, 10))]
        dets = [
            det("m", (0, 0, 10, 10), 0.9),
            det("m", (0, 0, 10, 10), 0.8),  # same gt, already matched
        ]
        res = evaluate_detections(dets, gts)
        # full recall is reached before the duplicate, so AP is unaffected
        assert res.ap_per_class["m"] == 1.0
        assert res.precision == pytest.approx(0.5)
        assert res.recall == pytest.approx(1.0)

    def test_no_detections(self):
        res = evaluate_detections([], [gt("m", (0, 0, 10, 10))])
        assert res.mean_ap == 0.0
        assert res.recall == 0.0

    def test_invalid_threshold(self):
        with pytest.raises(ValueError):
            evaluate_detections([], [], iou_threshold=0.0)

    @staticmethod
    def random_case(seed):
        rng = np.random.default_rng(seed)
        gts, dets = [], []
        for i in range(rng.integers(1, 5)):
            x, y = rng.uniform(0, 200, 2)
            w, h = rng.uniform(10, 40, 2)
            label = "ab"[int(rng.integers(2))]
            gts.append(gt(label, (x, y, x + w, y + h)))
            if rng.random() < 0.8:
                j = rng.normal(0, 4, 4)
                dets.append(det(label, (x + j[0], y + j[1], x + w + j[2],
                                        y + h + j[3]), float(rng.uniform(0.2, 1))))
        for _ in range(rng.integers(0, 3)):
            x, y = rng.uniform(0, 200, 2)
            dets.append(det("ab"[int(rng.integers(2))], (x, y, x + 15, y + 15),
                            float(rng.uniform(0.2, 1))))
        return dets, gts

    def test_metrics_bounded(self):
        for seed in range(20):
            dets, gts = self.random_case(seed)
            res = evaluate_detections(dets, gts)
            for v in res.ap_per_class.values():
                assert 0.0 <= v <= 1.0
            assert 0.0 <= res.mean_ap <= 1.0
            assert 0.0 <= res.precision <= 1.0
            assert 0.0 <= res.recall <= 1.0

    def test_added_low_confidence_fp_never_helps(self):
        for seed in range(10):
            dets, gts = self.random_case(seed)
            if not dets:
                continue
            base = evaluate_detections(dets, gts)
            worst = min(d.confidence for d in dets)
            extra = dets + [det(gts[0].label, (500, 500, 515, 515), worst / 2)]
            res = evaluate_detections(extra, gts)
            assert res.mean_ap <= base.mean_ap + 1e-12
            assert res.precision <= base.precision + 1e-12

    def test_removing_detection_never_raises_recall(self):
        for seed in range(10):
            dets, gts = self.random_case(seed)
            if not dets:
                continue
            base = evaluate_detections(dets, gts)
            for k in range(len(dets)):
                res = evaluate_detections(dets[:k] + dets[k + 1:], gts)
                assert res.recall <= base.recall + 1e-12


# ---------------------------------------------------------------------------
# synthetic detector


class TestDetector:
    def test_zero_noise_reproduces_ground_truth(self):
        frame, gts = render_scene(
            [
                TMarker("t-marker", (215, 30, 30), (-0.3, 0.0, 2.0), 0.4),
                Disc("buoy", (220, 205, 35), (0.4, 0.1, 2.0), 0.2),
            ],
            INTR,
            640,
            480,
        )
        dets = synthetic_detector(frame, gts, DetectorNoise(), seed=0)
        assert len(dets) == len(gts)
        for d, g in zip(dets, gts):
            assert d.label == g.label
            assert d.confidence == 1.0
            assert d.box == tuple(float(v) for v in g.box)
        res = evaluate_detections(dets, gts)
        assert res.mean_ap == 1.0

    def test_full_miss_rate_drops_everything(self):
        frame, gts = render_scene(
            [Disc("buoy", (220, 205, 35), (0.0, 0.0, 2.0), 0.2)], INTR, 640, 480
        )
        assert synthetic_detector(frame, gts, DetectorNoise(miss_rate=1.0), 0) == []

    def test_seeded_determinism(self):
        frame, gts = render_scene(
            [Disc("buoy", (220, 205, 35), (0.0, 0.0, 2.0), 0.2)], INTR, 640, 480
        )
        noise = DetectorNoise(box_sigma_px=2.0, false_positive_rate=0.5,
                              confidence_sigma=0.1)
        a = synthetic_detector(frame, gts, noise, seed=3)
        b = synthetic_detector(frame, gts, noise, seed=3)
        assert a == b


# ---------------------------------------------------------------------------
# record files


class TestRecords:
    def test_ground_truth_round_trip(self, tmp_path):
        _, gts = render_scene(
            [Rect("bar", (230, 230, 230), (0.0, 0.0, 4.0), 0.8, 0.1)], INTR, 640, 480
        )
        path = tmp_path / "gt.txt"
        save_ground_truth(gts, path)
        loaded = load_ground_truth(path)
        assert len(loaded) == 1
        assert loaded[0].label == "bar"
        assert loaded[0].box == gts[0].box
        assert loaded[0].length_m == pytest.approx(0.8)

    def test_detections_round_trip(self, tmp_path):
        dets = [det("m", (1.5, 2.5, 30.0, 40.0), 0.875)]
        path = tmp_path / "det.txt"
        save_detections(dets, path)
        assert load_detections(path) == dets

    def test_comments_and_blanks_skipped(self, tmp_path):
        path = tmp_path / "det.txt"
        path.write_text("# header\n\nm 1 2 3 4 0.5\n")
        assert len(load_detections(path)) == 1

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "det.txt"
        path.write_text("m 1 2 3 4 0.5\nm 1 2 3\n")
        with pytest.raises(ValueError, match=r":2:"):
            load_detections(path)


# ---------------------------------------------------------------------------
# committed corpora


class TestCorpora:
    def test_measurement_corpus_within_five_percent(self):
        cases = measurement_corpus()
        assert len(cases) == 20
        worst = 0.0
        for case in cases:
            scale = calibrate(
                *case.reference.endpoints,
                case.reference.length_m,
                intrinsics=case.frame.intrinsics,
            )
            got = measure_length(
                *case.clicks,
                scale,
                intrinsics=case.frame.intrinsics,
                frame=case.frame,
            )
            rel = abs(got - case.target.length_m) / case.target.length_m
            worst = max(worst, rel)
        assert worst < 0.05

    def test_marker_corpus_accuracy(self):
        frames, gts = marker_corpus()
        acc, per_color = marker_accuracy(frames, gts)
        assert acc >= 0.94
        assert set(per_color) == {"red", "blue", "yellow"}

    def test_marker_corpus_regenerates_identically(self):
        f1, _ = marker_corpus(n_frames=2)
        f2, _ = marker_corpus(n_frames=2)
        for a, b in zip(f1, f2):
            assert np.array_equal(a.pixels, b.pixels)

    def test_detection_corpus_scores_reasonably(self):
        frames, gts_all, det_lists = detection_corpus(n_frames=6)
        all_gts = [g for gts in gts_all for g in gts]
        # offset boxes per frame so frames do not overlap in eval space
        dets, gts = [], []
        for i, (g_list, d_list) in enumerate(zip(gts_all, det_lists)):
            dy = 1000.0 * i
            for g in g_list:
                gts.append(gt(g.label, (g.box[0], g.box[1] + dy,
                                        g.box[2], g.box[3] + dy)))
            for d in d_list:
                dets.append(det(d.label, (d.box[0], d.box[1] + dy,
                                          d.box[2], d.box[3] + dy), d.confidence))
        res = evaluate_detections(dets, gts)
        assert 0.5 < res.mean_ap <= 1.0
        assert len(all_gts) == len(gts)
