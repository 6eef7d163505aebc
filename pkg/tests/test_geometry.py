"""Discrete curve representation, frames, chord/arc queries, and file I/O."""

import math

import numpy as np
import pytest
from scipy.special import ellipe

from csflow import (
    CurveFormatError,
    DegenerateCurve,
    DiscreteCurve,
    InvalidPair,
    ResampleFailure,
    all_pairs_chord_arc,
    build_frame,
    canonical_scale,
    chord_arc,
    chord_arc_record,
    is_embedded,
    load_curve,
    polygon_length,
    resample_uniform,
    save_curve,
)

TWO_PI = 2.0 * math.pi

# perimeter of the (2,1) ellipse: 4*a*E(m), m = 1 - b^2/a^2, cross-checked
# against adaptive quadrature of the speed (agreement 3.6e-16 relative)
ELL_PERIMETER = 8.0 * float(ellipe(0.75))


def circle(n, r=1.0, center=(0.0, 0.0)):
    th = TWO_PI * np.arange(n) / n
    return DiscreteCurve.from_vertices(
        np.column_stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)])
    )


def ellipse_theta(a, b, n):
    """Ellipse sampled at uniform parameter angle (not uniform arclength)."""
    th = TWO_PI * np.arange(n) / n
    return DiscreteCurve.from_vertices(np.column_stack([a * np.cos(th), b * np.sin(th)]))


def figure_eight(n=64):
    th = TWO_PI * np.arange(n) / n
    return DiscreteCurve(np.column_stack([np.sin(2 * th), np.sin(th)]))


# -- curve construction -------------------------------------------------------


def test_from_vertices_reverses_clockwise_input():
    cw = circle(32).vertices[::-1]
    curve = DiscreteCurve.from_vertices(cw)
    assert curve.positively_oriented
    assert curve.signed_area > 0.0
    # same point set, opposite traversal
    assert np.allclose(np.sort(curve.vertices[:, 0]), np.sort(cw[:, 0]))


def test_constructor_rejects_degenerate_input():
    with pytest.raises(DegenerateCurve):
        DiscreteCurve(np.zeros((4, 2)))
    bad = circle(16).vertices.copy()
    bad[3] = bad[4]
    with pytest.raises(DegenerateCurve):
        DiscreteCurve(bad)
    nonfinite = circle(16).vertices.copy()
    nonfinite[0, 0] = np.nan
    with pytest.raises(DegenerateCurve):
        DiscreteCurve(nonfinite)


def test_vertices_are_immutable():
    curve = circle(16)
    with pytest.raises(ValueError):
        curve.vertices[0, 0] = 5.0


# -- frames -------------------------------------------------------------------


def test_frame_regular_polygon_is_exact():
    """Every frame quantity has a closed form on the regular N-gon."""
    n = 256
    frame = build_frame(circle(n))
    edge = 2.0 * math.sin(math.pi / n)
    sigma = math.pi / (n * math.sin(math.pi / n))
    np.testing.assert_allclose(frame.edge_lengths, edge, rtol=1e-12)
    np.testing.assert_allclose(frame.length, n * edge, rtol=1e-14)
    np.testing.assert_allclose(frame.turning, TWO_PI / n, rtol=1e-9)
    np.testing.assert_allclose(frame.dual_weights, edge, rtol=1e-12)
    np.testing.assert_allclose(frame.curvature, sigma, rtol=1e-9)
    np.testing.assert_allclose(frame.avg_k2, sigma * sigma, rtol=1e-9)
    np.testing.assert_allclose(frame.area, 0.5 * n * math.sin(TWO_PI / n), rtol=1e-13)
    # tangents and normals are unit and orthogonal, normals point outward
    np.testing.assert_allclose(np.hypot(*frame.tangents.T), 1.0, rtol=1e-14)
    np.testing.assert_allclose(np.hypot(*frame.normals.T), 1.0, rtol=1e-14)
    assert np.all(np.einsum("ij,ij->i", frame.normals, frame.vertices) > 0.9)
    assert abs(np.einsum("ij,ij->i", frame.normals, frame.tangents)).max() < 1e-14


def test_total_turning_is_two_pi():
    for curve in (circle(64), ellipse_theta(2, 1, 128), ellipse_theta(3, 1, 96)):
        frame = build_frame(curve)
        assert abs(float(np.sum(frame.turning)) - TWO_PI) < 1e-10


def test_discrete_curvature_converges_at_second_order():
    errs = {}
    for n in (64, 128, 256, 512):
        th = TWO_PI * np.arange(n) / n
        frame = build_frame(ellipse_theta(2.0, 1.0, n))
        analytic = 2.0 / (4.0 * np.sin(th) ** 2 + np.cos(th) ** 2) ** 1.5
        errs[n] = float(np.max(np.abs(frame.curvature - analytic)))
    orders = [math.log2(errs[n] / errs[2 * n]) for n in (64, 128, 256)]
    assert min(orders) > 1.8
    assert errs[512] < 2e-4


def test_polygon_perimeter_approaches_elliptic_integral():
    assert abs(build_frame(ellipse_theta(2, 1, 1024)).length - ELL_PERIMETER) < 3e-5
    assert abs(polygon_length(ellipse_theta(2, 1, 4096)) - ELL_PERIMETER) < 2e-6


def test_arclength_starts_at_zero_and_increases():
    frame = build_frame(ellipse_theta(2, 1, 64))
    assert frame.arclength[0] == 0.0
    assert np.all(np.diff(frame.arclength) > 0.0)
    assert frame.arclength[-1] < frame.length


# -- chord / arc queries ------------------------------------------------------


def test_chord_arc_minor_axis_of_ellipse():
    """Minor-axis endpoints: chord exactly 2, arc = half perimeter."""
    n = 1024
    frame = build_frame(ellipse_theta(2.0, 1.0, n))
    d, ell, w, theta = chord_arc(frame, n // 4, 3 * n // 4)
    assert d == pytest.approx(2.0, abs=1e-12)
    assert ell == pytest.approx(ELL_PERIMETER / 2.0, abs=2e-5)
    assert theta == pytest.approx(math.pi, abs=1e-9)  # antipodal tangents
    rec = chord_arc_record(frame, n // 4, 3 * n // 4)
    assert rec.tangent_chord_angle_p == pytest.approx(math.pi / 2, abs=1e-9)
    assert rec.tangent_chord_angle_q == pytest.approx(math.pi / 2, abs=1e-9)
    assert rec.ratio is None and rec.comparison_value is None


def test_chord_arc_symmetry_and_bounds():
    frame = build_frame(ellipse_theta(2.0, 1.0, 48))
    rng = np.random.default_rng(7)
    for _ in range(50):
        i, j = rng.choice(48, size=2, replace=False)
        d_ij, ell_ij, w_ij, th_ij = chord_arc(frame, int(i), int(j))
        d_ji, ell_ji, w_ji, th_ji = chord_arc(frame, int(j), int(i))
        assert d_ij == d_ji and ell_ij == ell_ji and th_ij == th_ji
        assert w_ij[0] == -w_ji[0] and w_ij[1] == -w_ji[1]
        assert d_ij <= ell_ij + 1e-14  # chord never beats the arc
        assert ell_ij <= frame.length / 2 + 1e-14


def test_chord_arc_rejects_bad_pairs():
    frame = build_frame(circle(16))
    with pytest.raises(InvalidPair):
        chord_arc(frame, 3, 3)
    with pytest.raises(InvalidPair):
        chord_arc(frame, 0, 16)


def test_all_pairs_matches_single_pair_queries():
    frame = build_frame(ellipse_theta(2.0, 1.0, 24))
    i_idx, j_idx, d, ell = all_pairs_chord_arc(frame)
    assert i_idx.size == 24 * 23 // 2
    for k in range(0, i_idx.size, 17):
        d1, ell1, _, _ = chord_arc(frame, int(i_idx[k]), int(j_idx[k]))
        assert d[k] == pytest.approx(d1, rel=1e-15)
        assert ell[k] == pytest.approx(ell1, rel=1e-15)


# -- embeddedness -------------------------------------------------------------


def test_embeddedness_detection():
    assert is_embedded(circle(64))
    assert not is_embedded(figure_eight())
    # adjacent edges share a vertex but must not count as crossing
    assert is_embedded(circle(8))


def test_near_touching_curve_is_still_embedded():
    from csflow import gen_dumbbell

    # waist half-width 5% of the lobe scale: close, but no contact
    assert is_embedded(gen_dumbbell(neck=0.05, n=256))


# -- resampling and scaling ---------------------------------------------------


def test_resample_gives_nearly_uniform_edges():
    """Edge spread after resampling is the O(h^2 k^2) corner-cutting defect."""
    out = resample_uniform(ellipse_theta(2.0, 1.0, 64), 97)
    assert out.n == 97
    frame = build_frame(out)
    h = frame.length / 97
    assert np.ptp(frame.edge_lengths) / h < h * h * 4.0 / 8.0  # k_max = 2
    fine = build_frame(resample_uniform(ellipse_theta(2.0, 1.0, 2048), 512))
    assert np.ptp(fine.edge_lengths) / (fine.length / 512) < 5e-4


def test_resample_preserves_shape_and_length():
    src = ellipse_theta(2.0, 1.0, 256)
    out = resample_uniform(src, 256)
    # new vertices interpolate the old polygon, so length can only shrink,
    # and only by the O(n^-2) inscription defect
    assert polygon_length(out) <= polygon_length(src) + 1e-14
    assert polygon_length(src) - polygon_length(out) < 1e-3
    # repeated resampling is a contraction toward the uniform fixed point
    u1 = resample_uniform(src, 128)
    u2 = resample_uniform(u1, 128)
    u3 = resample_uniform(u2, 128)
    d12 = float(np.abs(u2.vertices - u1.vertices).max())
    d23 = float(np.abs(u3.vertices - u2.vertices).max())
    assert d12 < 1e-3
    assert d23 < 0.05 * d12


def test_resample_rejects_tiny_target():
    with pytest.raises(ResampleFailure):
        resample_uniform(circle(64), 4)


def test_canonical_scale_hits_two_pi_exactly():
    for curve in (circle(64, r=3.7), ellipse_theta(2, 1, 128)):
        scaled = canonical_scale(curve)
        assert abs(polygon_length(scaled) - TWO_PI) < 1e-12 * TWO_PI
        assert scaled.name == curve.name
    twice = canonical_scale(canonical_scale(circle(64)))
    assert abs(polygon_length(twice) - TWO_PI) < 1e-12 * TWO_PI


# -- file I/O -----------------------------------------------------------------


@pytest.mark.parametrize("ext", ["json", "csv"])
def test_save_load_round_trip_is_exact(tmp_path, ext):
    curve = DiscreteCurve(ellipse_theta(2.0, 1.0, 40).vertices, name="ell40")
    path = tmp_path / f"curve.{ext}"
    save_curve(curve, path)
    back = load_curve(path)
    # 17 significant digits round-trip doubles exactly
    np.testing.assert_array_equal(back.vertices, curve.vertices)
    assert back.name == ("ell40" if ext == "json" else "curve")


def test_load_rejects_malformed_files(tmp_path):
    missing = tmp_path / "nope.json"
    with pytest.raises(CurveFormatError):
        load_curve(missing)
    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{not json")
    with pytest.raises(CurveFormatError):
        load_curve(bad_json)
    no_key = tmp_path / "nokey.json"
    no_key.write_text('{"points": []}')
    with pytest.raises(CurveFormatError):
        load_curve(no_key)
    short_row = tmp_path / "short.csv"
    short_row.write_text("1.0,2.0\n3.0\n")
    with pytest.raises(CurveFormatError):
        load_curve(short_row)
    with pytest.raises(CurveFormatError):
        save_curve(circle(16), tmp_path / "curve.txt")


def test_loaded_clockwise_csv_is_reoriented(tmp_path):
    path = tmp_path / "cw.csv"
    save_curve(DiscreteCurve(circle(32).vertices[::-1].copy()), path)
    assert load_curve(path).positively_oriented
