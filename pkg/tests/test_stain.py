import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lymphmargin.errors import InvalidStainMatrix, ShapeMismatch, SingularStainMatrix
from lymphmargin.slide_model import SlideMeta
from lymphmargin.stain import (
    DAB_ROW,
    StainMatrix,
    dab_concentration,
    dab_lymphocyte_mask,
    deconvolve_od,
    remove_small_components,
    render_ihc,
    rgb_to_od,
)


def test_od_white_is_zero():
    np.testing.assert_array_equal(rgb_to_od((255, 255, 255)), [0.0, 0.0, 0.0])


def test_od_examples():
    # -log10(25/255) and the 0.5 clamp: -log10(0.5/255)
    np.testing.assert_allclose(rgb_to_od((25, 255, 255)), [1.0086001717619175, 0, 0], atol=1e-12)
    np.testing.assert_allclose(rgb_to_od((0, 0, 0)), [2.7075701760979363] * 3, atol=1e-12)


def test_od_monotone_and_nonnegative():
    od = rgb_to_od(np.arange(256))
    assert (od >= 0).all()
    assert (np.diff(od[1:]) < 0).all()
    assert od[0] > od[1]


def test_default_matrix_is_unit_and_completes_residual():
    m = StainMatrix.default()
    np.testing.assert_allclose(np.linalg.norm(m.rows, axis=1), 1.0, atol=1e-12)
    assert abs(m.rows[0] @ m.rows[2]) < 1e-12 and abs(m.rows[1] @ m.rows[2]) < 1e-12
    cfg = StainMatrix.from_dict({"hematoxylin": [0.65, 0.704, 0.286], "dab": [0.268, 0.57, 0.776], "residual": None})
    np.testing.assert_array_equal(cfg.rows, m.rows)


def test_matrix_validation():
    with pytest.raises(InvalidStainMatrix):
        StainMatrix(np.eye(3) * 2)
    with pytest.raises(SingularStainMatrix):
        StainMatrix(np.array([[1, 0, 0], [1, 0, 0], [0, 0, 1.0]]))
    with pytest.raises(SingularStainMatrix):
        StainMatrix.from_vectors([1, 0, 0], [2, 0, 0])


def test_deconvolve_examples():
    m = StainMatrix.default()
    np.testing.assert_array_equal(deconvolve_od(np.zeros(3), m), np.zeros(3))
    eye = StainMatrix(np.eye(3))
    np.testing.assert_allclose(deconvolve_od([0.3, 0.1, 0.0], eye), [0.3, 0.1, 0.0])
    c = deconvolve_od(0.2 * m.rows[DAB_ROW], m)
    # oracle: explicit 3x3 inverse by cofactors
    r = m.rows
    cof = np.array([[np.linalg.det(np.delete(np.delete(r, i, 0), j, 1)) * (-1) ** (i + j)
                     for j in range(3)] for i in range(3)])
    inv = cof.T / np.linalg.det(r)
    np.testing.assert_allclose(c, (0.2 * r[DAB_ROW]) @ inv, atol=1e-12)
    np.testing.assert_allclose(c, [0, 0.2, 0], atol=1e-12)


def test_negative_concentrations_preserved():
    m = StainMatrix.default()
    c = deconvolve_od(m.rows[0] * 0.5 - m.rows[1] * 0.3, m)
    assert c[1] == pytest.approx(-0.3)


def _unit_rows(draw_rows):
    rows = np.asarray(draw_rows, dtype=np.float64)
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.lists(st.floats(0.05, 1.0), min_size=3, max_size=3), min_size=3, max_size=3),
    st.lists(st.floats(0.0, 2.0), min_size=3, max_size=3),
)
def test_deconvolution_roundtrip(rows, conc):
    rows = _unit_rows(rows)
    if abs(np.linalg.det(rows)) < 1e-3:
        return
    m = StainMatrix(rows)
    c = np.asarray(conc)
    assert np.abs(deconvolve_od(c @ m.rows, m) - c).max() < 1e-6


def meta(h, w):
    return SlideMeta(0.454, w, h, "IHC_CD3")


def test_white_image_is_negative():
    img = np.full((6, 7, 3), 255, np.uint8)
    assert not dab_lymphocyte_mask(img, meta(6, 7), min_area_px=0).mask.any()


def test_uniform_dab_image_is_positive():
    m = StainMatrix.default()
    pixel = np.rint(255 * 10 ** (-0.2 * m.rows[DAB_ROW])).astype(np.uint8)
    img = np.broadcast_to(pixel, (5, 5, 3)).copy()
    conc = dab_concentration(img, m)
    assert np.allclose(conc, 0.2, atol=0.01)
    assert dab_lymphocyte_mask(img, meta(5, 5), m).mask.all()


def test_small_component_removed():
    mask = np.zeros((6, 6), bool)
    mask[2, 2:4] = True
    assert not remove_small_components(mask, 4).any()
    mask[4:6, 0:2] = True
    kept = remove_small_components(mask, 4)
    assert kept.sum() == 4 and kept[4:6, 0:2].all()


def test_diagonal_pixels_join_under_8_connectivity():
    mask = np.eye(4, dtype=bool)
    assert remove_small_components(mask, 4).sum() == 4


def test_threshold_extremes(rng):
    img = rng.integers(0, 256, size=(12, 9, 3), dtype=np.uint8)
    assert not dab_lymphocyte_mask(img, meta(12, 9), threshold=np.inf).mask.any()
    assert dab_lymphocyte_mask(img, meta(12, 9), threshold=-np.inf, min_area_px=0).mask.all()


def test_min_area_monotone(rng):
    img = rng.integers(0, 256, size=(40, 40, 3), dtype=np.uint8)
    prev = None
    for area in (0, 1, 2, 3, 5, 8, 13, 40):
        cur = dab_lymphocyte_mask(img, meta(40, 40), threshold=0.0, min_area_px=area).mask
        if prev is not None:
            assert not (cur & ~prev).any()
        prev = cur


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        dab_lymphocyte_mask(np.zeros((4, 4, 3), np.uint8), meta(5, 4))


def test_chunking_does_not_change_result(rng):
    img = rng.integers(0, 256, size=(37, 11, 3), dtype=np.uint8)
    m = StainMatrix.default()
    np.testing.assert_array_equal(dab_concentration(img, m, rows_per_chunk=5), dab_concentration(img, m))


def test_render_ihc_roundtrip(rng):
    mask = rng.random((30, 30)) < 0.3
    img = render_ihc(mask)
    out = dab_lymphocyte_mask(img, meta(30, 30), min_area_px=0).mask
    np.testing.assert_array_equal(out, mask)
