import json
import math
import os

import numpy as np
import pytest

from kleinian.configuration import (
    Configuration,
    build_configuration,
    constant_L,
    load_configuration,
    parse_plane,
    plane_label,
    quasi_constants,
    resolve_threads,
    save_configuration,
    to_json_dict,
    validate_configuration,
    THREADS_ENV,
)
from kleinian.errors import (
    InvalidParameters,
    SeparationViolation,
    UnknownPlane,
)
from kleinian.hyperboloid import (
    GeodesicSubspace,
    HPoint,
    angle_at,
    boundary_endpoint,
    dist,
    geodesic_separation,
    mink_inner,
    subspace_intersection,
)
from kleinian.words import Letter, parse_word


@pytest.fixture(scope="module")
def conf2():
    return build_configuration(2)


# -- constants ----------------------------------------------------------------

def test_constant_L_value():
    L = constant_L()
    assert L == pytest.approx(4.4000844141133397, abs=1e-15)
    # same number through the log form of acosh
    assert L == pytest.approx(2.0 * math.log(2 * math.sqrt(2) + math.sqrt(7)) + 1.0,
                              abs=1e-14)


def test_quasi_constants():
    A, B = quasi_constants()
    assert A == pytest.approx(79.20151945404011, abs=1e-12)
    assert B == pytest.approx(56.801012969360073, abs=1e-12)


# -- construction -------------------------------------------------------------

def test_build_shapes():
    for n in (1, 2, 3):
        c = build_configuration(n)
        assert len(c.planes) == 2 ** n
        assert len(c.axes) == 2 * n
        assert len(c.generators) == 2 * n
        assert c.dim == 2 * n
        for p in c.planes.values():
            assert p.intrinsic_dim == n
        assert c.ell == pytest.approx(6 * c.L, abs=1e-12)


def test_build_rejects_bad_parameters():
    with pytest.raises(InvalidParameters):
        build_configuration(0)
    with pytest.raises(InvalidParameters):
        build_configuration(2, ell=0.0)
    with pytest.raises(InvalidParameters):
        build_configuration(2, ell=-1.0)
    with pytest.raises(InvalidParameters):
        build_configuration(2, ell=math.nan)


def test_build_is_deterministic():
    a = build_configuration(2)
    b = build_configuration(2)
    for k in a.generators:
        assert np.array_equal(a.generators[k].matrix, b.generators[k].matrix)
    for k in a.planes:
        assert np.array_equal(a.planes[k].basis, b.planes[k].basis)


def test_axes_mutually_orthogonal_at_origin(conf2):
    keys = sorted(conf2.axes)
    for i, k1 in enumerate(keys):
        for k2 in keys[i + 1:]:
            a = angle_at(conf2.base, conf2.axes[k1].dir, conf2.axes[k2].dir)
            assert abs(a - math.pi / 2) < 1e-9


def test_plane_lookup_and_labels(conf2):
    assert plane_label((0, 1)) == "01"
    assert parse_plane("01", 2) == (0, 1)
    assert conf2.plane("01" and (0, 1)).intrinsic_dim == 2
    with pytest.raises(UnknownPlane):
        parse_plane("012", 3)
    with pytest.raises(UnknownPlane):
        conf2.plane((0, 1, 1))


def test_plane_pair_intersections_n2(conf2):
    # planes differing in one coordinate meet in the shared axis
    out = subspace_intersection(conf2.plane((0, 0)), conf2.plane((0, 1)))
    assert isinstance(out, GeodesicSubspace)
    assert out.intrinsic_dim == 1
    d = out.basis[1]
    axis_dir = conf2.axis(1, 0).dir
    assert abs(abs(float(d @ axis_dir)) - 1.0) < 1e-9
    # fully complementary planes meet only at O
    out = subspace_intersection(conf2.plane((0, 0)), conf2.plane((1, 1)))
    assert isinstance(out, HPoint)
    assert np.allclose(out.v, conf2.base.v, atol=1e-9)


def test_plane_pair_intersection_dims_n3():
    c = build_configuration(3)
    labels = sorted(c.planes)
    for i, b1 in enumerate(labels):
        for b2 in labels[i + 1:]:
            agree = sum(1 for x, y in zip(b1, b2) if x == y)
            out = subspace_intersection(c.planes[b1], c.planes[b2])
            if agree == 0:
                assert isinstance(out, HPoint)
            else:
                assert isinstance(out, GeodesicSubspace)
                assert out.intrinsic_dim == agree


def test_generator_preserves_owning_planes(conf2):
    for (j, g), iso in conf2.generators.items():
        for bits, plane in conf2.planes.items():
            B = plane.basis
            img = (iso.matrix @ B.T).T
            # residual of img against the span of B (J-orthonormal rows)
            J = np.diag([-1.0] + [1.0] * conf2.dim)
            signs = np.diag([-1.0] + [1.0] * (B.shape[0] - 1))
            proj = B.T @ signs @ (B @ J)
            resid = float(np.max(np.abs(img.T - proj @ img.T)))
            if bits[j - 1] == g:
                assert resid < 1e-9, (j, g, bits)
            else:
                assert resid > 1.0, (j, g, bits)


def test_generator_fixes_axis_endpoints(conf2):
    for (j, g), iso in conf2.generators.items():
        axis = conf2.axis(j, g)
        for s in (+1, -1):
            e = boundary_endpoint(axis, s)
            image = iso.matrix @ np.concatenate([[1.0], e.dir])
            if abs(image[0]) > 1e-12:
                d = image[1:] / image[0]
                assert np.allclose(d / np.linalg.norm(d), e.dir, atol=1e-9)


def test_generator_signs_and_lengths(conf2):
    a1 = conf2.generator(Letter(1, 0, 1))
    a1_inv = conf2.generator(Letter(1, 0, -1))
    # the Lorentz inverse J M^T J is exact; entries match bitwise
    J = np.diag([-1.0, 1, 1, 1, 1])
    assert np.array_equal(a1_inv.matrix, J @ a1.matrix.T @ J)
    O = conf2.base
    assert dist(O, a1.apply(O)) == pytest.approx(conf2.ell, rel=1e-12)
    assert dist(O, a1_inv.apply(O)) == pytest.approx(conf2.ell, rel=1e-12)
    b1 = conf2.generator(Letter(1, 1, 1))
    phi = (1 + math.sqrt(5)) / 2
    assert dist(O, b1.apply(O)) == pytest.approx(conf2.ell * phi, rel=1e-12)
    assert conf2.generator_length(1) == pytest.approx(conf2.ell * phi, rel=1e-15)


def test_generator_inverse_cancels_at_moderate_length():
    # entry scale e^0.2: the product a a^-1 is meaningfully close to I here,
    # unlike at the default length where it drowns in cancellation
    c = build_configuration(2, ell=0.2)
    a1 = c.generator(Letter(1, 0, 1))
    a1_inv = c.generator(Letter(1, 0, -1))
    assert np.allclose(a1.compose(a1_inv).matrix, np.eye(5), atol=1e-12)


def test_word_isometry_order(conf2):
    # left-to-right action: w = a1+ b2+ acts as A1 then B2 on the right
    w = parse_word("a1+ b2+")
    m = conf2.word_isometry(w).matrix
    a1 = conf2.generators[(1, 0)].matrix
    b2 = conf2.generators[(2, 1)].matrix
    assert np.allclose(m, a1 @ b2, atol=1e-6)


# -- validation ---------------------------------------------------------------

def test_validation_passes_at_default_length(conf2):
    rep = validate_configuration(conf2, word_depth=3)
    assert rep.passed
    assert rep.words_tested == 216
    assert rep.min_separation >= rep.threshold
    # nearest translate of an axis sits one generator shift away
    assert rep.min_separation == pytest.approx(conf2.ell, rel=1e-9)
    assert rep.threshold == pytest.approx(3 * constant_L(), abs=1e-12)
    assert rep.orthogonality_residual <= 1e-8
    assert rep.single_point_residual <= 1e-9


def test_validation_fails_for_short_translations():
    c = build_configuration(2, ell=0.1)
    with pytest.raises(SeparationViolation) as err:
        validate_configuration(c, word_depth=2)
    report = err.value.args[1]
    assert not report.passed
    assert report.min_word  # offending word is named
    assert report.min_separation < report.threshold


def test_validation_thread_count_does_not_change_report(conf2):
    r1 = validate_configuration(conf2, word_depth=2, threads=1)
    r4 = validate_configuration(conf2, word_depth=2, threads=4)
    assert r1.to_dict() == r4.to_dict()


def test_validation_small_n():
    for n in (1, 3):
        rep = validate_configuration(build_configuration(n), word_depth=2)
        assert rep.passed


def test_resolve_threads_env(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert resolve_threads(None) == 1
    assert resolve_threads(7) == 7
    monkeypatch.setenv(THREADS_ENV, "3")
    assert resolve_threads(None) == 3
    monkeypatch.setenv(THREADS_ENV, "junk")
    assert resolve_threads(None) == 1


def test_separation_between_distinct_axes_is_zero_at_origin(conf2):
    # distinct coordinate axes cross at O: separation 0, never 3L
    assert geodesic_separation(conf2.axis(1, 0), conf2.axis(2, 1)) == 0.0


# -- serialization ------------------------------------------------------------

def test_save_load_round_trip(tmp_path, conf2):
    path = tmp_path / "conf.json"
    save_configuration(conf2, str(path))
    c2 = load_configuration(str(path))
    assert c2.n == conf2.n and c2.ell == conf2.ell
    for k in conf2.generators:
        assert np.array_equal(c2.generators[k].matrix, conf2.generators[k].matrix)
    text1 = path.read_text()
    save_configuration(c2, str(path))
    assert path.read_text() == text1


def test_saved_floats_survive_text_round_trip(tmp_path, conf2):
    path = tmp_path / "conf.json"
    save_configuration(conf2, str(path))
    data = json.loads(path.read_text())
    a1 = np.array(data["generators"]["a1"])
    assert np.array_equal(a1, conf2.generators[(1, 0)].matrix)
    assert data["ell"] == conf2.ell


def test_load_rejects_edited_matrices(tmp_path, conf2):
    path = tmp_path / "conf.json"
    save_configuration(conf2, str(path))
    data = json.loads(path.read_text())
    data["generators"]["a1"][0][0] *= 1.0 + 1e-9  # entries are ~1e11: relative nudge
    path.write_text(json.dumps(data))
    with pytest.raises(InvalidParameters):
        load_configuration(str(path))


def test_load_rejects_malformed_file(tmp_path):
    path = tmp_path / "conf.json"
    path.write_text('{"n": 2}')
    with pytest.raises(InvalidParameters):
        load_configuration(str(path))
