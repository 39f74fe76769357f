import numpy as np
import pytest

from isps_engine.tools.errors import DataError, ShapeError
from isps_engine.tools.geometry import (
    BoundedSetApprox,
    ball,
    circle,
    directed_hausdorff,
    farthest_point_subsample,
    merge,
    origin,
    point,
)


def test_distance_to_the_origin_is_the_norm():
    A = origin(2)
    assert A.distance(np.array([3.0, 4.0])) == pytest.approx(5.0)
    assert origin(2, np.inf).distance(np.array([3.0, -4.0])) == pytest.approx(4.0)


def test_distance_inside_an_inflated_set_is_zero():
    A = ball([1.0, 0.0], 0.5)
    assert A.distance(np.array([1.2, 0.1])) == 0.0
    assert A.distance(np.array([2.5, 0.0])) == pytest.approx(1.0)


def test_distance_is_vectorized_and_infinite_for_blown_states():
    A = point([1.0])
    d = A.distance(np.array([[0.0], [np.inf], [3.0]]))
    assert d[0] == pytest.approx(1.0)
    assert np.isinf(d[1])
    assert d[2] == pytest.approx(2.0)


def test_dimension_mismatch_is_a_shape_error():
    with pytest.raises(ShapeError):
        origin(2).distance(np.zeros(3))


def test_empty_set_is_rejected():
    with pytest.raises(DataError):
        BoundedSetApprox(np.zeros((0, 2)))


def test_radius_counts_the_inflation():
    assert ball([3.0, 4.0], 1.0).radius == pytest.approx(6.0)
    assert circle(2.0).radius == pytest.approx(2.0)


def test_samples_stay_inside_and_shell_points_sit_on_the_boundary():
    A = ball([0.0, 1.0], 0.5)
    rng = np.random.default_rng(0)
    inside = A.sample_inside(rng, 50)
    assert np.all(A.distance(inside) == 0.0)
    shell = A.shell_points(rng, 20)
    assert np.allclose(np.linalg.norm(shell - np.array([0.0, 1.0]), axis=1), 0.5)


def test_directed_hausdorff_between_balls():
    assert directed_hausdorff(ball([0.0], 1.0), ball([3.0], 0.5)) == pytest.approx(3.5)
    assert directed_hausdorff(point([0.0]), ball([0.0], 2.0)) == 0.0


def test_farthest_point_subsample_is_deterministic():
    pts = circle(1.0, 64).points
    a = farthest_point_subsample(pts, 8)
    b = farthest_point_subsample(pts, 8)
    assert a.shape == (8, 2)
    assert np.array_equal(a, b)


def test_merge_keeps_every_center():
    M = merge([point([0.0, 0.0]), ball([1.0, 1.0], 0.25)])
    assert M.size == 2
    assert M.inflation == 0.25


def test_payload_round_trip():
    A = ball([1.0, 2.0], 0.5, np.inf)
    B = BoundedSetApprox.from_dict(A.to_dict())
    assert np.array_equal(A.points, B.points)
    assert B.norm_ord == np.inf
    assert B.inflation == 0.5
