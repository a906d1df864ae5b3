"""Measure containers, Gaussian sampling, and dataset generators."""

import numpy as np
import pytest

from lotmap.measures import (
    EmpiricalMeasure,
    GaussianSpec,
    circle_means,
    dilation_scales,
    gaussian_w2,
    generate_circle_translation,
    generate_dilation,
    generate_grid_translation,
    generate_rotation,
    grid_means,
    measure_from_csv,
    measure_to_csv,
    reference_hash,
    rotation_specs,
    sample_gaussian,
    wishart_noise,
)


def test_measure_weights_must_sum_to_one():
    points = np.zeros((2, 2))
    with pytest.raises(ValueError, match="sum"):
        EmpiricalMeasure(points, np.array([0.5, 0.6]))
    EmpiricalMeasure(points, np.array([0.5, 0.5]))


def test_measure_rejects_nonpositive_weights_and_nonfinite_points():
    with pytest.raises(ValueError, match="positive"):
        EmpiricalMeasure(np.zeros((2, 2)), np.array([1.0, 0.0]))
    with pytest.raises(ValueError, match="finite"):
        EmpiricalMeasure(np.array([[np.inf, 0.0]]), np.array([1.0]))
    with pytest.raises(ValueError, match="k, n"):
        EmpiricalMeasure(np.zeros(3), np.array([1.0]))


def test_from_points_is_uniform():
    mu = EmpiricalMeasure.from_points(np.arange(6.0).reshape(3, 2))
    np.testing.assert_allclose(mu.weights, [1 / 3, 1 / 3, 1 / 3])
    assert mu.k == 3 and mu.dim == 2


def test_gaussian_spec_rejects_singular_covariance():
    with pytest.raises(ValueError, match="positive definite"):
        GaussianSpec(np.array([5.0, 5.0]), np.zeros((2, 2)))


def test_gaussian_spec_rejects_asymmetry():
    cov = np.array([[1.0, 0.2], [0.1, 1.0]])
    with pytest.raises(ValueError, match="symmetric"):
        GaussianSpec(np.zeros(2), cov)


def test_sample_gaussian_small_draw_is_uniformly_weighted():
    mu = sample_gaussian(GaussianSpec(np.zeros(2), np.eye(2)), 3, 7)
    assert mu.points.shape == (3, 2)
    np.testing.assert_allclose(mu.weights, [1 / 3, 1 / 3, 1 / 3])


def test_sample_gaussian_mean_concentrates():
    # 3 sigma / sqrt(10000) = 0.03 < 0.05 per coordinate.
    mu = sample_gaussian(GaussianSpec(np.zeros(2), np.eye(2)), 10000, 0)
    assert np.abs(mu.points.mean(axis=0)).max() < 0.05


def test_sample_gaussian_respects_covariance():
    cov = np.array([[2.0, -0.5], [-0.5, 1.0]])
    mu = sample_gaussian(GaussianSpec(np.zeros(2), cov), 200000, 1)
    sample_cov = np.cov(mu.points.T)
    np.testing.assert_allclose(sample_cov, cov, atol=0.05)


def test_wishart_zero_scale_is_zero_matrix():
    np.testing.assert_array_equal(wishart_noise(0.0, 3, 0), np.zeros((3, 3)))


def test_wishart_is_symmetric_psd():
    w = wishart_noise(0.5, 2, 12)
    np.testing.assert_allclose(w, w.T, atol=0)
    assert np.linalg.eigvalsh(w).min() >= 0


def test_wishart_expectation_matches_scale():
    # E[G G^T] = n * scale^2 * I; 10000 trials keeps the error under 5%.
    rng = np.random.default_rng(3)
    total = np.zeros((2, 2))
    for _ in range(10000):
        total += wishart_noise(0.5, 2, rng)
    mean = total / 10000
    np.testing.assert_allclose(mean, 2 * 0.25 * np.eye(2), atol=0.025)


def test_wishart_rejects_negative_scale():
    with pytest.raises(ValueError, match="nonnegative"):
        wishart_noise(-0.1, 2, 0)


def test_circle_means_uniform_spacing():
    means = circle_means(4, 1.0)
    expected = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)
    np.testing.assert_allclose(means, expected, atol=1e-15)
    radii = np.linalg.norm(circle_means(10, 8.0), axis=1)
    np.testing.assert_allclose(radii, 8.0)


def test_rotation_specs_angle_zero_keeps_base_cov():
    base = np.diag([2.0, 0.5])
    specs = rotation_specs(4, 1.0, base)
    np.testing.assert_array_equal(specs[0].covariance, base)


def test_rotation_specs_quarter_turn_swaps_axes():
    specs = rotation_specs(4, 1.0, np.diag([2.0, 0.5]))
    np.testing.assert_allclose(
        specs[1].covariance, np.diag([0.5, 2.0]), atol=1e-15
    )


def test_grid_means_single_cell_is_center():
    np.testing.assert_allclose(
        grid_means(1, (-10.0, 10.0)), [[0.0, 0.0]]
    )


def test_grid_means_corners_and_order():
    means = grid_means(2, (0.0, 1.0))
    expected = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=float)
    np.testing.assert_allclose(means, expected)


def test_dilation_scales_cover_domain():
    scales = dilation_scales(3, (1.0, 4.0))
    assert scales.shape == (9, 2)
    assert scales.min() == 1.0 and scales.max() == 4.0


def test_circle_translation_dataset_shapes_and_truth():
    base = np.array([[1.0, -0.5], [-0.5, 1.0]])
    ds = generate_circle_translation(10, 8.0, base, 0.5, 1000, 1000, 0)
    assert ds.n_measures == 10
    assert ds.truth.shape == (10, 2)
    assert all(mu.k == 1000 for mu in ds.measures)
    assert ds.reference.k == 1000
    np.testing.assert_allclose(ds.truth, circle_means(10, 8.0))
    assert ds.descriptor["generator"] == "circle-translation"


def test_circle_translation_single_measure_at_origin():
    ds = generate_circle_translation(1, 0.0, np.eye(2), 0.0, 5, 5, 0)
    assert ds.n_measures == 1
    np.testing.assert_allclose(ds.truth, [[0.0, 0.0]])


def test_generators_are_deterministic_per_seed():
    first = generate_rotation(4, 2.0, np.diag([2.0, 0.5]), 0.3, 50, 60, 9)
    second = generate_rotation(4, 2.0, np.diag([2.0, 0.5]), 0.3, 50, 60, 9)
    for mu, nu in zip(first.measures, second.measures):
        np.testing.assert_array_equal(mu.points, nu.points)
    np.testing.assert_array_equal(
        first.reference.points, second.reference.points
    )
    other = generate_rotation(4, 2.0, np.diag([2.0, 0.5]), 0.3, 50, 60, 10)
    assert not np.array_equal(first.measures[0].points,
                              other.measures[0].points)


def test_measure_streams_are_distinct():
    ds = generate_grid_translation(2, (0.0, 1.0), np.eye(2), 0.0, 30, 30, 4)
    centered = [mu.points - t for mu, t in zip(ds.measures, ds.truth)]
    # Same covariance, independent streams: clouds must differ.
    assert not np.array_equal(centered[0], centered[1])


def test_dilation_truth_is_centered():
    ds = generate_dilation(3, (1.0, 4.0), 20, 20, 2)
    np.testing.assert_allclose(ds.truth.sum(axis=0), [0.0, 0.0], atol=1e-12)
    assert ds.n_measures == 9


def test_dilation_unit_scale_gives_identity_covariance():
    scales = dilation_scales(3, (1.0, 4.0))
    assert tuple(scales[0]) == (1.0, 1.0)
    # With noise 0 the first measure is drawn from N(0, I).
    ds = generate_dilation(3, (1.0, 4.0), 100000, 10, 5)
    cov = np.cov(ds.measures[0].points.T)
    np.testing.assert_allclose(cov, np.eye(2), atol=0.02)


def test_gaussian_w2_identical_is_zero():
    spec = GaussianSpec(np.zeros(2), np.eye(2))
    assert gaussian_w2(spec, spec) == 0.0


def test_gaussian_w2_translation_is_mean_distance():
    a = GaussianSpec(np.zeros(2), np.eye(2))
    b = GaussianSpec(np.array([3.0, 4.0]), np.eye(2))
    assert abs(gaussian_w2(a, b) - 5.0) <= 1e-12


def test_gaussian_w2_commuting_covariances():
    a = GaussianSpec(np.zeros(2), np.diag([4.0, 1.0]))
    b = GaussianSpec(np.zeros(2), np.diag([1.0, 1.0]))
    # tr term reduces to sum (sigma_a - sigma_b)^2 = (2-1)^2 + 0 = 1.
    assert abs(gaussian_w2(a, b) - 1.0) <= 1e-12


def test_gaussian_w2_is_symmetric():
    rng = np.random.default_rng(8)
    g = rng.standard_normal((2, 2))
    a = GaussianSpec(rng.standard_normal(2), g @ g.T + np.eye(2))
    g = rng.standard_normal((2, 2))
    b = GaussianSpec(rng.standard_normal(2), g @ g.T + np.eye(2))
    assert abs(gaussian_w2(a, b) - gaussian_w2(b, a)) <= 1e-12


def test_reference_hash_distinguishes_contents():
    x = np.zeros((3, 2))
    y = np.zeros((2, 3))
    assert reference_hash(x) == reference_hash(x.copy())
    assert reference_hash(x) != reference_hash(y)
    assert reference_hash(x) != reference_hash(x + 1.0)


def test_measure_csv_roundtrip_uniform(tmp_path):
    mu = EmpiricalMeasure.from_points(
        np.array([[0.1, -2.0], [3.5, 4.25], [-1.0, 0.0]])
    )
    path = tmp_path / "mu.csv"
    measure_to_csv(mu, path)
    back = measure_from_csv(path)
    np.testing.assert_array_equal(back.points, mu.points)
    np.testing.assert_array_equal(back.weights, mu.weights)


def test_measure_csv_roundtrip_weighted(tmp_path):
    mu = EmpiricalMeasure(
        np.array([[0.0, 1.0], [2.0, 3.0]]), np.array([0.25, 0.75])
    )
    path = tmp_path / "mu.csv"
    measure_to_csv(mu, path)
    back = measure_from_csv(path, weighted=True)
    np.testing.assert_array_equal(back.points, mu.points)
    np.testing.assert_array_equal(back.weights, mu.weights)


def test_measure_csv_rejects_bad_weight_sum(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("0.0,1.0,0.9\n1.0,0.0,0.9\n")
    with pytest.raises(ValueError, match="far from 1"):
        measure_from_csv(path, weighted=True)
