import numpy as np
import pytest

from matcomplete import FactoredMatrix, combine, frobenius_distance, project_omega, scale

from conftest import full_observed, random_factored, random_observed


def test_zero_factored():
    z = FactoredMatrix.zero(4, 6)
    assert z.shape == (4, 6)
    assert z.k == 0 and z.rank == 0
    assert z.norm() == 0.0
    assert np.array_equal(z.dense(), np.zeros((4, 6)))


def test_validate_accepts_good_and_rejects_bad(rng):
    f = random_factored(rng, 8, 6, 3)
    f.validate()
    skewed = FactoredMatrix(f.u * 1.01, f.sigma, f.v)
    with pytest.raises(ValueError, match="orthonormal"):
        skewed.validate()
    disordered = FactoredMatrix(f.u, np.sort(f.sigma), f.v)
    with pytest.raises(ValueError, match="nonincreasing"):
        disordered.validate()


def test_factor_count_mismatch_rejected(rng):
    f = random_factored(rng, 5, 5, 2)
    with pytest.raises(ValueError, match="factor count"):
        FactoredMatrix(f.u, f.sigma[:1], f.v)


def test_rank_counts_positive_values(rng):
    f = random_factored(rng, 6, 6, 3)
    g = FactoredMatrix(f.u, np.array([2.0, 1.0, 0.0]), f.v)
    assert g.k == 3 and g.rank == 2


def test_dense_matches_triple_product(rng):
    f = random_factored(rng, 7, 5, 3)
    expected = f.u @ np.diag(f.sigma) @ f.v.T
    assert np.allclose(f.dense(), expected, atol=1e-14)


# --- project_omega ---


def test_project_zero_gives_zeros(rng):
    obs = random_observed(rng, 10, 8, 0.4)
    out = project_omega(FactoredMatrix.zero(10, 8), obs)
    assert np.array_equal(out, np.zeros(obs.nnz))


def test_project_full_omega_recovers_matrix(rng):
    f = random_factored(rng, 6, 5, 2)
    dense = f.dense()
    obs = full_observed(dense)
    assert np.allclose(project_omega(f, obs), dense.ravel(), atol=1e-12)


def test_project_matches_dense_oracle(rng):
    f = random_factored(rng, 50, 40, 3)
    obs = random_observed(rng, 50, 40, 200 / 2000)
    dense = f.dense()
    expected = dense[obs.rows, obs.cols]
    got = project_omega(f, obs)
    assert np.abs(got - expected).max() <= 1e-12 * max(1.0, np.abs(expected).max())


def test_project_is_linear(rng):
    obs = random_observed(rng, 12, 9, 0.5)
    for _ in range(5):
        f = random_factored(rng, 12, 9, 3)
        g = random_factored(rng, 12, 9, 2)
        a, b = rng.uniform(-2, 2, size=2)
        lhs = project_omega(combine(a, f, b, g), obs)
        rhs = a * project_omega(f, obs) + b * project_omega(g, obs)
        assert np.abs(lhs - rhs).max() <= 1e-12 * max(1.0, np.abs(rhs).max())


def test_project_shape_mismatch(rng):
    f = random_factored(rng, 5, 5, 2)
    obs = random_observed(rng, 6, 5, 0.5)
    with pytest.raises(ValueError, match="shape mismatch"):
        project_omega(f, obs)


# --- combine / scale ---


def test_combine_matches_dense_sum(rng):
    for _ in range(5):
        f = random_factored(rng, 9, 7, 3)
        g = random_factored(rng, 9, 7, 2)
        a, b = rng.uniform(-3, 3, size=2)
        out = combine(a, f, b, g)
        out.validate()
        assert np.allclose(out.dense(), a * f.dense() + b * g.dense(), atol=1e-12)


def test_combine_zero_coefficients(rng):
    f = random_factored(rng, 6, 6, 2)
    g = random_factored(rng, 6, 6, 2)
    assert np.allclose(combine(0.0, f, 1.0, g).dense(), g.dense())
    assert np.allclose(combine(1.0, f, 0.0, g).dense(), f.dense())
    assert combine(0.0, f, 0.0, g).k == 0


def test_scale_negative_keeps_invariants(rng):
    f = random_factored(rng, 5, 4, 2)
    out = scale(-2.0, f)
    out.validate()
    assert np.allclose(out.dense(), -2.0 * f.dense(), atol=1e-13)


def test_combine_of_cancelling_terms_prunes(rng):
    f = random_factored(rng, 8, 8, 3)
    out = combine(1.0, f, -1.0, f)
    assert out.norm() <= 1e-12 * f.norm()


# --- distances ---


def test_frobenius_distance_small_matches_dense(rng):
    f = random_factored(rng, 20, 15, 3)
    g = random_factored(rng, 20, 15, 4)
    expected = np.linalg.norm(f.dense() - g.dense())
    assert abs(frobenius_distance(f, g) - expected) <= 1e-10 * max(1.0, expected)


def test_frobenius_distance_gram_path_matches_dense(rng):
    # force the Gram branch on a wide matrix and compare to dense subtraction
    f = random_factored(rng, 30, 1200, 3)
    g = random_factored(rng, 30, 1200, 3)
    got = frobenius_distance(f, g)
    dense = np.linalg.norm(f.dense() - g.dense())
    assert abs(got - dense) <= 1e-9 * max(1.0, dense)


def test_frobenius_distance_identical_objects_is_exact_zero(rng):
    f = random_factored(rng, 40, 2000, 2)
    assert frobenius_distance(f, FactoredMatrix(f.u, f.sigma, f.v)) == 0.0
