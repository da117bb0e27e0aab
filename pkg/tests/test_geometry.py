"""
Unit tests for codebook geometry and codebook storage.
"""

import json

import numpy as np
import pandas as pd
import pytest

from src.errors import ContractViolation, ParameterError
from src.geometry.codebook import Codebook, gram_check, make_simplex, simplex_to_orthogonal
from src.geometry.storage import read_codebook, write_codebook


@pytest.fixture
def simplex3():
    """Three-codeword simplex of unit energy in two dimensions."""
    return make_simplex(3, 1.0, 2)


def test_two_point_simplex_is_antipodal():
    """M=2 simplex is the antipodal pair {+1, -1}."""
    cb = make_simplex(2, 1.0, 1)

    assert sorted(cb.vectors[:, 0].round(12)) == [-1.0, 1.0]
    assert cb.vectors[0] @ cb.vectors[1] == pytest.approx(-1.0)


def test_three_point_simplex_gram(simplex3):
    """M=3 unit simplex: inner products -1/2, squared distances 3."""
    gram = simplex3.vectors @ simplex3.vectors.T

    off = gram[~np.eye(3, dtype=bool)]
    assert np.allclose(off, -0.5, atol=1e-12)
    assert np.allclose(np.diag(gram), 1.0, atol=1e-12)

    report = gram_check(simplex3)
    assert report.min_sq_distance == pytest.approx(3.0)
    assert report.max_sq_distance == pytest.approx(3.0)


@pytest.mark.parametrize("M", [2, 3, 4, 7, 12])
def test_simplex_codewords_sum_to_zero(M):
    """Codewords of a simplex sum to the zero vector."""
    cb = make_simplex(M, 1.0, M - 1)

    assert np.allclose(cb.vectors.sum(axis=0), 0.0, atol=1e-12)


@pytest.mark.parametrize("M,energy", [(3, 1.0), (5, 2.5), (8, 0.3)])
def test_simplex_gram_matrix(M, energy):
    """Gram matrix is E*M/(M-1)*I - E/(M-1)*J elementwise."""
    cb = make_simplex(M, energy, M + 2)
    expected = energy * M / (M - 1) * np.eye(M) - energy / (M - 1) * np.ones((M, M))

    assert np.allclose(cb.vectors @ cb.vectors.T, expected, atol=1e-9)
    assert np.all(cb.vectors[:, M - 1:] == 0.0)


def test_simplex_rejects_small_dimension():
    """A simplex of M codewords needs at least M-1 coordinates."""
    with pytest.raises(ParameterError):
        make_simplex(5, 1.0, 3)

    with pytest.raises(ParameterError):
        make_simplex(1, 1.0, 3)


def test_codebook_energy_check():
    """Codewords must share the declared energy."""
    with pytest.raises(ContractViolation):
        Codebook(np.array([[1.0, 0.0], [0.0, 2.0]]), 1.0)


def test_codebook_vectors_are_read_only(simplex3):
    """Stored vectors cannot be changed in place."""
    with pytest.raises(ValueError):
        simplex3.vectors[0, 0] = 5.0


def test_simplex_to_orthogonal_three():
    """Orthogonal representation of make_simplex(3, 1, 3): orthogonal, squared norm 3/2."""
    ortho = simplex_to_orthogonal(make_simplex(3, 1.0, 3))
    gram = ortho.vectors @ ortho.vectors.T

    assert ortho.energy == pytest.approx(1.5)
    assert np.allclose(gram, 1.5 * np.eye(3), atol=1e-9)


def test_simplex_to_orthogonal_antipodal():
    """M=2 antipodal pair in dimension 2 becomes an orthogonal pair of squared norm 2."""
    ortho = simplex_to_orthogonal(make_simplex(2, 1.0, 2))

    assert ortho.vectors[0] @ ortho.vectors[1] == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(np.sum(ortho.vectors ** 2, axis=1), 2.0)


def test_simplex_to_orthogonal_preserves_distances():
    """A randomly rotated M=5 simplex keeps its pairwise distances."""
    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    rotated = Codebook(make_simplex(5, 2.0, 6).vectors @ q.T, 2.0, 'simplex')

    ortho = simplex_to_orthogonal(rotated)
    before = np.linalg.norm(rotated.vectors[:, None] - rotated.vectors[None], axis=2)
    after = np.linalg.norm(ortho.vectors[:, None] - ortho.vectors[None], axis=2)

    assert np.allclose(before, after, atol=1e-9)
    assert np.allclose(ortho.vectors @ ortho.vectors.T, 2.5 * np.eye(5), atol=1e-9)


def test_simplex_to_orthogonal_contract():
    """Non-equidistant input or too few dimensions violate the contract."""
    skewed = Codebook(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.6, 0.8, 0.0]]), 1.0)
    with pytest.raises(ContractViolation):
        simplex_to_orthogonal(skewed)

    with pytest.raises(ContractViolation):
        simplex_to_orthogonal(make_simplex(4, 1.0, 3))


def test_gram_check_equidistant_simplex():
    """Simplex of 4 codewords is equidistant."""
    report = gram_check(make_simplex(4, 1.0, 3))

    assert report.is_equidistant
    assert report.max_abs_offdiag_cosine == pytest.approx(1.0 / 3.0)


def test_gram_check_identical_vectors():
    """Two identical vectors have cosine 1."""
    cb = Codebook(np.array([[0.6, 0.8], [0.6, 0.8]]), 1.0)

    assert gram_check(cb).max_abs_offdiag_cosine == pytest.approx(1.0)


def test_codebook_storage_roundtrip(tmp_path, simplex3):
    """Stored codebooks come back unchanged with their header."""
    csv_path, json_path = write_codebook(simplex3, tmp_path, stem='code', extra={'seed': 7})
    loaded = read_codebook(csv_path)

    assert np.array_equal(loaded.vectors, simplex3.vectors)
    assert loaded.energy == simplex3.energy
    assert loaded.kind == 'simplex'
    assert json.loads(json_path.read_text())['seed'] == 7
    assert list(pd.read_csv(csv_path).columns) == ['x0', 'x1']


def test_codebook_storage_rejects_bad_columns(tmp_path, simplex3):
    """A CSV whose columns disagree with the header is rejected."""
    csv_path, _ = write_codebook(simplex3, tmp_path)
    pd.DataFrame({'a': [1.0], 'b': [0.0]}).to_csv(csv_path, index=False)

    with pytest.raises(ContractViolation):
        read_codebook(csv_path)


def test_codebook_storage_missing_file(tmp_path):
    """Reading a missing codebook raises FileNotFoundError."""
    with pytest.raises(FileNotFoundError):
        read_codebook(tmp_path / 'missing.csv')


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
