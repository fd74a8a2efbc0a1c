import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ks_2samp

from grassradon.errors import ParameterError
from grassradon.geometry import (
    GrassmannQuadrature,
    SphereQuadSpec,
    Subspace,
    bispherical_integrate,
    grassmann_grid,
    grassmann_mass,
    haar_sample,
    project_complement,
    sphere_rule,
    sphere_volume,
)

DIMS = [(n, k) for n in (2, 3, 4) for k in range(1, n)]


def test_sphere_volumes():
    assert sphere_volume(0) == pytest.approx(2.0)
    assert sphere_volume(1) == pytest.approx(2 * math.pi)
    assert sphere_volume(2) == pytest.approx(4 * math.pi)
    assert sphere_volume(3) == pytest.approx(2 * math.pi**2)


@pytest.mark.parametrize(
    "n,k,mass",
    [(2, 1, 2 / math.pi), (3, 1, 1.0), (3, 2, 1.0), (4, 2, 2.0), (4, 1, 4 / math.pi), (4, 3, 4 / math.pi)],
)
def test_grassmann_mass(n, k, mass):
    assert grassmann_mass(n, k) == pytest.approx(mass, rel=1e-14)


def test_haar_sample_examples():
    Q = haar_sample(2, 1, 1000, 42)
    assert Q.total_mass == pytest.approx(0.6366197723675814)
    one = haar_sample(3, 1, 1, 0)
    assert len(one) == 1 and one.weights[0] == pytest.approx(1.0)


def test_haar_projection_trace():
    Q = haar_sample(3, 1, 100_000, 7)
    e1 = np.array([1.0, 0.0, 0.0])
    sq = np.sum(np.einsum("nik,i->nk", Q.perp, e1) ** 2, axis=1)
    assert abs(sq.mean() - 1 / 3) < 0.01


@pytest.mark.parametrize("n,k", DIMS)
def test_haar_frames_orthonormal(n, k):
    Q = haar_sample(n, k, 200, 1)
    gram = np.einsum("nij,nil->njl", Q.frames, Q.frames)
    assert np.max(np.abs(gram - np.eye(n))) < 1e-12
    assert abs(Q.weights.sum() - grassmann_mass(n, k)) < 1e-12
    for H in Q.nodes[:5]:
        assert (H.n, H.k) == (n, k)


def test_haar_rotation_invariance():
    rng = np.random.default_rng(3)
    R, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    x = np.array([0.3, -1.0, 2.0])
    a = haar_sample(3, 1, 10_000, 11)
    b = haar_sample(3, 1, 10_000, 12)
    s1 = np.sum(np.einsum("nik,i->nk", a.perp, x) ** 2, axis=1)
    s2 = np.sum(np.einsum("nik,i->nk", b.perp, R @ x) ** 2, axis=1)
    assert ks_2samp(s1, s2).pvalue > 1e-3


def test_haar_sample_errors():
    with pytest.raises(ParameterError):
        haar_sample(2, 2, 10, 0)
    with pytest.raises(ParameterError):
        haar_sample(3, 0, 10, 0)
    with pytest.raises(ParameterError):
        haar_sample(3, 1, 0, 0)


def test_haar_seed_reproducible():
    a = haar_sample(4, 2, 50, 9)
    b = haar_sample(4, 2, 50, 9)
    assert np.array_equal(a.frames, b.frames)


def test_project_complement_examples():
    H = Subspace.from_span([[1.0, 0.0]])
    assert np.abs(project_complement([3.0, 4.0], H)) == pytest.approx([4.0])
    H3 = Subspace.from_span([[0.0, 0.0, 1.0]])
    assert H3.k == 2
    assert np.linalg.norm(project_complement([1.0, 2.0, 3.0], H3)) == pytest.approx(math.sqrt(5))
    with pytest.raises(ParameterError):
        project_complement([1.0, 2.0], H3)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**31 - 1), st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_projection_kills_H(n, seed, coeffs):
    k = 1 + seed % (n - 1)
    H = haar_sample(n, k, 1, seed).nodes[0]
    x = H.basis @ np.asarray(coeffs[: n - k])
    assert np.allclose(project_complement(x, H), 0.0, atol=1e-12)


def test_subspace_equality_up_to_frame():
    H = Subspace.from_span([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]])
    G = Subspace.from_span([[1.0, 2.0, 1.0], [1.0, 0.0, -1.0]])
    assert H.same_as(G)
    assert not H.same_as(Subspace.from_span([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))


def test_subspace_rejects_bad_frames():
    with pytest.raises(ParameterError):
        Subspace(2, 1, np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ParameterError):
        Subspace.from_span([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])


def test_quadrature_rejects_wrong_mass():
    Q = haar_sample(2, 1, 4, 0)
    with pytest.raises(ParameterError):
        GrassmannQuadrature(2, 1, Q.frames, Q.weights * 2, Q.total_mass)


@pytest.mark.parametrize("n,k", [(2, 1), (3, 1), (3, 2)])
def test_grid_integrates_cap_indicator(n, k):
    # fraction of complements within angle of e_n: compare grid with the 1D formula
    from grassradon.analysis import cap_measure

    G = grassmann_grid(n, k, 4000)
    assert G.weights.sum() == pytest.approx(grassmann_mass(n, k), abs=1e-12)
    x = np.zeros(n)
    x[0] = 1.0
    hit = np.linalg.norm(np.einsum("nik,i->nk", G.perp, x), axis=1) <= 0.5
    assert np.dot(G.weights, hit) == pytest.approx(cap_measure(n, k, 0.5).exact, abs=0.02)


def test_bispherical_examples():
    assert bispherical_integrate(lambda p: np.ones(len(p)), 3, 1) == pytest.approx(4 * math.pi, rel=1e-12)
    assert bispherical_integrate(lambda p: np.ones(len(p)), 4, 2) == pytest.approx(2 * math.pi**2, rel=1e-12)
    assert bispherical_integrate(lambda p: p[:, 2] ** 2, 3, 1) == pytest.approx(4 * math.pi / 3, rel=1e-12)
    with pytest.raises(ParameterError):
        bispherical_integrate(lambda p: p[:, 0], 3, 1, SphereQuadSpec(beta_nodes=0))


def test_bispherical_vs_monte_carlo():
    rng = np.random.default_rng(5)
    pts = rng.standard_normal((200_000, 4))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    area = sphere_volume(3)
    for _ in range(10):
        c = rng.normal(size=(4, 4))

        def poly(p, c=c):
            return np.einsum("ni,ij,nj->n", p**2, c, p**2) + p[:, 0] * p[:, 1]

        exact = bispherical_integrate(poly, 4, 2, SphereQuadSpec(48, 64))
        vals = poly(pts) * area
        se = vals.std() / math.sqrt(len(vals))
        assert abs(exact - vals.mean()) <= 3 * se + 1e-9


def test_sphere_rule_weights():
    for m in (0, 1, 2, 3):
        _, w = sphere_rule(m, 64)
        assert w.sum() == pytest.approx(sphere_volume(m))
