import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grassradon.errors import ParameterError, UnsupportedFieldError
from grassradon.fields import (
    DiscreteMeasure,
    SpatialField,
    bump_field,
    bump_z,
    constant_function,
    gaussian_field,
    gaussian_radon_closed_form,
    gaussian_z,
    measure_fourier,
)
from grassradon.geometry import grassmann_grid, grassmann_mass, haar_sample, sphere_volume
from grassradon.transforms import (
    PlaneQuadratureSpec,
    classical_dual,
    classical_radon,
    dual_radon,
    dual_radon_radial,
    grassmann_integral,
    grassmann_lp_norm,
    pairing,
    pushforward_measure,
    radon,
    radon_function,
    set_threads,
    slice_fourier,
    spatial_integral,
)

SQRT_PI = math.sqrt(math.pi)


def test_radon_examples():
    H = haar_sample(2, 1, 1, 3).nodes[0]
    assert radon(gaussian_field(2, 1.0), H, [0.0]) == pytest.approx(SQRT_PI, rel=1e-8)
    # center inside H, offset 1 in the complement
    c = 0.7 * H.basis[:, 0]
    assert radon(gaussian_field(2, 1.0, center=c), H, [1.0]) == pytest.approx(SQRT_PI / math.e, rel=1e-8)
    assert radon(bump_field(2, 1.0), H, [1.0]) == 0.0
    assert radon(bump_field(2, 1.0), H, [1.5]) == 0.0


@pytest.mark.parametrize("scheme,budget,tol", [("tensor-gauss", 48, 1e-12), ("polar-gauss", 48, 1e-10),
                                               ("monte-carlo", 20000, 2e-2)])
def test_plane_schemes(scheme, budget, tol):
    H = haar_sample(4, 2, 1, 1).nodes[0]
    spec = PlaneQuadratureSpec(scheme, budget)
    val = radon(gaussian_field(4, 1.0), H, [0.3, -0.2], spec)
    assert val == pytest.approx(gaussian_radon_closed_form(1.0, 4, 2, math.hypot(0.3, 0.2)), rel=tol)


def test_radon_rejects_power_decay():
    f = gaussian_field(2, 1.0)
    bad = SpatialField(f.evaluator, 2, math.inf, "power", f.center, f.extent)
    with pytest.raises(UnsupportedFieldError):
        radon(bad, haar_sample(2, 1, 1, 0).nodes[0], [0.0])


def test_spec_validation():
    with pytest.raises(ParameterError):
        PlaneQuadratureSpec("simpson")
    with pytest.raises(ParameterError):
        PlaneQuadratureSpec(budget=1)
    with pytest.raises(ParameterError):
        PlaneQuadratureSpec(truncation_radius=0.0)


def test_radon_function_quadrature_matches_closed_form():
    f = gaussian_field(3, 1.3, center=[0.2, 0.1, -0.4], amplitude=0.6)
    Q = haar_sample(3, 1, 6, 2)
    Z = np.linspace(-1.5, 1.5, 5).reshape(1, -1, 1).repeat(6, 0)
    closed = radon_function(f, 1).values(Q.perp, Z)
    quad = radon_function(f, 1, PlaneQuadratureSpec(budget=48), closed_form=False).values(Q.perp, Z)
    assert np.allclose(closed, quad, rtol=1e-10, atol=1e-14)


def test_dual_examples():
    for n, k in [(2, 1), (3, 1), (3, 2), (4, 2)]:
        Q = haar_sample(n, k, 100, 0)
        x = np.linspace(-1, 1, n)
        assert dual_radon(constant_function(n, k), x, Q) == pytest.approx(grassmann_mass(n, k), rel=1e-12)
        assert dual_radon(gaussian_z(n, k, 1.7), np.zeros(n), Q) == pytest.approx(grassmann_mass(n, k), rel=1e-12)


def test_dual_gaussian_at_radius_two():
    # (2/pi) * (2/pi) * int_0^{pi/2} exp(-4 sin^2 w) dw
    exact = dual_radon_radial(lambda r: np.exp(-r * r), 2.0, 2, 1)
    assert exact == pytest.approx(0.196402498, abs=1e-8)
    Q = haar_sample(2, 1, 200_000, 1)
    th = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    vals = dual_radon(gaussian_z(2, 1, 1.0), 2 * np.column_stack([np.cos(th), np.sin(th)]), Q)
    assert np.mean(vals) == pytest.approx(exact, abs=2e-3)
    G = grassmann_grid(2, 1, 2048)
    assert dual_radon(gaussian_z(2, 1, 1.0), [0.0, 2.0], G) == pytest.approx(exact, rel=1e-10)


def test_dual_mismatch():
    with pytest.raises(ParameterError):
        dual_radon(gaussian_z(3, 1, 1.0), np.zeros(3), haar_sample(3, 2, 5, 0))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.1, 20.0))
def test_dual_sup_bound(seed, r):
    Q = haar_sample(3, 1, 50, seed)
    g = bump_z(3, 1, 1.0, 2.0, shift=[0.5, 0, 0])
    x = np.random.default_rng(seed).normal(size=(10, 3))
    x *= r / np.linalg.norm(x, axis=1, keepdims=True)
    assert np.all(np.abs(dual_radon(g, x, Q)) <= grassmann_mass(3, 1) * 2.0 + 1e-12)


def test_threads_do_not_change_results():
    Q = haar_sample(3, 1, 300, 0)
    X = np.random.default_rng(1).normal(size=(2000, 3))
    g = gaussian_z(3, 1, 1.0, shift=[0.1, 0.2, 0.3])
    a = dual_radon(g, X, Q)
    set_threads(4)
    try:
        b = dual_radon(g, X, Q)
    finally:
        set_threads(1)
    assert np.array_equal(a, b)


def test_slice_fourier_examples():
    H = haar_sample(2, 1, 1, 0).nodes[0]
    g = gaussian_z(2, 1, 1.0)
    assert slice_fourier(g, H, [0.0]) == pytest.approx(SQRT_PI, rel=1e-12)
    val = slice_fourier(g, H, [2.0])
    assert val.real == pytest.approx(SQRT_PI / math.e, rel=1e-12)
    assert abs(val.imag) < 1e-10


def test_pushforward_examples():
    H = haar_sample(3, 1, 1, 5).nodes[0]
    x0 = np.array([0.3, -1.0, 0.2])
    one = pushforward_measure(DiscreteMeasure([x0], [1.0]), H)
    assert one.atoms[0] == pytest.approx(x0 @ H.perp)
    sym = pushforward_measure(DiscreteMeasure([x0, -x0], [0.5, 0.5]), H)
    assert np.allclose(np.sort(sym.atoms.ravel()), np.sort(-sym.atoms.ravel()))
    rng = np.random.default_rng(2)
    mu = DiscreteMeasure(rng.normal(size=(5, 3)), rng.random(5))
    pf = pushforward_measure(mu, H)
    assert len(pf.weights) <= 5 and pf.total_mass == pytest.approx(mu.total_mass)
    # collision: two atoms differing along H merge
    hv = H.basis[:, 0]
    merged = pushforward_measure(DiscreteMeasure([x0, x0 + hv], [1.0, 2.0]), H)
    assert len(merged.weights) == 1 and merged.weights[0] == 3.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_fourier_slice_measures(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    k = int(rng.integers(1, n))
    atoms = rng.normal(size=(int(rng.integers(1, 11)), n))
    mu = DiscreteMeasure(atoms, rng.normal(size=len(atoms)))
    H = haar_sample(n, k, 1, seed).nodes[0]
    om = rng.normal(scale=3, size=(20, k))
    lhs = measure_fourier(pushforward_measure(mu, H), om)
    rhs = measure_fourier(mu, om @ H.perp.T)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_pairing_duality():
    # <R phi, psi> = int phi R* psi, exactly for the node measure
    Q = haar_sample(2, 1, 200, 4)
    phi = gaussian_field(2, 1.0, center=[0.3, -0.1])
    psi = gaussian_z(2, 1, 0.7, shift=[-0.2, 0.4])
    spec = PlaneQuadratureSpec(budget=64)
    left = pairing(radon_function(phi, 1), psi, Q, spec)
    right = spatial_integral(lambda x: phi(x) * dual_radon(psi, x, Q), 2, phi.center, phi.extent, 64)
    assert left == pytest.approx(right, rel=1e-10)
    assert pairing(psi, 0.0 * psi, Q, spec) == 0.0
    assert pairing(psi, psi, Q, spec) > 0


def test_pairing_duality_exact_haar():
    # the two sides on independent samples agree within Monte Carlo error
    phi = gaussian_field(3, 1.0, center=[0.2, 0.0, 0.1])
    psi = gaussian_z(3, 1, 0.5)
    spec = PlaneQuadratureSpec(budget=64)
    Q = haar_sample(3, 1, 4000, 10)
    val, se = grassmann_integral(
        lambda P, Z: radon_function(phi, 1).values(P, Z) * psi.values(P, Z), 1, 8.0, Q, spec
    )
    right = spatial_integral(
        lambda x: phi(x) * dual_radon_radial(psi.radial_profile, np.linalg.norm(x, axis=1), 3, 1),
        3, phi.center, phi.extent, 32,
    )
    assert abs(val - right) <= 3 * se + 1e-12


def test_lp_norm_examples():
    Q = haar_sample(2, 1, 50, 0)
    g = gaussian_z(2, 1, 1.0)
    assert grassmann_lp_norm(g, 1, None, Q) == pytest.approx(2 / SQRT_PI, rel=1e-12)
    assert grassmann_lp_norm(g, 2, None, Q) == pytest.approx(math.sqrt(2 / math.pi * math.sqrt(math.pi / 2)),
                                                             rel=1e-12)
    assert grassmann_lp_norm(g, 2, 0.0 * g, Q) == 0.0
    with pytest.raises(ParameterError):
        grassmann_lp_norm(g, 0.5, None, Q)


def test_l1_contraction():
    f = gaussian_field(3, 0.8, center=[0.5, 0.0, 0.0])
    Q = haar_sample(3, 2, 100, 0)
    Rf = radon_function(f, 2)
    l1 = grassmann_lp_norm(Rf, 1, None, Q)
    f_l1 = (math.pi / 0.8) ** 1.5
    assert l1 <= grassmann_mass(3, 2) * f_l1 * (1 + 1e-10)


def test_classical_conversion():
    f = gaussian_field(3, 1.0, center=[0.1, 0.2, 0.0])
    theta = np.array([0.0, 0.6, 0.8])
    # classical R f(t, theta) for a Gaussian: pi e^{-(t - c.theta)^2}
    t = 0.4
    assert classical_radon(f, theta, t) == pytest.approx(math.pi * math.exp(-(t - 0.12) ** 2), rel=1e-10)
    Q = grassmann_grid(3, 1, 20000)
    x = np.array([0.3, -0.5, 0.2])
    g = classical_dual(lambda tt, th: np.exp(-tt**2), x, Q)
    # int_{S^2} exp(-(x.theta)^2) dtheta = 4 pi * int_0^1 exp(-|x|^2 u^2) du
    r = np.linalg.norm(x)
    u = np.linspace(0, 1, 20001)
    oracle = 4 * math.pi * np.trapezoid(np.exp(-(r * u) ** 2), u)
    assert g == pytest.approx(oracle, rel=1e-6)
    assert g / sphere_volume(2) * grassmann_mass(3, 1) == pytest.approx(
        dual_radon(gaussian_z(3, 1, 1.0), x, Q), rel=1e-12
    )
