import json
import math

import numpy as np
import pytest

from grassradon.analysis import gaussian_admissible, gaussian_family
from grassradon.errors import ParameterError
from grassradon.experiments import (
    EXPERIMENTS,
    CheckGrid,
    ExperimentReport,
    SearchConfig,
    cap_measure_profile,
    dual_decay,
    pinched_gaussian,
    search_counterexample,
    solmon_ratio,
    verify_affirmative_chain,
    verify_general_slicing,
    verify_p1_monotonicity,
    verify_pinched_gaussian_slicing,
)
from grassradon.fields import (
    DiscreteMeasure,
    bump_z,
    constant_function,
    gaussian_field,
    gaussian_z,
    sum_fields,
)
from grassradon.geometry import grassmann_grid, haar_sample
from grassradon.transforms import PlaneQuadratureSpec, grassmann_lp_norm

SPEC = PlaneQuadratureSpec(budget=128, panels=8)
SMALL_GRID = CheckGrid(radii=8, directions=8, r_max=10.0)


# reports


def test_report_json_is_stable():
    r = ExperimentReport("x", {"a": np.float64(1.5)}, {"nan": math.nan, "big": math.inf, "v": np.arange(2)},
                         "holds", {}, 3, runtime_ms=17)
    d = json.loads(r.to_json())
    assert d["schema_version"] == 1
    assert d["quantities"] == {"nan": None, "big": "inf", "v": [0, 1]}
    assert "runtime_ms" not in d
    assert r.to_dict(include_runtime=True)["runtime_ms"] == 17
    with pytest.raises(ParameterError):
        ExperimentReport("x", {}, {}, "maybe", {}, 0)


def test_check_grid():
    X = CheckGrid(4, 3, 2.0).points(3, 0)
    assert X.shape == (13, 3)
    assert np.allclose(X[0], 0) and np.max(np.linalg.norm(X, axis=1)) == pytest.approx(2.0)
    with pytest.raises(ParameterError):
        CheckGrid(0).points(2, 0)


# p = 1


def test_p1_half():
    G = haar_sample(2, 1, 100, 0)
    h = gaussian_z(2, 1, 1.0)
    rep = verify_p1_monotonicity(0.5 * h, h, G, SPEC, grid=SMALL_GRID)
    assert rep.verdict == "holds"
    assert rep.quantities["margins"]["limit"] == pytest.approx(0.5 * rep.quantities["norm1_h"], rel=1e-12)
    assert rep.quantities["norm1_h"] == pytest.approx(2 / math.sqrt(math.pi), rel=1e-10)


def test_p1_equal():
    G = haar_sample(2, 1, 100, 0)
    h = gaussian_z(2, 1, 1.0)
    rep = verify_p1_monotonicity(h, h, G, SPEC, grid=SMALL_GRID)
    assert rep.verdict == "holds"
    assert all(abs(m) <= 1e-12 for m in rep.quantities["margins"].values())


def test_p1_precondition_and_errors():
    G = haar_sample(2, 1, 100, 0)
    h = gaussian_z(2, 1, 1.0)
    rep = verify_p1_monotonicity(2.0 * h, h, G, SPEC, grid=SMALL_GRID)
    assert rep.verdict == "inconclusive" and rep.status == "precondition_failed"
    assert len(rep.quantities["violating_point"]) == 2
    with pytest.raises(ParameterError):
        verify_p1_monotonicity(h, h, G, SPEC, eps_grid=[0.1, 1.0])


def test_p1_sweep_monotone():
    G = haar_sample(3, 1, 200, 42)
    h = gaussian_z(3, 1, 1.0)
    g = gaussian_z(3, 1, 2.0, amplitude=0.9)
    rep = verify_p1_monotonicity(g, h, G, SPEC, seed=42)
    assert rep.verdict == "holds" and rep.quantities["sweep_monotone"]
    assert "eps_sweep" in rep.profiles


# affirmative chain


def test_chain_tight_and_doubled():
    G = haar_sample(2, 1, 100, 1)
    phi = gaussian_field(2, 1.0)
    g = gaussian_admissible(2, 1, 2.0, 1.0, math.sqrt(math.pi)).h
    tight = verify_affirmative_chain(phi, g, 2.0, G, SPEC, SMALL_GRID)
    assert tight.verdict == "holds"
    assert max(tight.quantities["equality_residuals"].values()) <= 1e-5
    assert abs(tight.quantities["margins"]["conclusion"]) <= 1e-8
    double = verify_affirmative_chain(phi, 2.0 * g, 2.0, G, SPEC, SMALL_GRID)
    assert double.verdict == "holds"
    q = double.quantities
    assert q["margins"]["conclusion"] == pytest.approx(q["norm_g"], rel=1e-10)


def test_chain_rejections():
    G = haar_sample(2, 1, 50, 1)
    h = gaussian_z(2, 1, 1.0)
    atomic = verify_affirmative_chain(DiscreteMeasure([[0.0, 0.0]], [1.0]), h, 2.0, G, SPEC, SMALL_GRID)
    assert atomic.status == "inadmissible"
    big = verify_affirmative_chain(gaussian_field(2, 1.0, amplitude=5.0), h, 2.0, G, SPEC, SMALL_GRID)
    assert big.status == "precondition_failed" and big.verdict == "inconclusive"


def test_chain_two_gaussians():
    G = haar_sample(3, 1, 200, 7)
    wit = sum_fields(gaussian_field(3, 1.0, center=[0.3, 0, 0]), gaussian_field(3, 2.0, center=[-0.2, 0.4, 0]))
    from grassradon.analysis import admissible_from_density

    g = admissible_from_density(wit, 2.0, 1, SPEC).h
    h = g + bump_z(3, 1, 1.0, 0.3, shift=[0, 0, 0.5])
    rep = verify_affirmative_chain(wit, h, 2.0, G, SPEC, seed=7)
    assert rep.verdict == "holds", rep.status
    assert len(rep.quantities["links"]) == 6


# counterexample


@pytest.fixture(scope="module")
def counterexample_report():
    phi = sum_fields(gaussian_field(2, 1.0), gaussian_field(2, 4.0), coefficients=[1.0, -1.8])
    return search_counterexample(phi, 2.0, grassmann_grid(2, 1, 512), PlaneQuadratureSpec(budget=64), seed=3)


def test_counterexample_found(counterexample_report):
    rep = counterexample_report
    assert rep.status == "found" and rep.verdict == "holds"
    q = rep.quantities
    assert q["gap"] >= 1e-3 and q["norm_g"] > q["norm_h"]
    assert q["min_g_dense"] >= 0 and q["min_eta_dense"] > 0 and q["min_eta_far_scaled"] > 0
    assert q["epsilon"] > 0
    assert len(rep.artifacts["certificate"]["atoms"]) == q["active_atoms"]


def test_counterexample_trivial_outcomes():
    G = grassmann_grid(2, 1, 64)
    pos = search_counterexample(gaussian_field(2, 1.0), 2.0, G)
    assert pos.status == "precondition_failed" and pos.verdict == "inconclusive"
    phi = sum_fields(gaussian_field(2, 1.0), gaussian_field(2, 4.0), coefficients=[1.0, -1.8])
    empty = search_counterexample(phi, 2.0, G, cfg=SearchConfig(max_atoms=0))
    assert empty.status == "not_found" and empty.verdict == "inconclusive"
    with pytest.raises(ParameterError):
        search_counterexample(phi, 1.0, G)


# slicing


def test_general_slicing_ratio_one():
    G = haar_sample(2, 1, 100, 0)
    f = gaussian_admissible(2, 1, 2.0, 1.0)
    rep = verify_general_slicing(f.h, f.h, bump_z(2, 1, 1.5), 2.0, [f], G, SPEC, SMALL_GRID)
    assert rep.verdict == "holds"
    assert rep.quantities["lhs"] == pytest.approx(1.0, rel=1e-12)
    assert rep.quantities["E"] >= 1 - 1e-12


def test_general_slicing_undefined_ratio():
    G = haar_sample(2, 1, 50, 0)
    g = gaussian_z(2, 1, 1.0)
    rep = verify_general_slicing(g, 0.0 * g, bump_z(2, 1, 1.0), 2.0, [gaussian_admissible(2, 1, 2.0, 1.0)], G,
                                 SPEC, SMALL_GRID)
    assert rep.status == "undefined_ratio" and rep.verdict == "inconclusive"


def test_pinched_band():
    G = haar_sample(3, 1, 20, 0)
    g = pinched_gaussian(3, 1, 1.0, 1.0, 2.0, seed=5)
    Z = np.random.default_rng(0).normal(size=(20, 30, 1))
    base = np.exp(-np.sum(Z * Z, axis=-1))
    v = g.values(G.perp, Z)
    assert np.all(v >= base - 1e-15) and np.all(v <= 2 * base + 1e-15)
    with pytest.raises(ParameterError):
        pinched_gaussian(3, 1, 1.0, 2.0, 1.0, seed=0)


@pytest.mark.parametrize("beta,gamma,p,factor", [(1.0, 2.0, 2.0, 2.0), (1.0, 1.1, 4.0, 1.331), (1.5, 1.5, 3.0, 1.0)])
def test_pinched_examples(beta, gamma, p, factor):
    G = haar_sample(2, 1, 100, 5)
    rep = verify_pinched_gaussian_slicing(1.0, beta, gamma, bump_z(2, 1, 1.5), p, G, SPEC, SMALL_GRID, seed=5)
    assert rep.verdict == "holds"
    assert rep.quantities["factor"] == pytest.approx(factor, rel=1e-12)
    assert rep.quantities["D"] <= gamma / beta + 1e-9
    with pytest.raises(ParameterError):
        verify_pinched_gaussian_slicing(1.0, 2.0, 1.0, bump_z(2, 1, 1.5), p, G)


def test_general_slicing_with_family():
    G = haar_sample(2, 1, 100, 1)
    g = gaussian_z(2, 1, 1.0, amplitude=0.8)
    fam = gaussian_family(2, 1, 2.0, 2.0 ** np.arange(-3, 4), [1.0, 1.5, 2.0])
    rep = verify_general_slicing(g, constant_function(2, 1), bump_z(2, 1, 1.5), 2.0, fam, G, SPEC, SMALL_GRID)
    assert rep.verdict == "holds"
    assert rep.quantities["D"] >= 1.0


# Solmon


def test_solmon_gaussian_n2():
    rep = solmon_ratio(gaussian_z(2, 1, 1.0), 2.0, haar_sample(2, 1, 50, 0), PlaneQuadratureSpec(budget=64))
    assert rep.verdict == "holds" and rep.quantities["q"] == 4.0
    assert math.isfinite(rep.quantities["ratio"]) and rep.quantities["relative_change"] <= 0.02


def test_solmon_bump_n3():
    rep = solmon_ratio(bump_z(3, 1, 1.0), 3.0, haar_sample(3, 1, 50, 0), PlaneQuadratureSpec(budget=64, panels=4))
    assert rep.quantities["q"] == 9.0
    assert rep.verdict == "holds" and rep.quantities["relative_change"] <= 0.02


def test_solmon_zero_and_errors():
    G = haar_sample(2, 1, 20, 0)
    rep = solmon_ratio(gaussian_z(2, 1, 1.0, amplitude=0.0), 2.0, G)
    assert rep.status == "undefined" and rep.quantities["ratio"] is None
    with pytest.raises(ParameterError):
        solmon_ratio(gaussian_z(2, 1, 1.0), 1.0, G)


def test_solmon_node_route_agrees():
    # shifted (non-radial) input goes through the node sum
    G = grassmann_grid(2, 1, 4096)
    g = gaussian_z(2, 1, 1.0, shift=[1e-9, 0.0])
    a = solmon_ratio(g, 2.0, G, PlaneQuadratureSpec(budget=64), radial_nodes=128, directions=64)
    b = solmon_ratio(gaussian_z(2, 1, 1.0), 2.0, G, PlaneQuadratureSpec(budget=64), radial_nodes=128)
    assert a.quantities["route"] == "nodes"
    assert a.quantities["ratio"] == pytest.approx(b.quantities["ratio"], rel=1e-3)


# profiles


def test_cap_profile():
    rep = cap_measure_profile(3, 2)
    assert rep.verdict == "holds"
    assert abs(rep.quantities["order_slope"]) < 0.05


def test_dual_decay_report():
    rep = dual_decay(bump_z(2, 1, 1.0), None, np.geomspace(4, 40, 6))
    assert rep.verdict == "holds"
    assert rep.quantities["margins"]["sup_bound"] >= 0


def test_experiment_catalogue():
    assert "verify_p1_monotonicity" in EXPERIMENTS and "search_counterexample" in EXPERIMENTS
    assert list(EXPERIMENTS) == sorted(EXPERIMENTS)


def test_lp_norm_consistent_with_report():
    G = haar_sample(2, 1, 100, 0)
    h = gaussian_z(2, 1, 1.0)
    rep = verify_p1_monotonicity(0.5 * h, h, G, SPEC, grid=SMALL_GRID)
    assert rep.quantities["norm1_h"] == pytest.approx(grassmann_lp_norm(h, 1.0, None, G, SPEC), rel=1e-10)
