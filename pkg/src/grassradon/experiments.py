"""End-to-end numerical harnesses for comparison and slicing inequalities.

Every harness returns an :class:`ExperimentReport`.  Asserted inequalities
are recorded as margins (``larger side - smaller side``); a report holds
when every margin is ``>= -tol`` and fails otherwise.  Unverifiable
preconditions, search failures and undefined ratios give ``inconclusive``.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .analysis import (
    admissible_distance,
    admissible_from_density,
    cap_measure,
    decay_exponent,
    gaussian_admissible,
)
from .errors import InadmissibleError, ParameterError, UnsupportedInputError
from .fields import GrassmannFunction, SpatialField, bump_profile, constant_function, gaussian_cutoff
from .geometry import GrassmannQuadrature, check_dims, grassmann_mass, sphere_rule, sphere_volume
from .quadrature import gl_rule, tensor_rule
from .transforms import (
    PlaneQuadratureSpec,
    dual_radon,
    dual_radon_radial,
    grassmann_integral,
    grassmann_lp_norm,
    node_integrals,
    pairing,
    radon_function,
    spatial_integral,
)

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# reports


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


@dataclass
class ExperimentReport:
    """Outcome of one harness run.

    ``profiles`` maps a name to ``(abscissa, values)`` pairs for plotting;
    ``artifacts`` holds certificates.  ``runtime_ms`` is informational and
    left out of :meth:`to_json` so reports are byte-reproducible.
    """

    name: str
    inputs: dict
    quantities: dict
    verdict: str
    tolerances: dict
    seed: int
    runtime_ms: int = 0
    status: str = "ok"
    profiles: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in ("holds", "fails", "inconclusive"):
            raise ParameterError(f"unknown verdict {self.verdict!r}")

    def to_dict(self, include_runtime: bool = False) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "inputs": self.inputs,
            "quantities": self.quantities,
            "verdict": self.verdict,
            "status": self.status,
            "tolerances": self.tolerances,
            "seed": self.seed,
            "profiles": {k: {"x": list(x), "y": list(y)} for k, (x, y) in self.profiles.items()},
            "artifacts": self.artifacts,
        }
        if include_runtime:
            d["runtime_ms"] = self.runtime_ms
        return _jsonable(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _verdict(margins: dict, tol: float) -> str:
    return "holds" if all(m >= -tol for m in margins.values()) else "fails"


def _finish(report: ExperimentReport, t0: float) -> ExperimentReport:
    report.runtime_ms = int(round(1000 * (time.perf_counter() - t0)))
    return report


# ---------------------------------------------------------------------------
# check grids


@dataclass(frozen=True)
class CheckGrid:
    """Points ``r theta`` for pointwise hypotheses: the origin plus ``radii x directions``.

    Radii grow quadratically up to ``r_max`` so both the core and the tail
    are sampled.
    """

    radii: int = 16
    directions: int = 32
    r_max: float = 12.0

    def points(self, n: int, seed: int) -> np.ndarray:
        if self.radii < 1 or self.directions < 1 or not self.r_max > 0:
            raise ParameterError("check grid needs positive sizes")
        rng = np.random.default_rng(seed)
        th = rng.standard_normal((self.directions, n))
        th /= np.linalg.norm(th, axis=1, keepdims=True)
        r = self.r_max * (np.arange(1, self.radii + 1) / self.radii) ** 2
        pts = (r[:, None, None] * th[None]).reshape(-1, n)
        return np.vstack([np.zeros((1, n)), pts])


def dual_domination(g: GrassmannFunction, h: GrassmannFunction, X: np.ndarray, Gquad: GrassmannQuadrature,
                    rel_tol: float = 1e-10) -> tuple[bool, float, np.ndarray]:
    """Whether ``R* g <= R* h`` at all rows of ``X``; also the worst gap and its point."""
    dg = dual_radon(g, X, Gquad)
    dh = dual_radon(h, X, Gquad)
    gap = dh - dg
    i = int(np.argmin(gap))
    scale = max(1.0, float(np.max(np.abs(dh))))
    return bool(gap[i] >= -rel_tol * scale), float(gap[i]), X[i]


def _inputs(Gquad: GrassmannQuadrature, spec: PlaneQuadratureSpec, **extra) -> dict:
    d = {
        "n": Gquad.n,
        "k": Gquad.k,
        "grassmann_nodes": len(Gquad),
        "grassmann_kind": Gquad.kind,
        "plane_scheme": spec.scheme,
        "plane_budget": spec.budget,
        "plane_panels": spec.panels,
    }
    d.update(extra)
    return d


# ---------------------------------------------------------------------------
# p = 1 monotonicity


def verify_p1_monotonicity(g: GrassmannFunction, h: GrassmannFunction, Gquad: GrassmannQuadrature,
                           spec: PlaneQuadratureSpec = PlaneQuadratureSpec(), eps_grid=(1.0, 0.1, 0.01, 0.001),
                           grid: CheckGrid = CheckGrid(), tol: float = 1e-8, seed: int = 0) -> ExperimentReport:
    """``R* g <= R* h`` implies ``|g|_1 <= |h|_1``, through the Gaussian-mollified pairings.

    For each ``eps`` the difference ``int int (h - g) exp(-eps |z|^2)`` is
    reported; these tend to ``|h|_1 - |g|_1`` as ``eps -> 0``.
    """
    t0 = time.perf_counter()
    eps = np.asarray(eps_grid, dtype=float)
    if eps.ndim != 1 or len(eps) == 0 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ParameterError("eps_grid must be a decreasing list of positive numbers")
    R = spec.truncation_radius or max(g.extent, h.extent)
    if not math.isfinite(R):
        raise UnsupportedInputError("L1 norms need finite extent in z; set a truncation radius")
    inputs = _inputs(Gquad, spec, g=g.label, h=h.label, eps_grid=eps.tolist(), grid_radii=grid.radii,
                     grid_directions=grid.directions, grid_r_max=grid.r_max)
    tols = {"margin": tol}
    X = grid.points(g.n, seed)
    ok, gap, where = dual_domination(g, h, X, Gquad)
    if not ok:
        return _finish(ExperimentReport("verify_p1_monotonicity", inputs,
                                        {"worst_dual_gap": gap, "violating_point": where.tolist()},
                                        "inconclusive", tols, seed, status="precondition_failed"), t0)
    gv, hv = g.values, h.values
    diffs = []
    for e in eps:
        val, _ = grassmann_integral(
            lambda P, Z, e=e: (hv(P, Z) - gv(P, Z)) * np.exp(-e * np.sum(Z * Z, axis=-1)), g.k, R, Gquad, spec
        )
        diffs.append(val)
    n1 = grassmann_integral(lambda P, Z: np.abs(gv(P, Z)), g.k, R, Gquad, spec)[0]
    n2 = grassmann_integral(lambda P, Z: np.abs(hv(P, Z)), g.k, R, Gquad, spec)[0]
    margins = {f"mollified_eps_{e:g}": d for e, d in zip(eps, diffs)}
    margins["limit"] = n2 - n1
    steps = np.diff(diffs)
    quantities = {
        "norm1_g": n1,
        "norm1_h": n2,
        "worst_dual_gap": gap,
        "margins": margins,
        "sweep_monotone": bool(np.all(steps >= -tol) or np.all(steps <= tol)),
    }
    return _finish(ExperimentReport("verify_p1_monotonicity", inputs, quantities, _verdict(margins, tol), tols,
                                    seed, profiles={"eps_sweep": (eps.tolist(), diffs)}), t0)


# ---------------------------------------------------------------------------
# affirmative chain


def verify_affirmative_chain(witness, h: GrassmannFunction, p: float, Gquad: GrassmannQuadrature,
                             spec: PlaneQuadratureSpec = PlaneQuadratureSpec(), grid: CheckGrid = CheckGrid(),
                             spatial_nodes: int = 64, spatial_panels: int = 4, link_tol: float = 1e-5, tol: float = 1e-6,
                             seed: int = 0) -> ExperimentReport:
    """Evaluate each link of the comparison chain for an admissible ``g``.

    Links::

        L0 = |g|_p^p
        L1 = <g^{p-1}, g>            (= L0)
        L2 = int witness R*g dx      (= L1)
        L3 = int witness R*h dx      (>= L2)
        L4 = <g^{p-1}, h>            (= L3)
        L5 = |g|_p^{p-1} |h|_p       (>= L4)
    """
    t0 = time.perf_counter()
    n, k = Gquad.n, Gquad.k
    label = witness.label if isinstance(witness, SpatialField) else "atomic"
    inputs = _inputs(Gquad, spec, witness=label, h=h.label, p=p, spatial_nodes=spatial_nodes, spatial_panels=spatial_panels,
                     grid_radii=grid.radii, grid_directions=grid.directions, grid_r_max=grid.r_max)
    tols = {"equality_links": link_tol, "margin": tol}
    try:
        adm = admissible_from_density(witness, p, k, spec)
    except InadmissibleError as exc:
        return _finish(ExperimentReport("verify_affirmative_chain", inputs, {"reason": str(exc)}, "inconclusive",
                                        tols, seed, status="inadmissible"), t0)
    g = adm.h
    X = grid.points(n, seed)
    ok, gap, where = dual_domination(g, h, X, Gquad)
    if not ok:
        return _finish(ExperimentReport("verify_affirmative_chain", inputs,
                                        {"worst_dual_gap": gap, "violating_point": where.tolist()},
                                        "inconclusive", tols, seed, status="precondition_failed"), t0)
    gp1 = g.power(p - 1)
    ng = grassmann_lp_norm(g, p, None, Gquad, spec)
    nh = grassmann_lp_norm(h, p, None, Gquad, spec)
    L0 = ng**p
    L1 = pairing(gp1, g, Gquad, spec)
    ctr, rad = witness.center, witness.extent
    L2 = spatial_integral(lambda x: witness(x) * dual_radon(g, x, Gquad), n, ctr, rad, spatial_nodes, spatial_panels)
    L3 = spatial_integral(lambda x: witness(x) * dual_radon(h, x, Gquad), n, ctr, rad, spatial_nodes, spatial_panels)
    L4 = pairing(gp1, h, Gquad, spec)
    L5 = ng ** (p - 1) * nh
    links = [L0, L1, L2, L3, L4, L5]

    def rel(a, b):
        return abs(a - b) / max(abs(a), abs(b), 1e-300)

    residuals = {"L0=L1": rel(L0, L1), "L1=L2": rel(L1, L2), "L3=L4": rel(L3, L4)}
    margins = {"L2<=L3": L3 - L2, "L4<=L5": L5 - L4, "conclusion": nh - ng}
    bad = [name for name, r in residuals.items() if r > link_tol]
    quantities = {
        "links": {f"L{i}": v for i, v in enumerate(links)},
        "equality_residuals": residuals,
        "margins": margins,
        "norm_g": ng,
        "norm_h": nh,
        "worst_dual_gap": gap,
    }
    if bad:
        return _finish(ExperimentReport("verify_affirmative_chain", inputs, quantities, "fails", tols, seed,
                                        status="link_failed:" + ",".join(bad)), t0)
    return _finish(ExperimentReport("verify_affirmative_chain", inputs, quantities, _verdict(margins, tol), tols,
                                    seed), t0)


# ---------------------------------------------------------------------------
# counterexample search


@dataclass(frozen=True)
class SearchConfig:
    """Knobs of the sign-program search.

    Atoms are ``bump((z - P x_i) / rho)`` with centers on a lattice of
    spacing ``atom_spacing`` inside the ball of radius ``atom_reach`` and
    widths ``widths``; ``max_atoms`` keeps the atoms closest to the origin.
    Constraints ``R* f >= tau K_1`` are imposed on a ``window_points``-per-axis
    grid of ``[-window, window]^n`` and verified on a grid ``dense_factor``
    times denser plus a far-field sweep.
    """

    atom_spacing: float = 0.25
    atom_reach: float = 1.5
    widths: tuple = (0.25, 0.5, 1.0)
    max_atoms: int | None = None
    window: float = 4.0
    window_points: int = 41
    dense_factor: int = 4
    tau: float = 0.02
    safety: float = 0.5
    far_radius: float = 1000.0
    far_radii: int = 24
    far_directions: int = 64
    z_nodes: int = 256
    z_panels: int = 32
    spatial_nodes: int = 64
    spatial_panels: int = 4
    gap_tol: float = 1e-3
    kernel_points: int = 8001

    def __post_init__(self):
        if self.atom_spacing <= 0 or self.atom_reach < 0 or not self.widths or min(self.widths) <= 0:
            raise ParameterError("invalid atom lattice")
        if self.max_atoms is not None and self.max_atoms < 0:
            raise ParameterError("max_atoms must be >= 0")
        if self.window <= 0 or self.window_points < 2 or self.dense_factor < 1:
            raise ParameterError("invalid window grid")
        if not 0 < self.safety < 1 or self.tau <= 0:
            raise ParameterError("safety must lie in (0, 1) and tau must be positive")


class _KernelTable:
    """``r -> R* bump(|z| / rho)`` at ``|x| = r`` by interpolation of the exact radial integral."""

    def __init__(self, n, k, rho, r_near, r_far, points):
        near = np.linspace(0.0, r_near, points)
        far = np.geomspace(r_near, r_far, max(64, points // 4))[1:]
        self.r = np.concatenate([near, far])
        self.v = dual_radon_radial(bump_profile_scaled(rho), self.r, n, k, support=rho, nodes=96, panels=4)

    def __call__(self, r):
        return np.interp(r, self.r, self.v)


def bump_profile_scaled(rho):
    return lambda r: bump_profile(np.asarray(r) / rho)


def _lattice(n: int, spacing: float, reach: float) -> np.ndarray:
    m = int(math.floor(reach / spacing + 1e-9))
    ax = spacing * np.arange(-m, m + 1)
    pts = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1).reshape(-1, n)
    keep = np.sum(pts * pts, axis=1) <= reach * reach + 1e-9
    pts = pts[keep]
    order = np.lexsort(tuple(pts.T[::-1]) + (np.sum(pts * pts, axis=1),))
    return pts[order]


def _box_grid(n: int, half: float, per_axis: int) -> np.ndarray:
    ax = np.linspace(-half, half, per_axis)
    return np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1).reshape(-1, n)


def search_counterexample(phi: SpatialField, p: float, Gquad: GrassmannQuadrature,
                          spec: PlaneQuadratureSpec = PlaneQuadratureSpec(), cfg: SearchConfig = SearchConfig(),
                          seed: int = 0) -> ExperimentReport:
    """Look for ``g = h - eps f >= 0`` with ``R* g <= R* h`` but ``|g|_p > |h|_p``.

    ``h = (R phi)^{1/(p-1)}`` for a signed ``phi``.  ``f = sum c_i a_i`` over
    bump atoms; since ``R* a_i`` is an exact radial kernel ``K_rho(|x - x_i|)``
    the sign program on ``eta = R* f`` is a linear program:

    * minimize ``sum c_i <R phi, a_i>`` (first-order change of ``|g|_p^p``),
    * ``eta >= tau K_1(|x|)`` on the window grid,
    * leading far-field coefficient ``sum c_i rho_i^k >= tau``,
    * ``|c|_1 <= 1``.

    Norms use ``Gquad`` and a composite Gauss-Legendre rule in ``z``.
    """
    t0 = time.perf_counter()
    n, k = Gquad.n, Gquad.k
    if phi.n != n:
        raise ParameterError("phi and quadrature live in different dimensions")
    if not p > 1:
        raise ParameterError("need p > 1")
    inputs = _inputs(Gquad, spec, phi=phi.label, p=p, search={
        key: (list(v) if isinstance(v, tuple) else v) for key, v in cfg.__dict__.items()})
    tols = {"gap": cfg.gap_tol, "tau": cfg.tau}

    def report(status, quantities, verdict="inconclusive", artifacts=None):
        return _finish(ExperimentReport("search_counterexample", inputs, quantities, verdict, tols, seed,
                                        status=status, artifacts=artifacts or {}), t0)

    W = _box_grid(n, cfg.window, cfg.window_points)
    phiW = phi(W)
    neg = phiW < 0
    if not np.any(neg):
        return report("precondition_failed", {"reason": "phi has no negative region on the window"})

    Rphi_fn = radon_function(phi, k, spec)
    zr = Rphi_fn.extent
    z, zw = gl_rule(-zr, zr, cfg.z_nodes, cfg.z_panels) if k == 1 else tensor_rule(k, zr, cfg.z_nodes // 8, 4)
    z = z.reshape(-1, k) if k == 1 else z
    Z = np.broadcast_to(z, (len(Gquad),) + z.shape)
    Rphi = Rphi_fn.values(Gquad.perp, Z)
    if Rphi.min() < -1e-12 * max(1.0, np.abs(Rphi).max()):
        return report("precondition_failed", {"reason": "R phi takes negative values, so h is not real",
                                              "min_R_phi": float(Rphi.min())})
    Rphi = np.clip(Rphi, 0.0, None)
    H = Rphi ** (1.0 / (p - 1))

    centers = _lattice(n, cfg.atom_spacing, cfg.atom_reach)
    atoms = [(c, rho) for rho in cfg.widths for c in centers]
    if cfg.max_atoms is not None:
        order = sorted(range(len(atoms)), key=lambda i: (float(np.sum(atoms[i][0] ** 2)), i))
        atoms = [atoms[i] for i in sorted(order[: cfg.max_atoms])]
    if not atoms:
        return report("not_found", {"reason": "empty atom set", "atoms": 0})
    X = np.array([a[0] for a in atoms])
    rho = np.array([a[1] for a in atoms])

    r_near = 2 * cfg.window * math.sqrt(n) + cfg.atom_reach + 1.0
    tables = {r: _KernelTable(n, k, r, r_near, cfg.far_radius * 2, cfg.kernel_points) for r in sorted(set(cfg.widths) | {1.0})}

    def kernel_matrix(P, idx=None):
        idx = range(len(atoms)) if idx is None else idx
        return np.stack([tables[rho[i]](np.linalg.norm(P - X[i], axis=1)) for i in idx], axis=1)

    # objective: J_i = <R phi, a_i> = int phi(x) K_i(x) dx
    sp, sw = tensor_rule(n, phi.extent, cfg.spatial_nodes, cfg.spatial_panels, center=phi.center)
    J = (sw * phi(sp)) @ kernel_matrix(sp)
    Aeta = kernel_matrix(W)
    ref = tables[1.0](np.linalg.norm(W, axis=1))
    m = len(atoms)
    A_ub = np.vstack([
        -np.hstack([Aeta, -Aeta]),
        -np.hstack([rho**k, -(rho**k)])[None],
        np.ones((1, 2 * m)),
    ])
    b_ub = np.concatenate([-cfg.tau * ref, [-cfg.tau], [1.0]])
    lp = linprog(np.concatenate([J, -J]), A_ub=A_ub, b_ub=b_ub, bounds=(0, None), method="highs")
    if lp.status != 0:
        return report("not_found", {"reason": f"sign program infeasible or failed: {lp.message}", "atoms": m})
    c = lp.x[:m] - lp.x[m:]
    c[np.abs(c) < 1e-12] = 0.0
    active = np.flatnonzero(c)
    if lp.fun >= 0 or len(active) == 0:
        return report("not_found", {"reason": "no descent direction among the atoms", "objective": lp.fun,
                                    "atoms": m})

    # dense and far-field positivity of eta
    D = _box_grid(n, cfg.window, (cfg.window_points - 1) * cfg.dense_factor + 1)
    eta_dense = kernel_matrix(D, active) @ c[active]
    rng = np.random.default_rng(seed)
    th = rng.standard_normal((cfg.far_directions, n))
    th /= np.linalg.norm(th, axis=1, keepdims=True)
    fr = np.geomspace(cfg.window, cfg.far_radius, cfg.far_radii)
    F_pts = (fr[:, None, None] * th[None]).reshape(-1, n)
    eta_far = kernel_matrix(F_pts, active) @ c[active]
    eta_far_scaled = eta_far * np.repeat(fr, cfg.far_directions) ** k

    # g = h - eps f on the Grassmann rule
    proj = np.einsum("nik,ai->nak", Gquad.perp, X[active])  # (N, A, k)
    Fv = np.zeros(H.shape)
    for j, i in enumerate(active):
        d = np.linalg.norm(Z - proj[:, j][:, None, :], axis=-1)
        Fv += c[i] * bump_profile(d / rho[i])
    pos = Fv > 1e-12 * np.abs(Fv).max()
    eps = cfg.safety * float(np.min(H[pos] / Fv[pos]))
    G = H - eps * Fv
    wz = Gquad.weights[:, None] * zw[None, :]
    nh = float(np.sum(wz * H**p) ** (1 / p))
    ng = float(np.sum(wz * np.abs(G) ** p) ** (1 / p))

    # independent g >= 0 check on a 4x denser z rule
    z4, _ = (gl_rule(-zr, zr, 4 * cfg.z_nodes, 4 * cfg.z_panels) if k == 1
             else tensor_rule(k, zr, cfg.z_nodes // 2, 16))
    z4 = z4.reshape(-1, k) if k == 1 else z4
    Z4 = np.broadcast_to(z4, (len(Gquad),) + z4.shape)
    G4 = np.clip(Rphi_fn.values(Gquad.perp, Z4), 0.0, None) ** (1.0 / (p - 1))
    for j, i in enumerate(active):
        d = np.linalg.norm(Z4 - proj[:, j][:, None, :], axis=-1)
        G4 -= eps * c[i] * bump_profile(d / rho[i])

    # cross-check of eta through the Grassmann node sum
    f_fn = _atom_sum(n, k, X[active], rho[active], c[active])
    sub = D[:: max(1, len(D) // 400)]
    eta_nodes = dual_radon(f_fn, sub, Gquad)
    eta_exact = kernel_matrix(sub, active) @ c[active]

    quantities = {
        "atoms": m,
        "active_atoms": len(active),
        "objective": float(lp.fun),
        "epsilon": eps,
        "norm_h": nh,
        "norm_g": ng,
        "gap": ng - nh,
        "min_g_dense": float(G4.min()),
        "min_eta_window": float((Aeta @ c).min()),
        "min_eta_dense": float(eta_dense.min()),
        "min_eta_far_scaled": float(eta_far_scaled.min()),
        "eta_node_sum_max_deviation": float(np.max(np.abs(eta_nodes - eta_exact))),
        "negative_region_points": int(neg.sum()),
    }
    certificate = {
        "atoms": [[*X[i].tolist(), float(rho[i]), float(c[i])] for i in active],
        "epsilon": eps,
        "p": p,
    }
    checks = {
        "g_nonnegative": G4.min() >= 0,
        "dual_order_dense": eta_dense.min() > 0,
        "dual_order_far": eta_far.min() > 0,
        "norm_gap": ng - nh >= cfg.gap_tol,
    }
    quantities["checks"] = checks
    if not all(checks.values()):
        failed = ",".join(k_ for k_, v in checks.items() if not v)
        return report("certificate_rejected:" + failed, quantities, artifacts={"certificate": certificate})
    return report("found", quantities, "holds", {"certificate": certificate})


def _atom_sum(n, k, centers, rho, coef) -> GrassmannFunction:
    """``f(H, z) = sum_i c_i bump(|z - P x_i| / rho_i)``."""

    def ev(P, Z):
        out = np.zeros(Z.shape[:2])
        proj = np.einsum("nik,ai->nak", P, centers)
        for j in range(len(coef)):
            d = np.linalg.norm(Z - proj[:, j][:, None, :], axis=-1)
            out += coef[j] * bump_profile(d / rho[j])
        return out

    reach = float(np.max(np.linalg.norm(centers, axis=1) + rho))
    return GrassmannFunction(ev, n, k, reach, reach, False, None, bool(np.all(coef >= 0)), "atoms")


# ---------------------------------------------------------------------------
# slicing inequalities


def _slicing_core(g, h, w, p, family, Gquad, spec, grid, seed):
    gw, hw = g * w, h * w
    X = grid.points(g.n, seed)
    dg = dual_radon(gw, X, Gquad)
    dh = dual_radon(hw, X, Gquad)
    live = dh > 0
    if np.any((~live) & (dg > 0)):
        i = int(np.flatnonzero((~live) & (dg > 0))[0])
        return None, {"reason": "R*[hw] vanishes where R*[gw] does not", "point": X[i].tolist()}
    if not np.any(live):
        return None, {"reason": "R*[hw] vanishes on the whole grid"}
    E = float(np.max(dg[live] / dh[live]))
    ng = grassmann_lp_norm(g, p, w, Gquad, spec)
    nh = grassmann_lp_norm(h, p, w, Gquad, spec)
    dist = admissible_distance(g, p, w, family, Gquad, spec)
    return {"E": E, "norm_g": ng, "norm_h": nh, "D": dist.value, "D_params": dist.params,
            "lhs": ng / nh, "rhs": dist.value ** (p - 1) * E}, None


def verify_general_slicing(g: GrassmannFunction, h: GrassmannFunction, w: GrassmannFunction, p: float, family,
                           Gquad: GrassmannQuadrature, spec: PlaneQuadratureSpec = PlaneQuadratureSpec(),
                           grid: CheckGrid = CheckGrid(), tol: float = 1e-6, seed: int = 0) -> ExperimentReport:
    """``|g|_{p,w} / |h|_{p,w} <= D^{p-1} sup R*[gw] / R*[hw]`` with ``D`` from :func:`admissible_distance`."""
    t0 = time.perf_counter()
    if not p > 1:
        raise ParameterError("need p > 1")
    inputs = _inputs(Gquad, spec, g=g.label, h=h.label, w=w.label, p=p, family_size=len(family),
                     grid_radii=grid.radii, grid_directions=grid.directions, grid_r_max=grid.r_max)
    tols = {"margin": tol}
    q, why = _slicing_core(g, h, w, p, family, Gquad, spec, grid, seed)
    if q is None:
        return _finish(ExperimentReport("verify_general_slicing", inputs, why, "inconclusive", tols, seed,
                                        status="undefined_ratio"), t0)
    margins = {"slicing": q["rhs"] - q["lhs"]}
    q["margins"] = margins
    return _finish(ExperimentReport("verify_general_slicing", inputs, q, _verdict(margins, tol), tols, seed), t0)


def pinched_gaussian(n: int, k: int, alpha: float, beta: float, gamma: float, seed: int,
                     terms: int = 3) -> GrassmannFunction:
    """Random ``g`` with ``beta e^{-alpha|z|^2} <= g <= gamma e^{-alpha|z|^2}``.

    A positive combination of shifted Gaussians is clipped into the band.
    """
    if not 0 < beta <= gamma or alpha <= 0:
        raise ParameterError("need 0 < beta <= gamma and alpha > 0")
    rng = np.random.default_rng(seed)
    amps = rng.uniform(0.5, 1.5, terms) * (beta + gamma) / (2 * terms)
    rates = alpha * rng.uniform(0.5, 2.0, terms)
    shifts = rng.normal(0.0, 0.5, (terms, n))

    def ev(P, Z):
        base = np.exp(-alpha * np.sum(Z * Z, axis=-1))
        raw = np.zeros(Z.shape[:2])
        for a, r, s in zip(amps, rates, shifts):
            d = Z - np.einsum("nik,i->nk", P, s)[:, None, :]
            raw += a * np.exp(-r * np.sum(d * d, axis=-1))
        return np.clip(raw, beta * base, gamma * base)

    return GrassmannFunction(ev, n, k, gaussian_cutoff(alpha), math.inf, False, None, True,
                             f"pinched(alpha={alpha:g},beta={beta:g},gamma={gamma:g},seed={seed})")


def verify_pinched_gaussian_slicing(alpha: float, beta: float, gamma: float, w: GrassmannFunction, p: float,
                                    Gquad: GrassmannQuadrature, spec: PlaneQuadratureSpec = PlaneQuadratureSpec(),
                                    grid: CheckGrid = CheckGrid(), tol: float = 1e-6,
                                    seed: int = 0) -> ExperimentReport:
    """``|g|_{p,w} <= (gamma/beta)^{p-1} sup(R*[gw] / R* w) |w|_1^{1/p}`` for a random pinched ``g``."""
    t0 = time.perf_counter()
    if beta > gamma:
        raise ParameterError(f"need beta <= gamma, got beta={beta}, gamma={gamma}")
    if not p > 1:
        raise ParameterError("need p > 1")
    n, k = Gquad.n, Gquad.k
    g = pinched_gaussian(n, k, alpha, beta, gamma, seed)
    h = constant_function(n, k, 1.0)
    family = [gaussian_admissible(n, k, p, alpha, gamma)]
    inputs = _inputs(Gquad, spec, alpha=alpha, beta=beta, gamma=gamma, w=w.label, p=p,
                     grid_radii=grid.radii, grid_directions=grid.directions, grid_r_max=grid.r_max)
    tols = {"margin": tol}
    q, why = _slicing_core(g, h, w, p, family, Gquad, spec, grid, seed)
    if q is None:
        return _finish(ExperimentReport("verify_pinched_gaussian_slicing", inputs, why, "inconclusive", tols, seed,
                                        status="undefined_ratio"), t0)
    factor = (gamma / beta) ** (p - 1)
    w1 = grassmann_lp_norm(w, 1.0, None, Gquad, spec)
    bound = factor * q["E"] * w1 ** (1 / p)
    q.update({"factor": factor, "norm1_w": w1, "bound": bound})
    margins = {"pinched": bound - q["norm_g"], "general": q["rhs"] - q["lhs"],
               "distance_vs_factor": gamma / beta - q["D"]}
    q["margins"] = margins
    return _finish(ExperimentReport("verify_pinched_gaussian_slicing", inputs, q, _verdict(margins, tol), tols,
                                    seed), t0)


# ---------------------------------------------------------------------------
# mixed-norm ratio


def solmon_ratio(g: GrassmannFunction, p: float, Gquad: GrassmannQuadrature,
                 spec: PlaneQuadratureSpec = PlaneQuadratureSpec(), radii=(8.0, 16.0), radial_nodes: int = 256,
                 directions: int = 256, stability: float = 0.02, seed: int = 0) -> ExperimentReport:
    """``|R* g|_{L^q(B_T)} / (int |g(H, .)|_{L^p}^2 dnu)^{1/2}`` with ``q = pn/k`` at two radii ``T``.

    Centered radial ``g`` use the exact radial dual transform; others the
    node sum of ``Gquad`` on a polar grid.  Nothing is asserted: the report
    holds when the ratio is finite and stable across the radii.
    """
    t0 = time.perf_counter()
    n, k = g.n, g.k
    check_dims(n, k)
    if not p > 1 or p < 2 * k / n:
        raise ParameterError(f"need p > 1 and p >= 2k/n = {2 * k / n:g}, got {p}")
    q = p * n / k
    radii = sorted(float(r) for r in radii)
    inputs = _inputs(Gquad, spec, g=g.label, p=p, q=q, radii=radii, radial_nodes=radial_nodes)
    tols = {"stability": stability}
    Rz = spec.truncation_radius or g.extent
    per = node_integrals(lambda P, Z: np.abs(g.values(P, Z)) ** p, k, Rz, Gquad, spec)
    core = float(np.sqrt(np.sum(Gquad.weights * np.maximum(per, 0.0) ** (2 / p))))
    radial = g.radial_profile is not None and g.even
    rng = np.random.default_rng(seed)
    lhs = []
    for T in radii:
        r, wr = gl_rule(0.0, T, radial_nodes, max(1, radial_nodes // 16))
        if radial:
            vals = np.abs(dual_radon_radial(g.radial_profile, r, n, k, g.support_radius)) ** q
            tot = sphere_volume(n - 1) * np.dot(wr * r ** (n - 1), vals)
        else:
            th, wth = sphere_rule(n - 1, directions, rng)
            X = (r[:, None, None] * th[None]).reshape(-1, n)
            vals = (np.abs(dual_radon(g, X, Gquad)) ** q).reshape(len(r), len(th))
            tot = np.dot(wr * r ** (n - 1), vals @ wth)
        lhs.append(float(tot ** (1 / q)))
    quantities = {"q": q, "rhs_core": core, "lhs": dict(zip([f"T={T:g}" for T in radii], lhs)),
                  "route": "radial" if radial else "nodes"}
    if core == 0 or lhs[-1] == 0:
        quantities["ratio"] = None
        return _finish(ExperimentReport("solmon_ratio", inputs, quantities, "inconclusive", tols, seed,
                                        status="undefined"), t0)
    ratios = [v / core for v in lhs]
    change = abs(ratios[-1] / ratios[0] - 1)
    quantities.update({"ratio": ratios[-1], "ratios": ratios, "relative_change": change})
    ok = all(math.isfinite(r) for r in ratios) and change <= stability
    return _finish(ExperimentReport("solmon_ratio", inputs, quantities, "holds" if ok else "inconclusive", tols,
                                    seed, status="stable" if ok else "unstable"), t0)


# ---------------------------------------------------------------------------
# profile experiments


def cap_measure_profile(n: int, k: int, ratios=None, seed: int = 0) -> ExperimentReport:
    """Cap measure against the order bounds ``c s^k`` and ``M s^k`` on a ratio grid."""
    t0 = time.perf_counter()
    s = np.asarray(ratios if ratios is not None else np.geomspace(2.0**-6, 1.0, 25), dtype=float)
    res = [cap_measure(n, k, x) for x in s]
    exact = np.array([r.exact for r in res])
    margins = {
        "lower": float(np.min(exact - [r.lower_bound for r in res])),
        "upper": float(np.min([r.upper_bound for r in res] - exact)),
        "monotone": float(np.min(np.diff(exact))) if len(exact) > 1 else 0.0,
    }
    small = s <= 0.5
    slope = float(np.polyfit(np.log(s[small]), np.log(exact[small] / s[small] ** k), 1)[0]) if small.sum() > 1 else None
    q = {"lower_constant": res[0].lower_constant, "upper_constant": res[0].upper_constant,
         "reference_lower_constant": res[0].reference_lower_constant, "total_mass": grassmann_mass(n, k),
         "order_slope": slope, "margins": margins}
    return _finish(ExperimentReport("cap_measure_profile", {"n": n, "k": k, "ratios": s.tolist()}, q,
                                    _verdict(margins, 1e-12), {"margin": 1e-12}, seed,
                                    profiles={"cap_measure": (s.tolist(), exact.tolist())}), t0)


def dual_decay(psi: GrassmannFunction, Gquad: GrassmannQuadrature, radii, directions: int = 32,
               slack: float = 0.15, seed: int = 0) -> ExperimentReport:
    """Decay slope of ``R* psi`` against ``-k``, plus the bound ``|R* psi| <= mass sup|psi|``."""
    t0 = time.perf_counter()
    fit = decay_exponent(psi, Gquad, radii, directions, seed)
    rr = np.asarray(radii, dtype=float)
    sup_psi = float(np.max(np.abs(psi.radial_profile(np.linspace(0, psi.support_radius, 2001))))) \
        if psi.radial_profile is not None else None
    margins = {"slope": -psi.k + slack - fit.slope}
    if sup_psi is not None:
        margins["sup_bound"] = grassmann_mass(psi.n, psi.k) * sup_psi - float(fit.values.max())
    q = {"slope": fit.slope, "intercept": fit.intercept, "margins": margins}
    inputs = {"n": psi.n, "k": psi.k, "psi": psi.label, "radii": rr.tolist(), "directions": directions,
              "grassmann_nodes": len(Gquad) if Gquad is not None else 0}
    return _finish(ExperimentReport("dual_decay", inputs, q, _verdict(margins, 0.0), {"slack": slack}, seed,
                                    profiles={"decay": (rr.tolist(), fit.values.tolist())}), t0)


EXPERIMENTS = {
    "cap_measure_profile": "cap measure of planes near a point against its two-sided order bounds",
    "dual_decay": "log-log decay slope of a dual transform of a compactly supported function",
    "search_counterexample": "sign-program search for g with R*g <= R*h but a larger L^p norm",
    "solmon_ratio": "ratio of the L^q norm of R*g to its mixed L^2(L^p) norm at two truncation radii",
    "verify_affirmative_chain": "every link of the comparison chain for an admissible g",
    "verify_general_slicing": "slicing inequality with the admissible-distance constant",
    "verify_p1_monotonicity": "p = 1 comparison through Gaussian-mollified pairings",
    "verify_pinched_gaussian_slicing": "slicing inequality for Gaussian-pinched g with factor (gamma/beta)^(p-1)",
}
