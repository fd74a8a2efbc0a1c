"""Forward and dual (n-k)-plane Radon transforms and related integrals.

Normalization: one transform pair throughout, ``R f(H, z) = int_H f(y + z) dy``
and ``R* g(x) = int g(H, P_{H_perp} x) dnu(H)`` with ``nu`` of total mass
``grassmann_mass(n, k)``.  For hyperplanes (``k = 1``) the classical
``(t, theta)`` transforms are reached through :func:`classical_radon` and
:func:`classical_dual`.

Nested integrals put Grassmann nodes on the outside and a Gauss-Legendre
rule in ``H_perp`` (or ``H``) on the inside.  Outer sums run in node order,
so results do not depend on chunking or thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, UnsupportedFieldError
from .fields import DiscreteMeasure, GrassmannFunction, SpatialField, gaussian_cutoff
from .geometry import GrassmannQuadrature, Subspace, check_dims, grassmann_mass, sphere_rule, sphere_volume
from .quadrature import gl_rule, tensor_rule

_THREADS = 1
CHUNK = 256


def set_threads(count: int) -> None:
    """Worker threads for point-batched transforms; never changes results."""
    global _THREADS
    if count < 1:
        raise ParameterError("thread count must be positive")
    _THREADS = int(count)


def _map_chunks(fn, items: np.ndarray, chunk: int = CHUNK) -> np.ndarray:
    pieces = [items[i : i + chunk] for i in range(0, len(items), chunk)]
    if not pieces:
        return np.zeros(0)
    if _THREADS > 1 and len(pieces) > 1:
        with ThreadPoolExecutor(_THREADS) as pool:
            out = list(pool.map(fn, pieces))
    else:
        out = [fn(p) for p in pieces]
    return np.concatenate(out)


@dataclass(frozen=True)
class PlaneQuadratureSpec:
    """How to discretize integrals over a plane ``H`` or a complement ``H_perp``.

    ``budget`` is nodes per axis for ``tensor-gauss``, radial nodes for
    ``polar-gauss`` and the total sample count for ``monte-carlo``.
    ``truncation_radius`` overrides the radius taken from field metadata.
    """

    scheme: str = "tensor-gauss"
    budget: int = 64
    truncation_radius: float | None = None
    panels: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in ("tensor-gauss", "polar-gauss", "monte-carlo"):
            raise ParameterError(f"unknown plane quadrature scheme {self.scheme!r}")
        if self.budget < 2:
            raise ParameterError("plane quadrature budget must be >= 2")
        if self.truncation_radius is not None and not self.truncation_radius > 0:
            raise ParameterError("truncation radius must be positive")
        if self.panels < 1:
            raise ParameterError("panels must be >= 1")


def unit_rule(dim: int, spec: PlaneQuadratureSpec):
    """Rule on the unit cube/ball of ``R^dim``; scaled by the caller."""
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    if spec.scheme == "tensor-gauss" or dim == 1 and spec.scheme == "polar-gauss":
        return tensor_rule(dim, 1.0, spec.budget, spec.panels)
    if spec.scheme == "polar-gauss":
        r, wr = gl_rule(0.0, 1.0, spec.budget, spec.panels)
        dirs, wd = sphere_rule(dim - 1, spec.budget * 2, np.random.default_rng(spec.seed))
        pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, dim)
        wts = np.outer(wr * r ** (dim - 1), wd).ravel()
        return pts, wts
    rng = np.random.default_rng(spec.seed)
    g = rng.standard_normal((spec.budget, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = rng.random(spec.budget) ** (1.0 / dim)
    vol = math.pi ** (dim / 2) / math.gamma(dim / 2 + 1)
    return g * rad[:, None], np.full(spec.budget, vol / spec.budget)


def _field_radius(f: SpatialField, spec: PlaneQuadratureSpec) -> float:
    if f.decay_tag == "power":
        raise UnsupportedFieldError("power-decay field without finite support: plane integrals may diverge")
    return spec.truncation_radius if spec.truncation_radius is not None else f.extent


# ---------------------------------------------------------------------------
# forward transform


def _radon_batch(f: SpatialField, perp: np.ndarray, basis: np.ndarray, Z: np.ndarray,
                 spec: PlaneQuadratureSpec) -> np.ndarray:
    """``R f(H_j, z_jm)`` for frames ``(N, n, k)``/``(N, n, n-k)`` and ``Z`` of shape ``(N, M, k)``."""
    R = _field_radius(f, spec)
    m = basis.shape[2]
    u, w = unit_rule(m, spec)
    c = f.center
    t0 = np.einsum("nim,i->nm", basis, c)  # plane coordinates of P_H c
    zc = np.einsum("nik,i->nk", perp, c)  # complement coordinates of P_H_perp c
    dist = np.sqrt(np.sum((Z - zc[:, None, :]) ** 2, axis=-1))  # (N, M)
    if f.decay_tag == "compact":
        rho = np.sqrt(np.clip(R * R - dist * dist, 0.0, None))
    else:
        rho = np.full(dist.shape, R)
    out = np.zeros(dist.shape)
    step = max(1, 2_000_000 // len(w))
    for j in range(perp.shape[0]):
        base = Z[j] @ perp[j].T  # (M, n)
        for s in range(0, Z.shape[1], step):
            r = rho[j, s : s + step]
            t = t0[j] + r[:, None, None] * u[None]  # (M', T, m)
            x = base[s : s + step, None, :] + t @ basis[j].T
            out[j, s : s + step] = (r**m) * (f.evaluator(x) @ w)
    return out


def radon(f: SpatialField, H: Subspace, z, spec: PlaneQuadratureSpec = PlaneQuadratureSpec()) -> float:
    """Quadrature value of ``int_H f(y + z) dy`` with ``z`` in complement coordinates."""
    if f.n != H.n:
        raise ParameterError("field and subspace live in different dimensions")
    z = np.asarray(z, dtype=float).reshape(1, 1, H.k)
    return float(_radon_batch(f, H.perp[None], H.basis[None], z, spec)[0, 0])


def radon_function(f: SpatialField, k: int, spec: PlaneQuadratureSpec = PlaneQuadratureSpec(),
                   closed_form: bool = True) -> GrassmannFunction:
    """``R f`` as a :class:`GrassmannFunction`.

    Gaussian mixtures use ``A (pi/a)^{(n-k)/2} exp(-a |z - P c|^2)`` term by
    term when ``closed_form`` is set; other fields go through quadrature.
    """
    n = f.n
    check_dims(n, k)
    m = n - k
    reach = float(np.linalg.norm(f.center)) + f.extent
    if closed_form and f.is_gaussian_mixture:
        terms = [(amp * (math.pi / a) ** (m / 2), a, np.asarray(c, dtype=float)) for amp, a, c in f.gaussian_terms]
        centered = all(not np.any(c) for _, _, c in terms)
        reach = max(np.linalg.norm(c) + gaussian_cutoff(a) for _, a, c in terms)

        def ev(P, Z):
            out = np.zeros(Z.shape[:2])
            for amp, a, c in terms:
                d = Z - np.einsum("nik,i->nk", P, c)[:, None, :]
                out += amp * np.exp(-a * np.sum(d * d, axis=-1))
            return out

        def prof(r):
            return sum(amp * np.exp(-a * np.asarray(r) ** 2) for amp, a, _ in terms)

        return GrassmannFunction(ev, n, k, reach, math.inf, centered, prof if centered else None,
                                 all(t[0] >= 0 for t in terms), f"R[{f.label}]")

    def evq(P, Z):
        basis = _complete_basis(P)
        return _radon_batch(f, P, basis, Z, spec)

    support = reach if f.decay_tag == "compact" else math.inf
    return GrassmannFunction(evq, n, k, reach, support, False, None, False, f"R[{f.label}]")


def _complete_basis(perp: np.ndarray) -> np.ndarray:
    """Orthonormal bases of ``H`` from complement frames ``(N, n, k)``."""
    N, n, k = perp.shape
    proj = np.eye(n)[None] - perp @ np.transpose(perp, (0, 2, 1))
    # eigenvectors of the projector onto H with eigenvalue 1
    _, vecs = np.linalg.eigh(proj)
    return vecs[:, :, k:]


# ---------------------------------------------------------------------------
# dual transform


def dual_radon(g: GrassmannFunction, x, Gquad: GrassmannQuadrature) -> np.ndarray | float:
    """``R* g(x) = sum_j w_j g(H_j, P_{H_j perp} x)`` at one point or a batch ``(M, n)``."""
    if (g.n, g.k) != (Gquad.n, Gquad.k):
        raise ParameterError(f"function on G({g.n - g.k},{g.n}) but quadrature on G({Gquad.n - Gquad.k},{Gquad.n})")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != g.n:
        raise ParameterError("point dimension mismatch")
    perp = Gquad.perp
    w = Gquad.weights

    def chunk(xc):
        Z = np.einsum("nik,mi->nmk", perp, xc)  # (N, M, k)
        vals = g.values(perp, Z)  # (N, M)
        return np.sum(w[:, None] * vals, axis=0)

    out = _map_chunks(chunk, X)
    return float(out[0]) if single else out


def radial_dual_density(n: int, k: int, omega) -> np.ndarray:
    """Probability density of the angle ``omega`` with ``|P_{H_perp} theta| = sin(omega)``."""
    c = sphere_volume(k - 1) * sphere_volume(n - k - 1) / sphere_volume(n - 1)
    omega = np.asarray(omega, dtype=float)
    return c * np.sin(omega) ** (k - 1) * np.cos(omega) ** (n - k - 1)


def dual_radon_radial(profile, r, n: int, k: int, support: float = math.inf,
                      nodes: int = 96, panels: int = 4) -> np.ndarray | float:
    """Exact-Haar ``R* g`` for ``g(H, z) = profile(|z|)`` at ``|x| = r``.

    Rotation invariance reduces the Grassmann integral to
    ``mass * int_0^{pi/2} profile(r sin w) density(w) dw``; compact profiles
    restrict the range to ``sin w <= support / r``.
    """
    check_dims(n, k)
    rs = np.atleast_1d(np.asarray(r, dtype=float)).ravel()
    mass = grassmann_mass(n, k)
    u, w = gl_rule(0.0, 1.0, nodes, panels)
    out = np.empty(rs.shape)
    for s in range(0, len(rs), 2048):
        rr = rs[s : s + 2048]
        top = np.full(rr.shape, math.pi / 2)
        if math.isfinite(support):
            far = rr > support
            top[far] = np.arcsin(support / rr[far])
        om = top[:, None] * u[None, :]
        vals = profile(rr[:, None] * np.sin(om)) * radial_dual_density(n, k, om)
        out[s : s + 2048] = mass * top * (vals @ w)
    return float(out[0]) if np.ndim(r) == 0 else out


# ---------------------------------------------------------------------------
# Fourier side


def slice_fourier(g: GrassmannFunction, H: Subspace, omega,
                  spec: PlaneQuadratureSpec = PlaneQuadratureSpec()) -> np.ndarray | complex:
    """``F_k g(H, omega) = int_{H_perp} exp(-i omega.z) g(H, z) dz`` in frame coordinates."""
    if (H.n, H.k) != (g.n, g.k):
        raise ParameterError("subspace does not match the function's (n, k)")
    om = np.asarray(omega, dtype=float)
    single = om.ndim == 1
    om = np.atleast_2d(om)
    R = spec.truncation_radius if spec.truncation_radius is not None else g.extent
    if not math.isfinite(R):
        raise UnsupportedFieldError("function needs finite extent for the Fourier integral")
    z, w = tensor_rule(g.k, R, spec.budget, spec.panels)
    vals = g(H, z) * w
    out = np.exp(-1j * (om @ z.T)) @ vals
    return complex(out[0]) if single else out


def pushforward_measure(mu: DiscreteMeasure, H: Subspace, merge_tol: float = 1e-10) -> DiscreteMeasure:
    """Image of ``mu`` under ``P_{H_perp}``, atoms in complement coordinates.

    Atoms whose images lie within ``merge_tol`` are merged in input order.
    """
    if mu.dim != H.n:
        raise ParameterError("measure and subspace live in different dimensions")
    pts = mu.atoms @ H.perp
    reps: list[np.ndarray] = []
    wts: list[float] = []
    for p, wt in zip(pts, mu.weights):
        for i, q in enumerate(reps):
            if np.linalg.norm(p - q) <= merge_tol:
                wts[i] += wt
                break
        else:
            reps.append(p)
            wts.append(float(wt))
    return DiscreteMeasure(np.array(reps).reshape(-1, H.k), np.array(wts))


# ---------------------------------------------------------------------------
# integrals over the affine Grassmannian


def _inner_radius(spec: PlaneQuadratureSpec, *fns: GrassmannFunction) -> float:
    if spec.truncation_radius is not None:
        return spec.truncation_radius
    R = min(f.extent for f in fns)
    if not math.isfinite(R):
        raise UnsupportedFieldError("integrand has no finite extent in z; set truncation_radius")
    return R


def node_integrals(integrand, k: int, radius: float, Gquad: GrassmannQuadrature,
                   spec: PlaneQuadratureSpec) -> np.ndarray:
    """``int_{H_j perp} integrand(H_j, z) dz`` for every node; ``integrand(perp, Z)``."""
    z, w = tensor_rule(k, radius, spec.budget, spec.panels)
    perp = Gquad.perp
    out = np.empty(len(Gquad))
    step = max(1, 200_000 // max(1, len(z)))
    for s in range(0, len(Gquad), step):
        P = perp[s : s + step]
        Z = np.broadcast_to(z, (P.shape[0],) + z.shape)
        out[s : s + step] = integrand(P, Z) @ w
    return out


def grassmann_integral(integrand, k: int, radius: float, Gquad: GrassmannQuadrature,
                       spec: PlaneQuadratureSpec) -> tuple[float, float]:
    """Value and outer Monte-Carlo standard error (0 for deterministic grids)."""
    per = node_integrals(integrand, k, radius, Gquad, spec)
    val = float(np.sum(Gquad.weights * per))
    if Gquad.kind == "haar" and len(per) > 1:
        se = float(Gquad.total_mass * np.std(per, ddof=1) / math.sqrt(len(per)))
    else:
        se = 0.0
    return val, se


def pairing(g: GrassmannFunction, psi: GrassmannFunction, Gquad: GrassmannQuadrature,
            spec: PlaneQuadratureSpec = PlaneQuadratureSpec()) -> float:
    """``<g, psi>_k = int_G int_{H_perp} g psi dz dnu``."""
    g._check(psi)
    R = _inner_radius(spec, g, psi)
    f1, f2 = g.values, psi.values
    return grassmann_integral(lambda P, Z: f1(P, Z) * f2(P, Z), g.k, R, Gquad, spec)[0]


def grassmann_lp_norm(g: GrassmannFunction, p: float, w: GrassmannFunction | None,
                      Gquad: GrassmannQuadrature, spec: PlaneQuadratureSpec = PlaneQuadratureSpec()) -> float:
    """``(int_G int_{H_perp} |g|^p w dz dnu)^{1/p}``; ``w = None`` means ``w = 1``."""
    if not p >= 1:
        raise ParameterError(f"need p >= 1, got {p}")
    fns = (g,) if w is None else (g, w)
    R = _inner_radius(spec, *fns)
    gv = g.values
    if w is None:
        integrand = lambda P, Z: np.abs(gv(P, Z)) ** p  # noqa: E731
    else:
        wv = w.values
        integrand = lambda P, Z: np.abs(gv(P, Z)) ** p * wv(P, Z)  # noqa: E731
    val = grassmann_integral(integrand, g.k, R, Gquad, spec)[0]
    return float(max(val, 0.0) ** (1.0 / p))


def spatial_integral(fn, n: int, center, radius: float, nodes: int = 48, panels: int = 1) -> float:
    """``int fn(x) dx`` over the cube ``center + [-radius, radius]^n``; ``fn`` takes ``(P, n)``."""
    pts, w = tensor_rule(n, radius, nodes, panels, center=center)
    vals = _map_chunks(lambda p: np.asarray(fn(p), dtype=float), pts, chunk=4096)
    return float(np.dot(w, vals))


# ---------------------------------------------------------------------------
# hyperplane conventions


def classical_radon(f: SpatialField, theta, t: float, spec: PlaneQuadratureSpec = PlaneQuadratureSpec()) -> float:
    """Classical ``R f(t, theta)``: integral over ``{x . theta = t}``; equals ``R_{n-1} f``."""
    theta = np.asarray(theta, dtype=float)
    theta = theta / np.linalg.norm(theta)
    H = Subspace.from_span(_orth_complement(theta), f.n)
    s = float(H.perp[:, 0] @ theta)  # +-1 orientation of the complement frame
    return radon(f, H, [s * t], spec)


def classical_dual(g_classical, x, Gquad: GrassmannQuadrature) -> np.ndarray | float:
    """Classical ``R* g(x) = int_{S^{n-1}} g(x.theta, theta) dtheta`` from Grassmann nodes.

    Uses ``R* = (|S^{n-1}| / mass) R*_{n-1}`` for the mass normalization used
    here; ``g_classical(t, theta)`` must be even, ``g(-t, -theta) = g(t, theta)``.
    """
    if Gquad.k != 1:
        raise ParameterError("classical dual transform is the hyperplane case k = 1")
    theta = Gquad.perp[:, :, 0]
    X = np.atleast_2d(np.asarray(x, dtype=float))
    t = X @ theta.T  # (M, N)
    vals = g_classical(t, theta[None, :, :])
    scale = sphere_volume(Gquad.n - 1) / Gquad.total_mass
    out = scale * np.sum(vals * Gquad.weights[None, :], axis=1)
    return float(out[0]) if np.ndim(x) == 1 else out


def _orth_complement(theta: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(np.column_stack([theta, np.eye(len(theta))]))
    return q[:, 1 : len(theta)].T
