"""Mapping-property diagnostics and the admissible-class machinery."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np
from scipy.special import gammaln

from .errors import (
    InadmissibleError,
    NoEstimateError,
    ParameterError,
    UnderdeterminedFitError,
    UndefinedSlopeError,
    UnsupportedInputError,
)
from .fields import (
    DiscreteMeasure,
    GrassmannFunction,
    SpatialField,
    field_fourier,
    gaussian_field,
    measure_fourier,
)
from .geometry import GrassmannQuadrature, Subspace, check_dims, grassmann_mass, haar_sample
from .quadrature import gl_rule, tensor_rule
from .transforms import (
    PlaneQuadratureSpec,
    _radon_batch,
    dual_radon,
    dual_radon_radial,
    grassmann_lp_norm,
    node_integrals,
    pushforward_measure,
    radial_dual_density,
    radon_function,
    slice_fourier,
)

# ---------------------------------------------------------------------------
# cap measures


@dataclass(frozen=True)
class CapMeasureResult:
    """Haar measure of ``{H : |P_{H_perp} x| <= r}`` at ``ratio = r/|x|``.

    ``exact`` is the measure under the total-mass normalization,
    ``probability`` the same set under the normalized Haar probability.
    """

    exact: float
    lower_bound: float
    upper_bound: float
    ratio: float
    probability: float
    lower_constant: float
    upper_constant: float
    reference_lower_constant: float


def _cap_probability(n: int, k: int, s: float, nodes: int = 64) -> float:
    om, w = gl_rule(0.0, math.asin(min(1.0, s)), nodes, 2)
    return float(np.dot(w, radial_dual_density(n, k, om)))


def cap_upper_constant(n: int, k: int) -> float:
    """``(pi/2)^k |S^{k-1}||S^{n-k-1}|/|S^{n-1}|``."""
    return (math.pi / 2) ** k * grassmann_mass(n, k)


@lru_cache(maxsize=None)
def cap_lower_constant(n: int, k: int) -> float:
    """Largest ``c`` with ``c s^k <= cap(s)`` on a dense log grid of ``(0, 1]``."""
    check_dims(n, k)
    mass = grassmann_mass(n, k)
    s = np.concatenate([np.geomspace(1e-6, 1.0, 600), np.linspace(0.5, 1.0, 200)])
    vals = [mass * _cap_probability(n, k, si) / si**k for si in s]
    return float(min(vals) * (1 - 1e-9))


def cap_reference_lower_constant(n: int, k: int) -> float:
    """Closed-form candidate ``mass / 2^{k-1} * B(k, n-k)``, reported for comparison only."""
    mass = grassmann_mass(n, k)
    return float(mass / 2 ** (k - 1) * math.exp(gammaln(k) + gammaln(n - k) - gammaln(n)))


def cap_measure(n: int, k: int, ratio: float, nodes: int = 64) -> CapMeasureResult:
    """Cap measure from the bi-spherical 1D integral with two-sided order bounds."""
    check_dims(n, k)
    if not 0 < ratio <= 1:
        raise ParameterError(f"ratio must lie in (0, 1], got {ratio}")
    prob = _cap_probability(n, k, ratio, nodes)
    mass = grassmann_mass(n, k)
    lo, hi = cap_lower_constant(n, k), cap_upper_constant(n, k)
    return CapMeasureResult(
        exact=mass * prob,
        lower_bound=lo * ratio**k,
        upper_bound=hi * ratio**k,
        ratio=float(ratio),
        probability=prob,
        lower_constant=lo,
        upper_constant=hi,
        reference_lower_constant=cap_reference_lower_constant(n, k),
    )


def cap_monte_carlo(n: int, k: int, ratio: float, count: int, seed: int) -> tuple[float, float]:
    """Haar Monte-Carlo estimate of the cap measure and its standard error."""
    Q = haar_sample(n, k, count, seed)
    x = np.zeros(n)
    x[0] = 1.0
    hit = (np.linalg.norm(np.einsum("nik,i->nk", Q.perp, x), axis=1) <= ratio).astype(float)
    p = hit.mean()
    return Q.total_mass * p, Q.total_mass * math.sqrt(max(p * (1 - p), 0.0) / count)


# ---------------------------------------------------------------------------
# decay of dual transforms


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    radii: np.ndarray
    values: np.ndarray


def decay_exponent(psi: GrassmannFunction, Gquad: GrassmannQuadrature, radii,
                   directions: int = 32, seed: int = 0, force_quadrature: bool = False) -> DecayFit:
    """Least-squares slope of ``log mean_theta |R* psi(r theta)|`` against ``log r``.

    Centered radial functions use the exact-Haar radial formula; anything
    else averages the node sum of ``Gquad`` over random directions.
    """
    if not math.isfinite(psi.support_radius):
        raise UnsupportedInputError("decay fit needs a compactly supported function")
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) < 2 or np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise ParameterError("radii must be a positive increasing list of length >= 2")
    if psi.radial_profile is not None and psi.even and not force_quadrature:
        # rotation invariance: one exact 1D integral per radius
        vals = np.abs(dual_radon_radial(psi.radial_profile, radii, psi.n, psi.k, psi.support_radius))
    else:
        rng = np.random.default_rng(seed)
        th = rng.standard_normal((directions, psi.n))
        th /= np.linalg.norm(th, axis=1, keepdims=True)
        X = (radii[:, None, None] * th[None]).reshape(-1, psi.n)
        vals = np.abs(dual_radon(psi, X, Gquad)).reshape(len(radii), directions).mean(axis=1)
    if np.any(vals <= 0):
        raise UndefinedSlopeError("dual transform vanishes at some radius; log-slope undefined")
    A = np.column_stack([np.log(radii), np.ones(len(radii))])
    (slope, icpt), *_ = np.linalg.lstsq(A, np.log(vals), rcond=None)
    return DecayFit(float(slope), float(icpt), radii, vals)


# ---------------------------------------------------------------------------
# Fourier-slice residuals


def fourier_slice_residual(subject, H: Subspace, omegas, spec: PlaneQuadratureSpec = PlaneQuadratureSpec(),
                           relative: bool = False, fourier_nodes: int = 48) -> float:
    """``max_omega |F_k(R subject)(H, omega) - subject_hat(omega embedded)|``.

    Measures go through the pushforward (an exact finite sum); fields go
    through the plane quadrature on one side and a full-space Fourier
    integral (closed form for Gaussian mixtures) on the other.  With
    ``relative`` each residual is divided by ``1 + |subject_hat|``.
    """
    om = np.atleast_2d(np.asarray(omegas, dtype=float))
    if om.shape[1] != H.k:
        raise ParameterError("frequencies must be given in complement coordinates")
    xi = om @ H.perp.T
    if isinstance(subject, DiscreteMeasure):
        lhs = np.atleast_1d(measure_fourier(pushforward_measure(subject, H), om))
        rhs = np.atleast_1d(measure_fourier(subject, xi))
    elif isinstance(subject, SpatialField):
        Rf = radon_function(subject, H.k, spec, closed_form=False)
        zspec = PlaneQuadratureSpec("tensor-gauss", spec.budget, subject.extent + float(np.linalg.norm(subject.center)),
                                    spec.panels)
        lhs = np.atleast_1d(slice_fourier(Rf, H, om, zspec))
        rhs = field_fourier(subject, xi, nodes=fourier_nodes, panels=spec.panels)
    else:
        raise UnsupportedInputError(f"cannot transform {type(subject).__name__}")
    res = np.abs(lhs - rhs)
    if relative:
        res = res / (1.0 + np.abs(rhs))
    return float(res.max()) if res.size else 0.0


# ---------------------------------------------------------------------------
# property (H)


def _monomials(n: int, j: int) -> list[tuple[int, ...]]:
    return list(combinations_with_replacement(range(n), j))


def property_H_residual(g: GrassmannFunction, degrees: int, Gquad: GrassmannQuadrature,
                        spec: PlaneQuadratureSpec = PlaneQuadratureSpec(), directions: int | None = None,
                        seed: int = 0, with_coefficients: bool = False):
    """Relative residual of fitting moment data by one homogeneous polynomial per degree.

    For degree ``j`` and each node ``H`` the data are
    ``P_{H,j}(u) = int_{H_perp} g(H, w) (w.u)^j dw`` at unit ``u`` in
    ``H_perp``, attached to the embedded point ``u`` of ``R^n``.  A single
    homogeneous degree-``j`` polynomial on ``R^n`` is fitted by least
    squares; the residual is fit RMSE over data RMS (0 when the data vanish).
    With ``with_coefficients`` the fitted monomial coefficients are returned
    as a second list.
    """
    if not math.isfinite(g.support_radius):
        raise UnsupportedInputError("property (H) is checked for compactly supported functions")
    if degrees < 0 or degrees > 3:
        raise ParameterError("degrees must lie in 0..3")
    n, k = g.n, g.k
    rng = np.random.default_rng(seed)
    R = spec.truncation_radius or g.support_radius
    out, coefs = [], []
    mass_scale = None
    for j in range(degrees + 1):
        mons = _monomials(n, j)
        if k == 1:
            U = np.ones((1, 1))
        else:
            cnt = directions or (len(_monomials(k, j)) + 1)
            U = rng.standard_normal((cnt, k))
            U /= np.linalg.norm(U, axis=1, keepdims=True)
        samples = len(Gquad) * len(U)
        if samples < 3 * len(mons):
            raise UnderdeterminedFitError(
                f"degree {j}: {samples} samples for {len(mons)} monomials (need >= {3 * len(mons)})"
            )
        data = np.empty((len(Gquad), len(U)))
        for ui, u in enumerate(U):
            data[:, ui] = node_integrals(
                lambda P, Z, u=u: g.values(P, Z) * (Z @ u) ** j, k, R, Gquad, spec
            )
        Y = np.einsum("nik,uk->nui", Gquad.perp, U).reshape(-1, n)
        A = np.column_stack([np.prod(Y[:, list(m)], axis=1) if m else np.ones(len(Y)) for m in mons])
        b = data.reshape(-1)
        if mass_scale is None:
            mass_scale = float(np.sqrt(np.mean(b * b))) or 1.0
        rms = float(np.sqrt(np.mean(b * b)))
        if rms <= 1e-12 * mass_scale:
            out.append(0.0)
            coefs.append(np.zeros(len(mons)))
            continue
        coef, *_ = np.linalg.lstsq(A, b, rcond=None)
        out.append(float(np.sqrt(np.mean((A @ coef - b) ** 2)) / rms))
        coefs.append(coef)
    return (out, coefs) if with_coefficients else out


# ---------------------------------------------------------------------------
# admissible functions


@dataclass(frozen=True, eq=False)
class AdmissibleFunction:
    """``h >= 0`` with ``h^{p-1} = R(witness)`` for a non-negative witness."""

    h: GrassmannFunction
    p: float
    witness: SpatialField
    params: dict = field(default_factory=dict)

    def check(self, samples: int = 20, seed: int = 0,
              spec: PlaneQuadratureSpec = PlaneQuadratureSpec(budget=48)) -> float:
        """Max of ``|h^{p-1} - R(witness)| / (1 + h^{p-1})`` at random ``(H, z)``.

        The right side is recomputed by plane quadrature, independently of
        any closed form used to build ``h``.
        """
        n, k = self.h.n, self.h.k
        Q = haar_sample(n, k, samples, seed)
        rng = np.random.default_rng(seed + 1)
        Z = rng.standard_normal((samples, 1, k)) * (0.5 * min(self.h.extent, 4.0)) / math.sqrt(k)
        lhs = self.h.values(Q.perp, Z)[:, 0] ** (self.p - 1)
        rhs = _radon_batch(self.witness, Q.perp, Q.basis, Z, spec)[:, 0]
        return float(np.max(np.abs(lhs - rhs) / (1.0 + np.abs(lhs))))


def _witness_nonnegative(phi: SpatialField, points: int = 200_000) -> bool:
    if phi.is_gaussian_mixture:
        if all(amp >= 0 for amp, _, _ in phi.gaussian_terms):
            return True
    per_axis = max(8, int(points ** (1 / phi.n)))
    pts, _ = tensor_rule(phi.n, phi.extent, per_axis, 1, center=phi.center)
    # term centers catch narrow dips between nodes
    extra = [phi.center] + [c for _, _, c in (phi.gaussian_terms or ())]
    vals = np.concatenate([phi(pts), phi(np.asarray(extra, dtype=float))])
    return bool(vals.min() >= -1e-14 * max(1.0, np.abs(vals).max()))


def admissible_from_density(witness, p: float, k: int,
                            spec: PlaneQuadratureSpec = PlaneQuadratureSpec()) -> AdmissibleFunction:
    """``h = (R witness)^{1/(p-1)}`` for a non-negative field witness."""
    if isinstance(witness, DiscreteMeasure):
        raise InadmissibleError(
            "atomic witness: the pushforward of a point mass is singular, so h has no pointwise values; "
            "use atomic measures only through pairings"
        )
    if not p > 1:
        raise ParameterError(f"admissible classes need p > 1, got {p}")
    if not _witness_nonnegative(witness):
        raise InadmissibleError("witness takes negative values: not a member of M+(R^n)")
    R = radon_function(witness, k, spec)
    e = 1.0 / (p - 1)
    base = R.values

    def ev(P, Z):
        return np.clip(base(P, Z), 0.0, None) ** e

    prof = None
    if R.radial_profile is not None:
        rp = R.radial_profile
        prof = lambda r: np.clip(rp(r), 0.0, None) ** e  # noqa: E731
    ext = R.extent * math.sqrt(max(1.0, p - 1))
    h = GrassmannFunction(ev, R.n, k, ext, R.support_radius, R.even, prof, True, f"({R.label})^(1/{p - 1:g})")
    return AdmissibleFunction(h, float(p), witness)


def gaussian_admissible(n: int, k: int, p: float, alpha: float, amplitude: float = 1.0) -> AdmissibleFunction:
    """``amplitude * exp(-alpha |z|^2)`` as an admissible function with its Gaussian witness.

    ``h^{p-1} = A^{p-1} exp(-alpha (p-1) |z|^2)`` is the transform of
    ``A^{p-1} (b/pi)^{(n-k)/2} exp(-b |x|^2)`` with ``b = alpha (p-1)``.
    """
    if alpha <= 0 or amplitude <= 0:
        raise ParameterError("alpha and amplitude must be positive")
    b = alpha * (p - 1)
    wit = gaussian_field(n, b, amplitude=amplitude ** (p - 1) * (b / math.pi) ** ((n - k) / 2))
    adm = admissible_from_density(wit, p, k)
    return AdmissibleFunction(adm.h, adm.p, wit, {"alpha": alpha, "amplitude": amplitude})


def gaussian_family(n: int, k: int, p: float, alphas, amplitudes) -> list[AdmissibleFunction]:
    return [gaussian_admissible(n, k, p, a, c) for a in alphas for c in amplitudes]


@dataclass(frozen=True)
class DistanceEstimate:
    value: float
    index: int
    params: dict
    ratios: list


def admissible_distance(g: GrassmannFunction, p: float, w: GrassmannFunction | None,
                        family: list[AdmissibleFunction], Gquad: GrassmannQuadrature,
                        spec: PlaneQuadratureSpec = PlaneQuadratureSpec(), dominate_tol: float = 1e-12
                        ) -> DistanceEstimate:
    """Upper estimate of ``d_{p,w}(g, A_p^k)``: min of ``|f|_{p,w} / |g|_{p,w}`` over dominating members.

    Domination ``f >= g`` is tested at every Grassmann node on the
    inner ``z`` rule of ``spec``.
    """
    R = spec.truncation_radius or g.extent
    z, _ = tensor_rule(g.k, R, spec.budget, spec.panels)
    Z = np.broadcast_to(z, (len(Gquad),) + z.shape)
    gv = g.values(Gquad.perp, Z)
    gnorm = grassmann_lp_norm(g, p, w, Gquad, spec)
    if gnorm == 0:
        raise NoEstimateError("g has zero norm")
    ratios = []
    for f in family:
        if f.p != p:
            raise ParameterError("family member has a different exponent")
        fv = f.h.values(Gquad.perp, Z)
        if np.all(fv >= gv - dominate_tol * max(1.0, np.abs(gv).max())):
            ratios.append(grassmann_lp_norm(f.h, p, w, Gquad, spec) / gnorm)
        else:
            ratios.append(math.inf)
    if not ratios or not np.isfinite(min(ratios)):
        raise NoEstimateError("no family member dominates g")
    i = int(np.argmin(ratios))
    return DistanceEstimate(float(ratios[i]), i, dict(family[i].params), ratios)
