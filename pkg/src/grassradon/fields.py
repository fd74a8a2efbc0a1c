"""Scalar fields on R^n, functions on the affine Grassmannian, atomic measures.

Evaluator conventions
---------------------
``SpatialField.evaluator`` maps an array of points ``(..., n)`` to ``(...)``.

``GrassmannFunction.evaluator`` takes complement frames ``perp`` of shape
``(N, n, k)`` and frame coordinates ``z`` of shape ``(N, M, k)`` and returns
``(N, M)``: row ``j`` holds ``g(H_j, z_{j,m})``.  Every constructor here
depends on ``z`` only through ``|z|`` or through the embedded point
``perp @ z``, so values do not depend on the choice of frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import ParameterError, UnsupportedFieldError
from .geometry import Subspace, check_dims
from .quadrature import tensor_rule

# exp(-a r^2) < 1e-16 beyond r = sqrt(GAUSS_LOG_CUT / a)
GAUSS_LOG_CUT = 16 * math.log(10.0)


def gaussian_cutoff(a: float) -> float:
    """Radius where ``exp(-a r^2)`` drops below ``1e-16`` of its peak."""
    return math.sqrt(GAUSS_LOG_CUT / a)


def bump_profile(u) -> np.ndarray:
    """``exp(1 - 1/(1 - u^2))`` on ``|u| < 1``, zero outside; peak value 1."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui * ui))
    return out


# ---------------------------------------------------------------------------
# Fields on R^n


@dataclass(frozen=True, eq=False)
class SpatialField:
    """Evaluable function on ``R^n`` with support and decay metadata.

    ``extent`` is the radius around ``center`` outside which the field is
    zero (compact) or below ``1e-16`` of its peak (Gaussian); transforms use
    it as the default truncation.  ``gaussian_terms`` lists
    ``(amplitude, a, center)`` when the field is a finite Gaussian mixture,
    which unlocks closed-form Fourier and Radon transforms.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    n: int
    support_radius: float
    decay_tag: str
    center: np.ndarray
    extent: float
    smoothness_tag: str = "smooth"
    gaussian_terms: tuple = ()
    terms: tuple = ()
    label: str = ""

    def __post_init__(self):
        if self.decay_tag not in ("compact", "gaussian", "power"):
            raise ParameterError(f"unknown decay tag {self.decay_tag!r}")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(self.n))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ParameterError(f"expected points in R^{self.n}, got shape {x.shape}")
        return self.evaluator(x)

    @property
    def is_gaussian_mixture(self) -> bool:
        return bool(self.gaussian_terms)

    def scaled(self, c: float) -> "SpatialField":
        return sum_fields(self, coefficients=[c])

    def __add__(self, other: "SpatialField") -> "SpatialField":
        return sum_fields(self, other)

    def __sub__(self, other: "SpatialField") -> "SpatialField":
        return sum_fields(self, other, coefficients=[1.0, -1.0])


def gaussian_field(n: int, a: float, center=None, amplitude: float = 1.0) -> SpatialField:
    """``amplitude * exp(-a |x - center|^2)``."""
    if a <= 0:
        raise ParameterError(f"Gaussian rate must be positive, got {a}")
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    if c.shape != (n,):
        raise ParameterError("center must lie in R^n")

    def ev(x):
        return amplitude * np.exp(-a * np.sum((x - c) ** 2, axis=-1))

    return SpatialField(
        ev,
        n,
        support_radius=math.inf,
        decay_tag="gaussian",
        center=c,
        extent=gaussian_cutoff(a),
        smoothness_tag="analytic",
        gaussian_terms=((float(amplitude), float(a), tuple(c)),),
        label=f"gaussian(a={a})",
    )


def bump_field(n: int, radius: float, center=None, amplitude: float = 1.0) -> SpatialField:
    """``amplitude * exp(1 - 1/(1 - |x - center|^2 / radius^2))`` on the open ball."""
    if radius <= 0:
        raise ParameterError(f"bump radius must be positive, got {radius}")
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    if c.shape != (n,):
        raise ParameterError("center must lie in R^n")

    def ev(x):
        return amplitude * bump_profile(np.sqrt(np.sum((x - c) ** 2, axis=-1)) / radius)

    return SpatialField(
        ev,
        n,
        support_radius=float(radius),
        decay_tag="compact",
        center=c,
        extent=float(radius),
        label=f"bump(r={radius})",
    )


def sum_fields(*fields: SpatialField, coefficients=None) -> SpatialField:
    """Finite linear combination ``sum_i c_i f_i``."""
    if not fields:
        raise ParameterError("need at least one field")
    n = fields[0].n
    if any(f.n != n for f in fields):
        raise ParameterError("fields live in different dimensions")
    coeffs = [1.0] * len(fields) if coefficients is None else [float(c) for c in coefficients]
    if len(coeffs) != len(fields):
        raise ParameterError("one coefficient per field")

    centers = np.array([f.center for f in fields])
    c = centers[0] if np.allclose(centers, centers[0]) else np.zeros(n)
    extent = max(np.linalg.norm(f.center - c) + f.extent for f in fields)
    tags = {f.decay_tag for f in fields}
    tag = "power" if "power" in tags else ("gaussian" if "gaussian" in tags else "compact")
    support = extent if tag == "compact" else math.inf
    if all(f.is_gaussian_mixture for f in fields):
        gterms = tuple((ci * amp, a, ctr) for ci, f in zip(coeffs, fields) for amp, a, ctr in f.gaussian_terms)
    else:
        gterms = ()

    def ev(x):
        return sum(ci * f.evaluator(x) for ci, f in zip(coeffs, fields))

    return SpatialField(
        ev,
        n,
        support_radius=support,
        decay_tag=tag,
        center=c,
        extent=extent,
        smoothness_tag="smooth",
        gaussian_terms=gterms,
        terms=tuple(zip(coeffs, fields)),
        label=" + ".join(f"{ci:g}*{f.label}" for ci, f in zip(coeffs, fields)),
    )


def field_fourier(f: SpatialField, xi, nodes: int = 48, panels: int = 1) -> np.ndarray:
    """``f_hat(xi) = int f(x) exp(-i x.xi) dx``.

    Closed form for Gaussian mixtures, tensor Gauss-Legendre over the cube
    ``center + [-extent, extent]^n`` otherwise.
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    if xi.shape[-1] != f.n:
        raise ParameterError("frequency dimension mismatch")
    if f.is_gaussian_mixture:
        out = np.zeros(xi.shape[0], dtype=complex)
        s2 = np.sum(xi**2, axis=-1)
        for amp, a, c in f.gaussian_terms:
            out += amp * (math.pi / a) ** (f.n / 2) * np.exp(-s2 / (4 * a)) * np.exp(-1j * (xi @ np.asarray(c)))
        return out
    if f.decay_tag == "power":
        raise UnsupportedFieldError("Fourier quadrature needs finite extent")
    pts, w = tensor_rule(f.n, f.extent, nodes, panels, center=f.center)
    vals = f.evaluator(pts) * w
    phase = np.exp(-1j * (xi @ pts.T))
    return phase @ vals


def gaussian_radon_closed_form(a: float, n: int, k: int, z_norm) -> np.ndarray | float:
    """Radon transform over any ``(n-k)``-plane of ``exp(-a|x|^2)``.

    Equals ``(pi/a)^{(n-k)/2} exp(-a |z|^2)`` at offset ``|z| = z_norm``.
    """
    if a <= 0:
        raise ParameterError(f"Gaussian rate must be positive, got {a}")
    check_dims(n, k)
    val = (math.pi / a) ** ((n - k) / 2) * np.exp(-a * np.asarray(z_norm, dtype=float) ** 2)
    return float(val) if np.ndim(val) == 0 else val


# ---------------------------------------------------------------------------
# Functions on the affine Grassmannian


@dataclass(frozen=True, eq=False)
class GrassmannFunction:
    """Evaluable ``g(H, z)`` with ``z`` in frame coordinates of ``H_perp``.

    ``extent`` bounds ``|z|`` outside of which ``g`` is negligible for every
    ``H``; ``support_radius`` is finite only for compact support.
    ``radial_profile`` is set when ``g(H, z) = profile(|z|)``.
    """

    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    n: int
    k: int
    extent: float
    support_radius: float = math.inf
    even: bool = False
    radial_profile: Callable[[np.ndarray], np.ndarray] | None = None
    nonnegative: bool = False
    label: str = ""

    def __post_init__(self):
        check_dims(self.n, self.k)

    def values(self, perp: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Batched evaluation, see module docstring for shapes."""
        return self.evaluator(perp, z)

    def __call__(self, H: Subspace, z) -> np.ndarray:
        if (H.n, H.k) != (self.n, self.k):
            raise ParameterError("subspace does not match the function's (n, k)")
        z = np.asarray(z, dtype=float)
        single = z.ndim == 1
        zz = z.reshape(1, -1, self.k)
        out = self.evaluator(H.perp[None], zz)[0]
        return out[0] if single else out.reshape(z.shape[:-1])

    # algebra ---------------------------------------------------------------

    def _check(self, other: "GrassmannFunction"):
        if (other.n, other.k) != (self.n, self.k):
            raise ParameterError("functions live on different Grassmannians")

    def __add__(self, other):
        if not isinstance(other, GrassmannFunction):
            return NotImplemented
        self._check(other)
        f, g = self.evaluator, other.evaluator
        prof = None
        if self.radial_profile is not None and other.radial_profile is not None:
            p1, p2 = self.radial_profile, other.radial_profile
            prof = lambda r: p1(r) + p2(r)  # noqa: E731
        return GrassmannFunction(
            lambda P, Z: f(P, Z) + g(P, Z),
            self.n,
            self.k,
            max(self.extent, other.extent),
            max(self.support_radius, other.support_radius),
            self.even and other.even,
            prof,
            self.nonnegative and other.nonnegative,
            f"({self.label} + {other.label})",
        )

    def __mul__(self, other):
        if isinstance(other, GrassmannFunction):
            self._check(other)
            f, g = self.evaluator, other.evaluator
            prof = None
            if self.radial_profile is not None and other.radial_profile is not None:
                p1, p2 = self.radial_profile, other.radial_profile
                prof = lambda r: p1(r) * p2(r)  # noqa: E731
            return GrassmannFunction(
                lambda P, Z: f(P, Z) * g(P, Z),
                self.n,
                self.k,
                min(self.extent, other.extent),
                min(self.support_radius, other.support_radius),
                self.even and other.even,
                prof,
                self.nonnegative and other.nonnegative,
                f"{self.label}*{other.label}",
            )
        c = float(other)
        f = self.evaluator
        prof = None if self.radial_profile is None else (lambda r, p=self.radial_profile: c * p(r))
        return replace(
            self,
            evaluator=lambda P, Z: c * f(P, Z),
            radial_profile=prof,
            nonnegative=self.nonnegative and c >= 0,
            label=f"{c:g}*{self.label}",
        )

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (-1.0) * other

    def power(self, p: float) -> "GrassmannFunction":
        """``|g|^p``."""
        f = self.evaluator
        prof = None if self.radial_profile is None else (lambda r, q=self.radial_profile: np.abs(q(r)) ** p)
        return replace(
            self,
            evaluator=lambda P, Z: np.abs(f(P, Z)) ** p,
            radial_profile=prof,
            nonnegative=True,
            label=f"|{self.label}|^{p:g}",
        )


def _shift_proj(perp: np.ndarray, shift) -> np.ndarray:
    """Frame coordinates ``P_{H_perp}(shift)`` for each node, shape ``(N, k)``."""
    return np.einsum("nik,i->nk", perp, shift)


def radial_function(n: int, k: int, profile, extent: float, support_radius: float = math.inf,
                    shift=None, nonnegative: bool = False, label: str = "radial") -> GrassmannFunction:
    """``g(H, z) = profile(|z - P_{H_perp} shift|)``; purely radial when ``shift`` is None."""
    check_dims(n, k)
    if shift is None:
        def ev(P, Z):
            return profile(np.sqrt(np.sum(Z * Z, axis=-1)))

        return GrassmannFunction(ev, n, k, extent, support_radius, True, profile, nonnegative, label)

    s = np.asarray(shift, dtype=float)
    if s.shape != (n,):
        raise ParameterError("shift must lie in R^n")

    def ev_shift(P, Z):
        d = Z - _shift_proj(P, s)[:, None, :]
        return profile(np.sqrt(np.sum(d * d, axis=-1)))

    reach = float(np.linalg.norm(s))
    return GrassmannFunction(
        ev_shift,
        n,
        k,
        extent + reach,
        support_radius + reach,
        bool(reach == 0.0),
        None,
        nonnegative,
        f"{label}@{np.round(s, 3).tolist()}",
    )


def gaussian_z(n: int, k: int, a: float, amplitude: float = 1.0, shift=None) -> GrassmannFunction:
    """``amplitude * exp(-a |z - P shift|^2)``."""
    if a <= 0:
        raise ParameterError(f"Gaussian rate must be positive, got {a}")
    return radial_function(
        n, k, lambda r: amplitude * np.exp(-a * r * r), gaussian_cutoff(a),
        shift=shift, nonnegative=amplitude >= 0, label=f"{amplitude:g}*gauss_z(a={a:g})",
    )


def bump_z(n: int, k: int, radius: float, amplitude: float = 1.0, shift=None) -> GrassmannFunction:
    """``amplitude * bump(|z - P shift| / radius)``; compactly supported in ``z``."""
    if radius <= 0:
        raise ParameterError(f"bump radius must be positive, got {radius}")
    return radial_function(
        n, k, lambda r: amplitude * bump_profile(r / radius), radius, support_radius=radius,
        shift=shift, nonnegative=amplitude >= 0, label=f"{amplitude:g}*bump_z(r={radius:g})",
    )


def constant_function(n: int, k: int, value: float = 1.0) -> GrassmannFunction:
    """``g = value`` everywhere (infinite extent)."""
    return radial_function(
        n, k, lambda r: np.full(np.shape(r), float(value)), math.inf,
        nonnegative=value >= 0, label=f"const({value:g})",
    )


# ---------------------------------------------------------------------------
# Discrete measures


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finite signed atomic measure ``sum_j w_j delta_{x_j}``."""

    atoms: np.ndarray  # (J, d)
    weights: np.ndarray  # (J,)

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if weights.shape != (atoms.shape[0],):
            raise ParameterError("one weight per atom required")
        if not np.all(np.isfinite(weights)) or not np.all(np.isfinite(atoms)):
            raise ParameterError("atoms and weights must be finite")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def nonnegative(self) -> bool:
        return bool(np.all(self.weights >= 0))

    @property
    def total_variation(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))


def measure_fourier(mu: DiscreteMeasure, xi) -> np.ndarray | complex:
    """``mu_hat(xi) = sum_j w_j exp(-i x_j . xi)``; accepts ``(d,)`` or ``(M, d)``."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != mu.dim:
        raise ParameterError(f"frequency has dimension {xi.shape[-1]}, measure lives in R^{mu.dim}")
    single = xi.ndim == 1
    out = np.exp(-1j * (np.atleast_2d(xi) @ mu.atoms.T)) @ mu.weights
    return complex(out[0]) if single else out
