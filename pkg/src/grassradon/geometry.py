"""Subspaces, Grassmannian quadrature and sphere integration.

A linear subspace ``H`` of dimension ``n - k`` is stored through an
orthogonal ``n x n`` matrix whose first ``n - k`` columns span ``H`` and
whose last ``k`` columns span the orthogonal complement.  Vectors in the
complement are always handled in those frame coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln

from .errors import ParameterError

FRAME_TOL = 1e-12


def sphere_volume(m: int) -> float:
    """Surface measure of the unit sphere ``S^m`` in ``R^{m+1}``; ``|S^0| = 2``."""
    if m < 0:
        raise ParameterError(f"sphere dimension must be >= 0, got {m}")
    d = m + 1
    return float(2.0 * np.exp(0.5 * d * np.log(np.pi) - gammaln(0.5 * d)))


def check_dims(n: int, k: int) -> None:
    if int(n) != n or int(k) != k:
        raise ParameterError(f"dimensions must be integers, got n={n}, k={k}")
    if not 0 < k < n:
        raise ParameterError(f"need 0 < k < n, got n={n}, k={k}")


def grassmann_mass(n: int, k: int) -> float:
    """Total Haar mass ``|S^{k-1}| |S^{n-k-1}| / |S^{n-1}|`` of ``G_{n-k,n}``."""
    check_dims(n, k)
    return sphere_volume(k - 1) * sphere_volume(n - k - 1) / sphere_volume(n - 1)


@dataclass(frozen=True, eq=False)
class Subspace:
    """A point of the linear Grassmannian ``G_{n-k,n}`` with explicit frames."""

    n: int
    k: int
    frame: np.ndarray  # (n, n) orthogonal; columns [H | H_perp]

    def __post_init__(self):
        check_dims(self.n, self.k)
        frame = np.array(self.frame, dtype=float)
        if frame.shape != (self.n, self.n):
            raise ParameterError(f"frame must be {self.n}x{self.n}, got {frame.shape}")
        gram = frame.T @ frame
        if np.max(np.abs(gram - np.eye(self.n))) > FRAME_TOL * self.n:
            raise ParameterError("frame vectors are not orthonormal")
        frame.setflags(write=False)
        object.__setattr__(self, "frame", frame)

    @classmethod
    def from_span(cls, vectors, n: int | None = None) -> "Subspace":
        """Build ``H = span(vectors)``; the complement frame is completed by QR."""
        v = np.atleast_2d(np.asarray(vectors, dtype=float))
        n = v.shape[1] if n is None else n
        if v.shape[1] != n:
            raise ParameterError("vectors do not live in R^n")
        dim = np.linalg.matrix_rank(v)
        if dim != v.shape[0]:
            raise ParameterError("spanning vectors are linearly dependent")
        # QR of [v | I] keeps span(v) in the leading columns.
        q, _ = np.linalg.qr(np.hstack([v.T, np.eye(n)]))
        return cls(n=n, k=n - dim, frame=q[:, :n])

    @property
    def basis(self) -> np.ndarray:
        """Columns spanning ``H``, shape ``(n, n-k)``."""
        return self.frame[:, : self.n - self.k]

    @property
    def perp(self) -> np.ndarray:
        """Columns spanning ``H_perp``, shape ``(n, k)``."""
        return self.frame[:, self.n - self.k :]

    def projector(self) -> np.ndarray:
        """Matrix of the orthogonal projection onto ``H_perp``."""
        return self.perp @ self.perp.T

    def embed(self, z) -> np.ndarray:
        """Map frame coordinates in ``H_perp`` to points of ``R^n``."""
        return np.asarray(z, dtype=float) @ self.perp.T

    def same_as(self, other: "Subspace", tol: float = 1e-10) -> bool:
        """Equality on the Grassmannian, i.e. up to rotation of the frames."""
        if (self.n, self.k) != (other.n, other.k):
            return False
        return bool(np.max(np.abs(self.projector() - other.projector())) <= tol)


def project_complement(x, H: Subspace) -> np.ndarray:
    """Coordinates of ``P_{H_perp}(x)`` in the complement frame of ``H``.

    Accepts a single point ``(n,)`` or a batch ``(..., n)``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != H.n:
        raise ParameterError(f"point has dimension {x.shape[-1]}, subspace lives in R^{H.n}")
    return x @ H.perp


@dataclass(frozen=True, eq=False)
class GrassmannQuadrature:
    """Weighted nodes on ``G_{n-k,n}`` approximating the Haar measure."""

    n: int
    k: int
    frames: np.ndarray  # (N, n, n)
    weights: np.ndarray  # (N,)
    total_mass: float
    kind: str = "haar"

    def __post_init__(self):
        check_dims(self.n, self.k)
        frames = np.array(self.frames, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if frames.ndim != 3 or frames.shape[1:] != (self.n, self.n):
            raise ParameterError("frames must have shape (N, n, n)")
        if weights.shape != (frames.shape[0],):
            raise ParameterError("one weight per node required")
        if np.any(weights < 0):
            raise ParameterError("weights must be non-negative")
        if abs(weights.sum() - self.total_mass) > 1e-12 * max(1.0, self.total_mass):
            raise ParameterError("weights do not sum to the total mass")
        frames.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def perp(self) -> np.ndarray:
        """Complement frames, shape ``(N, n, k)``."""
        return self.frames[:, :, self.n - self.k :]

    @property
    def basis(self) -> np.ndarray:
        """Plane frames, shape ``(N, n, n-k)``."""
        return self.frames[:, :, : self.n - self.k]

    @cached_property
    def nodes(self) -> list[Subspace]:
        return [Subspace(self.n, self.k, f) for f in self.frames]


def haar_sample(n: int, k: int, count: int, seed: int) -> GrassmannQuadrature:
    """I.i.d. Haar-distributed subspaces with equal weights.

    Each node is the Q factor of a standard Gaussian matrix with the signs
    of ``diag(R)`` absorbed, which is exactly Haar on ``O(n)``.
    """
    check_dims(n, k)
    if int(count) != count or count < 1:
        raise ParameterError(f"count must be a positive integer, got {count}")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((int(count), n, n))
    q, r = np.linalg.qr(a)
    signs = np.sign(np.diagonal(r, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    q = q * signs[:, None, :]
    mass = grassmann_mass(n, k)
    weights = np.full(int(count), mass / count)
    weights[-1] = mass - weights[:-1].sum()
    return GrassmannQuadrature(n, k, q, weights, mass, kind="haar")


def _complete_frame(d: np.ndarray) -> np.ndarray:
    """Orthogonal matrices whose first column is each row of ``d``."""
    n = d.shape[1]
    out = np.empty((d.shape[0], n, n))
    for i, v in enumerate(d):
        q, r = np.linalg.qr(np.column_stack([v, np.eye(n)]))
        q = q[:, :n]
        if r[0, 0] < 0:
            q = -q
        out[i] = q
    return out


def grassmann_grid(n: int, k: int, count: int) -> GrassmannQuadrature:
    """Deterministic product rule on ``G_{n-k,n}`` for hyperplanes and lines, ``n <= 3``.

    ``n = 2`` uses midpoint angles on ``[0, pi)``.  ``n = 3`` integrates
    the unit normal (``k = 1``) or direction (``k = 2``) over ``S^2`` with
    Gauss-Legendre in the polar cosine times a uniform azimuth rule; the
    node count is rounded to ``2 m^2``.
    """
    check_dims(n, k)
    if count < 1:
        raise ParameterError("count must be positive")
    mass = grassmann_mass(n, k)
    if n == 2:
        th = np.pi * (np.arange(count) + 0.5) / count
        u = np.column_stack([np.cos(th), np.sin(th)])
        frames = np.stack([np.column_stack([[-s, c], [c, s]]) for c, s in u])
        weights = np.full(count, mass / count)
    elif n == 3:
        pts, w = sphere_rule(2, count)
        d = _complete_frame(pts)
        if k == 1:
            # normal is the complement: move it to the last column
            frames = np.concatenate([d[:, :, 1:], d[:, :, :1]], axis=2)
        else:
            frames = d
        weights = mass * w / w.sum()
    else:
        raise ParameterError("deterministic grid only implemented for n <= 3; use haar_sample")
    weights[-1] = mass - weights[:-1].sum()
    return GrassmannQuadrature(n, k, frames, weights, mass, kind="grid")


def sphere_rule(m: int, count: int, rng: np.random.Generator | None = None):
    """Nodes and weights on ``S^m`` whose weights sum to ``|S^m|``.

    Exact-type rules for ``m <= 2``; uniform Monte Carlo otherwise.
    """
    if count < 1:
        raise ParameterError("sphere quadrature budget must be positive")
    if m == 0:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if m == 1:
        t = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(t), np.sin(t)]), np.full(count, 2 * np.pi / count)
    if m == 2:
        mp = max(1, int(round(np.sqrt(count / 2))))
        x, w = leggauss(mp)
        ph = 2 * np.pi * np.arange(2 * mp) / (2 * mp)
        ct, cp = np.meshgrid(x, ph, indexing="ij")
        st = np.sqrt(1 - ct**2)
        pts = np.stack([st * np.cos(cp), st * np.sin(cp), ct], axis=-1).reshape(-1, 3)
        wts = np.repeat(w * (2 * np.pi / (2 * mp)), 2 * mp)
        return pts, wts
    rng = np.random.default_rng(0) if rng is None else rng
    g = rng.standard_normal((count, m + 1))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g, np.full(count, sphere_volume(m) / count)


@dataclass(frozen=True)
class SphereQuadSpec:
    """Budgets for :func:`bispherical_integrate`."""

    beta_nodes: int = 48
    sphere_nodes: int = 64
    seed: int = 0


def bispherical_integrate(f, n: int, k: int, quad: SphereQuadSpec = SphereQuadSpec()) -> float:
    """Integrate ``f`` over ``S^{n-1}`` in bi-spherical coordinates.

    Points are ``cos(b) theta + sin(b) omega`` with ``theta`` on the unit
    sphere of the first ``n - k`` coordinates and ``omega`` on that of the
    last ``k``; the Jacobian is ``sin^{k-1}(b) cos^{n-k-1}(b)``.
    ``f`` maps an ``(M, n)`` array of unit vectors to ``(M,)`` values.
    """
    check_dims(n, k)
    if quad.beta_nodes < 1 or quad.sphere_nodes < 1:
        raise ParameterError("quadrature budget must be positive")
    rng = np.random.default_rng(quad.seed)
    th, wth = sphere_rule(n - k - 1, quad.sphere_nodes, rng)
    om, wom = sphere_rule(k - 1, quad.sphere_nodes, rng)
    x, w = leggauss(quad.beta_nodes)
    beta = 0.25 * np.pi * (x + 1)
    wb = 0.25 * np.pi * w * np.sin(beta) ** (k - 1) * np.cos(beta) ** (n - k - 1)
    total = 0.0
    for b, wbeta in zip(beta, wb):
        pts = np.concatenate(
            [
                np.repeat(np.cos(b) * th, len(om), axis=0),
                np.tile(np.sin(b) * om, (len(th), 1)),
            ],
            axis=1,
        )
        vals = np.asarray(f(pts), dtype=float)
        total += wbeta * np.sum(vals * np.outer(wth, wom).ravel())
    return float(total)
