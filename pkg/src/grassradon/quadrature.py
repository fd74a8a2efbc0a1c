"""Composite Gauss-Legendre rules on intervals and boxes."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ParameterError


@lru_cache(maxsize=64)
def _leggauss(m: int):
    x, w = leggauss(m)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gl_rule(lo: float, hi: float, nodes: int, panels: int = 1):
    """Composite Gauss-Legendre on ``[lo, hi]`` with ``nodes`` points in total."""
    if nodes < 2 or panels < 1:
        raise ParameterError("need at least two nodes and one panel")
    per = max(1, nodes // panels)
    x, w = _leggauss(per)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return pts, wts


def tensor_rule(dim: int, radius: float, nodes: int, panels: int = 1, center=None):
    """Tensor composite Gauss-Legendre on the cube ``center + [-radius, radius]^dim``.

    Returns points ``(P, dim)`` and weights ``(P,)``; ``dim = 0`` gives the
    single point of ``R^0`` with weight 1.
    """
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    x, w = gl_rule(-radius, radius, nodes, panels)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wts = np.ones(1)
    for _ in range(dim):
        wts = np.multiply.outer(wts, w).ravel()
    if center is not None:
        pts = pts + np.asarray(center, dtype=float)
    return pts, wts
