"""Composite Gauss-Legendre rules on unit panels."""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInput

_CACHE: dict = {}


def gauss_legendre(n: int):
    """Nodes and weights on [-1, 1], cached per order."""
    if n not in _CACHE:
        _CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _CACHE[n]


def panel_rule(a: float, b: float, nodes_per_unit: int = 64):
    """Composite rule on [a, b] split into panels of length at most 1.

    Returns ``(t, w)`` with ``sum(w * f(t)) ~ integral_a^b f``.
    """
    if b < a:
        raise InvalidInput("integration interval is reversed")
    if b == a:
        return np.array([]), np.array([])
    npanels = max(1, math.ceil(b - a - 1e-12))
    edges = np.linspace(a, b, npanels + 1)
    x, w = gauss_legendre(nodes_per_unit)
    ts, ws = [], []
    for k in range(npanels):
        lo, hi = edges[k], edges[k + 1]
        half = (hi - lo) / 2.0
        ts.append(lo + half * (x + 1.0))
        ws.append(half * w)
    return np.concatenate(ts), np.concatenate(ws)
