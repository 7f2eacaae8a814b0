"""Named compactly supported forcing profiles for scenario configs.

All profiles vanish identically outside a finite support radius (strictly
inside the grid domain), which is what makes the localization statements
non-vacuous.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .fieldio import field_from_csv
from .grids import ComplexField, Grid


def gaussian_bump(x, amplitude: float, sigma: float, support: float):
    """Gaussian-core bump cut off smoothly at |x| = support.

    amplitude * exp(-(x^2 / (2 sigma^2)) / (1 - (x/support)^2)) inside the
    support and exactly 0 outside; all derivatives vanish at the edge.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < support
    xi = x[inside]
    out[inside] = amplitude * np.exp(
        -(xi * xi / (2.0 * sigma * sigma)) / (1.0 - (xi / support) ** 2))
    return out


def _smooth_transition(s):
    """C-infinity transition: 0 for s <= 0, 1 for s >= 1."""
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        lo = np.where(s > 0.0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
        hi = np.where(s < 1.0, np.exp(-1.0 / np.maximum(1.0 - s, 1e-300)), 0.0)
    return lo / (lo + hi)


def plateau_bump(x, amplitude: float, radius: float, shoulder: float):
    """Flat top of half-width ``radius`` decaying smoothly to 0 over
    ``shoulder``; support is [-(radius+shoulder), radius+shoulder]."""
    x = np.asarray(x, dtype=float)
    return amplitude * _smooth_transition((radius + shoulder - np.abs(x)) / shoulder)


def build_forcing_profile(grid: Grid, spec: dict) -> ComplexField:
    """Forcing profile F = f(1) on grid nodes from a scenario forcing spec."""
    kind = spec["kind"]
    x = grid.nodes
    if kind == "gaussian-bump":
        vals = gaussian_bump(x, spec["amplitude"], spec["sigma"], spec["support"])
        support = spec["support"]
    elif kind == "plateau-bump":
        shoulder = spec.get("shoulder", spec["radius"] / 2.0)
        vals = plateau_bump(x, spec["amplitude"], spec["radius"], shoulder)
        support = spec["radius"] + shoulder
    elif kind == "custom-csv":
        coords, values = field_from_csv(spec["path"])
        vals = np.interp(x, coords, values.real, left=0.0, right=0.0) \
            + 1j * np.interp(x, coords, values.imag, left=0.0, right=0.0)
        nz = np.abs(values) > 0
        support = float(np.max(np.abs(coords[nz]))) if np.any(nz) else 0.0
    else:
        raise ConfigError(f"unknown forcing kind {kind!r}", keys=["forcing.kind"])
    if support >= grid.R:
        raise ConfigError(
            f"forcing support radius {support} must lie strictly inside the "
            f"domain of radius {grid.R}", keys=["forcing"])
    return ComplexField(grid, np.asarray(vals, dtype=complex))
