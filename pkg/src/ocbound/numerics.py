"""Small deterministic numerical primitives shared across the package."""

from __future__ import annotations

import numpy as np
from scipy.stats import qmc

_INV_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def composite_simpson(values: np.ndarray, step: float) -> float:
    """Composite Simpson quadrature on a uniform grid with an odd node count."""
    values = np.asarray(values, dtype=float)
    if values.size < 3 or values.size % 2 == 0:
        raise ValueError("Simpson rule needs an odd number of nodes (>= 3)")
    odd = values[1:-1:2].sum()
    even = values[2:-1:2].sum()
    return float(step / 3.0 * (values[0] + 4.0 * odd + 2.0 * even + values[-1]))


def trapezoid(values: np.ndarray, step: float) -> float:
    values = np.asarray(values, dtype=float)
    return float(step * (values.sum() - 0.5 * (values[0] + values[-1])))


def cumulative_trapezoid(values: np.ndarray, step: float) -> np.ndarray:
    """Running trapezoid integral with a leading zero, same length as values."""
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    out[0] = 0.0
    np.cumsum(step * 0.5 * (values[1:] + values[:-1]), out=out[1:])
    return out


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-12,
                       max_iter: int = 120) -> tuple[float, float]:
    """Maximize a scalar function on [lo, hi].

    Golden-section search assuming near-unimodality on the bracket; the
    best point ever evaluated (including both endpoints) is returned, so the
    result can never be worse than a plain endpoint comparison.
    """
    if hi < lo:
        lo, hi = hi, lo
    best_x, best_f = lo, f(lo)
    fhi = f(hi)
    if fhi > best_f:
        best_x, best_f = hi, fhi
    a, b = lo, hi
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for x, fx in ((c, fc), (d, fd)):
        if fx > best_f:
            best_x, best_f = x, fx
    for _ in range(max_iter):
        if abs(b - a) <= tol * (1.0 + abs(a) + abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = f(c)
            if fc > best_f:
                best_x, best_f = c, fc
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = f(d)
            if fd > best_f:
                best_x, best_f = d, fd
    return best_x, best_f


def halton_points(dim: int, count: int, seed: int) -> np.ndarray:
    """Scrambled Halton sample of shape (count, dim) in the unit cube."""
    sampler = qmc.Halton(d=dim, scramble=True, seed=seed)
    return sampler.random(count)


def ball_from_unit(points: np.ndarray, radius: float) -> np.ndarray:
    """Map unit-cube rows to the Euclidean ball of the given radius.

    dim == 1 uses the plain interval map.  Higher dimensions use the
    Gaussian-to-ball transform x = g/|g| * F_chi(|g|)^(1/dim), which is
    measure-preserving and fully deterministic.
    """
    from scipy.stats import chi, norm

    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    dim = pts.shape[1]
    if dim == 1:
        return radius * (2.0 * pts - 1.0)
    gauss = norm.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    norms = np.linalg.norm(gauss, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    radial = chi.cdf(norms, df=dim) ** (1.0 / dim)
    return radius * radial * gauss / norms


def unit_directions(dim: int, count: int, seed: int) -> np.ndarray:
    """Deterministic well-spread unit vectors, shape (count, dim)."""
    from scipy.stats import norm

    if dim == 1:
        signs = np.ones((count, 1))
        signs[1::2, 0] = -1.0
        return signs
    pts = halton_points(dim, count, seed)
    gauss = norm.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    norms = np.linalg.norm(gauss, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return gauss / norms
