"""Shared numerical kernels: adaptive quadrature, bracketed roots, eigensolve.

The quadrature is an adaptive Gauss-Kronrod (G7/K15) bisection scheme with an
explicit recursion bound, so that failure modes surface as errors carrying
the best available estimate instead of silently degraded results.  Root
finding wraps Brent's method; the symmetric eigensolver wraps LAPACK behind
a strict symmetry check.  All functions are pure and safe to call
concurrently.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq


class NumericalError(RuntimeError):
    """Base class for numerical failures raised by this package."""


class NoBracketError(NumericalError):
    """The supplied interval does not bracket a sign change."""


class QuadratureError(NumericalError):
    """Adaptive quadrature exhausted its recursion depth.

    Attributes:
        estimate: best available value of the integral.
        error_bound: accumulated error estimate of ``estimate``.
    """

    def __init__(self, message: str, estimate: float, error_bound: float):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for ``integrate``.

    Attributes:
        abs_tol: absolute tolerance on the returned value.
        max_depth: bisection recursion bound.
        singular_window: half-width around removable singularities inside
            which integrand builders substitute the series limit.  The
            integrands shipped with this package are written in globally
            stable kernel-sum form and never divide by a vanishing factor,
            so the window is a safety margin reserved for user integrands.
    """

    abs_tol: float = 1e-10
    max_depth: int = 40
    singular_window: float = 1e-4

    def __post_init__(self) -> None:
        if self.abs_tol <= 0:
            raise ValueError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_depth < 10:
            raise ValueError(f"max_depth must be >= 10, got {self.max_depth}")
        if self.singular_window <= 0:
            raise ValueError(f"singular_window must be positive, got {self.singular_window}")


@dataclass(frozen=True)
class RootSpec:
    """Tolerances for bracketed root finding."""

    x_tol: float = 1e-12
    f_tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self) -> None:
        if self.x_tol <= 0 or self.f_tol <= 0:
            raise ValueError("root tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


# 15-point Kronrod extension of 7-point Gauss-Legendre on [-1, 1].
# Odd-indexed nodes are the embedded Gauss nodes.
_XGK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813,
])
_WGK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870,
])


def _gauss_kronrod(f, a: float, b: float) -> tuple[float, float, float]:
    """Single-panel K15 estimate, |K15 - G7| error indicator, and the
    integral of |f| (the round-off scale of the panel)."""
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    fx = np.asarray(f(center + half * _XGK), dtype=float)
    kronrod = half * float(np.dot(_WGK, fx))
    gauss = half * float(np.dot(_WG, fx[1::2]))
    resabs = abs(half) * float(np.dot(_WGK, np.abs(fx)))
    return kronrod, abs(kronrod - gauss), resabs


def integrate(f, a: float, b: float, spec: QuadratureSpec | None = None) -> float:
    """Adaptive quadrature of a vectorized real integrand over [a, b].

    ``f`` must accept an ndarray of abscissas and return the integrand
    values; it is never evaluated at the interval endpoints.  Globally
    adaptive: the panel with the largest Kronrod-Gauss discrepancy is
    bisected until the summed error estimate fits ``spec.abs_tol`` (or the
    round-off floor of the integrand, whichever is larger).  No panel is
    bisected more than ``spec.max_depth`` times.

    Raises:
        QuadratureError: if depth runs out while the accumulated error
            estimate still exceeds the budget; the exception carries the
            best estimate and its error bound.
    """
    spec = spec or QuadratureSpec()
    if a == b:
        return 0.0
    eps = np.finfo(float).eps
    value, err, resabs = _gauss_kronrod(f, float(a), float(b))
    # Max-heap of splittable panels keyed by error estimate; panels that hit
    # the depth bound or their round-off floor are frozen with their error.
    active: list[tuple[float, int, float, float, float, float, int]] = []
    counter = 0
    heapq.heappush(active, (-err, counter, float(a), float(b), value, resabs, 0))
    frozen_value = 0.0
    frozen_err = 0.0
    frozen_exhausted = False
    active_err = err
    total_resabs = resabs

    def budget() -> float:
        return max(spec.abs_tol, 50.0 * eps * total_resabs)

    while active and frozen_err + active_err > budget():
        neg_err, _, lo, hi, panel_value, panel_resabs, depth = heapq.heappop(active)
        panel_err = -neg_err
        active_err -= panel_err
        at_floor = panel_err <= 50.0 * eps * panel_resabs \
            or abs(hi - lo) <= 1e-15 * (abs(lo) + abs(hi))
        if depth >= spec.max_depth or at_floor:
            frozen_value += panel_value
            frozen_err += panel_err
            frozen_exhausted = frozen_exhausted or not at_floor
            continue
        mid = 0.5 * (lo + hi)
        for sub_lo, sub_hi in ((lo, mid), (mid, hi)):
            v, e, ra = _gauss_kronrod(f, sub_lo, sub_hi)
            counter += 1
            heapq.heappush(active, (-e, counter, sub_lo, sub_hi, v, ra, depth + 1))
            active_err += e
            total_resabs += ra
        total_resabs -= panel_resabs

    total = frozen_value + sum(item[4] for item in active)
    total_err = frozen_err + active_err
    if frozen_exhausted and total_err > budget():
        raise QuadratureError(
            f"quadrature depth {spec.max_depth} exhausted with error "
            f"estimate {total_err:.3e} > abs_tol {spec.abs_tol:.3e}",
            estimate=total,
            error_bound=total_err,
        )
    return total


def find_root_bracketed(f, lo: float, hi: float, spec: RootSpec | None = None) -> float:
    """Root of ``f`` inside [lo, hi] by Brent's method.

    Requires a sign change (endpoints that are exact zeros are returned
    directly).  The result is within ``spec.x_tol`` of a root.

    Raises:
        NoBracketError: if ``f(lo)`` and ``f(hi)`` have the same sign.
    """
    spec = spec or RootSpec()
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise NoBracketError(
            f"no sign change on [{lo}, {hi}]: f(lo)={flo:.3e}, f(hi)={fhi:.3e}"
        )
    return float(brentq(f, lo, hi, xtol=spec.x_tol, maxiter=spec.max_iter))


def bracket_geometric(f, start: float, step: float, ceiling: float,
                      growth: float = 2.0):
    """Search for a sign change of ``f`` on a geometric ladder of probes.

    Probes start at ``start + step`` (``step`` may be negative) and move away
    from ``start`` with the step scaled by ``growth`` each time, stopping
    once the next probe would pass ``ceiling``.  Returns the bracketing pair
    ``(x_near, x_far)`` ordered by distance from ``start``, or None if no
    sign change was seen.  Bound-state energies can sit exponentially close
    to a band edge, which is what the geometric spacing is for.
    """
    if step == 0:
        raise ValueError("step must be nonzero")
    span = ceiling - start
    if span * step <= 0:
        raise ValueError("ceiling must lie on the same side of start as step")
    x_prev = start + step
    f_prev = f(x_prev)
    if f_prev == 0.0:
        return x_prev, x_prev
    offset = step * growth
    while abs(offset) <= abs(span):
        x = start + offset
        fx = f(x)
        if fx == 0.0 or f_prev * fx < 0:
            return x_prev, x
        x_prev, f_prev = x, fx
        offset *= growth
    return None


def symmetric_eigen(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a real
    symmetric matrix.

    Columns of the returned matrix are the eigenvectors.  Complex or
    non-symmetric input is rejected; the residual ``||H v - w v||`` of every
    pair is bounded by LAPACK's backward-stable guarantee, well under
    ``1e-10 * ||H||``.
    """
    m = np.asarray(matrix)
    if np.iscomplexobj(m):
        if np.max(np.abs(m.imag)) > 0:
            raise ValueError("symmetric_eigen requires a real matrix")
        m = m.real
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    scale = np.max(np.abs(m)) if m.size else 0.0
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-13 * max(scale, 1.0)):
        raise ValueError("matrix is not symmetric")
    w, v = np.linalg.eigh(m)
    return w, v
