"""Thin wrappers around scipy quadrature and root bracketing that turn
silent accuracy loss into exceptions."""

from __future__ import annotations

import math
from typing import Callable, Iterable

import numpy as np
from scipy import integrate, optimize

from .errors import NoBracket, NonConverged, QuadratureError

EPS = float(np.finfo(float).eps)


def adaptive_quad(
    f: Callable[[float], float],
    a: float,
    b: float,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-30,
    points: Iterable[float] | None = None,
    limit: int = 400,
) -> float:
    """Integrate ``f`` over [a, b]; raise QuadratureError unless the error
    estimate satisfies ``err <= max(atol, rtol*|value|)``."""
    if a == b:
        return 0.0
    pts = None
    if points is not None:
        lo, hi = min(a, b), max(a, b)
        pts = sorted({p for p in points if lo < p < hi})
        if not pts:
            pts = None
    value, err, info = integrate.quad(
        f, a, b, epsabs=atol, epsrel=rtol, limit=limit, points=pts, full_output=1
    )[:3]
    if not math.isfinite(value) or err > max(atol, rtol * abs(value)) * 10.0:
        # quad's estimate is conservative; a 10x margin keeps tolerant of
        # round-off floors while still catching genuine failures
        raise QuadratureError(
            f"quadrature on [{a:g}, {b:g}] reached err={err:.3e} for value={value:.6e} "
            f"(rtol={rtol:g}, evaluations={info.get('neval', '?')})"
        )
    return float(value)


def find_bracket(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    limits: tuple[float, float],
    n_scan: int = 64,
) -> tuple[float, float, float, float]:
    """Locate a sign change of ``f``.

    Scans [lo, hi] on a uniform grid, then widens the interval geometrically
    toward ``limits``. Returns ``(a, b, f(a), f(b))`` with ``f(a)*f(b) <= 0``.
    """
    lmin, lmax = limits
    lo, hi = max(min(lo, hi), lmin), min(max(lo, hi), lmax)
    width = hi - lo
    while True:
        xs = [lo + (hi - lo) * i / n_scan for i in range(n_scan + 1)]
        prev_x, prev_f = xs[0], f(xs[0])
        if prev_f == 0.0:
            return prev_x, prev_x, 0.0, 0.0
        for x in xs[1:]:
            fx = f(x)
            if fx == 0.0 or (fx > 0) != (prev_f > 0):
                return prev_x, x, prev_f, fx
            prev_x, prev_f = x, fx
        if lo <= lmin and hi >= lmax:
            raise NoBracket(f"no sign change in [{lmin:g}, {lmax:g}]")
        width *= 2.0
        lo, hi = max(lo - width / 2, lmin), min(hi + width / 2, lmax)


def brent_root(f: Callable[[float], float], a: float, b: float, *, xtol: float = 1e-15,
               maxiter: int = 200) -> float:
    if a == b:
        return a
    try:
        return float(optimize.brentq(f, a, b, xtol=xtol, rtol=4 * EPS, maxiter=maxiter))
    except RuntimeError as exc:
        raise NonConverged(str(exc)) from exc
