"""Minimum-norm-point submodular function minimization (optional path).

The brute-force enumerations in ``setfun`` are the mandatory oracle used
by every rate algorithm; this module is an opt-in accelerator for larger
ground sets.  It runs Wolfe's nearest-point algorithm over the base
polytope in floating point and reads the maximal minimizer off the sign
pattern of the minimum-norm point, so callers should treat it as exact
only when the function values are integers with comfortable margins.
"""

from __future__ import annotations

import numpy as np

from .errors import NonConvergence
from .setfun import SetFunction, Value, bit, mask_of

_EPS_CARRY = 1e-10
_EPS_SAME = 1e-9


def _greedy_vertex(f: SetFunction, weights: np.ndarray) -> np.ndarray:
    """Base-polytope vertex minimizing <weights, x> (ascending order)."""
    m = f.m
    order = np.argsort(weights, kind="stable")
    x = np.zeros(m)
    acc = 0
    prev = 0.0
    for i in order:
        acc |= bit(int(i))
        cur = float(f(acc))
        x[int(i)] = cur - prev
        prev = cur
    return x


def _affine_minimizer(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = points.shape[0]
    gram = points @ points.T
    lhs = np.zeros((k + 1, k + 1))
    lhs[0, 1:] = 1.0
    lhs[1:, 0] = 1.0
    lhs[1:, 1:] = gram
    rhs = np.zeros(k + 1)
    rhs[0] = 1.0
    sol = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    lam = sol[1:]
    return lam, lam @ points


def sfm_minnorm(f: SetFunction, max_iter: int = 2000
                ) -> tuple[Value, int]:
    """Minimize a submodular f with f(empty) = 0.

    Returns (minimum value, maximal minimizer mask).  Raises
    NonConvergence when the iteration cap is hit, which on float-valued
    oracles signals a tolerance failure rather than a modelling error.
    """
    m = f.m
    x = _greedy_vertex(f, np.zeros(m))
    points = x.reshape(1, m)
    lam = np.ones(1)

    for _ in range(max_iter):
        q = _greedy_vertex(f, x)
        scale = max(1.0, float(np.max(np.abs(points))) ** 2)
        if float(x @ q) >= float(x @ x) - _EPS_CARRY * scale:
            break
        points = np.vstack([points, q])
        lam = np.append(lam, 0.0)
        while True:
            coeffs, y = _affine_minimizer(points)
            if np.all(coeffs >= -_EPS_SAME):
                lam, x = np.clip(coeffs, 0.0, None), y
                break
            move = lam - coeffs
            with np.errstate(divide="ignore", invalid="ignore"):
                steps = np.where(move > _EPS_SAME, lam / move, np.inf)
            theta = float(np.min(steps))
            lam = (1 - theta) * lam + theta * coeffs
            keep = lam > _EPS_SAME
            if keep.all():
                keep[int(np.argmin(lam))] = False
            points = points[keep]
            lam = lam[keep]
            lam = lam / lam.sum()
            x = lam @ points
    else:
        raise NonConvergence(f"min-norm point not found in {max_iter} iterations")

    minimizer = mask_of(i for i in range(m) if x[i] <= _EPS_SAME)
    best_mask = minimizer
    best_val = f(minimizer)
    # The sign pattern can be off by borderline coordinates; also try the
    # strict-negative set and pick whichever evaluates lower.
    strict = mask_of(i for i in range(m) if x[i] < -_EPS_SAME)
    if f(strict) < best_val:
        best_val, best_mask = f(strict), strict
    if f(0) < best_val:
        best_val, best_mask = f(0), 0
    return best_val, best_mask
