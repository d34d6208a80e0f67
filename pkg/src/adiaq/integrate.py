"""Adaptive Dormand-Prince 5(4) integrator for complex array ODEs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array(_A[6] + [0.0])
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])

SAFETY = 0.9
MAX_GROWTH = 5.0
MIN_SHRINK = 0.1
_BETA = 0.04
_ALPHA = 0.2 - 0.75 * _BETA


class StepLimitError(RuntimeError):
    """The integrator hit ``max_steps`` before reaching the end point."""


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    evaluations: int = 0


def dopri5(f: Callable[[float, np.ndarray], np.ndarray], y0: np.ndarray, t0: float, t1: float,
           rel_tol: float, abs_tol: float, h0: float | None = None, max_steps: int = 10_000_000,
           on_accept: Callable[[float, np.ndarray], np.ndarray | None] | None = None,
           refresh_after_replace: bool = True) -> tuple[np.ndarray, StepStats]:
    """Integrate ``dy/dt = f(t, y)`` from ``t0`` to ``t1``.

    Error control uses the RMS of the embedded error scaled by
    ``abs_tol + rel_tol * max(|y|, |y_new|)``; the step size follows a PI
    controller. ``on_accept(t, y)`` runs after every accepted step and may
    return a replacement for ``y`` (e.g. a re-symmetrised density matrix)
    or raise to abort. With ``refresh_after_replace=False`` the stored
    derivative is kept for a replaced ``y``, which is only sound when the
    replacement is a round-off level correction.
    """
    if rel_tol <= 0 or abs_tol <= 0:
        raise ValueError("tolerances must be positive")
    span = t1 - t0
    y = np.array(y0, dtype=complex)
    stats = StepStats()
    if span == 0:
        return y, stats
    h = abs(span) / 1000 if h0 is None else abs(h0)
    direction = np.sign(span)
    t = t0
    k = [None] * 7
    k[0] = f(t, y)
    stats.evaluations += 1
    err_prev = 1e-4
    while direction * (t1 - t) > 0:
        if stats.accepted + stats.rejected >= max_steps:
            raise StepLimitError(f"exceeded {max_steps} steps at t={t:.6g} of {t1:.6g}")
        last = h >= abs(t1 - t)
        if last:
            h = abs(t1 - t)
        dt = direction * h
        for s in range(1, 7):
            ys = y.copy()
            for j, a in enumerate(_A[s]):
                if a:
                    ys += (dt * a) * k[j]
            if s == 6:
                y_new = ys
            k[s] = f(t + _C[s] * dt, ys)
        stats.evaluations += 6
        err_vec = sum((dt * e) * kj for e, kj in zip(_E, k) if e)
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean(np.abs(err_vec / scale) ** 2)))
        if err <= 1.0:
            stats.accepted += 1
            t = t1 if last else t + dt
            y = y_new
            k[0] = k[6]
            if on_accept is not None:
                replaced = on_accept(t, y)
                if replaced is not None:
                    y = replaced
                    if refresh_after_replace:
                        k[0] = f(t, y)
                        stats.evaluations += 1
            if err == 0.0:
                fac = MAX_GROWTH
            else:
                fac = SAFETY * err ** -_ALPHA * err_prev ** _BETA
            h *= min(MAX_GROWTH, max(MIN_SHRINK, fac))
            err_prev = max(err, 1e-4)
        else:
            stats.rejected += 1
            h *= max(MIN_SHRINK, SAFETY * err ** -0.2)
    return y, stats
