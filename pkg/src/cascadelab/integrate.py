"""Adaptive integration of the cascade system.

Dormand-Prince 5(4) embedded pair with a PI step-size controller and the
first-same-as-last optimization.  Integration is single-threaded and fully
deterministic: identical config, initial state, and tolerances give a
bit-identical trajectory.

Termination is threefold:

* ``completed``        -- reached ``t_end``;
* ``blowup_detected``  -- the energy-weighted norm ``sum lam**(2n) X**2``
                          crossed its guard (``guard_factor`` times the
                          initial value), or the step size contracted below
                          ``h_min`` with the norm already above the guard.
                          On a finite window the guard crossing is the
                          detection event proper: truncation caps the norm
                          at ``lam**(2 n_max)`` times the conserved energy,
                          so waiting for a literal divergence would instead
                          stall in stiff terminal dynamics;
* ``step_underflow``   -- the step size collapsed while the norm stayed
                          below the guard, i.e. stiffness rather than a
                          blowup surrogate.
"""

from __future__ import annotations

import numpy as np

from .cascade import (CascadeConfig, CascadeState, CascadeTrajectory,
                      STATUS_BLOWUP, STATUS_COMPLETED, STATUS_UNDERFLOW,
                      compiled_rhs)

# Dormand-Prince 5(4) tableau (row-padded stage matrix)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.zeros((7, 7))
_A[1, :1] = [1 / 5]
_A[2, :2] = [3 / 40, 9 / 40]
_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_ERR = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                 -17253 / 339200, 22 / 525, -1 / 40])

_ORDER = 5  # of the propagated solution


def integrate(config: CascadeConfig, initial: CascadeState, t_end: float,
              rel_tol: float = 1e-8, *, abs_tol: float | None = None,
              h_init: float | None = None, h_min: float = 1e-13,
              guard_factor: float = 1e12, max_steps: int = 5_000_000
              ) -> CascadeTrajectory:
    """Integrate the cascade ODE from ``initial`` toward ``t_end``.

    Parameters
    ----------
    rel_tol : float
        Per-step relative error target; must lie in (1e-14, 1e-2).
    abs_tol : float, optional
        Absolute error floor.  Defaults to ``rel_tol * 1e-3`` times the
        initial amplitude scale.
    h_min : float
        Step size below which integration stops and the outcome is
        classified as blowup or underflow.
    guard_factor : float
        Blowup guard on the energy-weighted norm, relative to its initial
        value.
    """
    if not 1e-14 < rel_tol < 1e-2:
        raise ValueError(f"rel_tol must lie in (1e-14, 1e-2), got {rel_tol}")
    if not initial.finite:
        raise ValueError("initial state contains non-finite entries")
    if t_end <= initial.t:
        raise ValueError(f"t_end={t_end} does not lie beyond t0={initial.t}")
    if initial.X.shape != (4, config.n_shells):
        raise ValueError("initial state shape does not match the config window")

    plan = compiled_rhs(config)
    shape = initial.X.shape
    y = initial.X.astype(float).ravel().copy()
    t = float(initial.t)
    scale0 = max(float(np.max(np.abs(y))), 1e-30)
    atol = rel_tol * 1e-3 * scale0 if abs_tol is None else float(abs_tol)
    guard = guard_factor * max(plan.weighted_norm(y.reshape(shape)), 1e-30)

    def rhs_flat(ycur):
        return plan(ycur.reshape(shape)).ravel()

    k = np.empty((7, y.size))
    k[0] = rhs_flat(y)
    if h_init is None:
        # standard magnitude-based starting guess, clipped to the span
        sc = atol + rel_tol * np.abs(y)
        d0 = float(np.sqrt(np.mean((y / sc) ** 2)))
        d1 = float(np.sqrt(np.mean((k[0] / sc) ** 2)))
        h = 0.01 * d0 / d1 if d1 > 0 else 1e-6
        h = min(max(h, 1e-12), t_end - t)
    else:
        h = min(float(h_init), t_end - t)

    samples = [CascadeState(t, y.reshape(shape).copy())]
    err_prev = 1.0
    steps = 0
    status = STATUS_COMPLETED

    while t < t_end:
        if steps >= max_steps:
            status = (STATUS_BLOWUP
                      if plan.weighted_norm(y.reshape(shape)) > guard
                      else STATUS_UNDERFLOW)
            break
        steps += 1
        h = min(h, t_end - t)
        for stage in range(1, 7):
            yi = y + h * (_A[stage, :stage] @ k[:stage])
            k[stage] = rhs_flat(yi)
        y_new = y + h * (_B5 @ k)
        delta = h * (_ERR @ k)

        if np.all(np.isfinite(y_new)):
            scale = atol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean((delta / scale) ** 2)))
        else:
            err = np.inf

        if err <= 1.0:
            t += h
            y = y_new
            k[0] = k[6]  # first-same-as-last
            samples.append(CascadeState(t, y.reshape(shape).copy()))
            if plan.weighted_norm(y.reshape(shape)) > guard:
                status = STATUS_BLOWUP
                break
            err = max(err, 1e-10)
            factor = 0.9 * err ** (-0.7 / _ORDER) * err_prev ** (0.4 / _ORDER)
            err_prev = err
            h *= min(5.0, max(0.2, factor))
        else:
            shrink = 0.9 * err ** (-1.0 / _ORDER) if np.isfinite(err) else 0.1
            h *= min(1.0, max(0.1, shrink))

        if h < h_min and t < t_end:
            status = (STATUS_BLOWUP
                      if plan.weighted_norm(y.reshape(shape)) > guard
                      else STATUS_UNDERFLOW)
            break

    est = samples[-1].t if status == STATUS_BLOWUP else None
    return CascadeTrajectory(samples, status, est)


def rk4_fixed_step(config: CascadeConfig, initial: CascadeState, dt: float,
                   t_max: float, stop_norm: float | None = None
                   ) -> tuple[CascadeState, float | None]:
    """Classical fixed-step RK4 march, independent of the adaptive path.

    Serves as a plain reference integrator: no error control, no step
    adaptation.  If ``stop_norm`` is given, the march halts at the first
    step where the energy-weighted norm reaches it and that time is
    returned as the detection time (``None`` if never reached).
    """
    plan = compiled_rhs(config)
    f = plan
    y = initial.X.astype(float).copy()
    t = float(initial.t)
    half = 0.5 * dt
    sixth = dt / 6.0
    while t < t_max:
        s1 = f(y)
        s2 = f(y + half * s1)
        s3 = f(y + half * s2)
        s4 = f(y + dt * s3)
        y = y + sixth * (s1 + 2.0 * (s2 + s3) + s4)
        t += dt
        if stop_norm is not None:
            w = plan.weighted_norm(y)
            if not np.isfinite(w) or w >= stop_norm:
                return CascadeState(t, y), t
    return CascadeState(t, y), None
