"""Levenberg-Marquardt nonlinear least squares with a deterministic
damping schedule.

The Jacobian is built by central finite differences; the damping parameter
starts at 1e-3, divides by 10 on every accepted step and multiplies by 10 on
every rejected one (bounds 1e-12 and 1e12).  Accepted iterations never
increase the residual norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["FitResult", "lm_fit"]

_LAMBDA0 = 1e-3
_LAMBDA_MIN = 1e-12
_LAMBDA_MAX = 1e12
_GTOL = 1e-8
_FD_REL = 1e-6


@dataclass
class FitResult:
    """Outcome of one lm_fit call.

    ``converged`` is set only when the residual gradient norm dropped below
    ``1e-8 * (1 + residual_norm)``; otherwise the iteration or damping budget
    ran out and ``message`` says why.
    """

    parameters: np.ndarray
    residual_norm: float
    jacobian_condition_proxy: float
    iterations: int
    converged: bool
    message: str = ""
    cost_history: tuple = field(default_factory=tuple)


def _jacobian(model, p, x, f0):
    n, m = f0.size, p.size
    jac = np.empty((n, m))
    for j in range(m):
        h = _FD_REL * max(abs(p[j]), 1.0)
        pp = p.copy()
        pm = p.copy()
        pp[j] += h
        pm[j] -= h
        jac[:, j] = (np.asarray(model(pp, x), dtype=float) - np.asarray(model(pm, x), dtype=float)) / (2 * h)
    return jac


def lm_fit(model, xdata, ydata, p0, max_iter: int = 200) -> FitResult:
    """Fit ``ydata ~ model(p, xdata)`` in the least-squares sense.

    Parameters
    ----------
    model : callable
        ``(p, x) -> y`` returning an array matching ``ydata``.
    xdata, ydata : array_like
        Data points; at least as many points as parameters.
    p0 : array_like
        Initial parameter vector.
    max_iter : int
        Iteration budget.

    Returns
    -------
    FitResult
        A singular Jacobian at ``p0`` yields a diagnostic failure
        (``converged=False``), never an exception.
    """
    x = np.asarray(xdata, dtype=float)
    y = np.asarray(ydata, dtype=float)
    p = np.asarray(p0, dtype=float).copy()
    if y.size < p.size:
        raise ValueError(f"need at least {p.size} data points, got {y.size}")

    f = np.asarray(model(p, x), dtype=float)
    r = y - f
    cost = float(r @ r)
    history = [cost]
    lam = _LAMBDA0
    iterations = 0
    message = "iteration budget exhausted"

    jac = _jacobian(model, p, x, f)
    if not np.all(np.isfinite(jac)):
        return FitResult(p, float(np.sqrt(cost)), np.inf, 0, False, "non-finite Jacobian at p0", tuple(history))
    if np.all(np.abs(jac) < 1e-300):
        return FitResult(p, float(np.sqrt(cost)), np.inf, 0, False, "singular Jacobian at p0", tuple(history))

    converged = False
    for iterations in range(1, max_iter + 1):
        jtj = jac.T @ jac
        g = jac.T @ r
        if np.linalg.norm(g, np.inf) < _GTOL * (1.0 + np.sqrt(cost)):
            converged = True
            message = "gradient criterion met"
            break
        stepped = False
        while lam <= _LAMBDA_MAX:
            damped = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-30))
            try:
                delta = np.linalg.solve(damped, g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            p_try = p + delta
            f_try = np.asarray(model(p_try, x), dtype=float)
            r_try = y - f_try
            cost_try = float(r_try @ r_try)
            if np.isfinite(cost_try) and cost_try <= cost:
                p, f, r, cost = p_try, f_try, r_try, cost_try
                history.append(cost)
                lam = max(lam / 10.0, _LAMBDA_MIN)
                stepped = True
                break
            lam *= 10.0
        if not stepped:
            message = "damping limit reached without descent"
            break
        jac = _jacobian(model, p, x, f)

    else:
        iterations = max_iter

    if not converged and np.linalg.norm(jac.T @ r, np.inf) < _GTOL * (1.0 + np.sqrt(cost)):
        converged = True
        message = "gradient criterion met"

    try:
        cond = float(np.linalg.cond(jac))
    except np.linalg.LinAlgError:
        cond = np.inf
    return FitResult(
        parameters=p,
        residual_norm=float(np.sqrt(cost)),
        jacobian_condition_proxy=cond,
        iterations=iterations,
        converged=converged,
        message=message,
        cost_history=tuple(history),
    )
