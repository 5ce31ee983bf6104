"""Nonlinear least-squares engine and the model shapes used by the scans.

Plain Levenberg-Marquardt with multiplicative damping.  The x axis is
normalized internally by its span and y by its largest magnitude so the
normal equations stay well conditioned; results are reported in user units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FitModel",
    "FitResult",
    "FitError",
    "levenberg_marquardt",
    "lorentzian_model",
    "gaussian_model",
    "gaussian_sum2_model",
    "fit_lorentzian",
    "fit_gaussian_sum2",
]


class FitError(RuntimeError):
    """Raised when a fit cannot be initialized or refuses to converge."""


@dataclass(frozen=True)
class FitModel:
    """A parametric curve: y = eval(params, x), with analytic Jacobian."""

    name: str
    arity: int
    eval: callable                   # (params, x) -> y
    jacobian: callable               # (params, x) -> (len(x), arity)


@dataclass(frozen=True)
class FitResult:
    params: np.ndarray
    residual_rms: float
    converged: bool
    iterations: int
    param_errors: np.ndarray = field(repr=False)
    flags: tuple = ()

    def __getitem__(self, i):
        return self.params[i]


# ---------------------------------------------------------------------------
# model shapes
# ---------------------------------------------------------------------------

def _lorentz_eval(p, x):
    c, w, a, o = p
    u = 2.0 * (x - c) / w
    return o + a / (1.0 + u * u)


def _lorentz_jac(p, x):
    c, w, a, o = p
    u = 2.0 * (x - c) / w
    d = 1.0 + u * u
    J = np.empty((len(x), 4))
    J[:, 0] = a * (4.0 * u / w) / (d * d)
    J[:, 1] = a * (2.0 * u * u / w) / (d * d)
    J[:, 2] = 1.0 / d
    J[:, 3] = 1.0
    return J


lorentzian_model = FitModel("lorentzian", 4, _lorentz_eval, _lorentz_jac)
# parameters: center, fwhm, amplitude, offset


def _gauss_eval(p, x):
    c, s, a, o = p
    u = (x - c) / s
    return o + a * np.exp(-0.5 * u * u)


def _gauss_jac(p, x):
    c, s, a, o = p
    u = (x - c) / s
    g = np.exp(-0.5 * u * u)
    J = np.empty((len(x), 4))
    J[:, 0] = a * g * u / s
    J[:, 1] = a * g * u * u / s
    J[:, 2] = g
    J[:, 3] = 1.0
    return J


gaussian_model = FitModel("gaussian", 4, _gauss_eval, _gauss_jac)
# parameters: center, sigma, amplitude, offset


def _gauss2_eval(p, x):
    c1, s1, a1, c2, s2, a2, o = p
    u1 = (x - c1) / s1
    u2 = (x - c2) / s2
    return o + a1 * np.exp(-0.5 * u1 * u1) + a2 * np.exp(-0.5 * u2 * u2)


def _gauss2_jac(p, x):
    J = np.empty((len(x), 7))
    for block, (ic, isig, ia) in enumerate(((0, 1, 2), (3, 4, 5))):
        c, s, a = p[ic], p[isig], p[ia]
        u = (x - c) / s
        g = np.exp(-0.5 * u * u)
        J[:, ic] = a * g * u / s
        J[:, isig] = a * g * u * u / s
        J[:, ia] = g
    J[:, 6] = 1.0
    return J


gaussian_sum2_model = FitModel("gaussian_sum2", 7, _gauss2_eval, _gauss2_jac)
# parameters: c1, sigma1, a1, c2, sigma2, a2, offset


# ---------------------------------------------------------------------------
# Levenberg-Marquardt
# ---------------------------------------------------------------------------

def levenberg_marquardt(model: FitModel, xs, ys, init, tol: float = 1e-10,
                        max_iter: int = 200) -> FitResult:
    """Damped Gauss-Newton iteration returning the best-seen parameters.

    Damping is multiplied by 10 when a trial step increases the cost and
    divided by 10 on acceptance.  Stops when the relative cost change or the
    gradient infinity-norm (in normalized coordinates) falls below tol.
    Singular normal equations at every damping yield converged=False rather
    than an exception.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    p = np.asarray(init, dtype=float).copy()
    if len(p) != model.arity:
        raise ValueError(f"{model.name} expects {model.arity} parameters, got {len(p)}")
    if len(xs) != len(ys):
        raise ValueError("xs and ys must have equal length")
    if len(xs) < model.arity:
        raise ValueError("need at least as many points as parameters")
    if not np.all(np.isfinite(p)):
        raise ValueError("initial parameters must be finite")

    y_scale = float(np.max(np.abs(ys))) or 1.0

    def residual(params):
        r = (model.eval(params, xs) - ys) / y_scale
        return r, float(r @ r)

    r, cost = residual(p)
    lam = 1e-3
    best_p, best_cost = p.copy(), cost
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        J = model.jacobian(p, xs) / y_scale
        grad = J.T @ r
        hess = J.T @ J
        diag = np.diag(hess).copy()
        diag[diag <= 0] = max(diag.max(), 1e-300)
        accepted = False
        rel_drop = np.inf
        for _ in range(40):
            try:
                step = np.linalg.solve(hess + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                if lam > 1e12:
                    break
                continue
            if not np.all(np.isfinite(step)):
                lam *= 10.0
                if lam > 1e12:
                    break
                continue
            r_try, cost_try = residual(p + step)
            if cost_try < cost:
                rel_drop = (cost - cost_try) / max(cost, 1e-300)
                p = p + step
                r, cost = r_try, cost_try
                lam = max(lam * 0.1, 1e-13)
                accepted = True
                break
            lam *= 10.0
            if lam > 1e12:
                break
        if cost < best_cost:
            best_cost, best_p = cost, p.copy()
        if not accepted:
            # singular or stuck at every damping: report best seen
            converged = np.max(np.abs(grad)) < max(tol, 1e-8)
            break
        if rel_drop < tol or np.max(np.abs(grad)) < tol:
            converged = True
            break

    rms = y_scale * np.sqrt(best_cost / len(xs))
    errors = _param_errors(model, best_p, xs, ys, best_cost * y_scale * y_scale)
    return FitResult(params=best_p, residual_rms=rms, converged=converged,
                     iterations=iterations, param_errors=errors)


def _param_errors(model, p, xs, ys, sq_cost):
    """Linearized covariance diagonal; inf where the fit is degenerate."""
    dof = max(len(xs) - model.arity, 1)
    try:
        J = model.jacobian(p, xs)
        cov = np.linalg.inv(J.T @ J) * (sq_cost / dof)
        d = np.diag(cov).copy()
        d[d < 0] = np.inf
        return np.sqrt(d)
    except np.linalg.LinAlgError:
        return np.full(model.arity, np.inf)


# ---------------------------------------------------------------------------
# auto-initialized fits
# ---------------------------------------------------------------------------

def _half_max_width(xs, ys, i_peak, offset):
    half = offset + 0.5 * (ys[i_peak] - offset)
    lo = i_peak
    while lo > 0 and ys[lo] > half:
        lo -= 1
    hi = i_peak
    while hi < len(ys) - 1 and ys[hi] > half:
        hi += 1
    if lo == i_peak or hi == i_peak or ys[lo] > half or ys[hi] > half:
        raise FitError("no half-maximum crossing inside the fit window")

    def cross(j, k):
        return xs[j] + (half - ys[j]) * (xs[k] - xs[j]) / (ys[k] - ys[j])

    return cross(hi - 1, hi) - cross(lo + 1, lo)


def fit_lorentzian(xs, ys, tol: float = 1e-10, max_iter: int = 200) -> FitResult:
    """Fit center/fwhm/amplitude/offset, auto-initialized from the data."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 8:
        raise FitError("need at least 8 points spanning the half-maximum crossings")
    i_peak = int(np.argmax(ys))
    n_tail = max(len(ys) // 8, 2)
    offset0 = float(np.median(np.sort(ys)[:n_tail]))
    width0 = _half_max_width(xs, ys, i_peak, offset0)
    init = [xs[i_peak], width0, ys[i_peak] - offset0, offset0]
    result = levenberg_marquardt(lorentzian_model, xs, ys, init, tol, max_iter)
    # width enters squared; report its magnitude
    params = result.params.copy()
    params[1] = abs(params[1])
    return FitResult(params=params, residual_rms=result.residual_rms,
                     converged=result.converged, iterations=result.iterations,
                     param_errors=result.param_errors, flags=result.flags)


def _local_maxima(ys):
    return [i for i in range(1, len(ys) - 1) if ys[i - 1] < ys[i] >= ys[i + 1]]


def fit_gaussian_sum2(xs, ys, separation_hint: float | None = None,
                      tol: float = 1e-10, max_iter: int = 200) -> FitResult:
    """Fit a sum of two Gaussians plus offset (7 parameters).

    The second center is seeded from separation_hint when supplied, else from
    the two largest separated local maxima.  If no second lobe is resolvable
    the fit falls back to a single-Gaussian-like init and is flagged
    'degenerate-lobes'.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 14:
        raise FitError("need at least 14 points for a two-Gaussian fit")
    order = np.argsort(xs)
    xs, ys = xs[order], ys[order]
    n_tail = max(len(ys) // 8, 2)
    offset0 = float(np.median(np.sort(ys)[:n_tail]))
    i_peak = int(np.argmax(ys))
    a0 = ys[i_peak] - offset0
    span = xs[-1] - xs[0]
    try:
        sigma0 = _half_max_width(xs, ys, i_peak, offset0) / 2.3548200450309493
    except FitError:
        sigma0 = span / 6.0

    flags = ()
    if separation_hint is not None:
        c1, c2 = xs[i_peak], xs[i_peak] + separation_hint
        a2 = 0.5 * a0
    else:
        maxima = sorted(_local_maxima(ys), key=lambda i: ys[i], reverse=True)
        distinct = [i for i in maxima[1:] if abs(xs[i] - xs[maxima[0]]) > 2 * sigma0]
        if maxima and distinct:
            c1, c2 = xs[maxima[0]], xs[distinct[0]]
            a2 = ys[distinct[0]] - offset0
        else:
            # indistinguishable lobes: single-Gaussian-like start
            c1, c2 = xs[i_peak], xs[i_peak] + sigma0
            a2 = 0.0
            flags = ("degenerate-lobes",)

    init = [c1, sigma0, a0, c2, sigma0, a2, offset0]
    result = levenberg_marquardt(gaussian_sum2_model, xs, ys, init, tol, max_iter)
    params = result.params.copy()
    params[1] = abs(params[1])
    params[4] = abs(params[4])
    return FitResult(params=params, residual_rms=result.residual_rms,
                     converged=result.converged, iterations=result.iterations,
                     param_errors=result.param_errors, flags=flags + result.flags)
