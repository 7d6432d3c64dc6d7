"""Gaussian dip/bump fits and model-free visibility.

Model::

    R(dT) = B * (1 - V * exp(-(dT - mu)^2 / (2 w^2)))

``V > 0`` is a dip, ``V < 0`` a bump.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from .experiment import ScanResult

MAX_ITER = 10_000
XTOL = 1e-10
V_SOFT_BOUND = 1.05
FLAT_TOL = 1e-12


def gaussian_dip(delays, baseline, visibility, width, center):
    d = np.asarray(delays, dtype=float)
    return baseline * (1 - visibility * np.exp(-((d - center) ** 2) / (2 * width**2)))


@dataclass(frozen=True)
class FitResult:
    baseline: float
    visibility: float
    width: float
    center: float
    rms: float
    converged: bool = True
    degenerate: bool = False
    flags: tuple[str, ...] = field(default=())

    CSV_FIELDS = ("baseline", "visibility", "width", "center", "rms", "converged", "degenerate")

    def csv_header(self) -> str:
        return ",".join(self.CSV_FIELDS)

    def csv_row(self) -> str:
        d = asdict(self)
        return ",".join(repr(d[k]) if isinstance(d[k], float) else str(d[k]) for k in self.CSV_FIELDS)


def _initial_guess(d: np.ndarray, r: np.ndarray) -> tuple[float, float, float, float]:
    n = len(d)
    q = max(1, n // 4)
    baseline = float(np.mean(np.concatenate([r[:q], r[-q:]])))
    dev = r - baseline
    k = int(np.argmax(np.abs(dev)))
    center = float(d[k])
    visibility = float(-dev[k] / baseline)
    half = np.abs(dev) >= abs(dev[k]) / 2
    idx = np.flatnonzero(half)
    span = d[idx.max()] - d[idx.min()]
    step = float(np.min(np.diff(d))) if n > 1 else 1.0
    fwhm = max(span, step)
    width = fwhm / (2 * math.sqrt(2 * math.log(2)))
    return baseline, visibility, width, center


def fit_gaussian_dip(scan: ScanResult, init: tuple[float, float, float, float] | None = None) -> FitResult:
    """Least-squares Gaussian dip fit by Nelder-Mead simplex.

    Parameters are rescaled by the initial guess so that the simplex works
    on order-one numbers; width is fitted through its logarithm to stay
    positive.
    """
    order = np.argsort(scan.delays, kind="stable")
    d = scan.delays[order]
    r = scan.rates[order]
    if len(d) < 8:
        raise ValueError("a dip fit needs at least 8 points")

    mean = float(np.mean(r))
    if mean <= 0 or np.ptp(r) <= FLAT_TOL * abs(mean):
        width = float(np.ptp(d)) or 1.0
        rms = float(np.sqrt(np.mean((r - mean) ** 2)))
        return FitResult(mean, 0.0, width, float(np.mean(d)), rms, True, True, ("degenerate",))

    b0, v0, w0, mu0 = init if init is not None else _initial_guess(d, r)
    scale = float(np.max(np.abs(r)))
    rn = r / scale

    def unpack(x):
        return x[0] * b0, x[1], w0 * math.exp(x[2]), mu0 + x[3] * w0

    def cost(x):
        b, v, w, mu = unpack(x)
        res = gaussian_dip(d, b, v, w, mu) / scale - rn
        return float(res @ res)

    opts = dict(maxiter=MAX_ITER, maxfev=4 * MAX_ITER, xatol=XTOL, fatol=1e-24, adaptive=False)
    x0 = np.array([1.0, v0, 0.0, 0.0])
    best = minimize(cost, x0, method="Nelder-Mead", options=opts)
    # restart from the optimum: a fresh simplex undoes premature collapse
    second = minimize(cost, best.x, method="Nelder-Mead", options=opts)
    converged = bool(second.success)
    if not converged:
        perturbed = second.x * (1 + 1e-3) + 1e-3
        third = minimize(cost, perturbed, method="Nelder-Mead", options=opts)
        second = min((second, third), key=lambda res: res.fun)
        converged = bool(third.success)

    b, v, w, mu = unpack(second.x)
    rms = float(np.sqrt(np.mean((gaussian_dip(d, b, v, w, mu) - r) ** 2)))
    flags = []
    if not converged:
        flags.append("not_converged")
    if abs(v) > V_SOFT_BOUND:
        flags.append("visibility_out_of_bounds")
    return FitResult(float(b), float(v), float(w), float(mu), rms, converged, False, tuple(flags))


def visibility_model_free(scan: ScanResult, baseline_fraction: float = 0.75) -> float:
    """``(B - R(0)) / B`` with ``B`` the mean rate where ``|dT| >= baseline_fraction * max|dT|``."""
    d = scan.delays
    far = np.abs(d)
    region = far >= baseline_fraction * far.max()
    zero = np.flatnonzero(d == 0)
    if zero.size == 0:
        raise ValueError("scan has no point at zero delay")
    if not region.any() or far.max() == 0:
        raise ValueError("scan has no baseline region")
    b = float(np.mean(scan.rates[region]))
    if b <= 0:
        raise ValueError("baseline rate is zero")
    return (b - float(scan.rates[zero[0]])) / b
