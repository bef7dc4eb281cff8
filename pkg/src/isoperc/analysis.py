"""Power-law and exponential fits with bootstrap intervals, and the
consistency report for the scaling relations linking the one-arm, two-point
and volume exponents."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import DomainError, ValidationError
from .percsim import ObservableCurve

__all__ = [
    "ExponentFit",
    "ScalingRelation",
    "ScalingReport",
    "fit_exponential",
    "fit_power_law",
    "map_fit",
    "scaling_report",
]

BOOTSTRAP_RESAMPLES = 1000


@dataclass(frozen=True)
class ExponentFit:
    """A fitted exponent with its 95% bootstrap interval.

    For ``kind="power"`` the exponent is the signed log-log slope, so a
    decaying curve fits a negative value.  For ``kind="exponential"`` it is
    the decay rate ``a`` in ``y ~ C exp(-a x)``, positive for decay.  The
    residual is the weighted RMS misfit of log y, comparable between the two
    kinds on the same curve.
    """

    kind: str
    exponent: float
    ci_low: float
    ci_high: float
    amplitude: float
    window: Tuple[float, float]
    residual: float
    n_points: int

    def __post_init__(self):
        if self.kind not in ("power", "exponential"):
            raise ValidationError("fit kind must be 'power' or 'exponential'")
        # the interval always brackets the point estimate
        object.__setattr__(self, "ci_low", min(self.ci_low, self.exponent))
        object.__setattr__(self, "ci_high", max(self.ci_high, self.exponent))
        if not self.window[0] <= self.window[1]:
            raise ValidationError("fit window must be nonempty")

    @property
    def ci_width(self) -> float:
        return self.ci_high - self.ci_low

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "exponent": self.exponent,
            "ci95": [self.ci_low, self.ci_high],
            "amplitude": self.amplitude,
            "window": list(self.window),
            "residual": self.residual,
            "n_points": self.n_points,
        }


def _select_window(curve: ObservableCurve, window):
    x = np.asarray(curve.abscissae, dtype=float)
    y = np.asarray(curve.estimates, dtype=float)
    se = np.asarray(curve.stderrs, dtype=float)
    if window is None:
        # lattice-scale corrections dominate the two smallest scales
        distinct = np.unique(x)
        lo = distinct[2] if len(distinct) > 2 else distinct[0]
        window = (float(lo), float(distinct[-1]))
    lo, hi = float(window[0]), float(window[1])
    keep = (x >= lo - 1e-12) & (x <= hi + 1e-12)
    if keep.sum() < 4:
        raise ValidationError(f"need at least 4 points in the fit window, got {keep.sum()}")
    return x[keep], y[keep], se[keep], (lo, hi)


def _log_sigma(y: np.ndarray, se: np.ndarray) -> np.ndarray:
    """Uncertainty of log y by the delta method, with a floor for exact points."""
    sigma = np.where(y > 0, se / np.maximum(y, 1e-300), np.inf)
    positive = sigma[sigma > 0]
    floor = positive.min() * 1e-3 if len(positive) else 1.0
    return np.maximum(sigma, floor)


def _weighted_line(x: np.ndarray, y: np.ndarray, sigma: np.ndarray):
    w = 1.0 / sigma
    design = np.stack([x * w, w], axis=1)
    sol, *_ = np.linalg.lstsq(design, y * w, rcond=None)
    slope, intercept = float(sol[0]), float(sol[1])
    resid = (y - slope * x - intercept) / sigma
    return slope, intercept, float(np.sqrt(np.mean(resid**2)))


def _fit(curve, window, kind, resamples, rng):
    x, y, se, window = _select_window(curve, window)
    if np.any(y <= 0):
        raise DomainError("fit window contains nonpositive estimates")
    if kind == "power" and np.any(x <= 0):
        raise DomainError("power-law fits need positive abscissae")
    xs = np.log(x) if kind == "power" else x
    ys = np.log(y)
    sigma = _log_sigma(y, se)
    slope, intercept, resid = _weighted_line(xs, ys, sigma)

    if rng is None:
        rng = np.random.default_rng(0)
    elif isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    noisy = se > 0
    if np.any(noisy):
        draws = ys[None, :] + sigma[None, :] * noisy * rng.standard_normal((resamples, len(ys)))
        slopes = np.empty(resamples)
        for i in range(resamples):
            slopes[i], _, _ = _weighted_line(xs, draws[i], sigma)
        lo, hi = np.percentile(slopes, [2.5, 97.5])
    else:
        lo = hi = slope
    if kind == "exponential":
        slope = -slope
        lo, hi = -hi, -lo
    return ExponentFit(
        kind=kind,
        exponent=slope,
        ci_low=float(lo),
        ci_high=float(hi),
        amplitude=float(np.exp(intercept)),
        window=window,
        residual=resid,
        n_points=len(x),
    )


def fit_power_law(curve: ObservableCurve, window=None,
                  resamples: int = BOOTSTRAP_RESAMPLES, rng=None) -> ExponentFit:
    """Weighted least squares on (log x, log y), weights 1/stderr of log y.

    The 95% interval comes from a parametric bootstrap in log space; exact
    curves (all stderrs zero) get a degenerate interval at the estimate.
    """
    return _fit(curve, window, "power", resamples, rng)


def fit_exponential(curve: ObservableCurve, window=None,
                    resamples: int = BOOTSTRAP_RESAMPLES, rng=None) -> ExponentFit:
    """Weighted least squares on (x, log y); returns the decay rate."""
    return _fit(curve, window, "exponential", resamples, rng)


def map_fit(fit: ExponentFit, func: Callable[[float], float]) -> ExponentFit:
    """Push a fit through a monotone reparametrisation, e.g. slope -> -1/slope."""
    ends = sorted([func(fit.ci_low), func(fit.ci_high)])
    return replace(fit, exponent=func(fit.exponent), ci_low=ends[0], ci_high=ends[1])


# ------------------------------------------------------- scaling relations


@dataclass(frozen=True)
class ScalingRelation:
    name: str
    residual: float
    sigma: float
    status: str  # consistent | inconsistent | inconclusive

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "residual": self.residual,
            "sigma": self.sigma,
            "status": self.status,
        }


@dataclass(frozen=True)
class ScalingReport:
    relations: Tuple[ScalingRelation, ScalingRelation]
    consistent: Optional[bool]

    def to_json(self) -> dict:
        return {
            "relations": [r.to_json() for r in self.relations],
            "consistent": self.consistent,
        }


def _fit_sigma(fit: ExponentFit) -> float:
    return fit.ci_width / (2.0 * 1.959963984540054)


def _relation(name, residual, sigma, scale) -> ScalingRelation:
    band = 1.959963984540054 * sigma
    if band > 0.5 * scale:
        status = "inconclusive"
    elif abs(residual) <= band:
        status = "consistent"
    else:
        status = "inconsistent"
    return ScalingRelation(name=name, residual=float(residual), sigma=float(sigma), status=status)


def scaling_report(rho_fit: ExponentFit, eta_fit: ExponentFit,
                   delta_fit: ExponentFit) -> ScalingReport:
    """Check the two exponent relations tying radius, distance and volume tails.

    Inputs are fits of the exponents themselves (one-arm rho, two-point eta,
    volume delta); use map_fit to convert raw tail slopes first.  Each
    relation is consistent when its residual sits inside the propagated 95%
    band, inconsistent when it does not, and inconclusive when that band is
    wider than half the relation's own scale (no power to decide).
    """
    rho, eta, delta = rho_fit.exponent, eta_fit.exponent, delta_fit.exponent
    s_rho, s_eta, s_delta = _fit_sigma(rho_fit), _fit_sigma(eta_fit), _fit_sigma(delta_fit)

    resid1 = eta * rho - 2.0
    sigma1 = np.hypot(eta * s_rho, rho * s_eta)
    rel1 = _relation("eta*rho = 2", resid1, sigma1, scale=2.0)

    resid2 = 2.0 * rho - (delta + 1.0)
    sigma2 = np.hypot(2.0 * s_rho, s_delta)
    rel2 = _relation("2*rho = delta + 1", resid2, sigma2, scale=abs(delta) + 1.0)

    statuses = {rel1.status, rel2.status}
    if "inconsistent" in statuses:
        consistent: Optional[bool] = False
    elif "inconclusive" in statuses:
        consistent = None
    else:
        consistent = True
    return ScalingReport(relations=(rel1, rel2), consistent=consistent)
