"""Conventional lifetime projection from an accelerated aging test.

Pipeline: simulate the drift of operating current for a fleet of devices,
extrapolate each trajectory linearly to a +50 % current increase, place the
resulting failure times on a lognormal probability plot, read the median and
spread off the fitted line, convert to MTTF, and project to other junction
temperatures with the Arrhenius law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .physics import (
    BOLTZMANN_EV_PER_K,
    DomainError,
    LaserCurveConfig,
    OperatingCondition,
    arrhenius_project,
    derive_state,
)


class NoDegradationError(ValueError):
    """The fitted current drift is not increasing, so no failure time exists."""


@dataclass(frozen=True)
class AgingTestConfig:
    n_devices: int = 25
    duration_hours: float = 5000.0
    sample_interval_hours: float = 100.0
    tc_c: float = 70.0
    pop_mw: float = 10.0
    mu_ln_hours: float = math.log(1.8e5)
    sigma_ln: float = 0.4
    noise_rel: float = 0.001
    seed: int = 0
    threshold_fraction: float = 0.5
    plotting_positions: str = "median"

    def validate(self) -> "AgingTestConfig":
        if self.n_devices < 3:
            raise ValueError(f"n_devices must be >= 3, got {self.n_devices}")
        if not self.duration_hours > 0:
            raise ValueError("duration_hours must be > 0")
        if not 0 < self.sample_interval_hours <= self.duration_hours:
            raise ValueError("sample_interval_hours must be in (0, duration_hours]")
        if self.sigma_ln < 0 or self.noise_rel < 0:
            raise ValueError("sigma_ln and noise_rel must be >= 0")
        if self.plotting_positions not in PLOTTING_POSITIONS:
            raise ValueError(
                f"plotting_positions must be one of {sorted(PLOTTING_POSITIONS)}"
            )
        OperatingCondition(self.tc_c, self.pop_mw)
        return self


@dataclass
class DeviceTrajectory:
    device_id: int
    t_hours: np.ndarray
    iop_ma: np.ndarray
    initial_iop_ma: float
    true_failure_hours: float = math.nan


# -- inverse normal CDF -----------------------------------------------------

# rational approximation coefficients (P. J. Acklam), refined by one Halley step
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def _lower_tail_quantile(p: float) -> float:
    """Quantile for 0 < p <= 0.5, refined against erfc for full precision."""
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    else:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        )
    for _ in range(2):
        e = 0.5 * math.erfc(-x / _SQRT2) - p
        u = e * _SQRT2PI * math.exp(0.5 * x * x)
        x = x - u / (1.0 + 0.5 * x * u)
    return x


def inv_norm_cdf(p: float) -> float:
    """Standard normal quantile function."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return _lower_tail_quantile(p)
    # 1 - p is exact for p > 0.5 in binary floating point
    return -_lower_tail_quantile(1.0 - p)


def norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / _SQRT2)


# -- aging simulation and extrapolation --------------------------------------


def simulate_aging(
    cfg: AgingTestConfig = AgingTestConfig(),
    curves: LaserCurveConfig = LaserCurveConfig(),
) -> list[DeviceTrajectory]:
    """Synthetic constant-power aging test.

    Every device starts at the operating current the curves give for the test
    condition and drifts linearly so that it reaches +50 % at its own
    lognormally distributed failure time.  Samples carry multiplicative
    Gaussian measurement noise.
    """
    cfg.validate()
    iop0 = derive_state(OperatingCondition(cfg.tc_c, cfg.pop_mw), curves).iop_ma
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    n_steps = int(math.floor(cfg.duration_hours / cfg.sample_interval_hours + 1e-9))
    t = np.arange(n_steps + 1) * cfg.sample_interval_hours
    t_fail = np.exp(cfg.mu_ln_hours + cfg.sigma_ln * rng.standard_normal(cfg.n_devices))
    out = []
    for k in range(cfg.n_devices):
        clean = iop0 * (1.0 + cfg.threshold_fraction * t / t_fail[k])
        noise = rng.standard_normal(t.size)
        iop = clean * (1.0 + cfg.noise_rel * noise) if cfg.noise_rel > 0 else clean
        out.append(DeviceTrajectory(k, t.copy(), iop, iop0, float(t_fail[k])))
    return out


def extrapolate_failure_time(traj: DeviceTrajectory, threshold_fraction: float = 0.5) -> float:
    """Time at which the least-squares drift line reaches (1 + threshold) * I_op0."""
    t = np.asarray(traj.t_hours, dtype=np.float64)
    i = np.asarray(traj.iop_ma, dtype=np.float64)
    if t.size < 2:
        raise ValueError(f"device {traj.device_id}: need >= 2 samples, got {t.size}")
    tc = t - t.mean()
    slope = float(np.dot(tc, i - i.mean()) / np.dot(tc, tc))
    if not slope > 0:
        raise NoDegradationError(
            f"device {traj.device_id}: fitted I_op slope {slope:.3g} mA/h is not positive"
        )
    intercept = float(i.mean() - slope * t.mean())
    return ((1.0 + threshold_fraction) * traj.initial_iop_ma - intercept) / slope


# -- lognormal probability plot ---------------------------------------------

PLOTTING_POSITIONS = {
    "median": lambda i, n: (i - 0.5) / n,
    "benard": lambda i, n: (i - 0.3) / (n + 0.4),
}


@dataclass
class LognormalFit:
    mu: float
    sigma: float
    tm_hours: float
    t1_hours: float
    failure_times: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    cumulative_fraction: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    z: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    @property
    def ln_t(self) -> np.ndarray:
        return np.log(self.failure_times)

    @property
    def fitted_ln_t(self) -> np.ndarray:
        return self.mu + self.sigma * self.z

    def report(self) -> dict:
        return {
            "mu": self.mu,
            "sigma": self.sigma,
            "tm_hours": self.tm_hours,
            "t1_hours": self.t1_hours,
            "mttf_hours": mttf_from_lognormal(self),
        }


def lognormal_probability_fit(failure_times_hours, positions: str = "median") -> LognormalFit:
    """Least-squares line of ln(t) against the normal quantile of the plotting position.

    The intercept is ln(t_m) and the slope is sigma; ``t1_hours`` is read at
    z = -1 (Phi(-1) = 15.87 %), so sigma = ln(t_m / t_1) holds exactly.
    """
    t = np.sort(np.asarray(failure_times_hours, dtype=np.float64).ravel())
    if t.size < 3:
        raise ValueError(f"need >= 3 failure times, got {t.size}")
    if not np.all(t > 0) or not np.all(np.isfinite(t)):
        raise DomainError("failure times must be positive and finite")
    n = t.size
    rank = PLOTTING_POSITIONS[positions]
    F = np.array([rank(i, n) for i in range(1, n + 1)])
    z = np.array([inv_norm_cdf(f) for f in F])
    lt = np.log(t)
    zc = z - z.mean()
    sigma = float(np.dot(zc, lt - lt.mean()) / np.dot(zc, zc))
    mu = float(lt.mean() - sigma * z.mean())
    if abs(sigma) < 1e-15 * max(1.0, abs(mu)):
        sigma = 0.0
    tm = math.exp(mu)
    return LognormalFit(mu, sigma, tm, tm * math.exp(-sigma), t, F, z)


def lognormal_mttf(tm_hours: float, sigma: float) -> float:
    return tm_hours * math.exp(0.5 * sigma * sigma)


def mttf_from_lognormal(fit: LognormalFit) -> float:
    return lognormal_mttf(fit.tm_hours, fit.sigma)


def conventional_predict(
    aging_fit_mttf_hours: float,
    tj_test_k: float,
    tj_target_k: float,
    ea_ev: float,
    hours_per_year: float = 8760.0,
    kb_ev_per_k: float = BOLTZMANN_EV_PER_K,
) -> float:
    """Arrhenius-only projection of the aging-test MTTF, in years."""
    return arrhenius_project(aging_fit_mttf_hours, tj_test_k, tj_target_k, ea_ev, kb_ev_per_k) / hours_per_year


@dataclass
class AgingResult:
    trajectories: list[DeviceTrajectory]
    failure_times: np.ndarray
    fit: LognormalFit
    tj_test_k: float

    @property
    def mttf_hours(self) -> float:
        return mttf_from_lognormal(self.fit)


def run_aging_test(
    cfg: AgingTestConfig = AgingTestConfig(),
    curves: LaserCurveConfig = LaserCurveConfig(),
) -> AgingResult:
    trajs = simulate_aging(cfg, curves)
    times = np.array([extrapolate_failure_time(tr, cfg.threshold_fraction) for tr in trajs])
    fit = lognormal_probability_fit(times, cfg.plotting_positions)
    tj = derive_state(OperatingCondition(cfg.tc_c, cfg.pop_mw), curves).tj_k
    return AgingResult(trajs, times, fit, tj)
