"""Electro-optical characteristic curves and reliability laws for a DFB laser.

The four datasheet curves (threshold current, slope efficiency, forward
voltage and emission wavelength versus case temperature) are modelled with
the usual closed forms:

    I_th(T) = I_th,ref * exp((T - T_ref) / T0)
    SE(T)   = SE_ref * exp(-(T - T_ref) / T1)
    V(T, I) = V0 + dV/dT * (T - T_ref) + R_s * I
    lam(T)  = lam_ref + dlam/dT * (T - T_ref)

Efficiency is the wall-plug (power-conversion) efficiency and the junction
temperature adds the dissipated electrical power through a lumped thermal
resistance.  Temperatures are degrees Celsius at the interface and Kelvin
inside every reliability formula.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

BOLTZMANN_EV_PER_K = 8.617333262e-5
KELVIN_OFFSET = 273.15

TC_MIN_C = -40.0
TC_MAX_C = 85.0
POP_MAX_MW = 10.0
LAMBDA_MIN_NM = 1530.0
LAMBDA_MAX_NM = 1570.0


class ConfigurationError(ValueError):
    """A curve or reliability parameter produces an unphysical laser state."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


class DomainError(ValueError):
    """A reliability law was evaluated outside its mathematical domain."""


@dataclass(frozen=True)
class OperatingCondition:
    tc_c: float
    pop_mw: float

    def __post_init__(self):
        if not (TC_MIN_C <= self.tc_c <= TC_MAX_C):
            raise DomainError(
                f"case temperature {self.tc_c} C outside [{TC_MIN_C}, {TC_MAX_C}]"
            )
        if not (0.0 < self.pop_mw <= POP_MAX_MW):
            raise DomainError(f"optical power {self.pop_mw} mW outside (0, {POP_MAX_MW}]")


@dataclass(frozen=True)
class LaserCurveConfig:
    ith_ref_ma: float = 10.0
    t0_k: float = 50.0
    se_ref_mw_per_ma: float = 0.25
    t1_k: float = 200.0
    v0_v: float = 0.9
    dv_dt_v_per_k: float = -0.002
    rs_ohm: float = 5.0
    lambda_ref_nm: float = 1550.0
    dlambda_dt_nm_per_k: float = 0.1
    tref_c: float = 25.0
    rth_k_per_mw: float = 0.1

    def validate(self) -> "LaserCurveConfig":
        for name in ("ith_ref_ma", "t0_k", "se_ref_mw_per_ma", "t1_k"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(name, f"must be finite and > 0, got {value}")
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise ConfigurationError(f.name, "must be finite")
        if self.rth_k_per_mw < 0:
            raise ConfigurationError("rth_k_per_mw", "must be >= 0")
        for tc in (TC_MIN_C, TC_MAX_C):
            lam = self.wavelength_nm(tc)
            if not (LAMBDA_MIN_NM <= lam <= LAMBDA_MAX_NM):
                raise ConfigurationError(
                    "dlambda_dt_nm_per_k",
                    f"wavelength {lam:.3f} nm at {tc} C leaves "
                    f"[{LAMBDA_MIN_NM}, {LAMBDA_MAX_NM}] nm",
                )
        return self

    def threshold_ma(self, tc_c: float) -> float:
        return self.ith_ref_ma * math.exp((tc_c - self.tref_c) / self.t0_k)

    def slope_efficiency(self, tc_c: float) -> float:
        return self.se_ref_mw_per_ma * math.exp(-(tc_c - self.tref_c) / self.t1_k)

    def voltage_v(self, tc_c: float, current_ma: float) -> float:
        # mA * ohm = mV
        return (
            self.v0_v
            + self.dv_dt_v_per_k * (tc_c - self.tref_c)
            + self.rs_ohm * current_ma * 1e-3
        )

    def wavelength_nm(self, tc_c: float) -> float:
        return self.lambda_ref_nm + self.dlambda_dt_nm_per_k * (tc_c - self.tref_c)


@dataclass(frozen=True)
class ReliabilityConfig:
    ea_ev: float = 0.4
    kb_ev_per_k: float = BOLTZMANN_EV_PER_K
    mttf_ref_hours: float = 7e5
    ref_condition: OperatingCondition = field(
        default_factory=lambda: OperatingCondition(tc_c=50.0, pop_mw=10.0)
    )
    hours_per_year: float = 8760.0

    def validate(self) -> "ReliabilityConfig":
        if not (math.isfinite(self.ea_ev) and self.ea_ev > 0):
            raise ConfigurationError("ea_ev", f"must be > 0, got {self.ea_ev}")
        if not (math.isfinite(self.mttf_ref_hours) and self.mttf_ref_hours > 0):
            raise ConfigurationError(
                "mttf_ref_hours", f"must be > 0, got {self.mttf_ref_hours}"
            )
        if not self.kb_ev_per_k > 0:
            raise ConfigurationError("kb_ev_per_k", "must be > 0")
        if not self.hours_per_year > 0:
            raise ConfigurationError("hours_per_year", "must be > 0")
        return self


@dataclass(frozen=True)
class LaserState:
    ith_ma: float
    se_mw_per_ma: float
    v_v: float
    lambda_nm: float
    iop_ma: float
    eta: float
    tj_k: float


def derive_state(
    cond: OperatingCondition,
    curves: LaserCurveConfig = LaserCurveConfig(),
    rel: ReliabilityConfig | None = None,
) -> LaserState:
    """Evaluate every laser characteristic at one operating condition.

    ``rel`` is accepted for call-site symmetry with the reliability laws; the
    derived state depends on the curves alone.
    """
    tc = cond.tc_c
    ith = curves.threshold_ma(tc)
    se = curves.slope_efficiency(tc)
    iop = ith + cond.pop_mw / se
    v = curves.voltage_v(tc, iop)
    lam = curves.wavelength_nm(tc)
    p_el = v * iop  # V * mA = mW
    eta = cond.pop_mw / p_el
    tj = tc + KELVIN_OFFSET + curves.rth_k_per_mw * (p_el - cond.pop_mw)

    checks = (
        ("ith_ref_ma", ith),
        ("se_ref_mw_per_ma", se),
        ("v0_v", v),
        ("lambda_ref_nm", lam),
        ("rth_k_per_mw", tj),
    )
    for name, value in checks:
        if not math.isfinite(value):
            raise ConfigurationError(name, f"non-finite derived value at {cond}")
    if v <= 0:
        raise ConfigurationError("v0_v", f"forward voltage {v:.4g} V <= 0 at {cond}")
    if not (0.0 < eta < 1.0):
        raise ConfigurationError(
            "v0_v", f"efficiency {eta:.4g} outside (0, 1) at {cond}"
        )
    return LaserState(
        ith_ma=ith,
        se_mw_per_ma=se,
        v_v=v,
        lambda_nm=lam,
        iop_ma=iop,
        eta=eta,
        tj_k=tj,
    )


def _arrhenius_factor(tj_ref_k: float, tj_new_k: float, ea_ev: float, kb: float) -> float:
    return math.exp(ea_ev / kb * (1.0 / tj_new_k - 1.0 / tj_ref_k))


def mttf_two_stress(
    state: LaserState,
    ref_state: LaserState,
    rel: ReliabilityConfig = ReliabilityConfig(),
) -> float:
    """Lifetime in hours under combined current and temperature stress.

    The reference lifetime is scaled by the squared current ratio and by the
    Arrhenius factor between the two junction temperatures.
    """
    for label, s in (("state", state), ("ref_state", ref_state)):
        if not (s.iop_ma > 0):
            raise DomainError(f"{label}.iop_ma must be > 0, got {s.iop_ma}")
        if not (s.tj_k > 0):
            raise DomainError(f"{label}.tj_k must be > 0 K, got {s.tj_k}")
    current = (ref_state.iop_ma / state.iop_ma) ** 2
    thermal = _arrhenius_factor(ref_state.tj_k, state.tj_k, rel.ea_ev, rel.kb_ev_per_k)
    return rel.mttf_ref_hours * current * thermal


def arrhenius_project(
    mttf_ref_hours: float,
    tj_ref_k: float,
    tj_new_k: float,
    ea_ev: float,
    kb_ev_per_k: float = BOLTZMANN_EV_PER_K,
) -> float:
    """Temperature-only lifetime projection (no current acceleration term)."""
    if not mttf_ref_hours > 0:
        raise DomainError(f"mttf_ref_hours must be > 0, got {mttf_ref_hours}")
    if not (tj_ref_k > 0 and tj_new_k > 0):
        raise DomainError(
            f"temperatures must be > 0 K, got {tj_ref_k} and {tj_new_k}"
        )
    if not ea_ev > 0:
        raise DomainError(f"ea_ev must be > 0, got {ea_ev}")
    return mttf_ref_hours * _arrhenius_factor(tj_ref_k, tj_new_k, ea_ev, kb_ev_per_k)


def reference_state(
    curves: LaserCurveConfig = LaserCurveConfig(),
    rel: ReliabilityConfig = ReliabilityConfig(),
) -> LaserState:
    return derive_state(rel.ref_condition, curves, rel)


_CURVE_KEYS = {f.name for f in fields(LaserCurveConfig)}
_REL_KEYS = {f.name for f in fields(ReliabilityConfig)} - {"ref_condition"}


def configs_from_mapping(
    data: dict,
) -> tuple[LaserCurveConfig, ReliabilityConfig]:
    """Build validated curve/reliability configs from a flat key->number map.

    Absent keys keep their defaults.  The reference condition may be given
    either as a nested ``ref_condition`` object or as flat ``ref_tc_c`` /
    ``ref_pop_mw`` keys.
    """
    curve_kw = {k: float(v) for k, v in data.items() if k in _CURVE_KEYS}
    rel_kw = {k: float(v) for k, v in data.items() if k in _REL_KEYS}
    ref = ReliabilityConfig().ref_condition
    nested = data.get("ref_condition")
    if isinstance(nested, dict):
        ref = replace(ref, **{k: float(v) for k, v in nested.items()})
    if "ref_tc_c" in data or "ref_pop_mw" in data:
        ref = OperatingCondition(
            tc_c=float(data.get("ref_tc_c", ref.tc_c)),
            pop_mw=float(data.get("ref_pop_mw", ref.pop_mw)),
        )
    curves = LaserCurveConfig(**curve_kw).validate()
    rel = ReliabilityConfig(ref_condition=ref, **rel_kw).validate()
    return curves, rel


def load_configs(path: str | Path) -> tuple[LaserCurveConfig, ReliabilityConfig]:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigurationError(str(path), "config must be a JSON object")
    return configs_from_mapping(data)


def configs_to_mapping(curves: LaserCurveConfig, rel: ReliabilityConfig) -> dict:
    out = asdict(curves)
    out.update(asdict(rel))
    return out
