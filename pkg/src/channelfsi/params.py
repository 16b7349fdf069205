# -*- coding: utf-8 -*-
"""
Physical parameters, membrane coefficients and run configuration.

All quantities are in CGS units.  The channel occupies the rectangle
(0,L) x (0,R) (upper half of a symmetric 2D channel); the wall is a
composite of a thin elastic membrane of thickness h attached to a thick
linearly elastic layer of thickness H.

The membrane stiffness coefficients derived from the Lame constants
(mu_m, lambda_m), the thickness h and the channel half-width R are

    C0 = (h/R^2) (2 mu lam/(lam+2 mu) + 2 mu)
    C1 = C0 R^2
    C2 = (h/R)   (2 mu lam/(lam+2 mu))

C1 is stored as C0*R^2 so that the identity C1 == C0*R^2 holds exactly
in floating point.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, replace


class ConfigError(ValueError):
    """Raised for malformed configuration text or invariant violations."""


@dataclass(frozen=True)
class PhysicalParams:
    """Material and geometry constants (CGS) plus the stress-splitting weight."""

    rho_f: float    # fluid density (g/cm^3)
    mu_f: float     # dynamic viscosity (g/cm s)
    rho_m: float    # membrane density (g/cm^3)
    h: float        # membrane thickness (cm)
    mu_m: float     # membrane Lame constant (dyne/cm^2)
    lambda_m: float # membrane Lame constant (dyne/cm^2)
    rho_s: float    # thick-layer density (g/cm^3)
    H: float        # thick-layer thickness (cm)
    mu_s: float     # thick-layer Lame constant (dyne/cm^2)
    lambda_s: float # thick-layer Lame constant (dyne/cm^2)
    gamma: float    # spring coefficient of the thick layer (dyne/cm^4)
    R: float        # channel half-width (cm)
    L: float        # channel length (cm)
    beta: float     # pressure-splitting weight in [0,1]

    def __post_init__(self):
        positive = ("rho_f", "mu_f", "rho_m", "h", "mu_m", "rho_s", "H",
                    "mu_s", "R", "L")
        for name in positive:
            if not getattr(self, name) > 0.0:
                raise ConfigError("invariant violation: %s must be positive "
                                  "(got %r)" % (name, getattr(self, name)))
        for name in ("lambda_m", "lambda_s", "gamma"):
            if getattr(self, name) < 0.0:
                raise ConfigError("invariant violation: %s must be >= 0 "
                                  "(got %r)" % (name, getattr(self, name)))
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("invariant violation: beta must lie in [0,1] "
                              "(got %r)" % (self.beta,))


@dataclass(frozen=True)
class MembraneCoeffs:
    """Membrane stiffness coefficients C0 (dyne/cm^3), C1 (dyne/cm), C2 (dyne/cm^2)."""

    C0: float
    C1: float
    C2: float

    def __post_init__(self):
        if not (self.C0 > 0.0 and self.C1 > 0.0):
            raise ConfigError("membrane coefficients C0, C1 must be positive")
        if self.C2 < 0.0:
            raise ConfigError("membrane coefficient C2 must be >= 0")


def membrane_coefficients(p: PhysicalParams) -> MembraneCoeffs:
    """Membrane coefficients from the Lame form.

    alpha = 2 mu lam/(lam + 2 mu) is the plane-stress combination; then
    C0 = (h/R^2)(alpha + 2 mu), C1 = C0 R^2, C2 = (h/R) alpha.
    """
    alpha = 2.0 * p.mu_m * p.lambda_m / (p.lambda_m + 2.0 * p.mu_m)
    c0 = (p.h / (p.R * p.R)) * (alpha + 2.0 * p.mu_m)
    c1 = c0 * (p.R * p.R)
    c2 = (p.h / p.R) * alpha
    return MembraneCoeffs(C0=c0, C1=c1, C2=c2)


def membrane_coefficients_youngs(p: PhysicalParams) -> MembraneCoeffs:
    """Same coefficients via Young's modulus E and Poisson ratio sigma.

    E = mu(3 lam + 2 mu)/(lam + mu), sigma = lam/(2(lam + mu)); then
    C0 = h E/(R^2 (1 - sigma^2)), C1 = h E/(1 - sigma^2),
    C2 = h E sigma/(R (1 - sigma^2)).  Used as a cross-check of the Lame form.
    """
    mu, lam = p.mu_m, p.lambda_m
    E = mu * (3.0 * lam + 2.0 * mu) / (lam + mu)
    sigma = lam / (2.0 * (lam + mu))
    denom = 1.0 - sigma * sigma
    return MembraneCoeffs(C0=p.h * E / (p.R * p.R * denom),
                          C1=p.h * E / denom,
                          C2=p.h * E * sigma / (p.R * denom))


@dataclass(frozen=True)
class PressureData:
    """Inlet/outlet pressure data: constant drop or a single cosine pulse."""

    kind: str               # 'constant' | 'cosine'
    p_in: float = 0.0       # constant inlet value (dyne/cm^2)
    p_out: float = 0.0      # constant outlet value (dyne/cm^2)
    p_max: float = 0.0      # pulse amplitude (dyne/cm^2)
    t_max: float = 0.0      # pulse duration (s)

    def __post_init__(self):
        if self.kind not in ("constant", "cosine"):
            raise ConfigError("pressure kind must be 'constant' or 'cosine' "
                              "(got %r)" % (self.kind,))
        if self.kind == "cosine" and not self.t_max > 0.0:
            raise ConfigError("invariant violation: t_max must be positive "
                              "for a cosine pulse")

    def inlet(self, t: float) -> float:
        if self.kind == "constant":
            return self.p_in
        import math
        if t > self.t_max:
            return 0.0
        return 0.5 * self.p_max * (1.0 - math.cos(2.0 * math.pi * t / self.t_max))

    def outlet(self, t: float) -> float:
        if self.kind == "constant":
            return self.p_out
        return 0.0


@dataclass(frozen=True)
class RunSettings:
    """Discretization and run controls."""

    dt: float               # time step (s)
    t_end: float            # final time (s)
    nz: int                 # axial subdivisions
    nr_f: int               # radial subdivisions, fluid
    nr_s: int               # radial subdivisions, thick layer
    pressure: PressureData
    tol: float = 1e-10      # relative residual tolerance of the linear solvers
    output_every: int = 1   # diagnostic cadence in steps
    mode: str = "full"      # 'full' | 'stability'

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ConfigError("invariant violation: dt must be positive")
        if self.t_end < self.dt:
            raise ConfigError("invariant violation: t_end must be >= dt")
        for name in ("nz", "nr_f", "nr_s"):
            if getattr(self, name) < 2:
                raise ConfigError("invariant violation: %s must be >= 2" % name)
        if not self.tol > 0.0:
            raise ConfigError("invariant violation: tol must be positive")
        if self.output_every < 1:
            raise ConfigError("invariant violation: output_every must be >= 1")
        if self.mode not in ("full", "stability"):
            raise ConfigError("mode must be 'full' or 'stability' (got %r)"
                              % (self.mode,))


_PHYSICAL_KEYS = ("rho_f", "mu_f", "rho_m", "h", "mu_m", "lambda_m", "rho_s",
                  "H", "mu_s", "lambda_s", "gamma", "R", "L", "beta")
_RUN_FLOAT_KEYS = ("dt", "t_end", "tol")
_RUN_INT_KEYS = ("nz", "nr_f", "nr_s", "output_every")
_PRESSURE_KEYS = ("pressure", "p_in", "p_out", "p_max", "t_max")


def _parser():
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    cp.optionxform = str  # h and H are distinct keys
    return cp


def load_config(text: str) -> tuple[PhysicalParams, RunSettings]:
    """Parse a [physical]/[run] key=value document into parameter records.

    Unknown keys are rejected by name; a missing mandatory key or an
    invariant violation raises ConfigError.  'beta' may be omitted and then
    defaults by mode (1 for 'full', 0 for 'stability').
    """
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config parse failure: %s" % exc) from exc

    for section in cp.sections():
        if section not in ("physical", "run"):
            raise ConfigError("unknown section [%s]" % section)
    if not cp.has_section("physical") or not cp.has_section("run"):
        raise ConfigError("config must contain [physical] and [run] sections")

    unknown = [k for k in cp["physical"] if k not in _PHYSICAL_KEYS]
    unknown += [k for k in cp["run"]
                if k not in _RUN_FLOAT_KEYS + _RUN_INT_KEYS + _PRESSURE_KEYS + ("mode",)]
    if unknown:
        raise ConfigError("unknown keys: %s" % ", ".join(sorted(unknown)))

    def getf(sec, key, default=None):
        if key not in cp[sec]:
            if default is not None:
                return default
            raise ConfigError("missing key '%s' in [%s]" % (key, sec))
        try:
            return float(cp[sec][key])
        except ValueError as exc:
            raise ConfigError("key '%s': not a number (%r)" % (key, cp[sec][key])) from exc

    mode = cp["run"].get("mode", "full")
    beta_default = 1.0 if mode == "full" else 0.0
    phys_kwargs = {}
    for key in _PHYSICAL_KEYS:
        if key == "beta":
            phys_kwargs[key] = getf("physical", "beta", default=beta_default)
        else:
            phys_kwargs[key] = getf("physical", key)
    phys = PhysicalParams(**phys_kwargs)

    kind = cp["run"].get("pressure", "constant")
    pressure = PressureData(kind=kind,
                            p_in=getf("run", "p_in", 0.0),
                            p_out=getf("run", "p_out", 0.0),
                            p_max=getf("run", "p_max", 0.0),
                            t_max=getf("run", "t_max", 1.0 if kind == "constant" else None))

    run = RunSettings(dt=getf("run", "dt"),
                      t_end=getf("run", "t_end"),
                      nz=int(getf("run", "nz")),
                      nr_f=int(getf("run", "nr_f")),
                      nr_s=int(getf("run", "nr_s")),
                      pressure=pressure,
                      tol=getf("run", "tol", 1e-10),
                      output_every=int(getf("run", "output_every", 1)),
                      mode=mode)
    return phys, run


def serialize(phys: PhysicalParams, run: RunSettings) -> str:
    """Inverse of load_config; load_config(serialize(p, r)) == (p, r)."""
    cp = _parser()
    cp.add_section("physical")
    for key in _PHYSICAL_KEYS:
        cp.set("physical", key, repr(getattr(phys, key)))
    cp.add_section("run")
    cp.set("run", "dt", repr(run.dt))
    cp.set("run", "t_end", repr(run.t_end))
    for key in _RUN_INT_KEYS:
        cp.set("run", key, repr(getattr(run, key)))
    cp.set("run", "tol", repr(run.tol))
    cp.set("run", "mode", run.mode)
    cp.set("run", "pressure", run.pressure.kind)
    cp.set("run", "p_in", repr(run.pressure.p_in))
    cp.set("run", "p_out", repr(run.pressure.p_out))
    cp.set("run", "p_max", repr(run.pressure.p_max))
    cp.set("run", "t_max", repr(run.pressure.t_max))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def apply_overrides(phys: PhysicalParams, run: RunSettings,
                    overrides: dict[str, str]) -> tuple[PhysicalParams, RunSettings]:
    """Apply --param key=value overrides on top of loaded records."""
    phys_kwargs, run_kwargs, press_kwargs = {}, {}, {}
    for key, raw in overrides.items():
        if key in _PHYSICAL_KEYS:
            phys_kwargs[key] = float(raw)
        elif key in _RUN_FLOAT_KEYS:
            run_kwargs[key] = float(raw)
        elif key in _RUN_INT_KEYS:
            run_kwargs[key] = int(raw)
        elif key == "mode":
            run_kwargs[key] = raw
        elif key == "pressure":
            press_kwargs["kind"] = raw
        elif key in ("p_in", "p_out", "p_max", "t_max"):
            press_kwargs[key] = float(raw)
        else:
            raise ConfigError("unknown parameter %r" % key)
    if phys_kwargs:
        phys = replace(phys, **phys_kwargs)
    if press_kwargs:
        run_kwargs["pressure"] = replace(run.pressure, **press_kwargs)
    if run_kwargs:
        run = replace(run, **run_kwargs)
    return phys, run


def table_example1() -> PhysicalParams:
    """Parameter set of the exact-solution benchmark (constant pressure drop)."""
    return PhysicalParams(rho_f=1.0, mu_f=0.35, rho_m=1.1, h=0.02,
                          mu_m=1.07e6, lambda_m=4.29e6, rho_s=1.1, H=0.1,
                          mu_s=1.07e6, lambda_s=4.29e6, gamma=0.0,
                          R=0.5, L=6.0, beta=1.0)


def table_example2(beta: float = 1.0) -> PhysicalParams:
    """Parameter set of the pressure-pulse benchmark."""
    return PhysicalParams(rho_f=1.0, mu_f=0.035, rho_m=1.1, h=0.02,
                          mu_m=5.75e5, lambda_m=1.7e6, rho_s=1.1, H=0.1,
                          mu_s=5.75e5, lambda_s=1.7e6, gamma=4.0e6,
                          R=0.5, L=6.0, beta=beta)
