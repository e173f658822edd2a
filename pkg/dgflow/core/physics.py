"""Compressible-flow state algebra, fluxes and Riemann solvers.

All functions are pure and vectorised: state arrays carry the five
conservative variables on axis 0 and any number of trailing node axes;
directions and normals carry their three components on axis 0. Fluxes
are returned as (5, 3, ...) arrays whose column ``d`` is the flux in
physical direction ``d``.

Gradient arrays hold ``grad[d, q]`` = derivative along direction ``d`` of
the gradient variable ``q`` in the order (rho, v1, v2, v3, T).
"""

import enum
from typing import NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .exceptions import AdmissibilityError, ConfigurationError, GeometryError, ParameterError

NORMAL_TOLERANCE = 1e-12
HARTEN_FIX = 0.05
LN_MEAN_SERIES_THRESHOLD = 1e-4


class GasProperties(BaseModel):
    """Calorically perfect gas with constant transport coefficients."""

    model_config = ConfigDict(frozen=True)

    gamma: float = Field(1.4, gt=1.0)
    gas_constant: float = Field(1.0, gt=0.0)
    prandtl: float = Field(0.72, gt=0.0)
    mu: float = Field(0.0, ge=0.0)
    smagorinsky_cs: float = Field(0.0, ge=0.0)

    @property
    def kappa(self) -> float:
        """Thermal conductivity gamma R mu / ((gamma - 1) Pr)."""
        return (
            self.gamma * self.gas_constant * self.mu / ((self.gamma - 1.0) * self.prandtl)
        )

    @property
    def viscous(self) -> bool:
        return self.mu > 0.0 or self.smagorinsky_cs > 0.0


class TwoPointFlux(str, enum.Enum):
    """Symmetric two-point fluxes for the split-form volume integral."""

    CENTRAL = "central"
    DUCROS = "ducros"
    KENNEDY_GRUBER = "kennedy-gruber"
    PIROZZOLI = "pirozzoli"
    ENTROPY_CONSERVING = "entropy-conserving"
    CHANDRASHEKAR = "chandrashekar"


class RiemannSolver(str, enum.Enum):
    """Interface numerical fluxes."""

    CENTRAL = "central"
    LAX_FRIEDRICHS = "lax-friedrichs"
    RUSANOV = "rusanov"
    ROE = "roe"


class Primitives(NamedTuple):
    rho: np.ndarray
    velocity: np.ndarray
    pressure: np.ndarray
    temperature: np.ndarray
    enthalpy: np.ndarray


def _as_state(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape[0] != 5:
        raise ParameterError(f"State needs 5 components, got {u.shape[0]}")
    return u


def pressure(u: np.ndarray, gamma: float) -> np.ndarray:
    """p = (gamma - 1)(rho e - 1/2 rho |v|^2)."""
    return (gamma - 1.0) * (u[4] - 0.5 * np.sum(u[1:4] ** 2, axis=0) / u[0])


def check_admissible(u: np.ndarray, gamma: float) -> None:
    """Raise if any node has non-positive (or non-finite) density or pressure.

    Raises:
        AdmissibilityError: Carrying the first offending state.
    """
    u = _as_state(u)
    rho = u[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        p = pressure(u, gamma)
    bad = np.atleast_1d(~(rho > 0) | ~(p > 0) | ~np.isfinite(p))
    if np.any(bad):
        if u.ndim > 1:
            node = tuple(int(i) for i in np.argwhere(bad)[0])
            state = u[(slice(None),) + node]
        else:
            node, state = None, u
        raise AdmissibilityError(
            "Non-positive density or pressure",
            state=np.asarray(state).tolist(),
            node=node,
        )


def primitive_from_conservative(
    u: np.ndarray, gas: GasProperties, check: bool = True
) -> Primitives:
    """Density, velocity, pressure, temperature and total enthalpy.

    Args:
        u (np.ndarray): Conservative state(s), shape (5, ...).
        gas (GasProperties): Gas model.
        check (bool): Verify admissibility first. Defaults to True.

    Raises:
        AdmissibilityError: On non-positive density or pressure.
    """
    u = _as_state(u)
    if check:
        check_admissible(u, gas.gamma)
    rho = u[0]
    v = u[1:4] / rho
    p = pressure(u, gas.gamma)
    return Primitives(
        rho=rho,
        velocity=v,
        pressure=p,
        temperature=p / (rho * gas.gas_constant),
        enthalpy=(u[4] + p) / rho,
    )


def conservative_from_primitive(
    rho, velocity, p, gamma: float
) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    v = np.asarray(velocity, dtype=float)
    p = np.asarray(p, dtype=float)
    shape = np.broadcast_shapes(rho.shape, v.shape[1:], p.shape)
    u = np.empty((5,) + shape)
    u[0] = rho
    u[1:4] = rho * v
    u[4] = p / (gamma - 1.0) + 0.5 * rho * np.sum(v * v, axis=0)
    return u


def sound_speed(u: np.ndarray, gamma: float) -> np.ndarray:
    return np.sqrt(gamma * pressure(u, gamma) / u[0])


def euler_flux(u: np.ndarray, gas: GasProperties) -> np.ndarray:
    """Inviscid flux, shape (5, 3, ...)."""
    prim = primitive_from_conservative(u, gas)
    v, p = prim.velocity, prim.pressure
    flux = np.empty((5, 3) + u.shape[1:])
    flux[0] = u[1:4]
    flux[1:4] = u[1:4][:, None] * v[None, :]
    for d in range(3):
        flux[1 + d, d] += p
    flux[4] = (u[4] + p) * v
    return flux


def euler_flux_normal(u: np.ndarray, n: np.ndarray, gamma: float) -> np.ndarray:
    """Inviscid flux dotted with the direction ``n`` (not necessarily unit)."""
    rho = u[0]
    v = u[1:4] / rho
    p = pressure(u, gamma)
    vn = np.sum(v * n, axis=0)
    out = np.empty(np.broadcast_shapes(u.shape, (5,) + np.shape(n)[1:]))
    out[0] = rho * vn
    out[1:4] = u[1:4] * vn + p * n
    out[4] = (u[4] + p) * vn
    return out


def viscous_flux(
    u: np.ndarray,
    grad: np.ndarray,
    gas: GasProperties,
    eddy_mu=0.0,
    heat_flux: bool = True,
) -> np.ndarray:
    """Navier-Stokes viscous flux, shape (5, 3, ...).

    Args:
        u (np.ndarray): Conservative state(s), shape (5, ...).
        grad (np.ndarray): Gradient-variable gradients, shape (3, 5, ...).
        gas (GasProperties): Gas model (mu, kappa).
        eddy_mu: Non-negative eddy viscosity added to mu in the stress tensor.
        heat_flux (bool): Include the kappa dT/dx term (dropped at adiabatic walls).

    Raises:
        ParameterError: If ``eddy_mu`` is negative anywhere.
    """
    eddy_mu = np.asarray(eddy_mu, dtype=float)
    if np.any(eddy_mu < 0):
        raise ParameterError("Eddy viscosity must be non-negative")
    mu = gas.mu + eddy_mu
    v = u[1:4] / u[0]
    # dv[j, i] = d v_i / d x_j
    dv = grad[:, 1:4]
    div = dv[0, 0] + dv[1, 1] + dv[2, 2]
    tau = mu * (dv + np.swapaxes(dv, 0, 1))
    for i in range(3):
        tau[i, i] -= (2.0 / 3.0) * mu * div
    flux = np.zeros((5, 3) + u.shape[1:])
    flux[1:4] = tau
    flux[4] = np.einsum("j...,jd...->d...", v, tau)
    if heat_flux:
        flux[4] += gas.kappa * grad[:, 4]
    return flux


def entropy(u: np.ndarray, gas: GasProperties) -> np.ndarray:
    """Mathematical entropy S = -rho s with s = ln p - gamma ln rho."""
    p = pressure(u, gas.gamma)
    return -u[0] * (np.log(p) - gas.gamma * np.log(u[0]))


def entropy_variables(u: np.ndarray, gas: GasProperties) -> np.ndarray:
    """w = dS/du for S = -rho s."""
    u = _as_state(u)
    check_admissible(u, gas.gamma)
    g = gas.gamma
    rho = u[0]
    v = u[1:4] / rho
    p = pressure(u, g)
    s = np.log(p) - g * np.log(rho)
    beta = rho / p
    w = np.empty_like(u)
    w[0] = g - s - 0.5 * (g - 1.0) * beta * np.sum(v * v, axis=0)
    w[1:4] = (g - 1.0) * beta * v
    w[4] = -(g - 1.0) * beta
    return w


def conservative_from_entropy(w: np.ndarray, gas: GasProperties) -> np.ndarray:
    """Inverse of :func:`entropy_variables` on admissible states."""
    w = np.asarray(w, dtype=float)
    g = gas.gamma
    ratio = -w[4] / (g - 1.0)  # rho / p
    v = -w[1:4] / w[4]
    s = g - w[0] + 0.5 * w[4] * np.sum(v * v, axis=0)
    rho = np.exp((s + np.log(ratio)) / (1.0 - g))
    return conservative_from_primitive(rho, v, rho / ratio, g)


def entropy_flux_potential(u: np.ndarray, gas: GasProperties) -> np.ndarray:
    """psi = (gamma - 1) rho v, the potential w.f - S v of this entropy pair."""
    return (gas.gamma - 1.0) * u[1:4]


def ln_mean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Logarithmic mean (a - b)/ln(a/b), series branch near a = b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    f = (a - b) / (a + b)
    u = f * f
    series = u < LN_MEAN_SERIES_THRESHOLD
    with np.errstate(divide="ignore", invalid="ignore"):
        log_branch = np.log(a / b) / (2.0 * f)
    big_f = np.where(
        series, 1.0 + u / 3.0 + u * u / 5.0 + u * u * u / 7.0, log_branch
    )
    return (a + b) / (2.0 * big_f)


def _avg(a, b):
    return 0.5 * (a + b)


def two_point_flux_normal(
    variant: TwoPointFlux | str,
    u_l: np.ndarray,
    u_r: np.ndarray,
    direction: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """Two-point flux contracted with ``direction``, shape (5, ...).

    No admissibility check; callers validate states once per residual.
    """
    try:
        variant = TwoPointFlux(variant)
    except ValueError:
        raise ConfigurationError(f"Unknown two-point flux '{variant}'", variant=variant)

    d = direction
    if variant is TwoPointFlux.CENTRAL:
        return 0.5 * (
            euler_flux_normal(u_l, d, gamma) + euler_flux_normal(u_r, d, gamma)
        )

    rho_l, rho_r = u_l[0], u_r[0]
    v_l, v_r = u_l[1:4] / rho_l, u_r[1:4] / rho_r
    p_l, p_r = pressure(u_l, gamma), pressure(u_r, gamma)
    vn_l, vn_r = np.sum(v_l * d, axis=0), np.sum(v_r * d, axis=0)
    shape = np.broadcast_shapes(u_l.shape, u_r.shape, (5,) + np.shape(d)[1:])
    out = np.empty(shape)

    if variant is TwoPointFlux.DUCROS:
        vn = _avg(vn_l, vn_r)
        p = _avg(p_l, p_r)
        out[0] = _avg(rho_l, rho_r) * vn
        out[1:4] = _avg(u_l[1:4], u_r[1:4]) * vn + p * d
        out[4] = _avg(u_l[4], u_r[4]) * vn + _avg(p_l * vn_l, p_r * vn_r)
        return out

    if variant in (TwoPointFlux.KENNEDY_GRUBER, TwoPointFlux.PIROZZOLI):
        mass = _avg(rho_l, rho_r) * _avg(vn_l, vn_r)
        out[0] = mass
        out[1:4] = mass * _avg(v_l, v_r) + _avg(p_l, p_r) * d
        if variant is TwoPointFlux.KENNEDY_GRUBER:
            e = _avg(u_l[4] / rho_l, u_r[4] / rho_r)
            out[4] = mass * e + _avg(p_l, p_r) * _avg(vn_l, vn_r)
        else:
            h = _avg((u_l[4] + p_l) / rho_l, (u_r[4] + p_r) / rho_r)
            out[4] = mass * h
        return out

    if variant is TwoPointFlux.ENTROPY_CONSERVING:
        z1_l, z1_r = np.sqrt(rho_l / p_l), np.sqrt(rho_r / p_r)
        z5_l, z5_r = np.sqrt(rho_l * p_l), np.sqrt(rho_r * p_r)
        z1 = _avg(z1_l, z1_r)
        z5 = _avg(z5_l, z5_r)
        z1_ln = ln_mean(z1_l, z1_r)
        z5_ln = ln_mean(z5_l, z5_r)
        zv = _avg(z1_l * v_l, z1_r * v_r)
        rho_hat = z1 * z5_ln
        v_hat = zv / z1
        p1_hat = z5 / z1
        p2_hat = (gamma + 1.0) / (2.0 * gamma) * z5_ln / z1_ln + (gamma - 1.0) / (
            2.0 * gamma
        ) * z5 / z1
        h_hat = gamma * p2_hat / ((gamma - 1.0) * rho_hat) + 0.5 * np.sum(
            v_hat * v_hat, axis=0
        )
        mass = rho_hat * np.sum(v_hat * d, axis=0)
        out[0] = mass
        out[1:4] = mass * v_hat + p1_hat * d
        out[4] = mass * h_hat
        return out

    # Chandrashekar
    beta_l, beta_r = 0.5 * rho_l / p_l, 0.5 * rho_r / p_r
    rho_ln = ln_mean(rho_l, rho_r)
    beta_ln = ln_mean(beta_l, beta_r)
    v_avg = _avg(v_l, v_r)
    p_tilde = _avg(rho_l, rho_r) / (2.0 * _avg(beta_l, beta_r))
    mass = rho_ln * np.sum(v_avg * d, axis=0)
    out[0] = mass
    out[1:4] = mass * v_avg + p_tilde * d
    kinetic = 0.25 * (np.sum(v_l * v_l, axis=0) + np.sum(v_r * v_r, axis=0))
    out[4] = mass * (0.5 / ((gamma - 1.0) * beta_ln) - kinetic) + np.sum(
        out[1:4] * v_avg, axis=0
    )
    return out


def two_point_flux(
    variant: TwoPointFlux | str,
    u_l: np.ndarray,
    u_r: np.ndarray,
    gas: GasProperties,
) -> np.ndarray:
    """Symmetric consistent two-point flux, shape (5, 3, ...).

    Raises:
        ConfigurationError: Unknown variant.
        AdmissibilityError: Either state inadmissible.
    """
    u_l, u_r = _as_state(u_l), _as_state(u_r)
    check_admissible(u_l, gas.gamma)
    check_admissible(u_r, gas.gamma)
    shape = np.broadcast_shapes(u_l.shape, u_r.shape)
    flux = np.empty((5, 3) + shape[1:])
    for d in range(3):
        unit = np.zeros((3,) + (1,) * (len(shape) - 1))
        unit[d] = 1.0
        flux[:, d] = two_point_flux_normal(variant, u_l, u_r, unit, gas.gamma)
    return flux


def _roe_dissipation(u_l, u_r, n, gamma):
    """|A_roe| (u_r - u_l) with a Harten fix on the acoustic waves."""
    rho_l, rho_r = u_l[0], u_r[0]
    v_l, v_r = u_l[1:4] / rho_l, u_r[1:4] / rho_r
    p_l, p_r = pressure(u_l, gamma), pressure(u_r, gamma)
    h_l, h_r = (u_l[4] + p_l) / rho_l, (u_r[4] + p_r) / rho_r

    sl, sr = np.sqrt(rho_l), np.sqrt(rho_r)
    rho = sl * sr
    v = (sl * v_l + sr * v_r) / (sl + sr)
    h = (sl * h_l + sr * h_r) / (sl + sr)
    q2 = np.sum(v * v, axis=0)
    c = np.sqrt((gamma - 1.0) * (h - 0.5 * q2))
    vn = np.sum(v * n, axis=0)

    d_rho = rho_r - rho_l
    d_p = p_r - p_l
    d_v = v_r - v_l
    d_vn = np.sum(d_v * n, axis=0)

    lam1 = np.abs(vn - c)
    lam2 = np.abs(vn)
    lam5 = np.abs(vn + c)
    delta = HARTEN_FIX * (np.abs(vn) + c)
    lam1 = np.where(lam1 < delta, (lam1 * lam1 + delta * delta) / (2.0 * delta), lam1)
    lam5 = np.where(lam5 < delta, (lam5 * lam5 + delta * delta) / (2.0 * delta), lam5)

    a1 = (d_p - rho * c * d_vn) / (2.0 * c * c)
    a5 = (d_p + rho * c * d_vn) / (2.0 * c * c)
    a2 = d_rho - d_p / (c * c)
    shear = d_v - d_vn * n

    diss = np.empty(np.broadcast_shapes(u_l.shape, u_r.shape, (5,) + np.shape(n)[1:]))
    w1, w5 = lam1 * a1, lam5 * a5
    diss[0] = w1 + w5 + lam2 * a2
    diss[1:4] = (
        w1 * (v - c * n) + w5 * (v + c * n) + lam2 * (a2 * v + rho * shear)
    )
    diss[4] = (
        w1 * (h - c * vn)
        + w5 * (h + c * vn)
        + lam2 * (a2 * 0.5 * q2 + rho * np.sum(v * shear, axis=0))
    )
    return diss


def riemann_flux(
    variant: RiemannSolver | str,
    u_l: np.ndarray,
    u_r: np.ndarray,
    normal: np.ndarray,
    gas: GasProperties,
    volume_flux: Optional[TwoPointFlux | str] = None,
    check: bool = True,
) -> np.ndarray:
    """Numerical normal flux across an interface, shape (5, ...).

    The central part is the volume two-point flux when a split form is
    active, otherwise the arithmetic mean of the two physical fluxes; the
    dissipative solvers subtract their jump penalty from it.

    Args:
        variant (RiemannSolver | str): Interface flux.
        u_l (np.ndarray): Left (owner) state(s).
        u_r (np.ndarray): Right (neighbour) state(s).
        normal (np.ndarray): Unit normal(s) pointing from left to right.
        gas (GasProperties): Gas model.
        volume_flux (Optional[TwoPointFlux | str]): Split-form flux, if any.
        check (bool): Validate normals and states. Defaults to True.

    Raises:
        ConfigurationError: Unknown variant.
        GeometryError: Non-unit normal.
        AdmissibilityError: Inadmissible state (vacuum).
    """
    try:
        variant = RiemannSolver(variant)
    except ValueError:
        raise ConfigurationError(f"Unknown Riemann solver '{variant}'", variant=variant)
    n = np.asarray(normal, dtype=float)
    gamma = gas.gamma
    if check:
        u_l, u_r = _as_state(u_l), _as_state(u_r)
        length = np.sqrt(np.sum(n * n, axis=0))
        if np.any(np.abs(length - 1.0) > NORMAL_TOLERANCE):
            raise GeometryError(
                "Interface normal is not a unit vector",
                max_deviation=float(np.max(np.abs(length - 1.0))),
            )
        check_admissible(u_l, gamma)
        check_admissible(u_r, gamma)

    if volume_flux is None:
        central = 0.5 * (
            euler_flux_normal(u_l, n, gamma) + euler_flux_normal(u_r, n, gamma)
        )
    else:
        central = two_point_flux_normal(volume_flux, u_l, u_r, n, gamma)

    if variant is RiemannSolver.CENTRAL:
        return central
    if variant is RiemannSolver.ROE:
        return central - 0.5 * _roe_dissipation(u_l, u_r, n, gamma)

    c_l, c_r = sound_speed(u_l, gamma), sound_speed(u_r, gamma)
    vn_l = np.abs(np.sum(u_l[1:4] * n, axis=0) / u_l[0])
    vn_r = np.abs(np.sum(u_r[1:4] * n, axis=0) / u_r[0])
    lam = np.maximum(vn_l + c_l, vn_r + c_r)
    if variant is RiemannSolver.RUSANOV:
        # Davis bound: also covers the Roe-averaged wave speed.
        sl, sr = np.sqrt(u_l[0]), np.sqrt(u_r[0])
        v = (u_l[1:4] / sl + u_r[1:4] / sr) / (sl + sr)
        h_l = (u_l[4] + pressure(u_l, gamma)) / u_l[0]
        h_r = (u_r[4] + pressure(u_r, gamma)) / u_r[0]
        h = (sl * h_l + sr * h_r) / (sl + sr)
        c2 = (gamma - 1.0) * (h - 0.5 * np.sum(v * v, axis=0))
        lam = np.maximum(lam, np.abs(np.sum(v * n, axis=0)) + np.sqrt(np.maximum(c2, 0.0)))
    return central - 0.5 * lam * (u_r - u_l)


def smagorinsky_viscosity(grad: np.ndarray, delta, cs: float, rho=1.0) -> np.ndarray:
    """Eddy viscosity rho (Cs delta)^2 |S| with |S| = sqrt(2 S:S).

    Raises:
        ParameterError: If ``delta`` is not positive or ``cs`` is negative.
    """
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0):
        raise ParameterError("Filter width must be positive")
    if cs < 0:
        raise ParameterError("Smagorinsky constant must be non-negative")
    dv = grad[:, 1:4]
    strain = 0.5 * (dv + np.swapaxes(dv, 0, 1))
    magnitude = np.sqrt(2.0 * np.sum(strain * strain, axis=(0, 1)))
    return np.asarray(rho) * (cs * delta) ** 2 * magnitude


def max_wave_speed(
    u: np.ndarray, contravariant: np.ndarray, gas: GasProperties
) -> np.ndarray:
    """Per reference direction |v . Ja^a| + c |Ja^a|, shape (3, ...).

    Args:
        u (np.ndarray): State(s), shape (5, ...).
        contravariant (np.ndarray): Metric vectors, shape (3, 3, ...) as [a, n].
        gas (GasProperties): Gas model.
    """
    u = _as_state(u)
    check_admissible(u, gas.gamma)
    v = u[1:4] / u[0]
    c = sound_speed(u, gas.gamma)
    ja = np.asarray(contravariant, dtype=float)
    along = np.abs(np.einsum("an...,n...->a...", ja, v))
    norm = np.sqrt(np.sum(ja * ja, axis=1))
    return along + c * norm
