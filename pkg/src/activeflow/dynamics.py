"""Right-hand side assembly, IMEX time stepping, and trajectory generation.

The diffusion part is applied exactly in Fourier space through its semigroup;
the nonlinear advection term is advanced with a two-stage integrating-factor
midpoint rule. The advection is in divergence form, so its zero mode vanishes
identically and the stepper conserves mass to machine precision.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import diagnostics as diag
from .errors import AdmissibilityViolation, NumericalBlowup, RadiusTooLarge, ZeroPeclet
from .grid import Field3, GridSpec, Params, check_admissible
from .spectral import (
    SpectrumView,
    _cache,
    forward,
    inverse,
    compute_rho,
    sample_on_axes,
)


@dataclass(frozen=True)
class Trajectory:
    """Time series produced by the run loop.

    times/snapshots hold the strided full fields; diagnostics holds one
    record per step (including t = 0). mean0 is the conserved space-angle
    average of the initial data, used as the constant reference state.
    """

    grid: GridSpec
    params: Params
    mean0: float
    times: list[float]
    snapshots: list[Field3]
    diagnostics: list["diag.DiagnosticsRecord"]


@dataclass(frozen=True)
class RescaleMap:
    """Coefficient rescaling (a, b, c) that removes Pe and De from the PDE."""

    a: float
    b: float
    c: float


def rescale_problem(params: Params) -> RescaleMap:
    """(a, b, c) = (De/Pe^2, De/Pe, sqrt(De)/Pe); undefined at Pe = 0."""
    if params.pe == 0.0:
        raise ZeroPeclet("problem rescaling requires Pe != 0")
    pe, de = params.pe, params.de
    return RescaleMap(a=de / pe**2, b=de / pe, c=math.sqrt(de) / pe)


def _advection_hat(coeffs: np.ndarray, grid: GridSpec, params: Params) -> np.ndarray:
    """Half-spectrum of -Pe * div_x((1 - rho) f e(theta)).

    The product is formed in physical space; the result is 2/3-dealiased when
    enabled. The k = 0 coefficient is identically zero (divergence form).
    """
    c = _cache(grid.n_x, grid.n_theta)
    n_total = grid.n_x * grid.n_x * grid.n_theta
    f_phys = np.fft.irfftn(coeffs * n_total, s=grid.shape, axes=(0, 1, 2))
    rho = f_phys.sum(axis=2) * grid.dtheta
    blocked = (1.0 - rho)[:, :, None] * f_phys
    g1 = np.fft.rfftn(blocked * c["cos_theta"][None, None, :]) / n_total
    g2 = np.fft.rfftn(blocked * c["sin_theta"][None, None, :]) / n_total
    out = -1j * params.pe * (c["d1"] * g1 + c["d2"] * g2)
    if params.dealias:
        out = out * c["dealias"]
    return out


def rhs(f: Field3, params: Params) -> Field3:
    """de * Delta_x f + d^2f/dtheta^2 - Pe div_x((1 - rho) f e(theta))."""
    c = _cache(f.grid.n_x, f.grid.n_theta)
    s = forward(f)
    diffusion = -(params.de * c["kx_sq"] + c["k3"] ** 2) * s.coeffs
    total = diffusion + _advection_hat(s.coeffs, f.grid, params)
    return inverse(SpectrumView(grid=f.grid, coeffs=total))


def cfl_dt(f: Field3, params: Params) -> float:
    """Advection-only CFL bound; diffusion is integrated exactly."""
    rho = compute_rho(f)
    speed = abs(params.pe) * float(np.abs(1.0 - rho.values).max())
    return 0.25 * f.grid.dx / max(speed, 1e-12)


@lru_cache(maxsize=16)
def _semigroup(n_x: int, n_theta: int, de: float, dt: float):
    """exp(L dt/2) and exp(L dt) for L = -(de |k_x|^2 + k_theta^2)."""
    c = _cache(n_x, n_theta)
    sym = -(de * c["kx_sq"] + c["k3"] ** 2)
    half = np.exp(0.5 * dt * sym)
    return half, half * half


def _step_spectral(coeffs: np.ndarray, grid: GridSpec, params: Params) -> np.ndarray:
    """One integrating-factor midpoint step in the half spectrum."""
    dt = params.dt
    e_half, e_full = _semigroup(grid.n_x, grid.n_theta, params.de, dt)
    k1 = _advection_hat(coeffs, grid, params)
    mid = e_half * (coeffs + 0.5 * dt * k1)
    k2 = _advection_hat(mid, grid, params)
    return e_full * coeffs + dt * e_half * k2


_CFL_WARNING = "time step exceeds the advective CFL bound"


def step_imex(f: Field3, params: Params) -> Field3:
    """Advance one step of size params.dt.

    Warns (without rejecting) when dt exceeds the CFL bound; raises
    NumericalBlowup on non-finite output or >10x sup-norm growth.
    """
    if params.dt > cfl_dt(f, params):
        warnings.warn(_CFL_WARNING, RuntimeWarning, stacklevel=2)
    new_coeffs = _step_spectral(forward(f).coeffs, f.grid, params)
    values = np.fft.irfftn(
        new_coeffs * (f.grid.n_x * f.grid.n_x * f.grid.n_theta),
        s=f.grid.shape,
        axes=(0, 1, 2),
    )
    _raise_on_blowup(values, float(np.abs(f.values).max()))
    return Field3(grid=f.grid, values=values)


def _raise_on_blowup(values: np.ndarray, prev_linf: float, step: int | None = None):
    if not np.isfinite(values).all():
        raise NumericalBlowup("non-finite values after step", step=step)
    if float(np.abs(values).max()) > 10.0 * prev_linf and prev_linf > 0.0:
        raise NumericalBlowup("sup norm grew more than 10x in one step", step=step)


def run(
    f0: Field3,
    params: Params,
    t_end: float,
    snapshot_stride: int = 10,
    diagnostics_k_max: int = 6,
) -> Trajectory:
    """Integrate from admissible initial data to (just past) t_end.

    Appends one DiagnosticsRecord per step and a snapshot every
    snapshot_stride steps (plus the final step). The number of steps is
    ceil(t_end / dt), so the final time lies within dt of t_end.
    """
    report = check_admissible(f0)
    if not report.ok:
        raise AdmissibilityViolation(
            f"initial data inadmissible: min_f={report.min_f:.3e}, "
            f"rho range [{report.min_rho:.3e}, {report.max_rho:.3e}]"
        )
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")
    if t_end < 0:
        raise ValueError("t_end must be >= 0")

    if params.dt > cfl_dt(f0, params):
        warnings.warn(_CFL_WARNING, RuntimeWarning, stacklevel=2)

    grid = f0.grid
    n_total = grid.n_x * grid.n_x * grid.n_theta
    mean0 = f0.mean()
    n_steps = int(math.ceil(t_end / params.dt - 1e-9)) if t_end > 0 else 0

    records = [diag.compute_record(f0, t=0.0, mean0=mean0, k_max=diagnostics_k_max)]
    times = [0.0]
    snapshots = [f0]

    coeffs = forward(f0).coeffs
    prev_linf = float(np.abs(f0.values).max())
    for step in range(1, n_steps + 1):
        coeffs = _step_spectral(coeffs, grid, params)
        values = np.fft.irfftn(coeffs * n_total, s=grid.shape, axes=(0, 1, 2))
        _raise_on_blowup(values, prev_linf, step=step)
        f = Field3(grid=grid, values=values)
        prev_linf = float(np.abs(values).max())
        t = step * params.dt
        records.append(diag.compute_record(f, t=t, mean0=mean0, k_max=diagnostics_k_max))
        if step % snapshot_stride == 0 or step == n_steps:
            times.append(t)
            snapshots.append(f)

    return Trajectory(
        grid=grid,
        params=params,
        mean0=mean0,
        times=times,
        snapshots=snapshots,
        diagnostics=records,
    )


# --- parabolic cylinder rescaling ----------------------------------------------

def rescale_ell(r: float, delta: float, p_norm: float, v_norm: float) -> float:
    """Amplitude factor sqrt(delta) * r^(3/2) / (p_norm + v_norm)."""
    total = p_norm + v_norm
    if total <= 0.0:
        raise ValueError("p_norm + v_norm must be positive")
    if not 0.0 < delta:
        raise ValueError("delta must be positive")
    return math.sqrt(delta) * r**1.5 / total


@dataclass(frozen=True)
class RescaledSlice:
    """One time slice of a solution mapped onto the unit cylinder.

    values and grads are sampled on a uniform grid of the cube [-1, 1)^3 in
    the stretched coordinates; tau is the rescaled time in [-1, 0] when the
    source time lies inside the cylinder. grads holds the three stretched-
    coordinate partial derivatives of the rescaled field.
    """

    tau: float
    values: np.ndarray
    grads: tuple[np.ndarray, np.ndarray, np.ndarray]
    ell: float
    r: float
    delta: float
    cell_volume: float


def rescale_field(
    f: Field3,
    t: float,
    center: tuple[float, tuple[float, float, float]],
    r: float,
    delta: float,
    v_norm: float,
    p_norm: float,
) -> RescaledSlice:
    """Map a snapshot onto the unit cylinder around a space-time center.

    Returns the slice ell * f(t, xi0 + r zeta) on a uniform grid of the cube
    [-1, 1)^3 (trigonometric interpolation off-grid), together with its
    stretched-coordinate gradient and the rescaled time tau = (t - t0)/r^2.
    """
    t0, xi0 = center
    bound = min(1.0, math.sqrt(max(t0, 0.0) / 2.0))
    if not 0.0 < r < bound:
        raise RadiusTooLarge(
            f"need 0 < r < min(1, sqrt(t0/2)) = {bound:.6g}, got r={r}"
        )
    ell = rescale_ell(r, delta, p_norm, v_norm)
    tau = (t - t0) / r**2

    grid = f.grid
    zeta_x = -1.0 + 2.0 * np.arange(grid.n_x) / grid.n_x
    zeta_t = -1.0 + 2.0 * np.arange(grid.n_theta) / grid.n_theta
    x1p = xi0[0] + r * zeta_x
    x2p = xi0[1] + r * zeta_x
    thp = xi0[2] + r * zeta_t

    values = ell * sample_on_axes(f, x1p, x2p, thp)
    grads = tuple(
        ell * r * sample_on_axes(f, x1p, x2p, thp, derivative_axis=ax)
        for ax in ("x1", "x2", "theta")
    )
    cell = (2.0 / grid.n_x) ** 2 * (2.0 / grid.n_theta)
    return RescaledSlice(
        tau=tau,
        values=values,
        grads=grads,
        ell=ell,
        r=r,
        delta=delta,
        cell_volume=cell,
    )
