"""Scalar observables per time step and post-hoc trajectory analyses."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import (
    NegativeField,
    NonpositiveValue,
    TooFewPoints,
    TooFewSnapshots,
    WindowTooShort,
)
from .grid import TWO_PI, Field2, Field3
from .spectral import (
    compute_p,
    compute_rho,
    deriv2,
    forward,
    grad_l2,
    laplacian2,
    l2_norm_2d,
    mode_energy,
    _cache,
)

if TYPE_CHECKING:
    from .dynamics import RescaledSlice, Trajectory


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Observables of one time step.

    l2_to_const measures the L2 distance to the conserved constant state
    (the initial space-angle average); lp_ladder holds the L^(2^k) norms for
    k = 0..k_max.
    """

    t: float
    mass: float
    l2_to_const: float
    linf: float
    rho_min: float
    rho_max: float
    grad_l2: float
    spectral_tail: float
    lp_ladder: tuple[float, ...]


def mass(f: Field3) -> float:
    """Space-angle average <f>; the box integral is <f> * (2*pi)^3."""
    return f.mean()


def lp_ladder(f: Field3, k_max: int) -> list[float]:
    """L^(2^k) norms for k = 0..k_max, by repeated squaring.

    Tiny negative entries (>= -1e-10) are clipped to zero; anything more
    negative raises NegativeField.
    """
    min_f = float(f.values.min())
    if min_f < -1e-10:
        raise NegativeField(f"field minimum {min_f:.3e} below -1e-10")
    dv = f.grid.cell_volume
    v = np.clip(f.values, 0.0, None)
    out = []
    for k in range(k_max + 1):
        norm_pow = float(v.sum()) * dv  # integral of f^(2^k)
        out.append(norm_pow ** (1.0 / 2**k))
        if k < k_max:
            v = v * v
    return out


def _tail_from_spectrum(s, n: int, nt: int, fraction: float) -> float:
    energy = mode_energy(s)
    total = float(energy.sum()) - float(energy[0, 0, 0])
    if total <= 1e-300:
        return 0.0
    kx = np.abs(np.fft.fftfreq(n, d=1.0 / n))
    kth = np.arange(nt // 2 + 1, dtype=float)
    tail = (
        (kx[:, None, None] > fraction * n)
        | (kx[None, :, None] > fraction * n)
        | (kth[None, None, :] > fraction * nt)
    )
    return float(energy[tail].sum()) / total


def spectral_tail(f: Field3, fraction: float = 0.25) -> float:
    """Fraction of nonconstant L2 energy in modes beyond fraction * n per axis."""
    return _tail_from_spectrum(
        forward(f), f.grid.n_x, f.grid.n_theta, fraction
    )


def compute_record(
    f: Field3,
    t: float,
    mean0: float,
    k_max: int = 6,
    tail_fraction: float = 0.25,
) -> DiagnosticsRecord:
    """Evaluate all per-step observables for one field."""
    s = forward(f)
    rho = compute_rho(f)
    dv = f.grid.cell_volume
    l2c = math.sqrt(float(((f.values - mean0) ** 2).sum()) * dv)
    return DiagnosticsRecord(
        t=t,
        mass=f.mean(),
        l2_to_const=l2c,
        linf=float(np.abs(f.values).max()),
        rho_min=float(rho.values.min()),
        rho_max=float(rho.values.max()),
        grad_l2=grad_l2(f, s),
        spectral_tail=_tail_from_spectrum(s, f.grid.n_x, f.grid.n_theta, tail_fraction),
        lp_ladder=tuple(lp_ladder(f, k_max)),
    )


def parabolic_norm(traj: "Trajectory") -> float:
    """sqrt(max_t ||f||_L2^2 + sum_steps dt * ||grad f||_L2^2).

    The time integral of the gradient energy uses the left-endpoint rectangle
    rule over the per-step records. ||f||^2 is reconstructed from the
    distance-to-constant record and the conserved mean (they are orthogonal).
    """
    records = traj.diagnostics
    if not records:
        raise ValueError("trajectory has no diagnostics records")
    const_sq = traj.mean0**2 * TWO_PI**3
    sup_sq = max(r.l2_to_const**2 + const_sq for r in records)
    grad_sq = 0.0
    for a, b in zip(records[:-1], records[1:]):
        grad_sq += (b.t - a.t) * a.grad_l2**2
    return math.sqrt(sup_sq + grad_sq)


# --- truncation-energy ladder ---------------------------------------------------

@dataclass(frozen=True)
class TruncationLadder:
    """Energies of the truncations (f - C_k)_+ over shrinking time windows."""

    k_max: int
    levels: tuple[float, ...]
    window_times: tuple[float, ...]
    energies: tuple[float, ...]


def truncation_levels(k_max: int) -> list[float]:
    """C_k = (1 - 2^-k) / 2, increasing to 1/2."""
    return [0.5 * (1.0 - 2.0**-k) for k in range(k_max + 1)]


def _ladder_core(
    times: Sequence[float],
    fields: Sequence[np.ndarray],
    grads: Sequence[tuple[np.ndarray, ...]],
    cell_volume: float,
    window: tuple[float, float],
    k_max: int,
    dist_sq: np.ndarray | None,
) -> TruncationLadder:
    t_a, t_b = window
    inside = [i for i, t in enumerate(times) if t_a - 1e-12 <= t <= t_b + 1e-12]
    if len(inside) < k_max + 1:
        raise WindowTooShort(
            f"need at least {k_max + 1} snapshots in window, found {len(inside)}"
        )
    levels = truncation_levels(k_max)
    mapped = []
    energies = []
    for k, c_k in enumerate(levels):
        t_k = -0.5 * (1.0 + 2.0**-k)
        w_k = t_a + (t_k + 1.0) * (t_b - t_a)
        mapped.append(w_k)
        idx = [i for i in inside if times[i] >= w_k - 1e-12]
        sup_term = 0.0
        grad_term = 0.0
        for j, i in enumerate(idx):
            cut = fields[i] - c_k
            above = cut > 0.0
            if dist_sq is not None:
                radius = 0.5 * (1.0 + 2.0**-k)
                above = above & (dist_sq < radius**2)
            trunc = np.where(above, cut, 0.0)
            sup_term = max(sup_term, float((trunc**2).sum()) * cell_volume)
            if j + 1 < len(idx):
                dt = times[idx[j + 1]] - times[i]
                g_sq = sum(
                    float((np.where(above, g, 0.0) ** 2).sum()) for g in grads[i]
                )
                grad_term += dt * g_sq * cell_volume
        energies.append(sup_term + grad_term)
    return TruncationLadder(
        k_max=k_max,
        levels=tuple(levels),
        window_times=tuple(mapped),
        energies=tuple(energies),
    )


def _spectral_grads(f: Field3) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All three spectral partial derivatives from one forward transform."""
    c = _cache(f.grid.n_x, f.grid.n_theta)
    coeffs = np.fft.rfftn(f.values)
    return tuple(
        np.fft.irfftn(1j * c[d] * coeffs, s=f.grid.shape, axes=(0, 1, 2))
        for d in ("d1", "d2", "d3")
    )


def _torus_dist_sq(f: Field3, center: tuple[float, float, float]) -> np.ndarray:
    g = f.grid
    x = g.x_values()
    th = g.theta_values()
    def axis_d(v, c):
        d = np.abs((v - c) % TWO_PI)
        return np.minimum(d, TWO_PI - d)
    d1 = axis_d(x, center[0])[:, None, None]
    d2 = axis_d(x, center[1])[None, :, None]
    d3 = axis_d(th, center[2])[None, None, :]
    return d1**2 + d2**2 + d3**2


def truncation_energy(
    traj: "Trajectory",
    window: tuple[float, float],
    k_max: int,
    spatial_center: tuple[float, float, float] | None = None,
) -> TruncationLadder:
    """De Giorgi truncation energies over an analysis window of a trajectory.

    The canonical windows T_k in [-1, -1/2] are mapped affinely onto
    [t_a, t_b]; gradients of the truncations are the indicator-masked
    spectral gradients. Space-angle periodicity makes a global (unit) cutoff
    admissible; pass spatial_center to additionally restrict the integrals to
    the shrinking balls around that point.
    """
    t_a, t_b = window
    if not (traj.times[0] - 1e-12 <= t_a < t_b <= traj.times[-1] + 1e-12):
        raise ValueError(
            f"window {window} outside trajectory span "
            f"[{traj.times[0]}, {traj.times[-1]}]"
        )
    inside = [
        i for i, t in enumerate(traj.times) if t_a - 1e-12 <= t <= t_b + 1e-12
    ]
    times = [traj.times[i] for i in inside]
    snaps = [traj.snapshots[i] for i in inside]
    fields = [snap.values for snap in snaps]
    grads = [_spectral_grads(snap) for snap in snaps]
    dist_sq = None
    if spatial_center is not None:
        dist_sq = _torus_dist_sq(traj.snapshots[0], spatial_center)
    return _ladder_core(
        times,
        fields,
        grads,
        traj.grid.cell_volume,
        window,
        k_max,
        dist_sq,
    )


def truncation_energy_rescaled(
    slices: Sequence["RescaledSlice"],
    k_max: int,
    spatial_shrink: bool = False,
) -> TruncationLadder:
    """Truncation energies of unit-cylinder slices over the window [-1, 0]."""
    ordered = sorted(slices, key=lambda s: s.tau)
    times = [s.tau for s in ordered]
    fields = [s.values for s in ordered]
    grads = [s.grads for s in ordered]
    dist_sq = None
    if spatial_shrink and ordered:
        shape = ordered[0].values.shape
        ax = [
            (-1.0 + 2.0 * np.arange(m) / m) for m in shape
        ]
        dist_sq = (
            ax[0][:, None, None] ** 2
            + ax[1][None, :, None] ** 2
            + ax[2][None, None, :] ** 2
        )
    cell = ordered[0].cell_volume if ordered else 0.0
    return _ladder_core(times, fields, grads, cell, (-1.0, 0.0), k_max, dist_sq)


# --- density moment residual ----------------------------------------------------

def moment_residual(traj: "Trajectory") -> list[tuple[float, float]]:
    """L2(Omega) residual of the density moment equation per interior snapshot.

    The density satisfies d rho/dt + Pe div((1 - rho) p) = de * Lap(rho);
    the time derivative is a centered difference over snapshot times, the
    spatial terms are spectral.
    """
    if len(traj.snapshots) < 3:
        raise TooFewSnapshots(
            f"need >= 3 snapshots for centered differencing, got {len(traj.snapshots)}"
        )
    pe, de = traj.params.pe, traj.params.de
    rhos = [compute_rho(s) for s in traj.snapshots]
    ps = [compute_p(s) for s in traj.snapshots]
    out = []
    for i in range(1, len(traj.snapshots) - 1):
        h1 = traj.times[i] - traj.times[i - 1]
        h2 = traj.times[i + 1] - traj.times[i]
        a = -h2 / (h1 * (h1 + h2))
        b = (h2 - h1) / (h1 * h2)
        c = h1 / (h2 * (h1 + h2))
        drho_dt = a * rhos[i - 1].values + b * rhos[i].values + c * rhos[i + 1].values

        rho = rhos[i]
        p1, p2 = ps[i]
        blocked = 1.0 - rho.values
        g1 = Field2(grid=traj.grid, values=blocked * p1.values)
        g2 = Field2(grid=traj.grid, values=blocked * p2.values)
        divergence = deriv2(g1, "x1").values + deriv2(g2, "x2").values
        residual = drho_dt + pe * divergence - de * laplacian2(rho).values
        out.append(
            (traj.times[i], l2_norm_2d(Field2(grid=traj.grid, values=residual)))
        )
    return out


def fit_decay_rate(
    series: Sequence[tuple[float, float]], window: tuple[float, float]
) -> float:
    """Least-squares slope of -log(value) against t inside the window."""
    t_a, t_b = window
    pts = [(t, v) for t, v in series if t_a - 1e-12 <= t <= t_b + 1e-12]
    if len(pts) < 10:
        raise TooFewPoints(f"need >= 10 points in window, got {len(pts)}")
    ts = np.array([t for t, _ in pts])
    vs = np.array([v for _, v in pts])
    if (vs <= 0.0).any():
        raise NonpositiveValue("rate fitting needs strictly positive values")
    slope, _ = np.polyfit(ts, -np.log(vs), 1)
    return float(slope)
