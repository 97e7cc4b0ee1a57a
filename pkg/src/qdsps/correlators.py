"""Two-time correlation surfaces and single-photon figures of merit.

Correlations are propagated with the quantum regression theorem on the same
time-dependent master-equation generator used for the state: an operator
Lambda launched at outer time t evolves in tau under the generator evaluated
at absolute time t + tau.  First-order coherence is the normally ordered
G1(t, tau) = <a^dag(t) a(t+tau)> (launch rho(t) a^dag, read out with a), and
G2(t, tau) = <a^dag(t) a^dag a a (t+tau) a(t)> (launch a rho(t) a^dag, read
out with a^dag a).

For speed, all launches advance together in absolute time so each stage's
generator is evaluated once; once the drive has switched off the generator is
constant and one RK4 step matrix, raised to the sample stride, advances the
whole batch per sample.  This is an exact composition of the same fixed-step
RK4 scheme used everywhere else.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .evolve import Generator, Trajectory, _rk4_step_vec, rk4_step_matrix
from .models import DissipatorKind, Model

SURFACE_KINDS = ("G1", "G2", "G2pop", "MeanFieldProduct")


@dataclass(frozen=True)
class TwoTimeGrid:
    """Uniform (t, tau) sampling for correlation surfaces.

    Outer times span the emission window with spacing dtau equal to the
    trajectory sample spacing; the tau axis uses the same resolution and
    extends to tau_max (a dtau multiple).
    """

    t_start: float
    dtau: float
    n_outer: int  # number of launch times (points, inclusive)
    n_tau: int  # tau intervals; tau axis has n_tau + 1 points

    def __post_init__(self):
        if self.dtau <= 0 or self.n_outer < 2 or self.n_tau < 1:
            raise ValueError("degenerate two-time grid")

    @property
    def outer_times(self) -> np.ndarray:
        return self.t_start + self.dtau * np.arange(self.n_outer)

    @property
    def tau(self) -> np.ndarray:
        return self.dtau * np.arange(self.n_tau + 1)

    @property
    def tau_max(self) -> float:
        return self.dtau * self.n_tau


@dataclass
class CorrelationSurface:
    """Complex two-time surface sampled as values[t_index, tau_index]."""

    values: np.ndarray
    kind: str
    grid: TwoTimeGrid

    def __post_init__(self):
        if self.kind not in SURFACE_KINDS:
            raise ValueError(f"unknown surface kind {self.kind!r}")
        shape = (self.grid.n_outer, self.grid.n_tau + 1)
        if self.values.shape != shape:
            raise ValueError(f"surface shape {self.values.shape} != grid shape {shape}")


@dataclass
class FiguresOfMerit:
    n_a: float
    indist: float
    d1: float
    d2: float
    purcell: float


def purcell_factor(g: float, kappa: float, gamma: float) -> float:
    """Spontaneous-emission enhancement 4 g^2 / (kappa gamma)."""
    if kappa <= 0 or gamma <= 0:
        raise ValueError("kappa and gamma must be positive")
    return 4.0 * g**2 / (kappa * gamma)


def timing_jitter_indistinguishability(gamma_u: float, gamma: float, f_p: float) -> float:
    """Cascade-source indistinguishability limited by upper-level timing jitter.

    I = (1/2) [1 + g_u (1 + F_P/2) / (g_u (1 + F_P/2) + g)] for upper decay
    rate g_u, lower (background) rate g and Purcell factor F_P on the upper
    transition.
    """
    if gamma_u < 0 or gamma < 0 or f_p < 0:
        raise ValueError("rates and Purcell factor must be >= 0")
    enhanced = gamma_u * (1.0 + 0.5 * f_p)
    if enhanced + gamma == 0.0:
        return 1.0
    return 0.5 * (1.0 + enhanced / (enhanced + gamma))


def emitted_photon_number(traj: Trajectory, kappa: float) -> float:
    """Emitted cavity photon number kappa * int <a^dag a>(t) dt (trapezoid)."""
    photon = traj.observables["photon"]
    if photon[-1] > 1e-6:
        warnings.warn(
            f"cavity population {photon[-1]:.2e} has not decayed; emitted "
            "photon number is truncated",
            stacklevel=2,
        )
    return float(kappa * np.trapezoid(photon, traj.times))


def regression_propagate(
    lambda0: np.ndarray,
    t_start: float,
    tau_grid: np.ndarray,
    model: Model,
    kind: DissipatorKind,
    dt: float | None = None,
) -> np.ndarray:
    """Evolve an operator under the regression generator along a tau grid.

    The generator is evaluated at absolute time t_start + tau; lambda0 need
    not be Hermitian or unit trace.  Returns the operator at every tau sample.
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    if tau_grid.ndim != 1 or tau_grid.size < 2 or abs(tau_grid[0]) > 1e-12:
        raise ValueError("tau_grid must be 1-D, start at 0 and have >= 2 points")
    spacing = np.diff(tau_grid)
    if np.max(np.abs(spacing - spacing[0])) > 1e-9 * spacing[0]:
        raise ValueError("tau_grid must be uniform")
    dtau = float(spacing[0])
    if dt is None:
        dt = dtau
    substeps = round(dtau / dt)
    if substeps < 1 or abs(substeps * dt - dtau) > 1e-9 * dtau:
        raise ValueError("dt must divide the tau_grid spacing")
    gen = Generator(model, kind)
    d = model.dim
    half = 0.5 * dt
    out = np.empty((tau_grid.size, d, d), dtype=complex)
    out[0] = lambda0
    vec = np.array(lambda0, dtype=complex).reshape(d * d)
    step = 0
    for i in range(1, tau_grid.size):
        for _ in range(substeps):
            vec = _rk4_step_vec(gen, vec, t_start, step, half)
            step += 1
        if not np.all(np.isfinite(vec.real)):
            raise RuntimeError(f"non-finite regression state at tau = {tau_grid[i]}")
        out[i] = vec.reshape(d, d)
    return out


def _batched_rk4(v: np.ndarray, gen: Generator, step0: int, n_sub: int, half: float):
    """Advance launch rows (batch, d^2) through n_sub fine RK4 steps."""
    for m in range(n_sub):
        j = 2 * (step0 + m)
        s0 = gen.smatrix(j * half).T
        s_mid = gen.smatrix((j + 1) * half).T
        s1 = gen.smatrix((j + 2) * half).T
        k1 = v @ s0
        k2 = (v + half * k1) @ s_mid
        k3 = (v + half * k2) @ s_mid
        k4 = (v + 2.0 * half * k3) @ s1
        v = v + (half / 3.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return v


def two_time_surfaces(
    traj: Trajectory,
    model: Model,
    kind: DissipatorKind,
    grid: TwoTimeGrid,
) -> tuple[CorrelationSurface, CorrelationSurface]:
    """First- and second-order coherence surfaces of the cavity field.

    The trajectory must start at t = 0 with sample spacing grid.dtau and
    extend to the last launch time plus tau_max, so every launch can be
    propagated on the common tau window.
    """
    dtau = traj.dt * traj.sample_stride
    if abs(dtau - grid.dtau) > 1e-9 * grid.dtau:
        raise ValueError("grid.dtau must equal the trajectory sample spacing")
    if abs(traj.times[0] - grid.t_start) > 1e-9 or grid.t_start != 0.0:
        raise ValueError("surfaces expect a trajectory starting at t = 0")
    if np.max(np.abs(np.diff(traj.times) - dtau)) > 1e-9:
        raise ValueError("trajectory samples are not uniform at the stride spacing")
    n_abs = grid.n_outer - 1 + grid.n_tau
    if traj.times.size <= n_abs:
        raise ValueError(
            "trajectory too short: need samples to "
            f"t = {(grid.n_outer - 1 + grid.n_tau) * dtau:.1f} ps"
        )

    gen = Generator(model, kind)
    d = model.dim
    n = grid.n_outer
    n_tau = grid.n_tau
    a_op, adag, n_op = model.a, model.adag, model.n_ph
    w1 = a_op.T.reshape(d * d)  # tr(a L) = vec(a^T) . vec(L)
    w2 = n_op.T.reshape(d * d)
    g1 = np.zeros((n, n_tau + 1), dtype=complex)
    g2 = np.zeros((n, n_tau + 1), dtype=complex)
    # Launch rows: [0, n) hold G1 operators rho a^dag, [n, 2n) hold a rho a^dag.
    v = np.zeros((2 * n, d * d), dtype=complex)

    stride = traj.sample_stride
    half = 0.5 * traj.dt
    step_mat = None
    for k in range(n_abs + 1):
        t_k = k * dtau
        if k < n:
            rho_k = traj.states[k]
            v[k] = (rho_k @ adag).reshape(d * d)
            v[n + k] = (a_op @ rho_k @ adag).reshape(d * d)
        i_min = max(0, k - n_tau)
        i_stop = min(k, n - 1) + 1
        rows = np.arange(i_min, i_stop)
        vals1 = v[i_min:i_stop] @ w1
        vals2 = v[n + i_min : n + i_stop] @ w2
        if not (np.all(np.isfinite(vals1.real)) and np.all(np.isfinite(vals2.real))):
            raise RuntimeError(f"non-finite correlation value at t = {t_k:.2f} ps")
        g1[rows, k - rows] = vals1
        g2[rows, k - rows] = vals2
        if k == n_abs:
            break
        if t_k >= gen.t_const:
            if step_mat is None:
                r_single = rk4_step_matrix(gen.smatrix(gen.t_const), traj.dt)
                step_mat = np.linalg.matrix_power(r_single, stride).T
            v[i_min:i_stop] = v[i_min:i_stop] @ step_mat
            v[n + i_min : n + i_stop] = v[n + i_min : n + i_stop] @ step_mat
        else:
            both = np.concatenate([v[i_min:i_stop], v[n + i_min : n + i_stop]])
            both = _batched_rk4(both, gen, k * stride, stride, half)
            m = i_stop - i_min
            v[i_min:i_stop] = both[:m]
            v[n + i_min : n + i_stop] = both[m:]

    neg = float(np.min(g2.real))
    if neg < -1e-10 * max(1.0, float(np.max(np.abs(g2.real)))):
        warnings.warn(f"G2 has negative values down to {neg:.2e}", stacklevel=2)
    return (
        CorrelationSurface(values=g1, kind="G1", grid=grid),
        CorrelationSurface(values=g2, kind="G2", grid=grid),
    )


def population_product_surface(traj: Trajectory, grid: TwoTimeGrid) -> CorrelationSurface:
    """<a^dag a>(t) <a^dag a>(t+tau), assembled from the one-time series."""
    photon = traj.observables["photon"]
    idx = np.arange(grid.n_outer)[:, None] + np.arange(grid.n_tau + 1)[None, :]
    if idx.max() >= photon.size:
        raise ValueError("trajectory too short for the requested grid")
    vals = photon[np.arange(grid.n_outer)][:, None] * photon[idx]
    return CorrelationSurface(values=vals.astype(complex), kind="G2pop", grid=grid)


def mean_field_product_surface(traj: Trajectory, grid: TwoTimeGrid) -> CorrelationSurface:
    """<a(t+tau)> <a^dag(t)>, from the one-time mean-field series."""
    a_series = traj.observables["a"]
    idx = np.arange(grid.n_outer)[:, None] + np.arange(grid.n_tau + 1)[None, :]
    if idx.max() >= a_series.size:
        raise ValueError("trajectory too short for the requested grid")
    vals = a_series[idx] * np.conj(a_series[np.arange(grid.n_outer)])[:, None]
    return CorrelationSurface(values=vals, kind="MeanFieldProduct", grid=grid)


def _double_trapezoid(z: np.ndarray, dtau: float) -> float:
    return float(np.trapezoid(np.trapezoid(z, dx=dtau, axis=1), dx=dtau))


def indistinguishability(
    g1: CorrelationSurface,
    g2: CorrelationSurface,
    g2pop: CorrelationSurface,
    mean_field: CorrelationSurface,
) -> tuple[float, float, float]:
    """Two-photon interference visibility I = 1 - D1 - D2.

    D1 measures the loss of first-order coherence, D2 the multi-photon
    contribution; both share the Hong-Ou-Mandel normalization integral.  All
    four surfaces must live on one grid; integrals are 2-D trapezoids over
    the common window.
    """
    grids = {id(s.grid) for s in (g1, g2, g2pop, mean_field)}
    if len(grids) > 1:
        ref = g1.grid
        for s in (g2, g2pop, mean_field):
            if s.grid != ref:
                raise ValueError("surfaces are on mismatched grids")
    dtau = g1.grid.dtau
    norm = _double_trapezoid(
        2.0 * g2pop.values.real - np.abs(mean_field.values) ** 2, dtau
    )
    if norm <= 0:
        raise ValueError("degenerate normalization integral; no emission in window")
    d1 = _double_trapezoid(g2pop.values.real - np.abs(g1.values) ** 2, dtau) / norm
    d2 = _double_trapezoid(g2.values.real, dtau) / norm
    if d1 < -1e-3:
        warnings.warn(f"D1 = {d1:.2e} is negative beyond integration tolerance", stacklevel=2)
    return 1.0 - d1 - d2, d1, d2


def figures_of_merit(
    traj: Trajectory,
    model: Model,
    kind: DissipatorKind,
    grid: TwoTimeGrid,
) -> tuple[FiguresOfMerit, dict[str, CorrelationSurface]]:
    """Run the full two-time pipeline and collect the scalar figures of merit."""
    g1, g2 = two_time_surfaces(traj, model, kind, grid)
    g2pop = population_product_surface(traj, grid)
    mf = mean_field_product_surface(traj, grid)
    indist, d1, d2 = indistinguishability(g1, g2, g2pop, mf)
    n_a = emitted_photon_number(traj, model.kappa)
    try:
        f_p = purcell_factor(model.g, model.kappa, model.gamma)
    except ValueError:
        f_p = 0.0
    fom = FiguresOfMerit(n_a=n_a, indist=indist, d1=d1, d2=d2, purcell=f_p)
    surfaces = {"G1": g1, "G2": g2, "G2pop": g2pop, "MeanFieldProduct": mf}
    return fom, surfaces
