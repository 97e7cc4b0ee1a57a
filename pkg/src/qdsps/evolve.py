"""Fixed-step RK4 integration of the time-dependent master equation.

The generator is re-evaluated at every RK4 substage, including the phonon
dissipator's eigenbasis construction; substage evaluations are memoized by
time, which is semantically invisible because stage times are derived from
integer step indices.  Once the pulse envelope has fallen below the clamp
threshold the generator is exactly constant and a single cached evaluation is
reused.

No trace renormalization is applied anywhere: trace drift is a diagnostic,
and drift beyond 1e-6 aborts the run with a step-size hint.
"""

from __future__ import annotations

import logging
import warnings
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .models import DissipatorKind, GeneratorTerms, Model, generator_terms

logger = logging.getLogger(__name__)

TRACE_ABORT = 1e-6


@dataclass(frozen=True)
class TimeGrid:
    """Uniform integration grid; (t_end - t_start)/dt must be an integer."""

    t_start: float
    t_end: float
    dt: float
    sample_stride: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")
        steps = (self.t_end - self.t_start) / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, abs(steps)):
            raise ValueError("(t_end - t_start)/dt must be an integer")
        if round(steps) < 1:
            raise ValueError("grid must contain at least one step")

    @property
    def n_steps(self) -> int:
        return round((self.t_end - self.t_start) / self.dt)


@dataclass
class Trajectory:
    """Sampled master-equation solution.

    ``observables`` holds one named series per population operator plus the
    complex cavity amplitude ``a``; all series share the ``times`` axis.
    """

    times: np.ndarray
    states: np.ndarray
    observables: dict[str, np.ndarray]
    dt: float
    sample_stride: int
    warnings: list[str] = field(default_factory=list)
    trace_drift: float = 0.0
    herm_drift: float = 0.0

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def state_at(self, t: float) -> np.ndarray:
        idx = np.searchsorted(self.times, t)
        if idx >= self.times.size or abs(self.times[idx] - t) > 1e-9:
            raise KeyError(f"no stored state at t = {t}")
        return self.states[idx]

    @classmethod
    def concat(cls, first: "Trajectory", second: "Trajectory") -> "Trajectory":
        if abs(first.times[-1] - second.times[0]) > 1e-9:
            raise ValueError("trajectories do not abut")
        obs = {
            k: np.concatenate([first.observables[k], second.observables[k][1:]])
            for k in first.observables
        }
        return cls(
            times=np.concatenate([first.times, second.times[1:]]),
            states=np.concatenate([first.states, second.states[1:]]),
            observables=obs,
            dt=first.dt,
            sample_stride=first.sample_stride,
            warnings=first.warnings + second.warnings,
            trace_drift=max(first.trace_drift, second.trace_drift),
            herm_drift=max(first.herm_drift, second.herm_drift),
        )


class Generator:
    """Master-equation generator for one (model, dissipator) pair.

    ``terms(t)`` returns the sandwich-form generator and ``smatrix(t)`` its
    vectorized (d^2 x d^2) matrix; evaluations are memoized per substage
    time, and a single constant evaluation is reused once the drive has
    switched off (t >= ``t_const``).
    """

    _MEMO_SIZE = 8

    def __init__(self, model: Model, kind: DissipatorKind):
        self.model = model
        self.kind = kind
        self.dim = model.dim
        self.t_const = model.pulse.cutoff_time
        self._memo: OrderedDict[float, np.ndarray] = OrderedDict()
        self._const_smatrix: np.ndarray | None = None
        self._step_matrices: dict[float, np.ndarray] = {}

    def terms(self, t: float) -> GeneratorTerms:
        return generator_terms(self.model, self.kind, t)

    def smatrix(self, t: float) -> np.ndarray:
        if t >= self.t_const:
            if self._const_smatrix is None:
                self._const_smatrix = self.terms(self.t_const).smatrix()
            return self._const_smatrix
        hit = self._memo.get(t)
        if hit is None:
            hit = self.terms(t).smatrix()
            self._memo[t] = hit
            if len(self._memo) > self._MEMO_SIZE:
                self._memo.popitem(last=False)
        return hit

    def rhs(self, rho: np.ndarray, t: float) -> np.ndarray:
        d = self.dim
        return (self.smatrix(t) @ rho.reshape(d * d)).reshape(d, d)

    def step_matrix(self, dt: float) -> np.ndarray:
        """RK4 one-step update matrix for the constant (post-pulse) generator."""
        hit = self._step_matrices.get(dt)
        if hit is None:
            hit = rk4_step_matrix(self.smatrix(self.t_const), dt)
            self._step_matrices[dt] = hit
        return hit


def rk4_step_matrix(s: np.ndarray, dt: float) -> np.ndarray:
    """Classical RK4 update for a constant generator: I + hS + ... + (hS)^4/24."""
    d2 = s.shape[0]
    eye = np.eye(d2, dtype=complex)
    a = dt * s
    return eye + a @ (eye + 0.5 * (a @ (eye + (a / 3.0) @ (eye + 0.25 * a))))


def rhs(
    rho: np.ndarray, t: float, model: Model, kind: DissipatorKind
) -> np.ndarray:
    """Full master-equation right-hand side at time t."""
    return generator_terms(model, kind, t).apply(rho)


def _rk4_step_vec(
    gen: Generator, vec: np.ndarray, t_start: float, step: int, half: float
) -> np.ndarray:
    # Stage times come from integer half-step indices so that the end-stage
    # time of one step is bitwise equal to the start-stage time of the next;
    # this makes the per-time memoization exact.
    j = 2 * step
    t0 = t_start + j * half
    if t0 >= gen.t_const:
        # Constant generator: apply the precomposed RK4 step in one product.
        return gen.step_matrix(2.0 * half) @ vec
    t_mid = t_start + (j + 1) * half
    t1 = t_start + (j + 2) * half
    k1 = gen.smatrix(t0) @ vec
    k2 = gen.smatrix(t_mid) @ (vec + half * k1)
    k3 = gen.smatrix(t_mid) @ (vec + half * k2)
    k4 = gen.smatrix(t1) @ (vec + 2.0 * half * k3)
    return vec + (half / 3.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_stability(model: Model, dt: float) -> None:
    rate = model.max_rate()
    if dt * rate > 0.05:
        warnings.warn(
            f"dt * max rate = {dt * rate:.3f} > 0.05; the integrator may be "
            "inaccurate at this step size",
            stacklevel=3,
        )


class _Recorder:
    POSITIVITY_TOL = 1e-6

    def __init__(self, model: Model):
        self.pop_ops = model.population_ops()
        self.a_op = model.a
        self.exc_op = model.excitation_op()
        self.times: list[float] = []
        self.states: list[np.ndarray] = []
        self.series: dict[str, list] = {k: [] for k in self.pop_ops}
        self.series["a"] = []
        self.trace_drift = 0.0
        self.herm_drift = 0.0
        self.min_eigenvalue = 0.0
        self._positivity_hits = 0

    def record(self, t: float, rho: np.ndarray) -> float:
        self.times.append(t)
        self.states.append(rho.copy())
        for key, op in self.pop_ops.items():
            self.series[key].append(float(np.real(np.einsum("ij,ji->", op, rho))))
        self.series["a"].append(complex(np.einsum("ij,ji->", self.a_op, rho)))
        self.trace_drift = max(self.trace_drift, abs(complex(np.trace(rho)) - 1.0))
        self.herm_drift = max(self.herm_drift, float(np.max(np.abs(rho - rho.conj().T))))
        low = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        if low < self.min_eigenvalue:
            self.min_eigenvalue = low
        if low < -self.POSITIVITY_TOL:
            # Logged, never corrected: the weak-coupling generator is not
            # guaranteed completely positive and this is diagnostic output.
            self._positivity_hits += 1
            logger.warning(
                "state eigenvalue %.3e below -%g at t = %.2f ps",
                low,
                self.POSITIVITY_TOL,
                t,
            )
        return float(np.real(np.einsum("ij,ji->", self.exc_op, rho)))

    def build(self, dt: float, stride: int, warns: list[str]) -> Trajectory:
        obs = {
            k: np.asarray(v, dtype=complex if k == "a" else float)
            for k, v in self.series.items()
        }
        if self._positivity_hits:
            warns = warns + [
                f"{self._positivity_hits} samples dipped below the positivity "
                f"tolerance (min eigenvalue {self.min_eigenvalue:.3e})"
            ]
        return Trajectory(
            times=np.asarray(self.times),
            states=np.asarray(self.states),
            observables=obs,
            dt=dt,
            sample_stride=stride,
            warnings=warns,
            trace_drift=self.trace_drift,
            herm_drift=self.herm_drift,
        )


def _abort_check(rho: np.ndarray, t: float, dt: float) -> None:
    tr = complex(np.trace(rho))
    if not np.isfinite(tr.real) or not np.isfinite(tr.imag):
        raise RuntimeError(f"non-finite state at t = {t:.4f} ps")
    if abs(tr - 1.0) > TRACE_ABORT:
        raise RuntimeError(
            f"trace drift {abs(tr - 1.0):.2e} at t = {t:.4f} ps exceeds "
            f"{TRACE_ABORT}; reduce dt = {dt} ps"
        )


def integrate(
    rho0: np.ndarray,
    grid: TimeGrid,
    model: Model,
    kind: DissipatorKind,
    generator: Generator | None = None,
) -> Trajectory:
    """Integrate the master equation over a fixed grid with classical RK4.

    States and observables are recorded every ``grid.sample_stride`` steps,
    always including both endpoints (the step count must be a stride
    multiple for the final point to land on a sample).
    """
    _check_stability(model, grid.dt)
    gen = generator or Generator(model, kind)
    rec = _Recorder(model)
    half = 0.5 * grid.dt
    d = model.dim
    rho = np.array(rho0, dtype=complex)
    rec.record(grid.t_start, rho)
    vec = rho.reshape(d * d).copy()
    for step in range(grid.n_steps):
        vec = _rk4_step_vec(gen, vec, grid.t_start, step, half)
        t_next = grid.t_start + (step + 1) * grid.dt
        rho = vec.reshape(d, d)
        _abort_check(rho, t_next, grid.dt)
        if (step + 1) % grid.sample_stride == 0 or step + 1 == grid.n_steps:
            rec.record(t_next, rho)
    return rec.build(grid.dt, grid.sample_stride, [])


def run_until_decayed(
    rho0: np.ndarray,
    model: Model,
    kind: DissipatorKind,
    dt: float,
    threshold: float = 1e-6,
    t_max: float | None = None,
    sample_stride: int = 10,
) -> Trajectory:
    """Integrate from t = 0 until the total excitation has decayed.

    Termination is checked at sample times after the pulse window: the run
    stops once the summed excited-state populations plus the cavity photon
    number drop below ``threshold``, or at ``t_max`` (default: twenty
    cavity-enhanced emitter lifetimes past the pulse center), whichever is
    first.  Hitting ``t_max`` with more than ten times the threshold left
    attaches a warning to the trajectory.
    """
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    _check_stability(model, dt)
    if t_max is None:
        rate = model.gamma
        if model.kappa > 0:
            rate += 4.0 * model.g**2 / model.kappa
        if rate <= 0:
            rate = model.kappa
        if rate <= 0:
            raise ValueError("cannot infer t_max for a lossless model; pass t_max")
        t_max = model.pulse.center + 20.0 / rate
    gen = Generator(model, kind)
    rec = _Recorder(model)
    half = 0.5 * dt
    d = model.dim
    rho = np.array(rho0, dtype=complex)
    rec.record(0.0, rho)
    vec = rho.reshape(d * d).copy()
    pulse_end = gen.t_const
    warns: list[str] = []
    step = 0
    excitation = np.inf
    while True:
        for _ in range(sample_stride):
            vec = _rk4_step_vec(gen, vec, 0.0, step, half)
            step += 1
        t = step * dt
        rho = vec.reshape(d, d)
        _abort_check(rho, t, dt)
        excitation = rec.record(t, rho)
        if t >= pulse_end and excitation < threshold:
            break
        if t >= t_max:
            if excitation > 10.0 * threshold:
                warns.append(
                    f"run reached t_max = {t_max:.1f} ps with excitation "
                    f"{excitation:.2e} still above threshold {threshold:.1e}"
                )
            break
    return rec.build(dt, sample_stride, warns)
