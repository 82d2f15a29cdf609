"""Time stepping for the Galerkin jump-diffusion system.

One step on [t, t+dt] splits the dynamics as

1. drift update, backward Euler ``y = x + dt A(t+dt, y)`` solved by damped
   Newton (or a tamed explicit update ``x + dt a / (1 + dt ‖a‖_{V*})`` for
   mild drifts),
2. Wiener increment ``+ B(t, x) ΔW`` with the start-of-step state,
3. the step's jump events applied sequentially at their exact times, each
   evaluated at the pre-jump state,
4. compensator subtraction ``- dt Σ_i lam_i γ(t, x, z_i)`` with the
   start-of-step state (predictable evaluation).

Jump times are never aligned to the grid; each one contributes a doubled
time entry (pre value, post value) to the path record, which keeps the
recorded trajectory an explicit cadlag skeleton.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientBundle
from .noise import MarkSpace, NoiseRealization, sample_noise
from .spaces import GalerkinState, GelfandTriple, unchecked_state

__all__ = [
    "SolverConfig",
    "StoppingTimeRule",
    "PathRecord",
    "StepFailure",
    "step",
    "solve_path",
    "apply_stopping",
]


class StepFailure(RuntimeError):
    """Implicit solve did not converge; carries the last residual norm."""

    def __init__(self, time: float, residual: float, iterations: int):
        super().__init__(
            f"implicit drift solve at t={time} stalled after {iterations} "
            f"iterations (residual {residual:.3e})"
        )
        self.time = time
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    T: float
    level: int
    scheme: str = "drift_implicit"  # or "tamed_explicit"; taming exponent is 1
    newton_tol: float = 1e-10
    newton_max_iter: int = 50

    def __post_init__(self):
        if self.dt <= 0 or self.T <= 0 or self.dt >= self.T:
            raise ValueError("need 0 < dt < T")
        if self.level <= 0:
            raise ValueError("level must be positive")
        if self.newton_tol <= 0:
            raise ValueError("newton_tol must be positive")
        if self.scheme not in ("drift_implicit", "tamed_explicit"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        n = round(self.T / self.dt)
        if abs(n * self.dt - self.T) > 1e-12 * max(1.0, self.T):
            raise ValueError(f"dt={self.dt} does not divide T={self.T}")

    @property
    def n_steps(self) -> int:
        return round(self.T / self.dt)


@dataclass(frozen=True)
class StoppingTimeRule:
    """Truncate at the first time ‖Y‖_H² or the running V-energy exceeds N."""

    N: float

    def __post_init__(self):
        if self.N <= 0:
            raise ValueError("threshold N must be positive")


@dataclass
class PathRecord:
    """Cadlag discrete trajectory with jump markers and per-time norms.

    Jump times appear twice (pre and post value); between consecutive jump
    entries times strictly increase.  ``stopped_at`` is set by
    ``apply_stopping``; ``truncated_at`` marks a propagated step failure.
    """

    times: np.ndarray
    states: np.ndarray  # (n_entries, level)
    is_jump_post: np.ndarray
    norm_h: np.ndarray
    norm_v: np.ndarray
    level: int
    dt: float
    T: float
    seed: int | None = None
    stopped_at: float | None = None
    truncated_at: float | None = None

    @property
    def n_jump_entries(self) -> int:
        return int(self.is_jump_post.sum())

    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def step_grid_view(self):
        """(times, states) restricted to the uniform step grid (no jump rows)."""
        mask = ~self.is_jump_post
        keep = []
        for k in np.nonzero(mask)[0]:
            # drop the pre-jump duplicate rows: keep entries whose time is a
            # grid multiple
            ratio = self.times[k] / self.dt
            if abs(ratio - round(ratio)) < 1e-9:
                keep.append(k)
        idx = np.array(keep, dtype=int)
        return self.times[idx], self.states[idx]


def _drift_only_update(
    bundle: CoefficientBundle,
    triple: GelfandTriple,
    x: np.ndarray,
    t: float,
    dt: float,
    config: SolverConfig,
) -> np.ndarray:
    if config.scheme == "tamed_explicit":
        a = np.asarray(bundle.drift(t, unchecked_state(x.size, x, t)), dtype=float)
        return x + dt * a / (1.0 + dt * triple.norm_vstar(a))
    t_next = t + dt
    if bundle.drift_implicit_solve is not None:
        return np.asarray(bundle.drift_implicit_solve(t_next, x, dt), dtype=float)
    return _newton_implicit(bundle, x, t_next, dt, config)


def _newton_implicit(
    bundle: CoefficientBundle,
    x: np.ndarray,
    t_next: float,
    dt: float,
    config: SolverConfig,
) -> np.ndarray:
    m = x.size
    tol = config.newton_tol * (1.0 + float(np.linalg.norm(x)))

    def residual(y):
        a = np.asarray(bundle.drift(t_next, unchecked_state(m, y, t_next)), dtype=float)
        return y - dt * a - x

    y = x.copy()
    f = residual(y)
    nf = float(np.linalg.norm(f))
    for it in range(config.newton_max_iter):
        if nf < tol:
            return y
        if bundle.drift_jacobian is not None:
            ja = np.asarray(bundle.drift_jacobian(t_next, unchecked_state(m, y, t_next)), dtype=float)
        else:
            ja = _fd_jacobian(bundle, y, t_next)
        jac = np.eye(m) - dt * ja
        try:
            delta = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(jac, -f, rcond=None)[0]
        s = 1.0
        for _ in range(30):
            y_trial = y + s * delta
            f_trial = residual(y_trial)
            nf_trial = float(np.linalg.norm(f_trial))
            if nf_trial < nf or not np.isfinite(nf_trial):
                if np.isfinite(nf_trial):
                    break
            s *= 0.5
        else:
            raise StepFailure(time=t_next, residual=nf, iterations=it + 1)
        y, f, nf = y_trial, f_trial, nf_trial
    if nf < tol:
        return y
    raise StepFailure(time=t_next, residual=nf, iterations=config.newton_max_iter)


def _fd_jacobian(bundle: CoefficientBundle, y: np.ndarray, t: float) -> np.ndarray:
    m = y.size
    base = np.asarray(bundle.drift(t, unchecked_state(m, y, t)), dtype=float)
    jac = np.empty((m, m))
    h0 = np.sqrt(np.finfo(float).eps)
    for j in range(m):
        h = h0 * (1.0 + abs(y[j]))
        yp = y.copy()
        yp[j] += h
        jac[:, j] = (np.asarray(bundle.drift(t, unchecked_state(m, yp, t)), dtype=float) - base) / h
    return jac


def _compensator(bundle: CoefficientBundle, x_state: GalerkinState, t: float, dt: float) -> np.ndarray:
    if bundle.mark_space.is_zero:
        return np.zeros(x_state.level)
    return dt * bundle.compensator_density(t, x_state)


def _step_events(
    x: np.ndarray,
    t: float,
    dt: float,
    bundle: CoefficientBundle,
    triple: GelfandTriple,
    wiener_increment: np.ndarray,
    jumps_in_step,
    mark_space: MarkSpace,
    config: SolverConfig,
    halve_drift: bool = False,
):
    """One step; returns (end state, [(tau, pre, post), ...]).

    ``halve_drift`` composes two implicit half steps for the drift substep
    only; the noise parts are unchanged.  Used as the single retry after an
    implicit-solve failure.
    """
    m = x.size
    x_state = unchecked_state(m, x, t)
    if halve_drift:
        y = _drift_only_update(bundle, triple, x, t, dt / 2.0, config)
        y = _drift_only_update(bundle, triple, y, t + dt / 2.0, dt / 2.0, config)
    else:
        y = _drift_only_update(bundle, triple, x, t, dt, config)

    y = y + bundle.apply_diffusion(t, x_state, np.asarray(wiener_increment, dtype=float))

    entries = []
    for ev in jumps_in_step:
        if not (t < ev.time <= t + dt + 1e-12 * max(1.0, t + dt)):
            raise ValueError(f"jump at {ev.time} outside step ({t}, {t + dt}]")
        z = float(mark_space.marks[ev.mark_index])
        pre = y
        g = np.asarray(bundle.jump(ev.time, unchecked_state(m, pre, ev.time), z), dtype=float)
        y = pre + g
        entries.append((ev.time, pre, y))

    y = y - _compensator(bundle, x_state, t, dt)
    return y, entries


def step(
    state: GalerkinState,
    t: float,
    dt: float,
    bundle: CoefficientBundle,
    wiener_increment: np.ndarray,
    jumps_in_step,
    mark_space: MarkSpace,
    triple: GelfandTriple,
    config: SolverConfig | None = None,
) -> GalerkinState:
    """Advance one step; ``jumps_in_step`` must have times in (t, t+dt]."""
    if config is None:
        config = SolverConfig(dt=dt, T=max(2 * dt, dt + 1.0), level=state.level)
    y, _ = _step_events(
        state.coeffs, t, dt, bundle, triple, wiener_increment, jumps_in_step, mark_space, config
    )
    return GalerkinState(level=state.level, coeffs=y, time=t + dt)


def solve_path(
    bundle: CoefficientBundle,
    triple: GelfandTriple,
    x0,
    config: SolverConfig,
    mark_space: MarkSpace,
    seed: int,
    realization: NoiseRealization | None = None,
) -> PathRecord:
    """Simulate the full cadlag record on [0, T]; deterministic given seed.

    When a realization is supplied, the level consumes its first
    ``config.level`` Wiener modes and the shared jump list, which is the
    noise coupling used by the Galerkin-convergence study.
    """
    m = config.level
    if m > triple.dimension_cap:
        raise ValueError(f"level {m} exceeds dimension_cap {triple.dimension_cap}")
    if realization is None:
        realization = sample_noise(m, config.T, config.dt, mark_space, seed)
    if realization.m < m:
        raise ValueError(f"realization has {realization.m} Wiener modes, need {m}")
    if abs(realization.dt - config.dt) > 1e-12 or realization.T < config.T - 1e-12:
        raise ValueError("realization grid does not match the solver config")

    init = triple.project(np.asarray(x0, dtype=float), m)
    dt, n_steps = config.dt, config.n_steps

    times = [0.0]
    states = [init.coeffs.copy()]
    flags = [False]
    truncated_at = None

    jumps = [ev for ev in realization.jumps if ev.time <= config.T]
    j_ptr = 0
    x = init.coeffs.copy()
    for k in range(n_steps):
        t = k * dt
        t_next = (k + 1) * dt if k + 1 < n_steps else config.T
        dW = realization.wiener[k, :m]
        step_jumps = []
        while j_ptr < len(jumps) and jumps[j_ptr].time <= t_next + 1e-15:
            step_jumps.append(jumps[j_ptr])
            j_ptr += 1
        try:
            y, entries = _step_events(
                x, t, dt, bundle, triple, dW, step_jumps, mark_space, config
            )
        except StepFailure:
            # one retry with the drift substep halved before propagating
            try:
                y, entries = _step_events(
                    x, t, dt, bundle, triple, dW, step_jumps, mark_space, config,
                    halve_drift=True,
                )
            except StepFailure:
                truncated_at = t
                break
        for tau, pre, post in entries:
            times.extend([tau, tau])
            states.extend([pre.copy(), post.copy()])
            flags.extend([False, True])
        times.append(t_next)
        states.append(y.copy())
        flags.append(False)
        x = y

    states_arr = np.asarray(states)
    times_arr = np.asarray(times)
    norm_h = np.sqrt(np.einsum("ij,ij->i", states_arr, states_arr))
    if bundle.v_norm is None:
        w = triple.v_weights[:m]
        norm_v = np.sqrt(np.einsum("ij,ij->i", states_arr * w, states_arr))
    else:
        norm_v = np.array(
            [bundle.v_norm(unchecked_state(m, s, float(tt))) for s, tt in zip(states_arr, times_arr)]
        )
    return PathRecord(
        times=times_arr,
        states=states_arr,
        is_jump_post=np.asarray(flags, dtype=bool),
        norm_h=norm_h,
        norm_v=norm_v,
        level=m,
        dt=dt,
        T=config.T,
        seed=seed,
        truncated_at=truncated_at,
    )


def apply_stopping(record: PathRecord, rule: StoppingTimeRule, beta: float = 2.0):
    """Truncate at tau = first recorded time where ‖Y‖_H² > N or the
    left-Riemann accumulation of ‖Y‖_V^beta exceeds N; tau = T when the
    thresholds are never crossed (void-set convention).
    """
    n = record.times.size
    cum = 0.0
    cut = None
    for k in range(n):
        if record.norm_h[k] ** 2 > rule.N or cum > rule.N:
            cut = k
            break
        if k + 1 < n:
            cum += record.norm_v[k] ** beta * (record.times[k + 1] - record.times[k])
    if cut is None:
        return record, float(record.times[-1])
    tau = float(record.times[cut])
    sl = slice(0, cut + 1)
    truncated = PathRecord(
        times=record.times[sl].copy(),
        states=record.states[sl].copy(),
        is_jump_post=record.is_jump_post[sl].copy(),
        norm_h=record.norm_h[sl].copy(),
        norm_v=record.norm_v[sl].copy(),
        level=record.level,
        dt=record.dt,
        T=record.T,
        seed=record.seed,
        stopped_at=tau,
        truncated_at=record.truncated_at,
    )
    return truncated, tau
