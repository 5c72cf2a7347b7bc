"""Fixed-step fourth-order Runge-Kutta propagation with health monitoring.

The full 7M-dimensional complex parameter vector is advanced with the
classical RK4 scheme; the equation-of-motion system is assembled and
solved fresh at every stage.  No renormalization is applied during a run:
norm drift is the primary integrator-health signal and aborts the run
when it exceeds the configured threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import eom
from .ansatz import MultiD2State, from_flat_record, norm_squared, overlaps, to_flat_record
from .errors import NormAbortError
from .linsolve import SolverConfig
from .model import ModelParams, ScenarioPreset
from .observables import ObservableRecord, measure

__all__ = ["RunConfig", "HealthLog", "Trajectory", "rk4_step", "step", "run",
           "run_config_for", "write_checkpoint", "read_checkpoint"]


@dataclass(frozen=True)
class RunConfig:
    dt: float = 0.0025
    t_end: float = 300.0
    record_every: int = 1
    norm_abort_threshold: float = 1e-3
    solver_config: SolverConfig = SolverConfig()

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt > 0")
        if self.t_end < self.dt:
            raise ValueError("t_end >= dt")
        if self.record_every < 1:
            raise ValueError("record_every >= 1")


def run_config_for(preset: ScenarioPreset, **overrides) -> RunConfig:
    """RunConfig with the preset's stepping parameters."""
    kw = dict(dt=preset.dt, t_end=preset.t_end, record_every=preset.record_every)
    kw.update(overrides)
    return RunConfig(**kw)


@dataclass
class HealthLog:
    max_residual: float = 0.0
    max_norm_deviation: float = 0.0
    min_gram_eigenvalue: float = np.inf
    steps: int = 0

    def as_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "max_norm_deviation": self.max_norm_deviation,
            "min_gram_eigenvalue": (None if np.isinf(self.min_gram_eigenvalue)
                                    else self.min_gram_eigenvalue),
            "steps": self.steps,
        }


@dataclass
class Trajectory:
    """Sampled observables of one run plus health bookkeeping."""

    times: np.ndarray
    records: list
    health: HealthLog
    checkpoints: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def __len__(self) -> int:
        return len(self.records)


def rk4_step(f, t: float, y: np.ndarray, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of y' = f(t, y)."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + (0.5 * dt) * k1)
    k3 = f(t + 0.5 * dt, y + (0.5 * dt) * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _pack(state: MultiD2State) -> np.ndarray:
    return np.concatenate([state.amplitudes().ravel(),
                           state.displacements().ravel()])


def _unpack(y: np.ndarray, M: int, t: float) -> MultiD2State:
    w = y[: 4 * M].reshape(4, M)
    z = y[4 * M:].reshape(3, M)
    return MultiD2State(A=w[0], B=w[1], C=w[2], D=w[3],
                        mu=z[0], nu=z[1], eta=z[2], t=t)


def _step_with_health(state: MultiD2State, params: ModelParams,
                      config: RunConfig, gauge: str):
    M = state.M
    residual = 0.0

    def f(t, y):
        nonlocal residual
        d = eom.derivatives(_unpack(y, M, t), params, t,
                            config.solver_config, gauge)
        residual = max(residual, d.residual_norm)
        return np.concatenate([d.amplitude_rates().ravel(),
                               d.displacement_rates().ravel()])

    y = rk4_step(f, state.t, _pack(state), config.dt)
    return _unpack(y, M, state.t + config.dt), residual


def step(state: MultiD2State, params: ModelParams, config: RunConfig,
         gauge: str = "normalized") -> MultiD2State:
    """Advance the state by one RK4 step of size config.dt.

    Aborts with NormAbortError if the norm deviates from unity by more
    than config.norm_abort_threshold after the step.
    """
    new_state, _ = _step_with_health(state, params, config, gauge)
    deviation = abs(norm_squared(new_state, gauge) - 1.0)
    if deviation > config.norm_abort_threshold:
        raise NormAbortError(
            f"norm^2 deviated by {deviation:.3e} at t={new_state.t:.6g}",
            t=new_state.t, norm2=1.0 + deviation,
        )
    return new_state


def run(preset: ScenarioPreset, run_config: RunConfig | None = None,
        sinks=(), gauge: str = "normalized",
        initial_state: MultiD2State | None = None,
        checkpoint_every: int = 0) -> Trajectory:
    """Propagate a scenario and record observables every record_every steps.

    Deterministic for a fixed preset (the rng_seed fixes the degeneracy-
    breaking noise of the initial state).  On norm abort the partial
    trajectory is attached to the raised error.
    """
    from .ansatz import init_paper_state  # local import keeps module load light

    config = run_config or run_config_for(preset)
    state = initial_state if initial_state is not None else init_paper_state(preset)
    params = preset.params

    n_steps = int(np.floor((config.t_end - state.t) / config.dt + 1e-9))
    times = []
    records = []
    health = HealthLog()
    checkpoints = []

    def record(st, residual_running_max):
        norm2 = norm_squared(st, gauge)
        health.max_norm_deviation = max(health.max_norm_deviation, abs(norm2 - 1.0))
        gram_min = float(np.linalg.eigvalsh(overlaps(st))[0])
        health.min_gram_eigenvalue = min(health.min_gram_eigenvalue, gram_min)
        rec = measure(st, params, gauge, residual_max=residual_running_max)
        times.append(st.t)
        records.append(rec)
        for sink in sinks:
            sink(rec)

    record(state, 0.0)
    if checkpoint_every:
        checkpoints.append(state)
    try:
        for k in range(n_steps):
            state, stage_residual = _step_with_health(state, params, config, gauge)
            health.max_residual = max(health.max_residual, stage_residual)
            health.steps += 1
            deviation = abs(norm_squared(state, gauge) - 1.0)
            if deviation > config.norm_abort_threshold:
                raise NormAbortError(
                    f"norm^2 deviated by {deviation:.3e} at t={state.t:.6g} "
                    f"(step {k + 1} of {n_steps})",
                    t=state.t, norm2=1.0 + deviation,
                )
            if checkpoint_every and (k + 1) % checkpoint_every == 0:
                checkpoints.append(state)
            if (k + 1) % config.record_every == 0:
                record(state, health.max_residual)
    except NormAbortError as err:
        err.partial_trajectory = Trajectory(
            times=np.array(times), records=records, health=health,
            checkpoints=checkpoints)
        raise

    return Trajectory(times=np.array(times), records=records, health=health,
                      checkpoints=checkpoints)


# ---------------------------------------------------------------------------
# checkpointing: flat text records that round-trip float64 exactly
# ---------------------------------------------------------------------------

def write_checkpoint(path, state: MultiD2State, rng_seed: int) -> None:
    rec = to_flat_record(state)
    with open(path, "w") as fh:
        fh.write(f"{rng_seed}\n")
        fh.write(" ".join(repr(float(v)) for v in rec) + "\n")


def read_checkpoint(path) -> tuple[MultiD2State, int]:
    with open(path) as fh:
        seed = int(fh.readline())
        rec = np.array([float(tok) for tok in fh.readline().split()])
    return from_flat_record(rec), seed
