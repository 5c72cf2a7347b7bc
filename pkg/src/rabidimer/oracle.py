"""Exact propagation in a truncated number-state basis.

This is the independent ground truth for small instances: the full
Schrodinger equation is integrated with the same RK4 kernel as the main
engine but in a completely different representation, a dense state vector
over (qubit_L, qubit_R, n_L, n_R, p) with sparse operator application.
The static Hamiltonian is kept as a sparse matrix (never densified); the
time-dependent drive is a diagonal applied on the fly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

from .errors import TruncationLeakError
from .integrator import HealthLog, Trajectory, rk4_step
from .model import ModelParams, drive_field
from .observables import NumberStatePopulations, ObservableRecord

__all__ = ["FockVector", "coherent_fock_init", "exact_propagate",
           "fock_measure", "fock_number_state_populations"]

_QUBIT_LABELS = ("up-up", "up-down", "down-up", "down-down")


@dataclass(frozen=True)
class FockVector:
    """Dense wavefunction over the truncated basis.

    amplitudes has shape (2, 2, n_max_L+1, n_max_R+1, p_max+1), indexed
    (qubit_L, qubit_R, n_L, n_R, p) with qubit index 0 = up, 1 = down.
    """

    amplitudes: np.ndarray
    n_max_L: int
    n_max_R: int
    p_max: int
    t: float = 0.0

    def __post_init__(self):
        shape = (2, 2, self.n_max_L + 1, self.n_max_R + 1, self.p_max + 1)
        arr = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if arr.shape != shape:
            raise ValueError(f"amplitudes shape {arr.shape}, expected {shape}")
        object.__setattr__(self, "amplitudes", arr)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def flat(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)


def _coherent_column(alpha: complex, n_max: int) -> np.ndarray:
    """Number-state amplitudes of a coherent state, renormalized on the
    truncated basis."""
    ns = np.arange(n_max + 1)
    if alpha == 0:
        col = np.zeros(n_max + 1, dtype=complex)
        col[0] = 1.0
        return col
    log_mag = ns * math.log(abs(alpha)) - 0.5 * gammaln(ns + 1.0) - 0.5 * abs(alpha) ** 2
    col = np.exp(log_mag) * np.exp(1j * ns * np.angle(complex(alpha)))
    return col / np.linalg.norm(col)


def coherent_fock_init(alpha_L: complex, alpha_R: complex, qubits: str,
                       n_max_L: int, n_max_R: int, p_max: int) -> FockVector:
    """Product state: coherent photon modes, phonon vacuum, fixed qubits.

    ``qubits`` is one of "up-up", "up-down", "down-up", "down-down".
    Truncations must comfortably contain the coherent Poisson peak
    (n_max >= |alpha|^2 + 3|alpha|), otherwise the cut tail is not
    negligible and an error is raised.
    """
    if qubits not in _QUBIT_LABELS:
        raise ValueError(f"qubits must be one of {_QUBIT_LABELS}, got {qubits!r}")
    for alpha, n_max, name in ((alpha_L, n_max_L, "n_max_L"),
                               (alpha_R, n_max_R, "n_max_R")):
        need = abs(alpha) ** 2 + 3.0 * abs(alpha)
        if n_max < need:
            raise ValueError(
                f"{name}={n_max} too small for |alpha|={abs(alpha):.3g} "
                f"(need >= {math.ceil(need)})"
            )
    psi = np.zeros((2, 2, n_max_L + 1, n_max_R + 1, p_max + 1), dtype=complex)
    qL, qR = qubits.split("-")
    iL = 0 if qL == "up" else 1
    iR = 0 if qR == "up" else 1
    col_L = _coherent_column(alpha_L, n_max_L)
    col_R = _coherent_column(alpha_R, n_max_R)
    phonon = np.zeros(p_max + 1, dtype=complex)
    phonon[0] = 1.0
    psi[iL, iR] = col_L[:, None, None] * col_R[None, :, None] * phonon[None, None, :]
    return FockVector(amplitudes=psi, n_max_L=n_max_L, n_max_R=n_max_R,
                      p_max=p_max, t=0.0)


class _FockOperators:
    """Sparse static Hamiltonian and diagonal weights for one truncation."""

    def __init__(self, params: ModelParams, n_max_L: int, n_max_R: int, p_max: int):
        dims = (2, 2, n_max_L + 1, n_max_R + 1, p_max + 1)

        def lower(n):  # annihilation operator on an (n+1)-dim mode
            return sp.diags(np.sqrt(np.arange(1, n + 1)), 1, format="csr")

        eye = [sp.identity(d, format="csr") for d in dims]
        sz = sp.diags([1.0, -1.0], 0, format="csr")  # index 0 = up
        sx = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))

        def embed(ops: dict) -> sp.csr_matrix:
            out = None
            for axis in range(5):
                op = ops.get(axis, eye[axis])
                out = op if out is None else sp.kron(out, op, format="csr")
            return out

        aL = lower(n_max_L)
        aR = lower(n_max_R)
        b = lower(p_max)
        nL = (aL.T @ aL).tocsr()
        nR = (aR.T @ aR).tocsr()
        nph = (b.T @ b).tocsr()

        H = (params.omega_L * embed({2: nL})
             + params.omega_R * embed({3: nR})
             + params.omega_ph * embed({4: nph})
             - params.J * (embed({2: aL.T.tocsr(), 3: aR})
                           + embed({2: aL, 3: aR.T.tocsr()}))
             - params.g * embed({0: sx, 2: (aL + aL.T).tocsr()})
             - params.g * embed({1: sx, 3: (aR + aR.T).tocsr()})
             + params.lam * (embed({0: sz, 4: (b + b.T).tocsr()})
                             + embed({1: sz, 4: (b + b.T).tocsr()})))
        self.H_static = H.tocsr()

        grid = np.indices(dims)
        self.w_nL = grid[2].reshape(-1).astype(float)
        self.w_nR = grid[3].reshape(-1).astype(float)
        self.w_p = grid[4].reshape(-1).astype(float)
        self.z_L = np.where(grid[0].reshape(-1) == 0, 1.0, -1.0)
        self.z_R = np.where(grid[1].reshape(-1) == 0, 1.0, -1.0)
        self.up_L = grid[0].reshape(-1) == 0
        self.up_R = grid[1].reshape(-1) == 0
        self.params = params
        self.dims = dims

    def apply_h(self, t: float, psi: np.ndarray) -> np.ndarray:
        bias = (0.5 * drive_field(self.params, "L", t) * self.z_L
                + 0.5 * drive_field(self.params, "R", t) * self.z_R)
        return self.H_static @ psi + bias * psi

    def schrodinger_rhs(self, t: float, psi: np.ndarray) -> np.ndarray:
        return -1j * self.apply_h(t, psi)


def fock_measure(state: FockVector, params: ModelParams,
                 ops: _FockOperators | None = None) -> ObservableRecord:
    """Same observable set as the variational engine, from |psi|^2 weights."""
    if ops is None:
        ops = _FockOperators(params, state.n_max_L, state.n_max_R, state.p_max)
    psi = state.flat()
    prob = np.abs(psi) ** 2
    norm2 = float(prob.sum())
    N_L = float(prob @ ops.w_nL) / norm2
    N_R = float(prob @ ops.w_nR) / norm2
    N_ph = float(prob @ ops.w_p) / norm2
    sz_L = float(prob @ ops.z_L) / norm2
    sz_R = float(prob @ ops.z_R) / norm2
    p_up_L = float(prob[ops.up_L].sum()) / norm2
    p_up_R = float(prob[ops.up_R].sum()) / norm2
    energy = float(np.real(np.vdot(psi, ops.apply_h(state.t, psi)))) / norm2
    return ObservableRecord(
        t=state.t, N_L=N_L, N_R=N_R, N_total=N_L + N_R, Z=N_L - N_R,
        sz_L=sz_L, sz_R=sz_R, P_LZ_L=p_up_L, P_LZ_R=p_up_R,
        N_ph=N_ph, energy=energy, norm2=norm2,
    )


def fock_number_state_populations(state: FockVector, side: str,
                                  n_max: int | None = None) -> NumberStatePopulations:
    prob = np.abs(state.amplitudes) ** 2
    axis_keep = 2 if side == "L" else 3
    axes = tuple(ax for ax in range(5) if ax != axis_keep)
    marginal = prob.sum(axis=axes) / prob.sum()
    if n_max is not None:
        out = np.zeros(n_max + 1)
        k = min(n_max + 1, marginal.size)
        out[:k] = marginal[:k]
        marginal = out
    return NumberStatePopulations(side=side, n_max=len(marginal) - 1, p=marginal)


def _boundary_mass(state: FockVector) -> dict:
    prob = np.abs(state.amplitudes) ** 2
    total = prob.sum()
    return {
        "n_L": float(prob[:, :, -1, :, :].sum() / total),
        "n_R": float(prob[:, :, :, -1, :].sum() / total),
        "p": float(prob[:, :, :, :, -1].sum() / total),
    }


def exact_propagate(params: ModelParams, initial: FockVector, t_end: float,
                    dt: float, record_every: int = 1,
                    leak_tol: float = 1e-6, snapshot_every: int = 0) -> Trajectory:
    """RK4 integration of the Schrodinger equation on the truncated basis.

    Boundary occupation of any mode above leak_tol aborts with an error
    demanding a larger truncation.  Norm is monitored, not corrected.
    """
    ops = _FockOperators(params, initial.n_max_L, initial.n_max_R, initial.p_max)
    psi = initial.flat().copy()
    t = initial.t
    n_steps = int(np.floor((t_end - t) / dt + 1e-9))

    times = []
    records = []
    health = HealthLog()
    snapshots = []

    def current_state():
        return FockVector(amplitudes=psi.reshape(ops.dims),
                          n_max_L=initial.n_max_L, n_max_R=initial.n_max_R,
                          p_max=initial.p_max, t=t)

    def record():
        state = current_state()
        leaks = _boundary_mass(state)
        worst = max(leaks, key=leaks.get)
        if leaks[worst] > leak_tol:
            raise TruncationLeakError(
                f"boundary occupation {leaks[worst]:.3e} of mode {worst} at "
                f"t={t:.6g} exceeds leak_tol={leak_tol:.1e}; enlarge the truncation",
                t=t, mode=worst, boundary_mass=leaks[worst],
                partial_trajectory=Trajectory(times=np.array(times),
                                              records=records, health=health),
            )
        rec = fock_measure(state, params, ops)
        norm_dev = abs(rec.norm2 - 1.0)
        health.max_norm_deviation = max(health.max_norm_deviation, norm_dev)
        times.append(t)
        records.append(rec)

    record()
    if snapshot_every:
        snapshots.append(current_state())
    for k in range(n_steps):
        psi = rk4_step(ops.schrodinger_rhs, t, psi, dt)
        t = initial.t + (k + 1) * dt
        health.steps += 1
        if (k + 1) % record_every == 0:
            record()
        if snapshot_every and (k + 1) % snapshot_every == 0:
            snapshots.append(current_state())
    return Trajectory(times=np.array(times), records=records, health=health,
                      checkpoints=snapshots)
