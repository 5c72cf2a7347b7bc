"""Equations of motion: assembling and solving, at a given time, the
complex linear system whose solution is the time derivative of every
variational parameter.

Unknown layout of the 7M x 7M system (M = multiplicity):

    [dA_1..dA_M, dB.., dC.., dD.., dmu.., dnu.., deta..]

The amplitude slots hold reduced rates u_n = dw_n - w_n * d(sig_n)/dt / 2,
where sig_n = |mu_n|^2 + |nu_n|^2 + |eta_n|^2.  Written in these unknowns
the variational equations of the normalized-coherent-state parametrization
are exactly complex-linear: the Gaussian-normalization (kinetic) terms
-w_n (d sig_n/dt)/2 cancel against the same combination appearing in the
displacement rows.  After the solve, d(sig_n)/dt is evaluated from the
displacement derivatives and the true amplitude rates are recovered; with
``gauge="unnormalized"`` the bare-kernel parametrization is propagated
instead and the reduced rates *are* the amplitude rates.

Row blocks, using the pairwise kernel K (normalized overlaps S or bare
kernels S_bar depending on gauge) and theta_ln = sum_m zbar_{m,l} dz_{m,n}:

    amplitude family s, row l:
        i sum_n [u_{s,n} + w_{s,n} theta_ln] K_ln = RHS_s(l)
    displacement family m, row l:
        i sum_n [U_ln z_{m,n} + P_ln dz_{m,n} + P_ln z_{m,n} theta_ln] K_ln
            = RHS_m(l)

with P_ln the amplitude Gram sum and U_ln its u-weighted analogue.  The
right-hand sides carry the drive biases +-(F/2)cos(Omega t + Phi), the
mode energies, tunneling, the qubit-phonon terms (A and D families only,
weight +-2), and the g cross terms mixing (A,C)/(B,D) through the left
mode and (A,B)/(C,D) through the right mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from . import linsolve
from .ansatz import MultiD2State
from .errors import AssemblyError
from .model import ModelParams, drive_field

__all__ = [
    "LinearSystem",
    "DerivativeSet",
    "assemble",
    "derivatives",
    "total_energy",
    "dump_system",
    "index_label",
]

# sigma_z weights of the amplitude families (A, B, C, D) for each qubit
_ZL_SIGN = np.array([1.0, 1.0, -1.0, -1.0])
_ZR_SIGN = np.array([1.0, -1.0, 1.0, -1.0])
# family index permutations under sigma_x on the left / right qubit
_FLIP_L = (2, 3, 0, 1)
_FLIP_R = (1, 0, 3, 2)

_FAMILIES = ("A", "B", "C", "D", "mu", "nu", "eta")

# Displacements of configurations that carry (almost) no amplitude are
# unconstrained by the variational principle: their equations degenerate
# and the formal solution lets them race around without moving the state,
# or freeze them at a standstill that desynchronizes their phase bookkeeping.
# A smooth occupation-weighted diagonal steers such ghost displacements
# toward the local free-field rotation -i(omega mu - J nu, ...), the motion
# an empty configuration must follow so that it stays phase-locked and can
# absorb amplitude later.  The weight fades out once a configuration's
# squared amplitude grows past the population floor.
_GHOST_DAMP = 1.0
_GHOST_POP_FLOOR = 1e-4
# include the state-averaged coupling forces in the steering target, so
# ghosts ride with the wave packet instead of the bare field
_MEANFIELD_STEER = True


@dataclass(frozen=True)
class LinearSystem:
    """Dense complex system matrix, right-hand side and bookkeeping."""

    matrix: np.ndarray
    rhs: np.ndarray
    M: int
    gauge: str
    t: float


@dataclass(frozen=True)
class DerivativeSet:
    """Time derivatives of all 7M parameters plus the solve residual."""

    dA: np.ndarray
    dB: np.ndarray
    dC: np.ndarray
    dD: np.ndarray
    dmu: np.ndarray
    dnu: np.ndarray
    deta: np.ndarray
    residual_norm: float

    def amplitude_rates(self) -> np.ndarray:
        return np.stack([self.dA, self.dB, self.dC, self.dD])

    def displacement_rates(self) -> np.ndarray:
        return np.stack([self.dmu, self.dnu, self.deta])


def index_label(i: int, M: int) -> str:
    """Human-readable name of unknown/row index i in the 7M layout."""
    return f"{_FAMILIES[i // M]}[{i % M + 1}]"


def _pairwise(state: MultiD2State, params: ModelParams, t: float, gauge: str):
    """All pairwise configuration tables entering the equations of motion."""
    w = state.amplitudes()
    z = state.displacements()
    wc = w.conj()
    zc = z.conj()

    ip = np.einsum("ml,mn->ln", zc, z)
    sig = np.sum((z * zc).real, axis=0)
    if gauge == "normalized":
        K = np.exp(ip - 0.5 * (sig[:, None] + sig[None, :]))
    elif gauge == "unnormalized":
        K = np.exp(ip)
    else:
        raise ValueError(f"unknown gauge {gauge!r}")

    G = np.einsum("sl,sn->sln", wc, w)
    P = G.sum(axis=0)
    ZL = np.einsum("s,sln->ln", _ZL_SIGN, G)
    ZR = np.einsum("s,sln->ln", _ZR_SIGN, G)
    # sigma_x Gram sums: left couples (A,C) and (B,D), right (A,B) and (C,D)
    XL = (wc[0, :, None] * w[2, None, :] + wc[2, :, None] * w[0, None, :]
          + wc[1, :, None] * w[3, None, :] + wc[3, :, None] * w[1, None, :])
    XR = (wc[0, :, None] * w[1, None, :] + wc[1, :, None] * w[0, None, :]
          + wc[2, :, None] * w[3, None, :] + wc[3, :, None] * w[2, None, :])
    # (sigma_z^L + sigma_z^R) weights are +2 / 0 / 0 / -2
    W2 = 2.0 * (G[0] - G[3])

    musum = zc[0][:, None] + z[0][None, :]
    nusum = zc[1][:, None] + z[1][None, :]
    etasum = zc[2][:, None] + z[2][None, :]

    hmode = (params.omega_L * zc[0][:, None] * z[0][None, :]
             + params.omega_R * zc[1][:, None] * z[1][None, :]
             - params.J * (zc[0][:, None] * z[1][None, :]
                           + zc[1][:, None] * z[0][None, :])
             + params.omega_ph * zc[2][:, None] * z[2][None, :])

    fL = 0.5 * drive_field(params, "L", t)
    fR = 0.5 * drive_field(params, "R", t)

    # full Hamiltonian kernel: <l| H |n> amplitude-weighted, without K
    h = (fL * ZL + fR * ZR + P * hmode
         - params.g * XL * musum - params.g * XR * nusum
         + params.lam * W2 * etasum)

    return SimpleNamespace(w=w, z=z, wc=wc, zc=zc, K=K, P=P, ZL=ZL, ZR=ZR,
                           XL=XL, XR=XR, W2=W2, musum=musum, nusum=nusum,
                           etasum=etasum, hmode=hmode, h=h, fL=fL, fR=fR)


def assemble(state: MultiD2State, params: ModelParams, t: float,
             gauge: str = "normalized") -> LinearSystem:
    """Build the 7M x 7M system whose solution is the derivative vector."""
    return _assemble_from_tables(state, params, t, gauge,
                                 _pairwise(state, params, t, gauge))


def _assemble_from_tables(state: MultiD2State, params: ModelParams, t: float,
                          gauge: str, tb) -> LinearSystem:
    M = state.M
    w, z, wc, zc, K = tb.w, tb.z, tb.wc, tb.zc, tb.K
    g, lam = params.g, params.lam

    n4, n3 = 4 * M, 3 * M
    matrix = np.empty((7 * M, 7 * M), dtype=complex)

    # amplitude rows / amplitude columns: block diagonal i*K per family
    matrix[:n4, :n4] = np.kron(np.eye(4), 1j * K)
    # amplitude rows / displacement columns
    T = 1j * zc[None, :, :, None] * w[:, None, None, :] * K[None, None, :, :]
    matrix[:n4, n4:] = T.transpose(0, 2, 1, 3).reshape(n4, n3)
    # displacement rows / amplitude columns
    T = 1j * wc[None, :, :, None] * z[:, None, None, :] * K[None, None, :, :]
    matrix[n4:, :n4] = T.transpose(0, 2, 1, 3).reshape(n3, n4)
    # displacement rows / displacement columns
    eye3 = np.eye(3)
    T = (eye3[:, :, None, None]
         + z[:, None, None, :] * zc[None, :, :, None]) * (1j * K * tb.P)
    matrix[n4:, n4:] = T.transpose(0, 2, 1, 3).reshape(n3, n3)

    rhs = np.empty(7 * M, dtype=complex)
    # amplitude families: diagonal drive/mode terms plus g cross terms
    diag_s = (tb.hmode[None, :, :]
              + (_ZL_SIGN * tb.fL + _ZR_SIGN * tb.fR)[:, None, None]
              + (_ZL_SIGN + _ZR_SIGN)[:, None, None] * lam * tb.etasum[None, :, :])
    amp = (w[:, None, :] * diag_s
           - g * w[_FLIP_L, None, :] * tb.musum[None, :, :]
           - g * w[_FLIP_R, None, :] * tb.nusum[None, :, :])
    rhs[:n4] = (K[None, :, :] * amp).sum(axis=2).reshape(n4)

    # displacement families: commutator terms plus z-weighted H kernel
    c_disp = np.stack([params.omega_L * z[0] - params.J * z[1],
                       params.omega_R * z[1] - params.J * z[0],
                       params.omega_ph * z[2]])
    flip = np.stack([-g * tb.XL, -g * tb.XR, lam * tb.W2])
    disp = (tb.P[None, :, :] * c_disp[:, None, :] + flip
            + z[:, None, :] * tb.h[None, :, :])
    rhs[n4:] = (K[None, :, :] * disp).sum(axis=2).reshape(n3)

    # ghost steering: occupation-weighted pull toward the local flow an
    # empty configuration should follow to stay usable
    pop = np.sum((w * wc).real, axis=0)
    damp = (_GHOST_DAMP * float(np.max(np.abs(matrix)))
            * _GHOST_POP_FLOOR / (pop + _GHOST_POP_FLOOR))
    steer = c_disp.copy()
    if _MEANFIELD_STEER:
        norm2 = np.sum(tb.P * K).real
        if norm2 > 0.0:
            steer[0] -= g * np.sum(tb.XL * K).real / norm2
            steer[1] -= g * np.sum(tb.XR * K).real / norm2
            steer[2] += lam * np.sum(tb.W2 * K).real / norm2
    damp3 = np.tile(damp, 3)
    idx = np.arange(n4, 7 * M)
    matrix[idx, idx] += damp3
    rhs[n4:] += damp3 * (-1j * steer.reshape(n3))

    if not np.all(np.isfinite(matrix.view(float))):
        i, j = np.argwhere(~(np.isfinite(matrix.real) & np.isfinite(matrix.imag)))[0]
        raise AssemblyError(
            f"non-finite matrix entry at row {index_label(int(i), M)}, "
            f"column {index_label(int(j), M)} (t={t})"
        )
    if not np.all(np.isfinite(rhs.view(float))):
        i = int(np.argwhere(~(np.isfinite(rhs.real) & np.isfinite(rhs.imag)))[0][0])
        raise AssemblyError(
            f"non-finite right-hand side entry at {index_label(i, M)} (t={t})"
        )
    return LinearSystem(matrix=matrix, rhs=rhs, M=M, gauge=gauge, t=t)


def derivatives(state: MultiD2State, params: ModelParams, t: float,
                solver_config: linsolve.SolverConfig = linsolve.SolverConfig(),
                gauge: str = "normalized") -> DerivativeSet:
    """Solve the assembled system and unpack the parameter derivatives.

    After the (possibly regularized) solve, the velocity component along
    the state itself is reset to its exact variational value
    <D|dD/dt> = -i <D|H|D> / <D|D>.  That component is pure overall
    scaling and phase, so the reset cannot change any observable; it
    removes the spurious norm drift a damped solve would otherwise inject
    while the physical directions keep their regularized values.
    """
    M = state.M
    tb = _pairwise(state, params, t, gauge)
    system = _assemble_from_tables(state, params, t, gauge, tb)
    result = linsolve.solve(system.matrix, system.rhs, solver_config)
    x = result.solution
    u = x[: 4 * M].reshape(4, M)
    dz = x[4 * M:].reshape(3, M)
    w = state.amplitudes()
    z = state.displacements()
    if gauge == "normalized":
        dsig = 2.0 * np.einsum("mn,mn->n", z.conj(), dz).real
        dw = u + 0.5 * w * dsig[None, :]
    else:
        dw = u

    # gauge correction of the scaling/phase velocity component
    theta = np.einsum("ml,mn->ln", z.conj(), dz)
    if gauge == "normalized":
        theta = theta - 0.5 * dsig[None, :]
    overlap_rate = (np.einsum("sl,sn,ln->", w.conj(), dw, tb.K)
                    + np.einsum("ln,ln,ln->", tb.P, theta, tb.K))
    norm2 = np.sum(tb.P * tb.K)
    h_exp = np.sum(tb.h * tb.K)
    c = (-1j * h_exp - overlap_rate) / norm2
    dw = dw + c * w

    return DerivativeSet(dA=dw[0], dB=dw[1], dC=dw[2], dD=dw[3],
                         dmu=dz[0], dnu=dz[1], deta=dz[2],
                         residual_norm=result.residual_norm)


def total_energy(state: MultiD2State, params: ModelParams, t: float,
                 gauge: str = "normalized") -> float:
    """<H(t)> / <1>, assembled from the same matrix elements as the RHS."""
    tb = _pairwise(state, params, t, gauge)
    num = np.sum(tb.h * tb.K)
    den = np.sum(tb.P * tb.K)
    scale = max(abs(num), abs(den), 1.0)
    if abs(num.imag) > 1e-9 * scale or abs(den.imag) > 1e-9 * scale:
        raise FloatingPointError(
            f"energy imaginary residue too large: num {num.imag:.3e}, den {den.imag:.3e}"
        )
    return float(num.real / den.real)


def dump_system(system: LinearSystem, path) -> None:
    """Write (matrix, rhs) as a dense text file, row-major 're,im' pairs.

    The matrix rows come first, one line each; the final line is the rhs.
    """
    with open(path, "w") as fh:
        fh.write(f"# rows=7M={system.matrix.shape[0]} gauge={system.gauge} "
                 f"t={system.t!r}; matrix rows then rhs line\n")
        for row in system.matrix:
            fh.write(" ".join(f"{float(v.real)!r},{float(v.imag)!r}" for v in row) + "\n")
        fh.write(" ".join(f"{float(v.real)!r},{float(v.imag)!r}" for v in system.rhs) + "\n")
