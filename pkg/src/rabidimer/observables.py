"""Measurements on a variational state: photon/phonon numbers, imbalance,
qubit polarizations, up-state probabilities, energy, and number-state
population distributions.

Every expectation value is divided by the state norm squared, which makes
the measurements insensitive to slow integrator norm drift and identical
between the normalized and bare-kernel parametrizations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import eom
from .ansatz import MultiD2State, overlaps
from .model import ModelParams

__all__ = ["ObservableRecord", "NumberStatePopulations", "measure",
           "number_state_populations"]

_IMAG_TOL = 1e-9


@dataclass(frozen=True)
class ObservableRecord:
    """All scalar observables at one time point.

    ``norm2`` is the raw Gram norm of the state; everything else is
    normalized.  ``residual_max`` is integrator health passed through by
    the propagation loop (running maximum of the solve residuals), zero
    for records produced outside a propagation.
    """

    t: float
    N_L: float
    N_R: float
    N_total: float
    Z: float
    sz_L: float
    sz_R: float
    P_LZ_L: float
    P_LZ_R: float
    N_ph: float
    energy: float
    norm2: float
    residual_max: float = 0.0

    # column order of the trajectory files
    FIELDS = ("t", "N_L", "N_R", "N_total", "Z", "sz_L", "sz_R",
              "P_LZ_L", "P_LZ_R", "N_ph", "energy", "norm2", "residual_max")

    def as_row(self) -> tuple:
        return tuple(getattr(self, f) for f in self.FIELDS)


@dataclass(frozen=True)
class NumberStatePopulations:
    side: str
    n_max: int
    p: np.ndarray


def _real(value: complex, what: str) -> float:
    if abs(value.imag) > _IMAG_TOL * max(1.0, abs(value)):
        raise FloatingPointError(f"{what} imaginary residue {value.imag:.3e}")
    return float(value.real)


def measure(state: MultiD2State, params: ModelParams,
            gauge: str = "normalized", residual_max: float = 0.0) -> ObservableRecord:
    """Evaluate every observable on the state at its current time."""
    w = state.amplitudes()
    wc = w.conj()
    K = overlaps(state, gauge)

    G = np.einsum("sl,sn->sln", wc, w)
    P = G.sum(axis=0)
    PK = P * K
    norm2 = _real(np.sum(PK), "norm^2")

    z = state.displacements()
    zc = z.conj()
    occ = [np.sum(PK * (zc[m][:, None] * z[m][None, :])) for m in range(3)]
    N_L = _real(occ[0], "N_L") / norm2
    N_R = _real(occ[1], "N_R") / norm2
    N_ph = _real(occ[2], "N_ph") / norm2

    sz_L = _real(np.sum((G[0] + G[1] - G[2] - G[3]) * K), "sz_L") / norm2
    sz_R = _real(np.sum((G[0] - G[1] + G[2] - G[3]) * K), "sz_R") / norm2
    p_up_L = _real(np.sum((G[0] + G[1]) * K), "P_LZ_L") / norm2
    p_up_R = _real(np.sum((G[0] + G[2]) * K), "P_LZ_R") / norm2

    energy = eom.total_energy(state, params, state.t, gauge)

    return ObservableRecord(
        t=state.t, N_L=N_L, N_R=N_R, N_total=N_L + N_R, Z=N_L - N_R,
        sz_L=sz_L, sz_R=sz_R, P_LZ_L=p_up_L, P_LZ_R=p_up_R,
        N_ph=N_ph, energy=energy, norm2=norm2, residual_max=residual_max,
    )


def number_state_populations(state: MultiD2State, side: str, n_max: int,
                             gauge: str = "normalized") -> NumberStatePopulations:
    """Population of each photon number state of one resonator.

    The projector kernel for number n is
    exp(-(|a_l|^2+|a_n|^2)/2) (a_l* a_n)^n / n!  on the projected mode,
    times the plain overlaps of the two remaining modes.  Terms are
    evaluated in log space so large occupations cannot overflow.
    """
    if n_max < 0:
        raise ValueError("n_max >= 0")
    if side not in ("L", "R"):
        raise ValueError(f"side must be 'L' or 'R', got {side!r}")
    normalized = gauge == "normalized"
    w = state.amplitudes()
    P = np.einsum("sl,sn->ln", w.conj(), w)
    z = state.displacements()
    proj = 0 if side == "L" else 1
    others = [m for m in range(3) if m != proj]

    rest = np.zeros_like(P)
    for m in others:
        arr = z[m]
        rest = rest + arr.conj()[:, None] * arr[None, :]
        if normalized:
            rest = rest - (0.5 * (np.abs(arr) ** 2)[:, None]
                           + 0.5 * (np.abs(arr) ** 2)[None, :])
    a = z[proj]
    rho = a.conj()[:, None] * a[None, :]
    if normalized:
        gauss = -0.5 * ((np.abs(a) ** 2)[:, None] + (np.abs(a) ** 2)[None, :])
    else:
        gauss = np.zeros_like(rho.real)

    # log-magnitude and phase of rho^n / n!, with rho = 0 handled exactly
    mag = np.abs(rho)
    phase = np.angle(rho)
    zero = mag == 0.0
    logmag = np.where(zero, -np.inf, np.log(np.where(zero, 1.0, mag)))

    ns = np.arange(n_max + 1)
    log_fact = gammaln(ns + 1.0)
    # term[k,l,n] = exp(k*logmag - log(k!) + gauss + rest) * e^{i k phase} * P
    expo = (ns[:, None, None] * logmag[None, :, :]
            - log_fact[:, None, None] + gauss[None, :, :])
    with np.errstate(invalid="ignore"):
        weight = np.exp(expo + rest[None, :, :].real)
    weight = np.where(np.isnan(weight), 0.0, weight)  # 0 * -inf at rho=0, n=0
    if np.any(zero):
        # rho = 0 contributes only at n = 0 with unit projector kernel
        weight[0][zero] = np.exp(gauss[zero] + rest[zero].real)
        weight[1:, zero] = 0.0
    kernel = weight * np.exp(1j * (ns[:, None, None] * phase[None, :, :]
                                   + rest[None, :, :].imag))

    norm2 = _real(np.sum(P * overlaps(state, gauge)), "norm^2")
    vals = np.einsum("ln,kln->k", P, kernel)
    if np.max(np.abs(vals.imag)) > _IMAG_TOL * max(1.0, float(np.max(np.abs(vals)))):
        raise FloatingPointError("number-state population imaginary residue")
    return NumberStatePopulations(side=side, n_max=n_max, p=vals.real / norm2)
