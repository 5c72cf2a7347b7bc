"""Variational state built from superposed qubit-amplitude x coherent-state
configurations, plus its overlaps, norm and initialization.

A state with multiplicity M carries 7M complex parameters: four qubit
amplitudes A, B, C, D (for |up,up>, |up,down>, |down,up>, |down,down>)
and three displacements mu, nu, eta (left photon mode, right photon mode,
phonon mode) per configuration.  Amplitudes multiply *normalized* coherent
states; the bare-kernel parametrization used as a cross-check in the eom
module reinterprets the same arrays as amplitudes of unnormalized kernels
exp(mu a^dag)|0> and is selected through ``gauge="unnormalized"``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MultiD2State",
    "OverlapKernel",
    "debye_waller",
    "overlap_matrix",
    "norm_squared",
    "init_paper_state",
    "to_flat_record",
    "from_flat_record",
]


@dataclass(frozen=True)
class MultiD2State:
    """Value type holding the 7M complex parameters at one time."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    eta: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for name in ("A", "B", "C", "D", "mu", "nu", "eta"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=complex)
            object.__setattr__(self, name, arr)
        lengths = {len(getattr(self, n)) for n in ("A", "B", "C", "D", "mu", "nu", "eta")}
        if len(lengths) != 1:
            raise ValueError(f"parameter arrays must share one length, got {lengths}")

    @property
    def M(self) -> int:
        return len(self.A)

    def amplitudes(self) -> np.ndarray:
        """Stacked (4, M) amplitude array in A, B, C, D order."""
        return np.stack([self.A, self.B, self.C, self.D])

    def displacements(self) -> np.ndarray:
        """Stacked (3, M) displacement array in mu, nu, eta order."""
        return np.stack([self.mu, self.nu, self.eta])

    def replace_arrays(self, w: np.ndarray, z: np.ndarray, t: float) -> "MultiD2State":
        return MultiD2State(A=w[0], B=w[1], C=w[2], D=w[3],
                            mu=z[0], nu=z[1], eta=z[2], t=t)


@dataclass(frozen=True)
class OverlapKernel:
    """Pairwise configuration overlaps.

    S holds the normalized coherent-state overlaps (unit diagonal), S_bar
    the bare exponential kernels exp(mu_l* mu_n + nu_l* nu_n + eta_l* eta_n),
    related by S_ln = S_bar_ln * exp(-(sig_l + sig_n)/2) with
    sig_k = |mu_k|^2 + |nu_k|^2 + |eta_k|^2.
    """

    S: np.ndarray
    S_bar: np.ndarray
    cond_estimate: float


def _kernel_exponent(state: MultiD2State) -> np.ndarray:
    z = state.displacements()
    return np.einsum("ml,mn->ln", z.conj(), z)


def displacement_weights(state: MultiD2State) -> np.ndarray:
    """sig_k = |mu_k|^2 + |nu_k|^2 + |eta_k|^2 for each configuration."""
    z = state.displacements()
    return np.sum(np.abs(z) ** 2, axis=0).real


def overlaps(state: MultiD2State, gauge: str = "normalized") -> np.ndarray:
    """Pairwise overlap kernel matrix only, cheap form for hot paths."""
    ip = _kernel_exponent(state)
    if gauge == "normalized":
        sig = displacement_weights(state)
        return np.exp(ip - 0.5 * (sig[:, None] + sig[None, :]))
    if gauge == "unnormalized":
        return np.exp(ip)
    raise ValueError(f"unknown gauge {gauge!r}")


def overlap_matrix(state: MultiD2State) -> OverlapKernel:
    ip = _kernel_exponent(state)
    sig = displacement_weights(state)
    S = np.exp(ip - 0.5 * (sig[:, None] + sig[None, :]))
    with np.errstate(over="ignore"):
        S_bar = np.exp(ip)
    cond = float(np.linalg.cond(S)) if state.M > 1 else 1.0
    return OverlapKernel(S=S, S_bar=S_bar, cond_estimate=cond)


def debye_waller(state: MultiD2State, l: int, n: int) -> complex:
    """Overlap of the composite coherent states of configurations l and n."""
    M = state.M
    if not (0 <= l < M and 0 <= n < M):
        raise IndexError(f"configuration index out of range for M={M}: ({l}, {n})")
    total = 0.0 + 0.0j
    for arr in (state.mu, state.nu, state.eta):
        total += (np.conj(arr[l]) * arr[n]
                  - 0.5 * abs(arr[l]) ** 2 - 0.5 * abs(arr[n]) ** 2)
    return complex(np.exp(total))


def gram_with_kernel(state: MultiD2State, kernel: np.ndarray) -> complex:
    w = state.amplitudes()
    P = np.einsum("sl,sn->ln", w.conj(), w)
    return complex(np.sum(P * kernel))


def norm_squared(state: MultiD2State, gauge: str = "normalized") -> float:
    """<state|state> as a Gram sum over configurations.

    The imaginary residue is asserted small and discarded.
    """
    value = gram_with_kernel(state, overlaps(state, gauge))
    scale = max(abs(value), 1.0)
    if abs(value.imag) > 1e-12 * scale:
        raise FloatingPointError(
            f"norm^2 imaginary residue {value.imag:.3e} exceeds tolerance"
        )
    return float(value.real)


def init_paper_state(preset) -> MultiD2State:
    """Initial condition: N(0) photons in the left resonator, the right
    resonator and the phonon in vacuum, both qubits down.

    Only configuration 1 carries amplitude (D_1 = 1) and holds the exact
    initial displacements (mu_1 = sqrt(N0), nu_1 = eta_1 = 0), so the
    physical state is exact.  The spare configurations are empty; their
    displacements are seeded i.i.d. complex noise of scale ``noise_eps``
    centred on configuration 1.  Identical displacements would make the
    overlap matrix exactly singular, and spares parked at the vacuum
    cannot represent corrections near the occupied configuration without
    exponentially large coefficients, so the spares sit where the dynamics
    will need them.  The state is renormalized before returning.
    """
    M = preset.multiplicity
    rng = np.random.default_rng(preset.rng_seed)

    def noisy(count):
        re = rng.normal(scale=preset.noise_eps, size=count)
        im = rng.normal(scale=preset.noise_eps, size=count)
        return re + 1j * im

    w = np.zeros((4, M), dtype=complex)
    w[3, 0] = 1.0
    z = noisy(3 * M).reshape(3, M)
    z[0] += np.sqrt(preset.initial_photons)
    z[:, 0] = (np.sqrt(preset.initial_photons), 0.0, 0.0)
    state = MultiD2State(A=w[0], B=w[1], C=w[2], D=w[3],
                         mu=z[0], nu=z[1], eta=z[2], t=0.0)
    norm = np.sqrt(norm_squared(state))
    w = w / norm
    return state.replace_arrays(w, z, 0.0)


# ---------------------------------------------------------------------------
# flat snapshot serialization for checkpoint/restart
# ---------------------------------------------------------------------------

def to_flat_record(state: MultiD2State) -> np.ndarray:
    """Flat real record: t followed by interleaved (re, im) pairs of the
    7M parameters in A, B, C, D, mu, nu, eta order."""
    params = np.concatenate([state.amplitudes().ravel(),
                             state.displacements().ravel()])
    rec = np.empty(1 + 2 * params.size)
    rec[0] = state.t
    rec[1::2] = params.real
    rec[2::2] = params.imag
    return rec


def from_flat_record(rec: np.ndarray) -> MultiD2State:
    rec = np.asarray(rec, dtype=float)
    body = rec[1:]
    if body.size % 14 != 0:
        raise ValueError(f"flat record length {rec.size} is not 1 + 14*M")
    params = body[0::2] + 1j * body[1::2]
    M = params.size // 7
    w = params[: 4 * M].reshape(4, M)
    z = params[4 * M:].reshape(3, M)
    return MultiD2State(A=w[0], B=w[1], C=w[2], D=w[3],
                        mu=z[0], nu=z[1], eta=z[2], t=float(rec[0]))
