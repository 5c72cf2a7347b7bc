"""Analytic oracles and trajectory diagnostics.

Covers the diabatic energy diagram of qubit x photon-number states, the
crossing times swept by the harmonic bias, sweep rates, the transition
timescales separating interfering from independent crossing sequences,
the coherent-state-averaged transition probability, the short-time phonon
population closed form, mean-shift jump detection on the total photon
number, and the fully-adiabatic pathway through the diagram.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, drive_field

__all__ = [
    "DiabaticLevel",
    "TransitionEvent",
    "LZTimescales",
    "diabatic_energy",
    "crossing_times",
    "sweep_rate",
    "sweep_rate_nominal",
    "lz_timescales",
    "analytic_plz",
    "analytic_phonon",
    "detect_jumps",
    "adiabatic_pathway",
    "energy_diagram_rows",
    "coupling_regime",
]


@dataclass(frozen=True)
class DiabaticLevel:
    """One qubit state paired with one photon number state of its resonator."""

    qubit: str  # "up" | "down"
    n: int
    side: str = "L"

    def __post_init__(self):
        if self.qubit not in ("up", "down"):
            raise ValueError(f"qubit must be 'up' or 'down', got {self.qubit!r}")
        if self.n < 0:
            raise ValueError("photon number index n >= 0")
        if self.side not in ("L", "R"):
            raise ValueError(f"side must be 'L' or 'R', got {self.side!r}")

    @property
    def label(self) -> str:
        arrow = "up" if self.qubit == "up" else "down"
        return f"{arrow},{self.n}"


@dataclass(frozen=True)
class TransitionEvent:
    t_event: float
    delta_N: float
    window: tuple


@dataclass(frozen=True)
class LZTimescales:
    tau_lz: float
    t_gap: float
    interfering: bool


def _omega_r(params: ModelParams, side: str) -> float:
    return params.omega_L if side == "L" else params.omega_R


def diabatic_energy(level: DiabaticLevel, params: ModelParams, t: float) -> float:
    """Energy of a diabatic level under the instantaneous drive bias.

    Down levels sit at -(F/2)cos(Omega t + Phi) + n*omega_r, up levels at
    +(F/2)cos(Omega t + Phi) + n*omega_r; the gap between neighbouring
    levels of the same qubit state is always omega_r.
    """
    bias = 0.5 * drive_field(params, level.side, t)
    sign = 1.0 if level.qubit == "up" else -1.0
    return sign * bias + level.n * _omega_r(params, level.side)


def crossing_times(level_a: DiabaticLevel, level_b: DiabaticLevel,
                   params: ModelParams, t_end: float) -> list[float]:
    """All times in [0, t_end] where the two level energies are equal.

    The levels must belong to the same resonator and carry different
    qubit labels (same-qubit levels are parallel for all t).  Each root
    is bracketed on a fine scan of the drive period and bisected to 1e-9.
    """
    if level_a.side != level_b.side:
        raise ValueError("levels must reference the same resonator side")
    if level_a.qubit == level_b.qubit:
        raise ValueError("same-qubit levels are parallel and never cross")
    side = level_a.side
    F = params.F_L if side == "L" else params.F_R
    Omega = params.Omega_L if side == "L" else params.Omega_R
    dn = abs(level_a.n - level_b.n)
    if dn * _omega_r(params, side) > F or Omega == 0.0 or t_end <= 0.0:
        return []

    def gap(t):
        return (diabatic_energy(level_a, params, t)
                - diabatic_energy(level_b, params, t))

    period = 2.0 * math.pi / Omega
    scan_dt = period / 4096.0
    ts = np.arange(0.0, t_end + scan_dt, scan_dt)
    ts[-1] = min(ts[-1], t_end)
    sign_a = 1.0 if level_a.qubit == "up" else -1.0
    Phi = params.Phi_L if side == "L" else params.Phi_R
    vals = (2.0 * sign_a * 0.5 * F * np.cos(Omega * ts + Phi)
            + (level_a.n - level_b.n) * _omega_r(params, side))

    roots = []
    for i in range(len(ts) - 1):
        a, b = ts[i], ts[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb < 0.0:
            while b - a > 1e-9:
                m = 0.5 * (a + b)
                fm = gap(m)
                if fm == 0.0:
                    a = b = m
                    break
                if fa * fm < 0.0:
                    b = m
                else:
                    a, fa = m, fm
            roots.append(0.5 * (a + b))
    if vals[-1] == 0.0:
        roots.append(ts[-1])
    # deduplicate grazing double-counts
    out = []
    for r in roots:
        if not out or r - out[-1] > 1e-8:
            out.append(r)
    return out


def sweep_rate(params: ModelParams, crossing_t: float, side: str = "L") -> float:
    """|d/dt of the drive field| at a crossing time."""
    F = params.F_L if side == "L" else params.F_R
    Omega = params.Omega_L if side == "L" else params.Omega_R
    Phi = params.Phi_L if side == "L" else params.Phi_R
    return abs(F * Omega * math.sin(Omega * crossing_t + Phi))


def sweep_rate_nominal(params: ModelParams, side: str = "L") -> float:
    """F*Omega, the maximum of the sweep rate over drive phases."""
    if side == "L":
        return params.F_L * params.Omega_L
    return params.F_R * params.Omega_R


def lz_timescales(params: ModelParams, N_at_crossing: float,
                  side: str = "L") -> LZTimescales:
    """Transition relaxation time 2g sqrt(N+1)/v versus the gap omega_r/v
    between successive crossings, with the nominal sweep rate v = F*Omega.

    A relaxation time longer than the gap marks the interfering regime;
    otherwise the crossings act as independent transitions.
    """
    if N_at_crossing < 0:
        raise ValueError("N_at_crossing >= 0")
    v = sweep_rate_nominal(params, side)
    if v <= 0.0:
        raise ValueError("nominal sweep rate must be positive")
    tau = 2.0 * params.g * math.sqrt(N_at_crossing + 1.0) / v
    gap = _omega_r(params, side) / v
    return LZTimescales(tau_lz=tau, t_gap=gap, interfering=tau > gap)


def analytic_plz(N_mean: float, g: float, v: float) -> float:
    """Transition probability averaged over a coherent photon population:

        P = 1 - e^{-N} sum_n N^n/n! exp[-2 pi g^2 (n+1)/v]

    summed until a term falls below 1e-15 of the running sum.
    """
    if N_mean < 0:
        raise ValueError("N_mean >= 0")
    if v <= 0:
        raise ValueError("v > 0")
    q = 2.0 * math.pi * g * g / v
    term = math.exp(-N_mean) * math.exp(-q)  # n = 0
    total = term
    n = 0
    while term > 1e-15 * total:
        n += 1
        term *= N_mean / n * math.exp(-q)
        total += term
    return 1.0 - total


def analytic_phonon(lam: float, omega_ph: float, t: float) -> float:
    """Short-time phonon population (8 lam^2/omega_ph^2)(1 - cos omega_ph t).

    Exact while both qubits stay in their down states, where the phonon
    sees only a static displacement force.
    """
    if omega_ph <= 0:
        raise ValueError("omega_ph > 0")
    return 8.0 * lam * lam / (omega_ph * omega_ph) * (1.0 - math.cos(omega_ph * t))


def detect_jumps(trajectory, window: float, threshold: float) -> list[TransitionEvent]:
    """Mean-shift detection of abrupt total-photon-number changes.

    For every interior sample the means of N_total over the windows
    before and after are compared; local extrema of the shift with
    magnitude >= threshold become events, greedily kept non-overlapping
    (at least one window apart), returned in time order.  Total photon
    number isolates the transition channel: tunneling between the
    resonators conserves it.
    """
    times = np.asarray(trajectory.times, dtype=float)
    N = trajectory.column("N_total")
    if len(times) < 3:
        raise ValueError("trajectory too short for jump detection")
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-6, atol=1e-12):
        raise ValueError("jump detection requires uniform sampling")
    w = int(round(window / dt[0]))
    if w < 1 or 2 * w >= len(times):
        raise ValueError(
            f"window {window} spans {2 * w} samples, trajectory has {len(times)}"
        )

    csum = np.concatenate([[0.0], np.cumsum(N)])
    idx = np.arange(w, len(times) - w)
    before = (csum[idx] - csum[idx - w]) / w
    after = (csum[idx + w] - csum[idx]) / w
    shift = after - before

    order = np.argsort(-np.abs(shift))
    accepted: list[int] = []
    for k in order:
        if abs(shift[k]) < threshold:
            break
        t_k = times[idx[k]]
        if all(abs(t_k - times[idx[j]]) >= window for j in accepted):
            accepted.append(k)
    accepted.sort(key=lambda k: times[idx[k]])
    return [
        TransitionEvent(
            t_event=float(times[idx[k]]),
            delta_N=float(shift[k]),
            window=(float(times[idx[k]] - window), float(times[idx[k]] + window)),
        )
        for k in accepted
    ]


def adiabatic_pathway(start: DiabaticLevel, params: ModelParams,
                      t_end: float) -> list[DiabaticLevel]:
    """Sequence of levels visited if every reachable crossing is taken
    adiabatically: at each crossing the qubit label flips and n moves by
    one toward the partner, never below zero.

    Valid while the per-crossing transition probability stays near one;
    that judgement is the caller's.
    """
    other = {"up": "down", "down": "up"}
    path = [start]
    t_cur = 0.0
    current = start
    while True:
        best = None
        for dn in (-1, 1):
            n_new = current.n + dn
            if n_new < 0:
                continue
            partner = DiabaticLevel(other[current.qubit], n_new, current.side)
            for t_cross in crossing_times(current, partner, params, t_end):
                if t_cross > t_cur + 1e-6:
                    if best is None or t_cross < best[0]:
                        best = (t_cross, partner)
                    break
        if best is None:
            return path
        t_cur, current = best
        path.append(current)


def energy_diagram_rows(params: ModelParams, times, n_max: int = 5,
                        side: str = "L"):
    """(label, t, energy) rows for every up/down level with n <= n_max."""
    levels = [DiabaticLevel(qubit, n, side)
              for qubit in ("down", "up") for n in range(n_max + 1)]
    for level in levels:
        for t in times:
            yield level.label, float(t), diabatic_energy(level, params, float(t))


def coupling_regime(params: ModelParams, side: str = "L") -> str:
    """Diagnostic label: couplings above a tenth of the photon frequency
    admit higher-order crossings."""
    return "ultra-strong" if params.g > 0.1 * _omega_r(params, side) else "weak"
