"""Physical parameters, drive fields, scenario presets and config files.

All energies and frequencies are expressed in units of a reference
frequency omega0 = 1, times in 1/omega0, with hbar = 1 and temperature
fixed at zero.  Every number quoted in the scenario presets can therefore
be entered verbatim.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

from .errors import ConfigError

__all__ = [
    "ModelParams",
    "ScenarioPreset",
    "PRESETS",
    "drive_field",
    "validate_params",
    "validate_preset",
    "non_paper_notes",
    "load_preset",
    "parse_overrides",
    "apply_overrides",
    "preset_to_dict",
    "preset_from_dict",
]


@dataclass(frozen=True)
class ModelParams:
    """Constants of the two-resonator qubit-photon-phonon Hamiltonian.

    omega_L/omega_R are the photon frequencies, omega_ph the phonon
    frequency, g the qubit-photon coupling, J the inter-resonator
    tunneling rate and lam the diagonal qubit-phonon coupling (named
    ``lambda`` in config files).  F/Omega/Phi are the amplitude, angular
    frequency and phase of the harmonic bias drive applied to each qubit.
    Amplitudes and couplings are non-negative; signs live in the phases.
    """

    omega_L: float = 1.0
    omega_R: float = 1.0
    omega_ph: float = 1.0
    g: float = 0.0
    J: float = 0.0
    lam: float = 0.0
    F_L: float = 0.0
    F_R: float = 0.0
    Omega_L: float = 0.0
    Omega_R: float = 0.0
    Phi_L: float = 0.0
    Phi_R: float = 0.0


@dataclass(frozen=True)
class ScenarioPreset:
    """A fully resolved simulation scenario.

    ``initial_photons`` is the squared coherent amplitude pumped into the
    left resonator at t=0; the right resonator and the phonon start in
    vacuum and both qubits start in their down states.  ``noise_eps`` is
    the spread of the empty spare configurations around the occupied one;
    it does not perturb the physical initial state.
    """

    name: str
    params: ModelParams
    initial_photons: float = 20.0
    multiplicity: int = 6
    t_end: float = 300.0
    dt: float = 0.0025
    rng_seed: int = 1234
    noise_eps: float = 0.3
    record_every: int = 4


def drive_field(params: ModelParams, side: str, t: float) -> float:
    """Harmonic bias drive F*cos(Omega*t + Phi) for one qubit.

    The qubit bias term in the Hamiltonian is this value divided by two,
    multiplying the corresponding sigma_z.
    """
    if side == "L":
        return params.F_L * math.cos(params.Omega_L * t + params.Phi_L)
    if side == "R":
        return params.F_R * math.cos(params.Omega_R * t + params.Phi_R)
    raise ValueError(f"side must be 'L' or 'R', got {side!r}")


def validate_params(params: ModelParams) -> list[str]:
    """Return all invariant violations; an empty list means usable."""
    v = []
    for name in ("omega_L", "omega_R", "omega_ph"):
        if getattr(params, name) < 0:
            v.append(f"{name} >= 0")
    for name in ("g", "J", "lam", "F_L", "F_R"):
        if getattr(params, name) < 0:
            v.append(f"{name} >= 0")
    for name in asdict(params):
        x = getattr(params, name)
        if not math.isfinite(x):
            v.append(f"{name} finite")
    return v


def validate_preset(preset: ScenarioPreset) -> list[str]:
    """Violations for the preset, including its embedded parameters."""
    v = validate_params(preset.params)
    if not preset.dt > 0:
        v.append("dt > 0")
    if preset.t_end < preset.dt:
        v.append("t_end >= dt")
    if preset.multiplicity < 1:
        v.append("multiplicity >= 1")
    if preset.initial_photons < 0:
        v.append("initial_photons >= 0")
    if preset.noise_eps < 0:
        v.append("noise_eps >= 0")
    if preset.record_every < 1:
        v.append("record_every >= 1")
    return v


def non_paper_notes(params: ModelParams) -> list[str]:
    """Diagnostic notes for parameter choices outside the studied regime."""
    notes = []
    if params.omega_L != params.omega_R:
        notes.append(
            "omega_L != omega_R: asymmetric photon frequencies are permitted "
            "but lie outside the studied scenarios"
        )
    return notes


# ---------------------------------------------------------------------------
# presets for the published scenarios
# ---------------------------------------------------------------------------

def _preset(name, *, omega_r, J, lam, F_L, F_R, Phi, **kw):
    params = ModelParams(
        omega_L=omega_r,
        omega_R=omega_r,
        omega_ph=1.0,
        g=0.3,
        J=J,
        lam=lam,
        F_L=F_L,
        F_R=F_R,
        Omega_L=0.05 if F_L else 0.0,
        Omega_R=0.05 if F_R else 0.0,
        Phi_L=Phi if F_L else 0.0,
        Phi_R=Phi if F_R else 0.0,
    )
    return ScenarioPreset(name=name, params=params, **kw)


PRESETS: dict[str, ScenarioPreset] = {
    # left qubit driven, low frequency photons
    "fig2": _preset("fig2", omega_r=1.0, J=0.01, lam=0.0, F_L=20.0, F_R=0.0, Phi=0.0),
    # left qubit driven, high frequency photons
    "fig3": _preset("fig3", omega_r=10.0, J=0.01, lam=0.0, F_L=20.0, F_R=0.0, Phi=0.0),
    # as fig3 plus a common phonon mode
    "fig4a": _preset("fig4a", omega_r=10.0, J=0.01, lam=0.2, F_L=20.0, F_R=0.0, Phi=0.0),
    "fig4b": _preset("fig4b", omega_r=10.0, J=0.01, lam=0.4, F_L=20.0, F_R=0.0, Phi=0.0),
    # both qubits driven, square-wave state manipulation
    "fig6a": _preset("fig6a", omega_r=10.0, J=0.075, lam=0.0, F_L=20.0, F_R=20.0,
                     Phi=math.pi / 6),
    "fig6b": _preset("fig6b", omega_r=10.0, J=0.075, lam=0.0, F_L=20.0, F_R=20.0,
                     Phi=math.pi / 2),
    # decoupled-qubit baseline: pure photon tunneling
    "josephson": ScenarioPreset(
        name="josephson",
        params=ModelParams(omega_L=1.0, omega_R=1.0, omega_ph=1.0, g=0.0, J=0.075),
        initial_photons=2.0,
        multiplicity=3,
        t_end=90.0,
        dt=0.005,
        record_every=2,
    ),
}


# ---------------------------------------------------------------------------
# flat key-value config files and command line overrides
# ---------------------------------------------------------------------------

_PARAM_FIELDS = tuple(ModelParams.__dataclass_fields__)
_PRESET_FIELDS = tuple(
    f for f in ScenarioPreset.__dataclass_fields__ if f != "params"
)
_INT_FIELDS = {"multiplicity", "rng_seed", "record_every"}
# config files use the physics name for the qubit-phonon coupling
_ALIASES = {"lambda": "lam"}


def _coerce(key: str, value):
    if key == "name":
        return str(value)
    if key in _INT_FIELDS:
        iv = int(value)
        if float(iv) != float(value):
            raise ConfigError(f"key {key!r} expects an integer, got {value!r}")
        return iv
    return float(value)


def preset_to_dict(preset: ScenarioPreset) -> dict:
    """Flatten a preset to the config-file key set (``lam`` -> ``lambda``)."""
    out = {f: getattr(preset, f) for f in _PRESET_FIELDS}
    for f in _PARAM_FIELDS:
        key = "lambda" if f == "lam" else f
        out[key] = getattr(preset.params, f)
    return out


def preset_from_dict(data: dict, base: ScenarioPreset | None = None) -> ScenarioPreset:
    """Build a preset from flat keys, starting from ``base`` if given.

    Unknown keys are an error.
    """
    preset_kw: dict = {}
    param_kw: dict = {}
    unknown = []
    for raw_key, value in data.items():
        key = _ALIASES.get(raw_key, raw_key)
        if key in _PARAM_FIELDS:
            param_kw[key] = _coerce(key, value)
        elif key in _PRESET_FIELDS:
            preset_kw[key] = _coerce(key, value)
        else:
            unknown.append(raw_key)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if base is None:
        if "name" not in preset_kw:
            raise ConfigError("config requires a 'name' key")
        params = ModelParams(**param_kw)
        return ScenarioPreset(params=params, **preset_kw)
    params = replace(base.params, **param_kw)
    return replace(base, params=params, **preset_kw)


def load_preset(name_or_path: str) -> ScenarioPreset:
    """Resolve a preset name or read a flat JSON config file."""
    if name_or_path in PRESETS:
        return PRESETS[name_or_path]
    try:
        with open(name_or_path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(
            f"unknown preset {name_or_path!r} (known: {', '.join(sorted(PRESETS))}) "
            "and no such config file"
        ) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {name_or_path!r} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a flat JSON object")
    return preset_from_dict(data)


def parse_overrides(pairs) -> dict:
    """Parse ``key=value`` strings from the command line."""
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        out[key] = value
    return out


def apply_overrides(preset: ScenarioPreset, overrides: dict) -> ScenarioPreset:
    """Apply flat-key overrides on top of a preset (overrides win)."""
    return preset_from_dict(overrides, base=preset)
