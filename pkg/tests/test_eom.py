import numpy as np
import pytest

from rabidimer import (ModelParams, MultiD2State, PRESETS, assemble, derivatives,
                       init_paper_state, measure, norm_squared, total_energy)
from rabidimer.ansatz import displacement_weights
from rabidimer.eom import AssemblyError, dump_system, index_label
from rabidimer.integrator import RunConfig, step
from rabidimer.linsolve import SolverConfig
from rabidimer.model import preset_from_dict
from rabidimer.oracle import _FockOperators, _coherent_column


def random_state(M, seed, scale=0.5):
    rng = np.random.default_rng(seed)

    def rc(n):
        return rng.normal(size=n, scale=scale) + 1j * rng.normal(size=n, scale=scale)

    return MultiD2State(A=rc(M), B=rc(M), C=rc(M), D=rc(M),
                        mu=rc(M), nu=rc(M), eta=rc(M), t=0.0)


# ---------------------------------------------------------------------------
# closed-form single-configuration limits
# ---------------------------------------------------------------------------

def test_vacuum_drive_only_pure_phase():
    params = ModelParams(omega_L=0, omega_R=0, omega_ph=0, F_L=20, Omega_L=0.05,
                         F_R=3.0, Omega_R=0.7, Phi_R=0.3)
    st = MultiD2State(A=[0], B=[0], C=[0], D=[1], mu=[0], nu=[0], eta=[0])
    t = 1.7
    d = derivatives(st, params, t)
    f_sum = 10 * np.cos(0.05 * t) + 1.5 * np.cos(0.7 * t + 0.3)
    assert d.dD[0] == pytest.approx(1j * f_sum, abs=1e-10)
    assert abs(d.dmu[0]) < 1e-10
    assert abs(d.dnu[0]) < 1e-10
    assert abs(d.deta[0]) < 1e-10


def test_free_oscillator_rotation():
    params = ModelParams(omega_L=1.0, omega_R=0.7, omega_ph=0.3)
    alpha = 0.8 - 0.3j
    st = MultiD2State(A=[0], B=[0], C=[0], D=[1], mu=[alpha], nu=[0.2j], eta=[0.5])
    d = derivatives(st, params, 0.0)
    assert d.dmu[0] == pytest.approx(-1j * 1.0 * alpha, abs=1e-10)
    assert d.dnu[0] == pytest.approx(-1j * 0.7 * 0.2j, abs=1e-10)
    assert d.deta[0] == pytest.approx(-1j * 0.3 * 0.5, abs=1e-10)
    assert d.residual_norm < 1e-12


def test_phonon_displacement_force():
    # both qubits down: <sz_L + sz_R> = -2, so deta = -i(w_ph eta - 2 lam)
    params = ModelParams(omega_L=0, omega_R=0, omega_ph=1.0, lam=0.2)
    eta0 = 0.1 + 0.2j
    st = MultiD2State(A=[0], B=[0], C=[0], D=[1], mu=[0], nu=[0], eta=[eta0])
    d = derivatives(st, params, 0.0)
    assert d.deta[0] == pytest.approx(-1j * (eta0 - 0.4), abs=1e-10)


# ---------------------------------------------------------------------------
# structure of the assembled system
# ---------------------------------------------------------------------------

def test_middle_families_have_no_phonon_coupling():
    # the up-down and down-up amplitude equations carry no lam term
    st = random_state(3, seed=1)
    base = ModelParams(omega_L=1.1, omega_R=0.9, omega_ph=0.6, g=0.2, J=0.1,
                       lam=0.0, F_L=1.0, Omega_L=0.2)
    bumped = ModelParams(omega_L=1.1, omega_R=0.9, omega_ph=0.6, g=0.2, J=0.1,
                         lam=5.0, F_L=1.0, Omega_L=0.2)
    M = st.M
    rhs0 = assemble(st, base, 0.3).rhs
    rhs1 = assemble(st, bumped, 0.3).rhs
    assert np.allclose(rhs0[M:2 * M], rhs1[M:2 * M], rtol=1e-12)  # B family
    assert np.allclose(rhs0[2 * M:3 * M], rhs1[2 * M:3 * M], rtol=1e-12)  # C family
    assert not np.allclose(rhs0[:M], rhs1[:M])  # A family does couple


def test_derivatives_conserve_norm_rate():
    st = random_state(3, seed=2, scale=0.4)
    params = ModelParams(omega_L=1.3, omega_R=0.9, omega_ph=0.7, g=0.25, J=0.12,
                         lam=0.15, F_L=2.0, Omega_L=0.3, Phi_L=0.2, F_R=1.0,
                         Omega_R=0.5, Phi_R=0.1)
    d = derivatives(st, params, 0.4)
    w = st.amplitudes()
    z = st.displacements()
    wd = d.amplitude_rates()
    zd = d.displacement_rates()
    from rabidimer.ansatz import overlaps
    S = overlaps(st)
    theta = np.einsum("ml,mn->ln", z.conj(), zd)
    dsig = 2 * np.einsum("mn,mn->n", z.conj(), zd).real
    inner = (np.einsum("sl,sn,ln->", w.conj(), wd, S)
             + np.einsum("sl,sn,ln,ln->", w.conj(), w, theta - 0.5 * dsig[None, :], S))
    assert abs(2 * inner.real) < 1e-10 * norm_squared(st)


def test_paper_initial_state_norm_rate():
    preset = PRESETS["fig3"]
    st = init_paper_state(preset)
    cfg = RunConfig(dt=1e-3, t_end=1e-3)
    h = 1e-3
    stepped = step(st, preset.params, cfg)
    assert abs(norm_squared(stepped) - norm_squared(st)) / h < 1e-8


def test_energy_conserved_without_drive():
    params = ModelParams(omega_L=2.0, omega_R=2.0, omega_ph=0.7, g=0.25, J=0.08,
                         lam=0.15)
    st = random_state(2, seed=3, scale=0.4)
    e0 = total_energy(st, params, 0.0)
    cfg = RunConfig(dt=0.002, t_end=1.0)
    s = st
    for _ in range(500):
        s = step(s, params, cfg)
    e1 = total_energy(s, params, s.t)
    assert abs(e1 - e0) <= 1e-8 * max(1.0, abs(e0))


# ---------------------------------------------------------------------------
# total energy
# ---------------------------------------------------------------------------

def test_energy_of_paper_initial_state():
    preset = PRESETS["fig3"]
    st = init_paper_state(preset)
    # omega_r N0 photons minus half the drive amplitude per down qubit
    assert total_energy(st, preset.params, 0.0) == pytest.approx(190.0, abs=0.1)


def test_energy_vacuum_zero():
    st = MultiD2State(A=[0], B=[0], C=[0], D=[1], mu=[0], nu=[0], eta=[0])
    assert total_energy(st, ModelParams(), 0.0) == pytest.approx(0.0, abs=1e-12)


def test_energy_coherent_state():
    alpha = 1.3 - 0.4j
    st = MultiD2State(A=[0], B=[0], C=[0], D=[1], mu=[alpha], nu=[0], eta=[0])
    params = ModelParams(omega_L=1.7)
    assert total_energy(st, params, 0.0) == pytest.approx(1.7 * abs(alpha) ** 2,
                                                          rel=1e-12)


# ---------------------------------------------------------------------------
# the solved flow equals the tangent-space projection of the exact flow
# ---------------------------------------------------------------------------

def _embed(w, z, dims):
    psi = np.zeros((2, 2) + dims, complex)
    qubit = {0: (0, 0), 1: (0, 1), 2: (1, 0), 3: (1, 1)}
    for n in range(w.shape[1]):
        cl = _coherent_column(z[0, n], dims[0] - 1)
        cr = _coherent_column(z[1, n], dims[1] - 1)
        cp = _coherent_column(z[2, n], dims[2] - 1)
        mode = cl[:, None, None] * cr[None, :, None] * cp[None, None, :]
        for s in range(4):
            iL, iR = qubit[s]
            psi[iL, iR] += w[s, n] * mode
    return psi.reshape(-1)


def test_flow_is_dirac_frenkel_projection():
    """The solved parameter velocities must reproduce the orthogonal
    projection of -iH|D> onto the tangent space of the ansatz manifold,
    computed independently in a truncated number-state basis."""
    rng = np.random.default_rng(7)
    M = 2
    n_basis = 18
    dims = (n_basis + 1,) * 3
    params = ModelParams(omega_L=1.3, omega_R=0.9, omega_ph=0.7, g=0.25, J=0.12,
                         lam=0.15, F_L=2.0, Omega_L=0.3, Phi_L=0.2, F_R=1.0,
                         Omega_R=0.5, Phi_R=0.1)
    t0 = 0.37

    def rc(n, s):
        return rng.normal(size=n) * s + 1j * rng.normal(size=n) * s

    w = rc(4 * M, 0.4).reshape(4, M)
    z = rc(3 * M, 0.55).reshape(3, M)

    ops = _FockOperators(params, n_basis, n_basis, n_basis)
    psi = _embed(w, z, dims)
    rhs_exact = -1j * ops.apply_h(t0, psi)

    # tangent basis through the holomorphic bare-kernel parametrization
    sig = np.sum(np.abs(z) ** 2, axis=0)
    wt = w * np.exp(-sig / 2)
    flat = np.concatenate([wt.ravel(), z.ravel()])

    def embed_bare(f):
        wt_ = f[:4 * M].reshape(4, M)
        z_ = f[4 * M:].reshape(3, M)
        sig_ = np.sum(np.abs(z_) ** 2, axis=0)
        return _embed(wt_ * np.exp(sig_ / 2), z_, dims)

    h = 1e-5
    T = []
    for k in range(7 * M):
        fp = flat.copy(); fp[k] += h
        fm = flat.copy(); fm[k] -= h
        T.append((embed_bare(fp) - embed_bare(fm)) / (2 * h))
    T = np.array(T)
    G = T.conj() @ T.T
    proj_coeff = np.linalg.solve(G, T.conj() @ rhs_exact)
    psidot_proj = proj_coeff @ T

    st = MultiD2State(A=w[0], B=w[1], C=w[2], D=w[3],
                      mu=z[0], nu=z[1], eta=z[2], t=t0)
    d = derivatives(st, params, t0)
    wd = d.amplitude_rates()
    zd = d.displacement_rates()
    eps = 1e-6
    psidot_var = (_embed(w + eps * wd, z + eps * zd, dims)
                  - _embed(w - eps * wd, z - eps * zd, dims)) / (2 * eps)

    mismatch = np.linalg.norm(psidot_var - psidot_proj)
    assert mismatch / np.linalg.norm(psidot_proj) < 1e-6


# ---------------------------------------------------------------------------
# gauge equivalence
# ---------------------------------------------------------------------------

def test_gauge_equivalence_short_propagation():
    """Propagating the same physical state with normalized kernels and with
    bare kernels (amplitudes rescaled by exp(-sig/2)) must give identical
    observables."""
    params = ModelParams(omega_L=1.2, omega_R=1.2, omega_ph=0.8, g=0.25, J=0.05,
                         lam=0.2, F_L=2.0, Omega_L=0.5)
    rng = np.random.default_rng(5)

    def rc(n, s=0.4):
        return rng.normal(size=n) * s + 1j * rng.normal(size=n) * s

    M = 2
    w = rc(4 * M).reshape(4, M)
    z = rc(3 * M, 0.5).reshape(3, M)
    st_norm = MultiD2State(A=w[0], B=w[1], C=w[2], D=w[3],
                           mu=z[0], nu=z[1], eta=z[2], t=0.0)
    nrm = np.sqrt(norm_squared(st_norm))
    st_norm = st_norm.replace_arrays(st_norm.amplitudes() / nrm, z, 0.0)

    sig = displacement_weights(st_norm)
    wt = st_norm.amplitudes() * np.exp(-0.5 * sig)[None, :]
    st_bare = st_norm.replace_arrays(wt, z, 0.0)

    cfg = RunConfig(dt=0.004, t_end=20.0)
    a, b = st_norm, st_bare
    for k in range(5000):
        a = step(a, params, cfg, gauge="normalized")
        b = step(b, params, cfg, gauge="unnormalized")
        if (k + 1) % 1000 == 0:
            ra = measure(a, params, gauge="normalized")
            rb = measure(b, params, gauge="unnormalized")
            for name in ("N_L", "N_R", "sz_L", "sz_R", "P_LZ_L", "P_LZ_R",
                         "N_ph", "energy"):
                assert getattr(ra, name) == pytest.approx(getattr(rb, name),
                                                          abs=1e-6), name


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def test_non_finite_state_raises_labelled_error():
    st = MultiD2State(A=[0, 0], B=[0, 0], C=[0, 0], D=[1, 0],
                      mu=[np.nan, 0], nu=[0, 0], eta=[0, 0])
    with pytest.raises(AssemblyError, match=r"mu\[1\]|row"):
        assemble(st, ModelParams(), 0.0)


def test_index_label_layout():
    assert index_label(0, 4) == "A[1]"
    assert index_label(17, 4) == "mu[2]"
    assert index_label(27, 4) == "eta[4]"


def test_dump_system_round_trip(tmp_path):
    st = random_state(2, seed=11, scale=0.3)
    system = assemble(st, ModelParams(omega_L=1.0, g=0.1), 0.5)
    path = tmp_path / "system.txt"
    dump_system(system, path)
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    assert len(lines) == 15  # 14 matrix rows plus rhs
    first = [complex(*map(float, tok.split(","))) for tok in lines[0].split()]
    assert np.allclose(first, system.matrix[0])
    rhs = [complex(*map(float, tok.split(","))) for tok in lines[-1].split()]
    assert np.allclose(rhs, system.rhs)
