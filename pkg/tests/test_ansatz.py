import cmath

import numpy as np
import pytest

from rabidimer import (MultiD2State, PRESETS, debye_waller, init_paper_state,
                       norm_squared, overlap_matrix)
from rabidimer.ansatz import (displacement_weights, from_flat_record, overlaps,
                              to_flat_record)
from rabidimer.model import preset_from_dict


def random_state(M, seed, scale=0.6):
    rng = np.random.default_rng(seed)

    def rc(n):
        return rng.normal(size=n, scale=scale) + 1j * rng.normal(size=n, scale=scale)

    return MultiD2State(A=rc(M), B=rc(M), C=rc(M), D=rc(M),
                        mu=rc(M), nu=rc(M), eta=rc(M), t=0.0)


# ---------------------------------------------------------------------------
# overlaps
# ---------------------------------------------------------------------------

def test_debye_waller_vacuum_and_identical():
    st = MultiD2State(A=[1, 0], B=[0, 0], C=[0, 0], D=[0, 1],
                      mu=[0, 0], nu=[0, 0], eta=[0, 0])
    assert debye_waller(st, 0, 1) == pytest.approx(1.0)
    st2 = random_state(3, seed=0)
    for l in range(3):
        assert debye_waller(st2, l, l) == pytest.approx(1.0, abs=1e-12)


def test_debye_waller_unit_displacements():
    # mu_l = 1, mu_n = i, everything else zero: overlap exp(1*i - 1/2 - 1/2)
    st = MultiD2State(A=[0, 0], B=[0, 0], C=[0, 0], D=[1, 1],
                      mu=[1.0, 1j], nu=[0, 0], eta=[0, 0])
    value = debye_waller(st, 0, 1)
    assert value == pytest.approx(cmath.exp(1j - 1), abs=1e-15)
    assert value == pytest.approx(0.19876611034641294 + 0.3095598756531122j, abs=1e-14)


def test_debye_waller_index_check():
    st = random_state(2, seed=1)
    with pytest.raises(IndexError):
        debye_waller(st, 0, 2)


def test_overlap_matrix_consistency():
    st = random_state(4, seed=2)
    ker = overlap_matrix(st)
    sig = displacement_weights(st)
    # S_ln = S_bar_ln * exp(-(sig_l + sig_n)/2)
    rebuilt = ker.S_bar * np.exp(-0.5 * (sig[:, None] + sig[None, :]))
    assert np.allclose(ker.S, rebuilt, rtol=1e-12)
    assert np.allclose(np.diag(ker.S), 1.0, atol=1e-12)
    for l in range(4):
        for n in range(4):
            assert ker.S[l, n] == pytest.approx(debye_waller(st, l, n), rel=1e-12)


def test_overlap_hermiticity_and_bound():
    for seed in range(5):
        st = random_state(5, seed=seed)
        S = overlaps(st)
        assert np.allclose(S, S.conj().T, rtol=1e-12)
        assert np.all(np.abs(S) <= 1.0 + 1e-12)


def test_gram_positivity():
    for seed in range(8):
        st = random_state(6, seed=10 + seed, scale=1.2)
        S = overlaps(st)
        # norm_squared uses the 4M x 4M Gram kron(I_4, S); eigenvalues match S
        assert np.linalg.eigvalsh(S).min() >= -1e-10


# ---------------------------------------------------------------------------
# norm
# ---------------------------------------------------------------------------

def test_norm_single_configuration():
    st = MultiD2State(A=[0], B=[0], C=[0], D=[1], mu=[np.sqrt(20)], nu=[0], eta=[0])
    assert norm_squared(st) == pytest.approx(1.0, abs=1e-12)


def test_norm_two_identical_configurations():
    # equal amplitudes 1/sqrt(2) on identical displacements double-count
    a = 1 / np.sqrt(2)
    st = MultiD2State(A=[0, 0], B=[0, 0], C=[0, 0], D=[a, a],
                      mu=[0.3, 0.3], nu=[0, 0], eta=[0, 0])
    assert norm_squared(st) == pytest.approx(2.0, rel=1e-12)


def test_norm_quadratic_scaling():
    st = random_state(3, seed=3)
    base = norm_squared(st)
    c = 0.7 - 1.3j
    scaled = st.replace_arrays(c * st.amplitudes(), st.displacements(), 0.0)
    assert norm_squared(scaled) == pytest.approx(abs(c) ** 2 * base, rel=1e-12)


def test_mismatched_lengths_rejected():
    with pytest.raises(ValueError):
        MultiD2State(A=[1, 0], B=[0], C=[0], D=[0], mu=[0], nu=[0], eta=[0])


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def test_init_paper_state_is_exact_physical_state():
    preset = PRESETS["fig3"]
    st = init_paper_state(preset)
    assert st.M == 6
    assert st.D[0] == pytest.approx(1.0, abs=1e-12)
    assert st.mu[0] == pytest.approx(np.sqrt(20.0))
    assert st.nu[0] == 0.0 and st.eta[0] == 0.0
    assert np.all(st.A == 0) and np.all(st.B == 0) and np.all(st.C == 0)
    assert np.all(st.D[1:] == 0)
    assert norm_squared(st) == pytest.approx(1.0, abs=1e-12)


def test_init_vacuum_single_configuration():
    preset = preset_from_dict(
        {"initial_photons": 0.0, "noise_eps": 0.0, "multiplicity": 1},
        base=PRESETS["fig3"])
    st = init_paper_state(preset)
    assert st.M == 1
    assert st.mu[0] == 0.0 and st.nu[0] == 0.0 and st.eta[0] == 0.0
    assert st.D[0] == 1.0


def test_init_deterministic():
    preset = PRESETS["fig4a"]
    a = init_paper_state(preset)
    b = init_paper_state(preset)
    for name in ("A", "B", "C", "D", "mu", "nu", "eta"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_init_spares_cluster_near_occupied_configuration():
    preset = PRESETS["fig3"]
    st = init_paper_state(preset)
    spread = np.abs(st.mu[1:] - st.mu[0])
    assert np.all(spread < 6 * preset.noise_eps)
    assert np.all(spread > 0)
    # overlap matrix must be comfortably invertible
    assert np.linalg.cond(overlaps(st)) < 1e6


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_flat_record_round_trip():
    st = random_state(4, seed=5)
    st = MultiD2State(A=st.A, B=st.B, C=st.C, D=st.D,
                      mu=st.mu, nu=st.nu, eta=st.eta, t=12.25)
    rec = to_flat_record(st)
    assert rec.shape == (1 + 14 * 4,)
    again = from_flat_record(rec)
    assert again.t == st.t
    for name in ("A", "B", "C", "D", "mu", "nu", "eta"):
        assert np.array_equal(getattr(again, name), getattr(st, name))


def test_flat_record_length_check():
    with pytest.raises(ValueError):
        from_flat_record(np.zeros(10))
