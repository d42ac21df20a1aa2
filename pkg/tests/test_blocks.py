import math

import numpy as np
import pytest

from staggered_ising import (
    AnnealSchedule,
    ChainSpec,
    IntegrationError,
    allowed_momenta,
    build_block6,
    build_block8,
    evolve_block,
    quadruplet_momenta,
    sample_disorder,
)
from staggered_ising.blocks import (
    BASIS6,
    BASIS8,
    ChainBlockHamiltonian,
    MomentumBlock,
    backscatter_amplitudes,
    backscatter_block,
    evolve_state,
    fourier_amplitude,
    sweep_states,
)

# ---------------------------------------------------------------------------
# independent second-quantization oracle on the 16-dimensional quadruplet
# Fock space: build every term of the momentum-space Hamiltonian literally
# from creation/annihilation matrices and restrict to the accessible states.
# ---------------------------------------------------------------------------


def _fock_annihilators(n_modes=4):
    dim = 1 << n_modes
    ops = []
    for m in range(n_modes):
        c = np.zeros((dim, dim), dtype=complex)
        for idx in range(dim):
            if (idx >> m) & 1:
                sign = (-1) ** bin(idx & ((1 << m) - 1)).count("1")
                c[idx ^ (1 << m), idx] = sign
        ops.append(c)
    return ops


def _quad_hamiltonian(k, J, delta, h, backscatter=0.0):
    """Momentum-space Hamiltonian restricted to one quadruplet {k,-k,pi-k,pi+k}."""
    momenta = [k, -k, math.pi - k, math.pi + k]

    def idx_of(q):
        for i, m in enumerate(momenta):
            if abs(((q - m + math.pi) % (2 * math.pi)) - math.pi) < 1e-12:
                return i
        raise KeyError(q)

    c = _fock_annihilators()
    cd = [op.conj().T for op in c]
    dim = c[0].shape[0]
    H = np.zeros((dim, dim), dtype=complex)
    for q in momenta:
        a, ma = idx_of(q), idx_of(-q)
        pm, pp = idx_of(math.pi - q), idx_of(math.pi + q)
        eiq, emq = np.exp(1j * q), np.exp(-1j * q)
        H += J * (emq * c[a] @ c[ma] + emq * cd[a] @ cd[ma] - (eiq + emq) * cd[a] @ c[a])
        H += delta * (-emq * c[a] @ c[pm] + emq * cd[a] @ cd[pm]
                      + eiq * cd[a] @ c[pp] - emq * cd[a] @ c[pp])
        H += h * (2.0 * cd[a] @ c[a] - np.eye(dim))
    if backscatter:
        b = complex(backscatter)
        i_k, i_mk = idx_of(k), idx_of(-k)
        i_pm, i_pp = idx_of(math.pi - k), idx_of(math.pi + k)
        H += b * (cd[i_k] @ c[i_mk] + cd[i_pp] @ c[i_pm])
        H += np.conj(b) * (cd[i_mk] @ c[i_k] + cd[i_pm] @ c[i_pp])
    return H


def _restrict(H, basis):
    idxs = [sum(bit << m for m, bit in enumerate(occ)) for occ in basis]
    return H[np.ix_(idxs, idxs)]


class TestMomenta:
    def test_allowed_momenta_examples(self):
        assert np.allclose(allowed_momenta(8), [math.pi / 4])
        ks = allowed_momenta(160)
        assert len(ks) == 39
        assert np.allclose(ks, 2 * math.pi * np.arange(1, 40) / 160)
        assert allowed_momenta(4).size == 0

    def test_allowed_momenta_open_interval(self):
        ks = allowed_momenta(32)
        assert np.all(ks > 0) and np.all(ks < math.pi / 2)

    def test_quadruplet_momenta_tile_all_modes(self):
        for N in (4, 8, 32, 160):
            ks = quadruplet_momenta(N)
            assert len(ks) == N // 4
            assert np.all((ks > 0) & (ks < math.pi / 2))
            # the four partners of every k are distinct and cover all N modes
            partners = np.concatenate([[k, -k, math.pi - k, math.pi + k] for k in ks])
            wrapped = np.mod(partners, 2 * math.pi)
            assert len(np.unique(np.round(wrapped, 12))) == N

    def test_not_divisible_by_four(self):
        with pytest.raises(ValueError):
            allowed_momenta(6)
        with pytest.raises(ValueError):
            quadruplet_momenta(10)


class TestBlockMatrices:
    def test_pinned_field_entries(self):
        H = build_block6(0.7, 1.2, 0.3, 2.5)
        assert H[0, 0] == pytest.approx(4 * 2.5)
        assert H[5, 5] == pytest.approx(-4 * 2.5)

    def test_hermitian(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            k = rng.uniform(0.05, math.pi / 2 - 0.05)
            H = build_block6(k, *rng.uniform(0.1, 3.0, size=3))
            assert np.max(np.abs(H - H.conj().T)) < 1e-12

    def test_delta_zero_decouples_pair_sector(self):
        H = build_block6(0.9, 1.5, 0.0, 2.0)
        pair = [0, 1, 4, 5]
        hop = [2, 3]
        assert np.all(H[np.ix_(pair, hop)] == 0)
        assert np.all(H[np.ix_(hop, pair)] == 0)

    def test_block6_matches_second_quantization_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(12):
            k = rng.uniform(0.05, math.pi / 2 - 0.05)
            J, delta, h = rng.uniform(0.1, 3.0, size=3)
            expected = _restrict(_quad_hamiltonian(k, J, delta, h), BASIS6)
            got = build_block6(k, J, delta, h)
            assert np.max(np.abs(expected - got)) < 1e-12

    def test_block8_matches_second_quantization_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(12):
            k = rng.uniform(0.05, math.pi / 2 - 0.05)
            J, delta, h = rng.uniform(0.1, 3.0, size=3)
            b = complex(rng.normal(), rng.normal())
            expected = _restrict(_quad_hamiltonian(k, J, delta, h, backscatter=b), BASIS8)
            got = build_block8(k, J, delta, h, b)
            assert np.max(np.abs(expected - got)) < 1e-12
            assert np.max(np.abs(got - got.conj().T)) < 1e-12

    def test_accessible_subspace_is_closed(self):
        # the quadruplet Hamiltonian never leaks out of the 6 (clean) / 8
        # (backscattering) accessible states
        H = _quad_hamiltonian(0.6, 1.0, 0.4, 2.0)
        idx6 = [sum(bit << m for m, bit in enumerate(occ)) for occ in BASIS6]
        rest = [i for i in range(16) if i not in idx6]
        assert np.max(np.abs(H[np.ix_(rest, idx6)])) < 1e-14
        H8 = _quad_hamiltonian(0.6, 1.0, 0.4, 2.0, backscatter=0.3 + 0.1j)
        idx8 = [sum(bit << m for m, bit in enumerate(occ)) for occ in BASIS8]
        rest8 = [i for i in range(16) if i not in idx8]
        assert np.max(np.abs(H8[np.ix_(rest8, idx8)])) < 1e-14

    def test_block8_zero_backscatter_is_block_diagonal(self):
        H = build_block8(0.8, 1.0, 0.2, 1.5, 0.0)
        assert np.all(H[:6, 6:] == 0) and np.all(H[6:, :6] == 0)
        assert np.all(H[6:, 6:] == 0)

    def test_momentum_block_validation(self):
        with pytest.raises(ValueError):
            MomentumBlock(k=2.0)
        with pytest.raises(ValueError):
            MomentumBlock(k=0.5, dim=7)
        assert MomentumBlock(k=0.5, dim=8).basis_labels[-1] == (0, 1, 1, 0)
        with pytest.raises(ValueError):
            build_block6(math.pi / 2, 1.0, 0.0, 1.0)


class TestDisorder:
    def test_zero_disorder(self):
        real = sample_disorder(0.0, 32, seed=5)
        assert np.allclose(real.h_site, 1.0)
        assert np.allclose(real.h_2k, 0.0, atol=1e-12)

    def test_determinism(self):
        a = sample_disorder(0.4, 16, seed=9)
        b = sample_disorder(0.4, 16, seed=9)
        assert np.array_equal(a.h_site, b.h_site)
        assert np.array_equal(a.h_2k, b.h_2k)

    def test_range_and_fourier_convention(self):
        real = sample_disorder(0.5, 16, seed=2)
        assert np.all(real.h_site >= 0.5) and np.all(real.h_site <= 1.5)
        # matches the plain FFT with 1/sqrt(N) normalization at q = 2k
        for i, k in enumerate(quadruplet_momenta(16)):
            direct = fourier_amplitude(real.h_site, 2 * k)
            assert real.h_2k[i] == pytest.approx(direct)
            n = np.arange(16)
            fft_val = np.sum(real.h_site * np.exp(-2j * k * n)) / 4.0
            assert direct == pytest.approx(fft_val)

    def test_mean_law_of_large_numbers(self):
        rng_seeds = range(2000)
        means = [np.mean(sample_disorder(0.5, 160, seed=s).h_site) for s in rng_seeds]
        grand = np.mean(means)
        stderr = 0.5 / math.sqrt(3 * 160 * len(means))  # var of U(-1,1)*d is d^2/3
        assert abs(grand - 1.0) < 3 * stderr

    def test_negative_strength_rejected(self):
        with pytest.raises(ValueError):
            sample_disorder(-0.1, 8, seed=0)


def _linear_builder(k, chain, sched):
    def build(s):
        jj, gg = sched(s)
        return build_block6(k, jj * chain.J, jj * chain.delta, gg)
    return build


class TestEvolveBlock:
    def test_tau_zero_identity(self):
        sched = AnnealSchedule.linear(11.0, 15.0)
        chain = ChainSpec(N=8, J=1.0, delta=0.3)
        st = evolve_block(_linear_builder(math.pi / 8, chain, sched), 0.0, 1e-8, k=math.pi / 8)
        assert np.allclose(st.amplitudes, [0, 0, 0, 0, 0, 1])

    def test_unitarity_and_drift(self):
        sched = AnnealSchedule.linear(11.0, 15.0)
        chain = ChainSpec(N=8, J=1.0, delta=0.3)
        for tau in (0.5, 5.0, 40.0):
            st = evolve_block(_linear_builder(0.6, chain, sched), tau, 1e-8, k=0.6)
            assert abs(np.linalg.norm(st.amplitudes) - 1.0) < 1e-9
            assert st.norm_drift < 1e-9

    def test_adiabatic_limit_reaches_final_ground_space(self):
        sched = AnnealSchedule.linear(11.0, 15.0)
        chain = ChainSpec(N=16, J=1.0, delta=0.5)
        for k in quadruplet_momenta(16):
            builder = _linear_builder(k, chain, sched)
            st = evolve_block(builder, 200.0, 1e-8, k=k)
            lam, vec = np.linalg.eigh(builder(1.0))
            ground = np.abs(lam - lam[0]) < 1e-9 * max(1.0, abs(lam[0]))
            overlap = np.linalg.norm(vec[:, ground].conj().T @ st.amplitudes)
            assert overlap > 0.999, f"k={k}: ground-space overlap {overlap}"

    def test_delta_zero_keeps_hop_states_empty(self):
        sched = AnnealSchedule.linear(11.0, 15.0)
        chain = ChainSpec(N=8, J=1.0, delta=0.0)
        st = evolve_block(_linear_builder(math.pi / 8, chain, sched), 7.3, 1e-9, k=math.pi / 8)
        assert abs(st.amplitudes[2]) < 1e-9 and abs(st.amplitudes[3]) < 1e-9

    def test_tolerance_halving_convergence(self):
        sched = AnnealSchedule.linear(11.0, 15.0)
        rng = np.random.default_rng(21)
        for _ in range(10):
            k = rng.uniform(0.1, math.pi / 2 - 0.1)
            chain = ChainSpec(N=8, J=float(rng.uniform(0.5, 1.5)), delta=float(rng.uniform(0, 0.4)))
            tau = float(rng.uniform(0.5, 10.0))
            tol = 1e-6
            a = evolve_block(_linear_builder(k, chain, sched), tau, tol, k=k).amplitudes
            b = evolve_block(_linear_builder(k, chain, sched), tau, tol / 2, k=k).amplitudes
            assert np.linalg.norm(a - b) < 10 * tol

    def test_energy_expectation_real(self):
        sched = AnnealSchedule.linear(11.0, 15.0)
        chain = ChainSpec(N=8, J=1.0, delta=0.25)
        builder = _linear_builder(0.9, chain, sched)
        st = evolve_block(builder, 4.0, 1e-9, k=0.9)
        e = np.vdot(st.amplitudes, builder(1.0) @ st.amplitudes)
        assert abs(e.imag) < 1e-9

    def test_eight_dim_zero_backscatter_matches_six(self):
        sched = AnnealSchedule.linear(11.0, 15.0)
        chain = ChainSpec(N=8, J=1.0, delta=0.3)

        def build8(s):
            jj, gg = sched(s)
            return build_block8(0.7, jj * chain.J, jj * chain.delta, gg, 0.0)

        st6 = evolve_block(_linear_builder(0.7, chain, sched), 3.0, 1e-9, k=0.7)
        st8 = evolve_block(build8, 3.0, 1e-9, k=0.7)
        assert np.max(np.abs(st8.amplitudes[:6] - st6.amplitudes)) < 1e-7
        assert np.max(np.abs(st8.amplitudes[6:])) < 1e-12

    def test_bad_tolerance(self):
        with pytest.raises(ValueError):
            evolve_block(lambda s: np.eye(6, dtype=complex), 1.0, 0.0)


class TestSweepEngine:
    def test_matches_adaptive_path(self):
        chain = ChainSpec(N=16, J=1.0, delta=0.35)
        sched = AnnealSchedule.linear(11.0, 15.0)
        ham = ChainBlockHamiltonian(chain, sched)
        taus = np.array([0.7, 2.9])
        states, _ = sweep_states(ham, taus, ham.initial_state(), tol=1e-8)
        for i, tau in enumerate(taus):
            ref, _ = evolve_state(ham, float(tau), 1e-10, ham.initial_state())
            for b in range(states.shape[1]):
                overlap = abs(np.vdot(states[i, b], ref[b]))
                assert 1.0 - overlap < 1e-8

    def test_tau_zero_grid(self):
        chain = ChainSpec(N=8, J=1.0, delta=0.0)
        ham = ChainBlockHamiltonian(chain, AnnealSchedule.linear())
        states, n = sweep_states(ham, np.array([0.0]), ham.initial_state(), tol=1e-8)
        assert n == 0
        assert np.allclose(states[0], ham.initial_state())

    def test_disordered_hamiltonian_shape(self):
        chain = ChainSpec(N=16, J=1.0, delta=0.2)
        real = sample_disorder(0.3, 16, seed=4)
        ham = ChainBlockHamiltonian(chain, AnnealSchedule.linear(), real)
        H = ham(0.4)
        assert H.shape == (4, 8, 8)
        assert np.max(np.abs(H - np.conj(np.transpose(H, (0, 2, 1))))) < 1e-12
        amps = backscatter_amplitudes(real)
        assert H[0, 6, 2] == pytest.approx(ham.schedule(0.4)[1] * amps[0])

    def test_integration_failure_reports_context(self):
        # a builder violating Hermiticity assumptions cannot break unitarity,
        # so force failure via the step budget instead
        chain = ChainSpec(N=8, J=1.0, delta=0.0)
        ham = ChainBlockHamiltonian(chain, AnnealSchedule.linear())
        with pytest.raises(IntegrationError):
            evolve_state(ham, 1e6, 1e-14, ham.initial_state(), max_steps=10)
