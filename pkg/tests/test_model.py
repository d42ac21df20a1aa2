import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from staggered_ising import (
    AnnealSchedule,
    ChainSpec,
    QuenchParams,
    ScheduleError,
    critical_s,
    eval_schedule,
    feasibility_check,
)


class TestChainSpec:
    def test_valid(self):
        c = ChainSpec(N=160, J=1.0, delta=0.4)
        assert c.strong_bond_parity == "even"
        coup = c.bond_couplings()
        assert coup[0] == pytest.approx(1.4) and coup[1] == pytest.approx(0.6)

    def test_parity_flip_moves_strong_bonds(self):
        c = ChainSpec(N=8, J=1.0, delta=0.3, strong_bond_parity="odd")
        coup = c.bond_couplings()
        assert coup[0] == pytest.approx(0.7) and coup[1] == pytest.approx(1.3)

    @pytest.mark.parametrize("bad", [dict(N=6), dict(N=2), dict(N=8, J=-1.0),
                                     dict(N=8, delta=1.5), dict(N=8, delta=1.0)])
    def test_invalid(self, bad):
        kwargs = dict(N=8, J=1.0, delta=0.0)
        kwargs.update(bad)
        with pytest.raises(ValueError):
            ChainSpec(**kwargs)


class TestSchedule:
    def test_linear_endpoints_and_midpoint(self):
        sched = AnnealSchedule.linear(gamma0=11.0, j1=15.0)
        assert eval_schedule(sched, 0.0) == (0.0, 11.0)
        assert eval_schedule(sched, 1.0) == (15.0, 0.0)
        assert eval_schedule(sched, 0.5) == (7.5, 5.5)

    def test_tabulated_interpolation(self):
        rows = [(0.0, 0.0, 10.0), (0.4, 2.0, 4.0), (1.0, 12.0, 0.0)]
        sched = AnnealSchedule.tabulated(rows)
        assert sched(0.2) == (pytest.approx(1.0), pytest.approx(7.0))
        assert sched(0.7) == (pytest.approx(7.0), pytest.approx(2.0))

    def test_out_of_range_s(self):
        sched = AnnealSchedule.linear()
        with pytest.raises(ScheduleError):
            sched(1.2)
        with pytest.raises(ScheduleError):
            sched(-0.1)

    @pytest.mark.parametrize("rows", [
        [(0.1, 0.0, 5.0), (1.0, 10.0, 0.0)],            # misses s=0
        [(0.0, 0.0, 5.0), (0.9, 10.0, 0.1)],            # misses s=1
        [(0.0, 1.0, 5.0), (1.0, 10.0, 0.0)],            # J(0) != 0
        [(0.0, 0.0, 5.0), (1.0, 10.0, 1.0)],            # Gamma(1) != 0
        [(0.0, 0.0, 5.0), (0.5, 8.0, 2.0), (1.0, 6.0, 0.0)],   # J not monotone
        [(0.0, 0.0, 5.0), (0.5, 2.0, 6.0), (1.0, 6.0, 0.0)],   # Gamma not monotone
    ])
    def test_bad_tables(self, rows):
        with pytest.raises(ScheduleError):
            AnnealSchedule.tabulated(rows)

    def test_csv_roundtrip(self, tmp_path):
        path = tmp_path / "sched.csv"
        path.write_text("s,J_GHz,Gamma_GHz\n0.0,0.0,9.0\n0.5,4.0,3.0\n1.0,12.0,0.0\n")
        sched = AnnealSchedule.from_csv(path)
        assert sched(0.25) == (pytest.approx(2.0), pytest.approx(6.0))

    @given(gamma0=st.floats(0.5, 50), j1=st.floats(0.5, 50), s=st.floats(0, 1))
    @settings(max_examples=50, deadline=None)
    def test_linear_envelope_invariants(self, gamma0, j1, s):
        sched = AnnealSchedule.linear(gamma0, j1)
        jj, gg = sched(s)
        assert jj >= 0 and gg >= 0
        assert sched(0.0)[0] == 0.0 and sched(1.0)[1] == 0.0


class TestCriticalS:
    def test_symmetric_linear(self):
        sched = AnnealSchedule.linear(gamma0=10.0, j1=10.0)
        chain = ChainSpec(N=8, J=1.0, delta=0.0)
        assert critical_s(sched, chain) == pytest.approx(0.5, abs=1e-9)

    def test_closed_form(self):
        # sqrt(1 + 0.5^2) * 15 s = 11 (1 - s)  =>  s_c = 11 / (11 + 15 sqrt(1.25))
        sched = AnnealSchedule.linear(gamma0=11.0, j1=15.0)
        chain = ChainSpec(N=8, J=1.0, delta=0.5)
        expected = 11.0 / (11.0 + 15.0 * math.sqrt(1.25))
        assert critical_s(sched, chain) == pytest.approx(expected, abs=1e-9)

    def test_residual_small(self):
        sched = AnnealSchedule.linear(gamma0=11.0, j1=15.0)
        chain = ChainSpec(N=8, J=1.3, delta=0.2)
        sc = critical_s(sched, chain)
        jj, gg = sched(sc)
        assert abs(math.hypot(chain.J, chain.delta) * jj - gg) < 1e-8

    def test_tabulated_matches_linear(self):
        lin = AnnealSchedule.linear(gamma0=11.0, j1=15.0)
        grid = np.linspace(0, 1, 11)
        tab = AnnealSchedule.tabulated([(s, 15.0 * s, 11.0 * (1 - s)) for s in grid])
        chain = ChainSpec(N=8, J=1.0, delta=0.3)
        assert critical_s(tab, chain) == pytest.approx(critical_s(lin, chain), abs=1e-9)

    @given(scale=st.floats(0.1, 10.0))
    @settings(max_examples=25, deadline=None)
    def test_rescaling_invariance(self, scale):
        chain = ChainSpec(N=8, J=1.0, delta=0.25)
        a = critical_s(AnnealSchedule.linear(11.0, 15.0), chain)
        b = critical_s(AnnealSchedule.linear(11.0 * scale, 15.0 * scale), chain)
        assert a == pytest.approx(b, abs=1e-9)

    def test_degenerate_schedule(self):
        sched = AnnealSchedule.linear(gamma0=0.0, j1=0.0)
        with pytest.raises(ScheduleError):
            critical_s(sched, ChainSpec(N=8, J=1.0, delta=0.0))


class TestFeasibility:
    def test_nyquist_ceiling(self):
        rep = feasibility_check(tau_max_ns=10.0, dtau_ns=0.020, omega_ghz=5.0, t_device_mk=15.0)
        assert rep.omega_max_ghz == pytest.approx(25.0)
        assert rep.nyquist_ok

    def test_temperature_ceiling_both_conventions(self):
        rep = feasibility_check(tau_max_ns=10.0, dtau_ns=0.02, omega_ghz=5.0, t_device_mk=15.0)
        # E = h*f at 5 GHz is ~240 mK; the angular-frequency reading is 2*pi lower
        assert rep.t_star_h_mk == pytest.approx(239.96, abs=0.05)
        assert rep.t_star_hbar_mk == pytest.approx(rep.t_star_h_mk / (2 * math.pi))
        assert rep.temperature_ok and rep.feasible

    def test_zero_frequency_fails_condition3(self):
        rep = feasibility_check(tau_max_ns=10.0, dtau_ns=0.02, omega_ghz=0.0, t_device_mk=15.0)
        assert rep.t_star_h_mk == 0.0
        assert not rep.temperature_ok

    def test_coherence_window(self):
        rep = feasibility_check(tau_max_ns=80.0, dtau_ns=0.02, omega_ghz=5.0, t_device_mk=15.0)
        assert not rep.within_coherence and not rep.feasible

    @given(omega=st.floats(0.1, 40.0), dtau=st.floats(0.001, 1.0))
    @settings(max_examples=40, deadline=None)
    def test_scaling_relations(self, omega, dtau):
        rep = feasibility_check(5.0, dtau, omega, 10.0)
        rep2 = feasibility_check(5.0, dtau / 2, 2 * omega, 10.0)
        assert rep2.omega_max_ghz == pytest.approx(2 * rep.omega_max_ghz)
        assert rep2.t_star_h_mk == pytest.approx(2 * rep.t_star_h_mk)


class TestQuenchParams:
    def test_tau_zero_allowed(self):
        QuenchParams(chain=ChainSpec(N=8), schedule=AnnealSchedule.linear(), tau=0.0)

    def test_negative_tau_rejected(self):
        with pytest.raises(ValueError):
            QuenchParams(chain=ChainSpec(N=8), schedule=AnnealSchedule.linear(), tau=-1.0)
