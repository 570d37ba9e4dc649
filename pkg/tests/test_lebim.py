"""Brittle-interface stepping against single-segment closed forms."""

import math

import numpy as np
import pytest

from delam.core import SystemState
from delam.fem import build_operators
from delam.laws import fracture_energy_plasticity
from delam.lebim import StepError, step_lebim
from delam.scenarios import build_pullpush, build_single_segment

KN, KT, AI = 150e9, 75e9, 187.5
SY = 0.79 * math.sqrt(2 * KT * AI)
KH = KT / 9


def fresh_state(scenario):
    mesh = scenario.mesh
    return SystemState(np.zeros(mesh.n_dofs), np.ones(len(mesh.segments)),
                       None, 0.0)


def march(scenario, n_steps, ops=None):
    ops = ops or build_operators(scenario)
    state = fresh_state(scenario)
    reports = []
    for k in range(1, n_steps + 1):
        rep = step_lebim(state, scenario, k, ops=ops)
        reports.append(rep)
        state = rep.state_next
    return reports, ops


class TestSingleSegment:
    def test_zero_load_stays_pristine(self):
        sc = build_single_segment(direction=(0, 1), speed=0.0, tau=0.01,
                                  horizon=0.1)
        reports, _ = march(sc, 5)
        for rep in reports:
            assert not rep.newly_broken
            assert np.abs(rep.state_next.displacement).max() == 0.0
            assert rep.state_next.damage[0] == 1.0

    def test_normal_opening_breaks_at_critical_jump(self):
        v, tau = 2e-5, 0.01
        sc = build_single_segment(direction=(0, 1), speed=v, tau=tau,
                                  horizon=2.6)
        ops = build_operators(sc)
        state = fresh_state(sc)
        g_crit = math.sqrt(2 * AI / KN)  # 5e-5 exactly
        broke_at = None
        for k in range(1, 261):
            rep = step_lebim(state, sc, k, ops=ops)
            if rep.newly_broken:
                jump = float((ops.iface.jump_n_mid @ rep.state_next.displacement)[0])
                broke_at = (k, jump, state)
                break
            state = rep.state_next
        assert broke_at is not None
        _, jump, pre_state = broke_at
        assert abs(jump - g_crit) <= v * tau * (1 + 1e-9)
        # traction one step before rupture is within half a step of the peak
        t_n = KN * float((ops.iface.jump_n_mid @ pre_state.displacement)[0])
        assert t_n == pytest.approx(math.sqrt(2 * KN * AI), rel=0.005)

    def test_mixed_jump_breaks_at_mixity_threshold(self):
        # fixed drive direction fixes the jump ratio and hence the mixity
        v, tau = 2e-5, 0.01
        d = np.array([0.8, 0.6])
        sc = build_single_segment(direction=tuple(d), speed=v, tau=tau,
                                  horizon=6.0)
        ops = build_operators(sc)
        # scalar oracle: first step where the adhesive energy density crosses
        # the fracture energy of the (constant) mixity angle
        psi = math.atan(math.sqrt(KT / KN) * d[0] / d[1])
        alpha = fracture_energy_plasticity(psi, AI, KT, KH, SY)
        k_oracle = None
        for k in range(1, 601):
            gn, gt = v * tau * k * d[1], v * tau * k * d[0]
            if 0.5 * (KN * gn ** 2 + KT * gt ** 2) >= alpha:
                k_oracle = k
                break
        state = fresh_state(sc)
        for k in range(1, 601):
            rep = step_lebim(state, sc, k, ops=ops)
            if rep.newly_broken:
                assert abs(k - k_oracle) <= 1
                assert rep.alpha_used[0] == pytest.approx(alpha, rel=1e-3)
                return
            state = rep.state_next
        pytest.fail("segment never broke")

    def test_frozen_damage_response_is_linear(self):
        sc1 = build_single_segment(direction=(0.6, 0.8), speed=1e-5, tau=0.01,
                                   horizon=0.1)
        sc2 = build_single_segment(direction=(0.6, 0.8), speed=2e-5, tau=0.01,
                                   horizon=0.1)
        r1, _ = march(sc1, 1)
        r2, _ = march(sc2, 1)
        u1, u2 = r1[0].state_next.displacement, r2[0].state_next.displacement
        assert np.abs(u2 - 2 * u1).max() <= 1e-10 * np.abs(u2).max()

    def test_alpha_argument_switch(self):
        sc = build_single_segment(direction=(1, 0), speed=2e-5, tau=0.01,
                                  horizon=0.3)
        sc.lebim_alpha_at = "previous"
        reports, _ = march(sc, 3)
        # with the previous-jump argument the first step sees a zero jump,
        # so the fallback Mode-I value is used
        assert reports[0].alpha_used[0] == AI

    def test_wrong_law_raises_step_error_with_index(self):
        sc = build_single_segment(direction=(0, 1), speed=1e-5, tau=0.01,
                                  horizon=0.1, model="aprim")
        with pytest.raises(StepError, match="step 7"):
            step_lebim(fresh_state(sc), sc, 7)


class TestRunLevel:
    def test_damage_never_increases(self):
        sc = build_pullpush(n=9, tau=0.04, horizon=1.6)
        reports, _ = march(sc, sc.load.n_steps)
        total = np.array([rep.state_next.damage.sum() for rep in reports])
        assert np.all(np.diff(total) <= 0)

    def test_bang_bang_damage_values(self):
        sc = build_pullpush(n=9, tau=0.04, horizon=1.6)
        reports, _ = march(sc, sc.load.n_steps)
        for rep in reports:
            assert set(np.unique(rep.state_next.damage)) <= {0.0, 1.0}

    def test_mirrored_geometry_mirrors_breakage_order(self):
        # mode-insensitive law and equal stiffnesses make the two mirrored
        # problems exactly equivalent
        from delam.core import ConstantToughness, LebimLaw

        kwargs = dict(n=9, tau=0.04, horizon=2.0, glued_fraction=1.0,
                      fit_scenario=None)
        right = build_pullpush(load_edge="right", **kwargs)
        left = build_pullpush(load_edge="left", **kwargs)
        law = LebimLaw(KN, KN, ConstantToughness(AI))
        right.interface = law
        left.interface = law
        steps_r = np.full(9, -1)
        steps_l = np.full(9, -1)
        for scenario, steps in ((right, steps_r), (left, steps_l)):
            ops = build_operators(scenario)
            state = fresh_state(scenario)
            for k in range(1, scenario.load.n_steps + 1):
                rep = step_lebim(state, scenario, k, ops=ops)
                for s in rep.newly_broken:
                    steps[s] = k
                state = rep.state_next
        assert np.array_equal(steps_r, steps_l[::-1])

    def test_kkt_residual_within_tolerance(self):
        sc = build_pullpush(n=9, tau=0.04, horizon=0.4)
        reports, _ = march(sc, sc.load.n_steps)
        assert max(rep.u_qp.kkt_residual for rep in reports) <= 1e-8
