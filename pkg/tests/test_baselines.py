"""Isolated-task consensus learner and the gossip SGD reference."""

import numpy as np
import pytest

from streammtl.baselines import (
    DPSGDState,
    SingleTaskState,
    admm_single_round,
    dpsgd_round,
    run_dpsgd_round,
    run_single_tasks_round,
    step_size,
)
from streammtl.datasets import SyntheticConfig, generate_synthetic, next_round
from streammtl.errors import (
    DimensionError,
    HyperparameterError,
    InvalidRoundError,
)
from streammtl.model import Hyperparameters, Sample
from streammtl.topology import make_topology


def singleton_hp(d, eta=2.0):
    return Hyperparameters(K=1, d=d, T=100, rho=0.1, eta=eta)


class TestSingleTask:
    def test_two_round_hand_trace(self):
        # worked through the three scalar rules by hand, d = 1
        hp = singleton_hp(1)
        st = SingleTaskState.zeros(1)
        st = admm_single_round(st, Sample(np.array([2.0]), 1), hp)
        assert st.w[0] == pytest.approx(0.9523809523809523, abs=1e-15)
        assert st.u_local[0] == pytest.approx(0.13605442176870747, abs=1e-15)
        assert st.z[0] == pytest.approx(0.0816326530612245, abs=1e-15)
        st = admm_single_round(st, Sample(np.array([1.0]), -1), hp)
        assert st.w[0] == pytest.approx(0.3984450923226433, abs=1e-15)
        assert st.u_local[0] == pytest.approx(0.17353880327641258, abs=1e-15)
        assert st.z[0] == pytest.approx(0.10412328196584757, abs=1e-15)

    def test_zeros_shape(self):
        st = SingleTaskState.zeros(4)
        assert st.w.shape == st.u_local.shape == st.z.shape == (4,)

    def test_feature_dimension_check(self):
        with pytest.raises(DimensionError):
            admm_single_round(
                SingleTaskState.zeros(2), Sample(np.zeros(3), 1), singleton_hp(2)
            )

    def test_round_trace_has_no_traffic(self):
        streams, _ = generate_synthetic(SyntheticConfig(K=3, n_per_task=20, seed=1))
        d = streams[0].d
        states = [SingleTaskState.zeros(d) for _ in range(3)]
        states, trace = run_single_tasks_round(
            states, next_round(streams), singleton_hp(d), round_index=5
        )
        assert trace.messages_sent == 0
        assert trace.bytes_sent == 0
        assert trace.round_index == 5
        assert len(states) == 3

    def test_tasks_are_fully_isolated(self):
        streams, _ = generate_synthetic(SyntheticConfig(K=2, n_per_task=30, seed=4))
        d = streams[0].d
        hp = singleton_hp(d)

        joint = [SingleTaskState.zeros(d) for _ in range(2)]
        alone = [SingleTaskState.zeros(d)]
        for _ in range(8):
            samples = next_round(streams)
            joint, _ = run_single_tasks_round(joint, samples, hp)
            alone, _ = run_single_tasks_round(alone, samples[:1], hp)
        np.testing.assert_array_equal(joint[0].w, alone[0].w)
        np.testing.assert_array_equal(joint[0].u_local, alone[0].u_local)
        np.testing.assert_array_equal(joint[0].z, alone[0].z)

    def test_identical_feeds_identical_states(self):
        streams, _ = generate_synthetic(SyntheticConfig(K=1, n_per_task=30, seed=2))
        d = streams[0].d
        hp = singleton_hp(d)
        states = [SingleTaskState.zeros(d) for _ in range(2)]
        for _ in range(6):
            s = streams[0].draw()
            states, _ = run_single_tasks_round(
                states, [s, Sample(s.features.copy(), s.label)], hp
            )
        np.testing.assert_array_equal(states[0].w, states[1].w)

    def test_state_count_must_match_samples(self):
        with pytest.raises(DimensionError):
            run_single_tasks_round(
                [SingleTaskState.zeros(2)], [], singleton_hp(2)
            )


class TestStepSchedule:
    def test_inverse_sqrt(self):
        st = DPSGDState.zeros(make_topology("ring", 2), 1, step0=0.5)
        assert step_size(st, 1) == 0.5
        assert step_size(st, 4) == 0.25

    def test_inverse_square(self):
        st = DPSGDState.zeros(
            make_topology("ring", 2), 1, step0=0.5, schedule="inv_square"
        )
        assert step_size(st, 4) == 0.03125

    def test_rounds_start_at_one(self):
        st = DPSGDState.zeros(make_topology("ring", 2), 1)
        with pytest.raises(InvalidRoundError):
            step_size(st, 0)


class TestDPSGDState:
    def test_validation(self):
        topo = make_topology("ring", 3)
        with pytest.raises(HyperparameterError):
            DPSGDState.zeros(topo, 2, step0=0.0)
        with pytest.raises(HyperparameterError):
            DPSGDState.zeros(topo, 2, schedule="linear")
        with pytest.raises(DimensionError):
            DPSGDState(w=[np.zeros(2)] * 3, step0=0.1, mixing=np.eye(2))
        bad_rows = np.array([[0.6, 0.6], [0.5, 0.5]])
        with pytest.raises(ValueError):
            DPSGDState(w=[np.zeros(2)] * 2, step0=0.1, mixing=bad_rows)
        negative = np.array([[1.5, -0.5], [-0.5, 1.5]])
        with pytest.raises(ValueError):
            DPSGDState(w=[np.zeros(2)] * 2, step0=0.1, mixing=negative)


class TestDPSGDRound:
    def test_hand_trace_two_workers(self):
        # mixing [[.5,.5],[.5,.5]], gamma 0.25 at round 4:
        # worker 0 active (margin 0.8), worker 1 exactly at the kink
        st = DPSGDState.zeros(make_topology("ring", 2), 1, step0=0.5)
        st.w[0][:] = [0.4]
        st.w[1][:] = [-1.0]
        samples = [Sample(np.array([2.0]), 1), Sample(np.array([1.0]), -1)]
        new = dpsgd_round(st, samples, t=4)
        assert new.w[0][0] == pytest.approx(0.2, abs=1e-15)
        assert new.w[1][0] == pytest.approx(-0.3, abs=1e-15)

    def test_flat_branch_is_pure_mixing(self):
        # half/half mixing of equal weights is exact in floats
        st = DPSGDState.zeros(make_topology("full", 2), 2, step0=0.5)
        for k in range(2):
            st.w[k][:] = [2.0, 0.0]
        samples = [Sample(np.array([1.0, 0.0]), 1) for _ in range(2)]
        new = dpsgd_round(st, samples, t=1)
        for k in range(2):
            np.testing.assert_array_equal(new.w[k], [2.0, 0.0])

    def test_doubly_stochastic_mixing_preserves_the_mean(self):
        rng = np.random.default_rng(12)
        st = DPSGDState.zeros(make_topology("ring", 5), 3, step0=0.5)
        for k in range(5):
            st.w[k][:] = rng.normal(size=3)
        before = np.mean(np.stack(st.w), axis=0)
        samples = [Sample(np.zeros(3), 1) for _ in range(5)]
        new = dpsgd_round(st, samples, t=2)
        np.testing.assert_allclose(np.mean(np.stack(new.w), axis=0), before, atol=1e-15)

    def test_sample_count_checked(self):
        st = DPSGDState.zeros(make_topology("ring", 3), 1)
        with pytest.raises(DimensionError):
            dpsgd_round(st, [Sample(np.array([1.0]), 1)], t=1)

    def test_run_trace_counts_neighbor_messages(self):
        streams, _ = generate_synthetic(SyntheticConfig(K=5, n_per_task=20, seed=0))
        d = streams[0].d
        topo = make_topology("ring", 5)
        st = DPSGDState.zeros(topo, d)
        st, trace = run_dpsgd_round(st, next_round(streams), topo, t=1)
        assert trace.messages_sent == 10
        assert trace.bytes_sent == 10 * d * 8
        assert set(np.unique(trace.predictions)) <= {-1, 1}

    def test_losses_use_pre_mix_weights(self):
        topo = make_topology("full", 2)
        st = DPSGDState.zeros(topo, 1, step0=0.5)
        st.w[0][:] = [0.4]
        st.w[1][:] = [-1.0]
        samples = [Sample(np.array([2.0]), 1), Sample(np.array([1.0]), -1)]
        _, trace = run_dpsgd_round(st, samples, topo, t=4)
        assert trace.losses[0] == pytest.approx(0.2, abs=1e-15)
        assert trace.losses[1] == pytest.approx(0.0, abs=1e-15)
