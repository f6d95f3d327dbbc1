"""Tests for the Monte Carlo experiment generators."""

import numpy as np
import pytest

from ssdiag import (
    FlaggingDGP,
    GroupedDGP,
    PANEL_PARAMS,
    SimConfig,
    ValidationError,
    crossed_shares,
    draw_flagging,
    draw_grouped,
    run_flagging_curve,
    run_grouped_experiment,
)
from ssdiag.data import contiguous_partition, partition_to_shares
from ssdiag.rng import substream


class TestDrawGrouped:
    def test_null_model_is_iid_standard_normal(self):
        dgp = GroupedDGP(n_states=20, per_state=10)
        rng = np.random.default_rng(0)
        pooled = np.concatenate([draw_grouped(dgp, rng).y for _ in range(200)])
        assert pooled.mean() == pytest.approx(0.0, abs=0.02)
        assert pooled.std() == pytest.approx(1.0, abs=0.02)

    def test_homogeneous_effect_sate(self):
        dgp = GroupedDGP(n_states=6, per_state=4, beta=0.5)
        draw = draw_grouped(dgp, np.random.default_rng(1))
        assert draw.sate == pytest.approx(0.5, abs=1e-12)

    def test_balanced_treatment(self):
        dgp = GroupedDGP(n_states=10, per_state=3)
        draw = draw_grouped(dgp, np.random.default_rng(2))
        assert draw.design.treated.sum() == 5
        assert draw.design.group_size == 3

    def test_within_state_correlation(self):
        # analytic moment: corr = omega^2 / (omega^2 + 1) among untreated units
        omega = 0.3
        dgp = GroupedDGP(n_states=2, per_state=2, omega=omega)
        rng = np.random.default_rng(3)
        pairs = []
        for _ in range(40000):
            draw = draw_grouped(dgp, rng)
            control = draw.y[~draw.design.treated[draw.design.group_of]]
            pairs.append(control)
        pairs = np.array(pairs)
        corr = np.corrcoef(pairs[:, 0], pairs[:, 1])[0, 1]
        assert corr == pytest.approx(omega**2 / (omega**2 + 1), abs=0.02)

    def test_heterogeneous_effects_average_zero(self):
        dgp = GroupedDGP(n_states=50, per_state=2, het_loading=0.4)
        rng = np.random.default_rng(4)
        sates = [draw_grouped(dgp, rng).sate for _ in range(3000)]
        assert np.mean(sates) == pytest.approx(0.0, abs=0.01)

    def test_deterministic_given_stream(self):
        dgp = GroupedDGP(n_states=8, per_state=2, omega=0.2, beta=0.1)
        a = draw_grouped(dgp, substream(7, 0))
        b = draw_grouped(dgp, substream(7, 0))
        np.testing.assert_array_equal(a.y, b.y)
        np.testing.assert_array_equal(a.design.treated, b.design.treated)

    def test_validation(self):
        with pytest.raises(ValidationError):
            GroupedDGP(n_states=5)
        with pytest.raises(ValidationError):
            GroupedDGP(n_states=4, per_state=0)
        with pytest.raises(ValidationError):
            GroupedDGP(n_states=4, omega=-0.1)


class TestGroupedExperiment:
    def test_report_shape_and_determinism(self):
        dgp = GroupedDGP(n_states=8, per_state=3, beta=0.5)
        cfg = SimConfig(replications=40, seed=11)
        results = [run_grouped_experiment(dgp, 96, cfg, workers=w) for w in (1, 2)]
        assert results[0] == results[1]
        r = results[0]
        for value in (r.size, r.pr_flag_y, r.pr_flag_eps):
            assert 0.0 <= value <= 1.0
        assert r.outer_reps == 96

    def test_panel_params_table(self):
        assert set(PANEL_PARAMS) == {"A", "B", "C", "D", "E"}
        assert PANEL_PARAMS["B"] == {"beta": 0.5, "omega": 0.3, "het_loading": 0.0}
        assert PANEL_PARAMS["E"]["het_loading"] == 0.4


class TestDrawFlagging:
    def _dgp(self, gamma, n_groups=4, m=3):
        design = contiguous_partition(n_groups, m)
        return FlaggingDGP(
            shares=partition_to_shares(design),
            clusters=design.group_of,
            gamma_sc=gamma,
        )

    def test_zero_confound_outcome_is_pure_noise(self):
        dgp = self._dgp(0.0)
        rng = np.random.default_rng(0)
        draw = draw_flagging(dgp, rng)
        # replay the stream: outcome must equal the first N normals exactly
        replay = np.random.default_rng(0).standard_normal(dgp.shares.shape[0])
        np.testing.assert_array_equal(draw.y_star, replay)

    def test_identity_shares_structure(self):
        shares = np.eye(6)
        dgp = FlaggingDGP(shares=shares, clusters=np.arange(6), gamma_sc=2.0)
        rng = np.random.default_rng(1)
        draw = draw_flagging(dgp, rng)
        replay_rng = np.random.default_rng(1)
        z = replay_rng.standard_normal(6)
        latent = replay_rng.standard_normal(6)
        observed = replay_rng.standard_normal(6)
        np.testing.assert_allclose(draw.y_star, z + 2.0 * latent)
        np.testing.assert_allclose(draw.x, observed)

    def test_seed_round_trip(self):
        dgp = self._dgp(0.7)
        a = draw_flagging(dgp, substream(5, 1))
        b = draw_flagging(dgp, substream(5, 1))
        np.testing.assert_array_equal(a.y_star, b.y_star)
        np.testing.assert_array_equal(a.x, b.x)


class TestFlaggingCurve:
    def test_points_and_determinism(self):
        design = contiguous_partition(8, 4)
        shares = partition_to_shares(design)
        cfg = SimConfig(replications=30, seed=3, estimators=("crve",))
        runs = [
            run_flagging_curve(shares, design.group_of, [0.0, 1.0], 64, cfg, workers=w)
            for w in (1, 2)
        ]
        assert runs[0] == runs[1]
        gammas = [p.gamma for p in runs[0]]
        assert gammas == [0.0, 1.0]
        for p in runs[0]:
            assert 0.0 <= p.size <= 1.0
            assert 0.0 <= p.pr_flag_y <= 1.0

    def test_confound_raises_flagging(self):
        # sector confounds cut across clusters in the crossed design, so a
        # strong one must push the size and both flag probabilities up
        shares, clusters = crossed_shares(10, 8)
        cfg = SimConfig(replications=100, seed=13, estimators=("crve",))
        points = run_flagging_curve(shares, clusters, [0.0, 2.0], 80, cfg)
        assert points[1].pr_flag_y > points[0].pr_flag_y
        assert points[1].size > points[0].size

    def test_crossed_shares_shape(self):
        shares, clusters = crossed_shares(3, 4)
        assert shares.shape == (12, 4)
        np.testing.assert_array_equal(shares.sum(axis=1), 1.0)
        np.testing.assert_array_equal(np.bincount(clusters), [4, 4, 4])
        # every cluster spans every sector
        for c in range(3):
            np.testing.assert_array_equal(shares[clusters == c].sum(axis=0), 1.0)

    def test_validation(self):
        design = contiguous_partition(4, 2)
        shares = partition_to_shares(design)
        cfg = SimConfig(replications=5, seed=1)
        with pytest.raises(ValidationError):
            run_flagging_curve(shares, design.group_of, [], 10, cfg)
        with pytest.raises(ValidationError):
            run_flagging_curve(shares, design.group_of, [0.0], 0, cfg)
