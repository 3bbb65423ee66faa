import math

import numpy as np
import pytest

from ehmc_bench.core import ConfigError, MassKind, ModelError, TargetModel
from ehmc_bench.samplers import SamplerConfig, run_baseline_hmc
from ehmc_bench.tuning import (
    DualAveragingConfig,
    DualAveragingState,
    da_update,
    init_epsilon,
    tune_step_size,
)
from ehmc_bench.tuning.step_size import _diagonal_mass


class NowhereFiniteModel(TargetModel):
    """A target whose potential is infinite everywhere."""

    name = "nowhere"

    def _potential(self, theta):
        return math.inf

    def _potential_and_gradient(self, theta):
        return math.inf, np.zeros(self.dim)


class TestDualAveraging:
    """Tests the dual averaging recursion."""

    def test_start_state(self):
        """Tests mu = log(10 eps_init) and zeroed statistics."""
        state = DualAveragingState.start(0.5, DualAveragingConfig())

        assert state.mu == pytest.approx(math.log(5.0))
        assert state.eps == pytest.approx(0.5)
        assert (state.t, state.h_bar, state.log_eps_avg) == (0, 0.0, 0.0)

    def test_on_target_acceptance_jumps_to_mu(self):
        """Tests that alpha = p0 at t = 1 sets eps = 10 eps_init."""
        state = da_update(DualAveragingState.start(1.0, DualAveragingConfig(p0=0.8)), 0.8)

        assert state.t == 1
        assert state.eps == pytest.approx(10.0)
        assert state.final_eps == pytest.approx(10.0)

    def test_first_update_by_hand(self):
        """Tests one step of the recursion against a hand computation."""
        state = da_update(DualAveragingState.start(1.0, DualAveragingConfig(p0=0.8)), 1.0)

        h_bar = (0.8 - 1.0) / 11.0
        assert state.h_bar == pytest.approx(h_bar)
        assert state.log_eps == pytest.approx(math.log(10.0) - h_bar / 0.05)
        assert state.log_eps_avg == pytest.approx(state.log_eps)

    def test_low_acceptance_shrinks_step(self):
        """Tests that persistent rejection drives eps down."""
        state = DualAveragingState.start(1.0, DualAveragingConfig(p0=0.8))
        for _ in range(50):
            state = da_update(state, 0.0)
        assert state.final_eps < 1.0

    def test_state_is_immutable(self):
        """Tests that da_update returns a new state."""
        state = DualAveragingState.start(1.0, DualAveragingConfig())
        assert da_update(state, 0.5) is not state
        assert state.t == 0

    @pytest.mark.parametrize("alpha", [-0.1, 1.5, math.nan])
    def test_invalid_statistic(self, alpha):
        """Tests that acceptance statistics outside [0, 1] are rejected."""
        with pytest.raises(ConfigError, match="Acceptance statistic"):
            da_update(DualAveragingState.start(1.0, DualAveragingConfig()), alpha)


class TestInitEpsilon:
    """Tests the initial step size search."""

    def test_doubles_until_ratio_drops(self, std_normal, identity_mass, rng):
        """Tests the search from (0, 1) on a standard normal stops at eps = 2."""
        # eps = 1 gives ratio exp(-1/8) > 1/2, eps = 2 gives exp(-2) < 1/2
        eps = init_epsilon(std_normal, identity_mass, [0.0], rng, v=np.array([1.0]))
        assert eps == 2.0

    def test_halves_for_a_fast_momentum(self, std_normal, identity_mass, rng):
        """Tests that a ratio below 1/2 at eps = 1 makes the search halve."""
        # from (0, 3): eps = 1 gives exp(-9/8) < 1/2, eps = 1/2 gives a ratio above 1/2
        eps = init_epsilon(std_normal, identity_mass, [0.0], rng, v=np.array([3.0]))
        assert eps == 0.5

    def test_non_finite_start(self, identity_mass, rng):
        """Tests that an infinite potential at theta0 raises ModelError."""
        with pytest.raises(ModelError, match="not finite at the starting point"):
            init_epsilon(NowhereFiniteModel(2), identity_mass, np.zeros(2), rng)

    def test_wrong_start(self, std_normal, identity_mass, rng):
        """Tests that a starting point of the wrong length is rejected."""
        with pytest.raises(ConfigError, match="Starting point"):
            init_epsilon(std_normal, identity_mass, np.zeros(3), rng)


class TestTuneStepSize:
    """Tests warmup by dual averaging."""

    def test_reaches_target_acceptance(self, mvn_model, identity_mass):
        """Tests that sampling at the tuned eps accepts close to p0."""
        tuning = tune_step_size(
            mvn_model, identity_mass, np.zeros(5), 0.8, 600, 10, np.random.default_rng(5)
        )
        result = run_baseline_hmc(
            mvn_model,
            identity_mass,
            tuning.theta,
            10,
            False,
            SamplerConfig(eps=tuning.eps, sampler="hmc-fixed", iters=1000),
            np.random.default_rng(6),
        )
        assert result.mean_accept_prob == pytest.approx(0.8, abs=0.1)

    def test_higher_target_gives_smaller_step(self, mvn_model, identity_mass):
        """Tests that eps decreases as p0 increases."""
        eps = [
            tune_step_size(
                mvn_model.fresh(),
                identity_mass,
                np.zeros(5),
                p0,
                400,
                10,
                np.random.default_rng(3),
            ).eps
            for p0 in (0.6, 0.95)
        ]
        assert eps[1] < eps[0]

    def test_identity_mass_is_kept(self, mvn_model, identity_mass, rng):
        """Tests that without mass adaptation the mass is returned unchanged."""
        tuning = tune_step_size(mvn_model, identity_mass, np.zeros(5), 0.8, 50, 5, rng)
        assert tuning.mass is identity_mass

    def test_diagonal_mass_tracks_variances(self, mvn_model, identity_mass):
        """Tests that the adapted diagonal is close to 1 / marginal variance."""
        tuning = tune_step_size(
            mvn_model,
            identity_mass,
            np.zeros(5),
            0.8,
            800,
            10,
            np.random.default_rng(8),
            adapt_mass=True,
        )
        assert tuning.mass.kind == MassKind.DIAGONAL
        assert np.allclose(tuning.mass.diag, 1.0, rtol=0.6)

    def test_diagonal_mass_is_inverse_variance(self, rng):
        """Tests M_ii = 1 / var, so that M^-1 recovers each coordinate's spread."""
        positions = rng.normal(scale=[0.5, 3.0], size=(4000, 2))
        mass = _diagonal_mass(positions)

        assert np.allclose(mass.diag, [4.0, 1.0 / 9.0], rtol=0.1)
        assert np.allclose(mass.inverse_apply(np.ones(2)), [0.25, 9.0], rtol=0.1)

    def test_reproducible(self, mvn_model, identity_mass):
        """Tests that the same seed gives bitwise the same step size."""
        runs = [
            tune_step_size(
                mvn_model.fresh(),
                identity_mass,
                np.zeros(5),
                0.8,
                100,
                5,
                np.random.default_rng(4),
            ).eps
            for _ in range(2)
        ]
        assert runs[0] == runs[1]

    @pytest.mark.parametrize(
        "kwargs, message",
        [
            ({"warmup_iters": 0}, "warmup_iters"),
            ({"L_warmup": 0}, "L_warmup"),
            ({"warmup_iters": 3, "adapt_mass": True}, "at least 4"),
        ],
    )
    def test_invalid_arguments(self, mvn_model, identity_mass, rng, kwargs, message):
        """Tests argument validation."""
        args = {"warmup_iters": 100, "L_warmup": 10, **kwargs}
        with pytest.raises(ConfigError, match=message):
            tune_step_size(
                mvn_model,
                identity_mass,
                np.zeros(5),
                0.8,
                args["warmup_iters"],
                args["L_warmup"],
                rng,
                adapt_mass=args.get("adapt_mass", False),
            )
