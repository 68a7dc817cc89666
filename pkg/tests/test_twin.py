"""Plant simulator, quantized sensing, actuation policy, and the loop."""

import math

import numpy as np
import pytest

import fermentwin as fw
from fermentwin import (
    ActuatorSetting,
    PlantConfig,
    SensorReading,
    TwinLoopError,
    TwinSchedule,
    act_select,
    plant_observe,
    run_twin_loop,
    sense_temperature,
)
from fermentwin.synthetic import SYNTHETIC_RANGES
from fermentwin.twin import _time_to_od

from conftest import quick_sampler_config


class TestSensor:
    def test_exact_half_step_rounds_to_even(self):
        # 20.03125 / 0.0625 = 320.5 exactly; round-half-even -> 320
        assert sense_temperature(20.03125).temperature_c == 20.0

    def test_nearest_multiple(self):
        assert sense_temperature(20.05).temperature_c == 20.0625

    def test_exact_multiples_pass_through(self):
        assert sense_temperature(25.0).temperature_c == 25.0
        assert sense_temperature(-0.0625).temperature_c == -0.0625

    def test_outputs_are_exact_multiples(self):
        rng = np.random.default_rng(3)
        for temp in rng.uniform(-10, 85, 500):
            reading = sense_temperature(float(temp))
            steps = reading.temperature_c / 0.0625
            assert steps == round(steps)
            assert abs(reading.temperature_c - temp) <= 0.03125 + 1e-12

    def test_out_of_range_is_sensor_error(self):
        with pytest.raises(ValueError, match="sensor"):
            sense_temperature(90.0)
        with pytest.raises(ValueError, match="sensor"):
            sense_temperature(-20.0)

    def test_reading_invariant_enforced(self):
        with pytest.raises(ValueError):
            SensorReading(temperature_c=20.01)


class TestActuatorSetting:
    def test_defaults_accepted(self):
        s = ActuatorSetting(frequency_hz=30_000.0, duty_cycle=0.5)
        assert s.burst_modulation_hz == 150.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(frequency_hz=10_000.0, duty_cycle=0.5),
            dict(frequency_hz=60_000.0, duty_cycle=0.5),
            dict(frequency_hz=30_000.0, duty_cycle=1.2),
            dict(frequency_hz=30_000.0, duty_cycle=-0.1),
            dict(frequency_hz=30_000.0, duty_cycle=0.5, burst_modulation_hz=40_000.0),
            dict(frequency_hz=30_000.0, duty_cycle=0.5, burst_modulation_hz=0.0),
        ],
    )
    def test_inadmissible_settings_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ActuatorSetting(**kwargs)

    def test_custom_band(self):
        s = ActuatorSetting(frequency_hz=10_000.0, duty_cycle=0.5, band=(5_000.0, 15_000.0))
        assert s.frequency_hz == 10_000.0


def make_plant(bench_truth, bench_bounds, noise_sd=0.0, drift=0.0, seed=0):
    return PlantConfig(
        true_state=bench_truth,
        ranges=SYNTHETIC_RANGES,
        bounds=bench_bounds,
        topology=fw.NetworkTopology(),
        n0=0.5,
        ambient_temp_c=25.0,
        observation_noise_sd=noise_sd,
        temperature_drift=drift,
        seed=seed,
    )


class TestPlant:
    def test_noiseless_plant_matches_true_curve(self, bench_truth, bench_bounds):
        plant = make_plant(bench_truth, bench_bounds).initial_state()
        setting = ActuatorSetting(frequency_hz=35_000.0, duty_cycle=0.5)
        feats = bench_bounds.normalize(25.0, 35_000.0, 0.5)
        params = fw.forward(bench_truth, feats, SYNTHETIC_RANGES)
        assert plant_observe(plant, setting, 8.0) == fw.gompertz_eval(8.0, 0.5, params)

    def test_time_zero_is_near_n0(self, bench_truth, bench_bounds):
        plant = make_plant(bench_truth, bench_bounds).initial_state()
        setting = ActuatorSetting(frequency_hz=35_000.0, duty_cycle=0.5)
        assert plant_observe(plant, setting, 0.0) == pytest.approx(0.5, abs=0.1)

    def test_repeated_observation_identical(self, bench_truth, bench_bounds):
        plant = make_plant(bench_truth, bench_bounds, noise_sd=0.05, seed=4).initial_state()
        setting = ActuatorSetting(frequency_hz=35_000.0, duty_cycle=0.5)
        assert plant_observe(plant, setting, 3.0) == plant_observe(plant, setting, 3.0)

    def test_noise_varies_with_time_and_seed(self, bench_truth, bench_bounds):
        setting = ActuatorSetting(frequency_hz=35_000.0, duty_cycle=0.5)
        p1 = make_plant(bench_truth, bench_bounds, noise_sd=0.05, seed=1).initial_state()
        p2 = make_plant(bench_truth, bench_bounds, noise_sd=0.05, seed=2).initial_state()
        assert plant_observe(p1, setting, 3.0) != plant_observe(p2, setting, 3.0)
        assert plant_observe(p1, setting, 3.0) != plant_observe(p1, setting, 4.0)

    def test_observation_never_negative(self, bench_truth, bench_bounds):
        plant = make_plant(bench_truth, bench_bounds, noise_sd=50.0, seed=9).initial_state()
        setting = ActuatorSetting(frequency_hz=35_000.0, duty_cycle=0.5)
        for t in np.linspace(0.0, 10.0, 25):
            assert plant_observe(plant, setting, float(t)) >= 0.0


class TestTimeToOd:
    def test_reached_time_is_consistent(self):
        params = fw.GompertzParams(d=1.5, mu=0.4, lam=2.0)
        target = 1.0
        t = _time_to_od(params, 0.3, target)
        assert fw.gompertz_eval(t, 0.3, params) == pytest.approx(target, rel=1e-9)

    def test_already_reached_is_zero(self):
        params = fw.GompertzParams(d=1.5, mu=0.4, lam=2.0)
        assert _time_to_od(params, 0.3, 0.2) == 0.0

    def test_unreachable_is_infinite(self):
        params = fw.GompertzParams(d=1.5, mu=0.4, lam=2.0)
        assert _time_to_od(params, 0.3, 2.0) == math.inf


class TestActSelect:
    def test_single_candidate(self, bench_model):
        only = ActuatorSetting(frequency_hz=30_000.0, duty_cycle=0.4)
        chosen = act_select(
            bench_model.chain,
            [only],
            25.0,
            0.5,
            24.0,
            bounds=bench_model.bounds,
            ranges=bench_model.ranges,
            topology=bench_model.topology,
        )
        assert chosen is only

    def test_empty_candidates_rejected(self, bench_model):
        with pytest.raises(ValueError):
            act_select(
                bench_model.chain,
                [],
                25.0,
                0.5,
                24.0,
                bounds=bench_model.bounds,
                ranges=bench_model.ranges,
                topology=bench_model.topology,
            )

    def test_unknown_objective_rejected(self, bench_model):
        s = ActuatorSetting(frequency_hz=30_000.0, duty_cycle=0.4)
        with pytest.raises(ValueError):
            act_select(
                bench_model.chain,
                [s],
                25.0,
                0.5,
                24.0,
                "fastest",
                bounds=bench_model.bounds,
                ranges=bench_model.ranges,
                topology=bench_model.topology,
            )

    def test_min_time_requires_target(self, bench_model):
        s = ActuatorSetting(frequency_hz=30_000.0, duty_cycle=0.4)
        with pytest.raises(ValueError):
            act_select(
                bench_model.chain,
                [s],
                25.0,
                0.5,
                24.0,
                "min_time",
                bounds=bench_model.bounds,
                ranges=bench_model.ranges,
                topology=bench_model.topology,
            )

    def test_dominant_candidate_wins_under_both_objectives(
        self, bench_model, bench_truth, bench_bounds
    ):
        """Candidates ranked by the true surface: the one whose predicted
        curve dominates pointwise must win either way."""
        cands = [
            ActuatorSetting(frequency_hz=f, duty_cycle=d)
            for f in (25_000.0, 45_000.0)
            for d in (0.2, 0.8)
        ]
        scores = []
        for c in cands:
            feats = bench_bounds.normalize(25.0, c.frequency_hz, c.duty_cycle)
            p = fw.forward(bench_truth, feats, SYNTHETIC_RANGES)
            scores.append(fw.gompertz_eval(24.0, 0.5, p))
        oracle = cands[int(np.argmax(scores))]
        kwargs = dict(
            bounds=bench_model.bounds,
            ranges=bench_model.ranges,
            topology=bench_model.topology,
        )
        by_density = act_select(bench_model.chain, cands, 25.0, 0.5, 24.0, **kwargs)
        by_time = act_select(
            bench_model.chain, cands, 25.0, 0.5, 24.0, "min_time", target_od=1.2, **kwargs
        )
        assert by_density is oracle
        assert by_time is oracle

    def test_tie_breaks_by_input_order(self, bench_model):
        same = ActuatorSetting(frequency_hz=30_000.0, duty_cycle=0.4)
        twin = ActuatorSetting(frequency_hz=30_000.0, duty_cycle=0.4)
        chosen = act_select(
            bench_model.chain,
            [same, twin],
            25.0,
            0.5,
            24.0,
            bounds=bench_model.bounds,
            ranges=bench_model.ranges,
            topology=bench_model.topology,
        )
        assert chosen is same

    def test_selection_is_externally_recomputable_argmax(self, bench_model):
        """The choice must equal the first argmax of externally computed
        scores, so any positive affine rescaling of the objective leaves
        it unchanged."""
        cands = [
            ActuatorSetting(frequency_hz=f, duty_cycle=d)
            for f in (25_000.0, 35_000.0, 45_000.0)
            for d in (0.2, 0.5, 0.8)
        ]
        scores = []
        for c in cands:
            feats = bench_model.bounds.normalize(25.0, c.frequency_hz, c.duty_cycle)
            p = fw.posterior_params(bench_model.chain, feats, bench_model.ranges)
            scores.append(fw.gompertz_eval(24.0, 0.5, p))
        scores = np.array(scores)
        chosen = act_select(
            bench_model.chain,
            cands,
            25.0,
            0.5,
            24.0,
            bounds=bench_model.bounds,
            ranges=bench_model.ranges,
            topology=bench_model.topology,
        )
        assert chosen is cands[int(np.argmax(scores))]
        rescaled = 3.7 * scores + 11.0
        assert int(np.argmax(rescaled)) == int(np.argmax(scores))


class TestSchedule:
    def test_step_count(self):
        assert TwinSchedule(step_h=1.0, total_h=12.0).n_steps == 12
        assert TwinSchedule(step_h=0.5, total_h=6.0).n_steps == 12

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(step_h=0.0, total_h=5.0),
            dict(step_h=2.0, total_h=1.0),
            dict(step_h=1.0, total_h=1.0),
            dict(step_h=1.0, total_h=12.0, refit_every=-1),
            dict(step_h=0.7, total_h=12.0),
        ],
    )
    def test_invalid_schedules(self, kwargs):
        with pytest.raises(ValueError):
            TwinSchedule(**kwargs)


@pytest.fixture(scope="module")
def loop_setup(bench_truth, bench_bounds, bench_records, bench_prior, bench_model):
    candidates = [
        ActuatorSetting(frequency_hz=f, duty_cycle=d)
        for f in (25_000.0, 45_000.0)
        for d in (0.2, 0.8)
    ]
    return dict(
        plant=make_plant(bench_truth, bench_bounds, noise_sd=0.02, seed=6),
        model=bench_model,
        records=bench_records,
        prior=bench_prior,
        config=quick_sampler_config(seed=55),
        candidates=candidates,
    )


class TestTwinLoop:
    def test_twelve_steps_give_twelve_entries(self, loop_setup):
        log = run_twin_loop(
            loop_setup["plant"],
            loop_setup["model"],
            loop_setup["records"],
            loop_setup["prior"],
            loop_setup["config"],
            loop_setup["candidates"],
            TwinSchedule(step_h=1.0, total_h=12.0, refit_every=0),
        )
        assert len(log) == 12
        assert [e.t_h for e in log.entries] == [float(k) for k in range(1, 13)]

    def test_static_model_when_never_refit(self, loop_setup):
        """With refit disabled and constant conditions the predictions for a
        repeated chosen setting are constant."""
        log = run_twin_loop(
            loop_setup["plant"],
            loop_setup["model"],
            loop_setup["records"],
            loop_setup["prior"],
            loop_setup["config"],
            loop_setup["candidates"],
            TwinSchedule(step_h=1.0, total_h=6.0, refit_every=0),
        )
        by_setting = {}
        for e in log.entries:
            key = (e.frequency_hz, e.duty_cycle)
            by_setting.setdefault(key, set()).add(
                (e.od_predicted_mean, e.od_predicted_lo, e.od_predicted_hi)
            )
        for preds in by_setting.values():
            assert len(preds) == 1

    def test_loop_is_deterministic(self, loop_setup):
        schedule = TwinSchedule(step_h=1.0, total_h=8.0, refit_every=4)
        args = (
            loop_setup["plant"],
            loop_setup["model"],
            loop_setup["records"],
            loop_setup["prior"],
            loop_setup["config"],
            loop_setup["candidates"],
            schedule,
        )
        assert run_twin_loop(*args) == run_twin_loop(*args)

    def test_log_csv_schema(self, loop_setup, tmp_path):
        log = run_twin_loop(
            loop_setup["plant"],
            loop_setup["model"],
            loop_setup["records"],
            loop_setup["prior"],
            loop_setup["config"],
            loop_setup["candidates"],
            TwinSchedule(step_h=1.0, total_h=4.0, refit_every=0),
        )
        path = tmp_path / "log.csv"
        log.save_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == (
            "t_h,temp_c_sensed,freq_hz,duty,od_observed,"
            "od_predicted_mean,od_predicted_lo,od_predicted_hi"
        )
        assert len(lines) == 5

    def test_sampler_failure_aborts_with_partial_log(self, loop_setup, monkeypatch):
        import fermentwin.twin as twin_mod

        def boom(*args, **kwargs):
            raise fw.SamplerError("synthetic failure")

        monkeypatch.setattr(twin_mod, "fit_growth_model", boom)
        with pytest.raises(TwinLoopError) as exc_info:
            run_twin_loop(
                loop_setup["plant"],
                loop_setup["model"],
                loop_setup["records"],
                loop_setup["prior"],
                loop_setup["config"],
                loop_setup["candidates"],
                TwinSchedule(step_h=1.0, total_h=8.0, refit_every=3),
            )
        # two full steps were logged before the refit at step 3 failed
        assert len(exc_info.value.partial_log) == 2

    def test_appended_observations_carry_prior_step_setting(self, loop_setup, monkeypatch):
        """No look-ahead: each record entering a refit was produced under
        the setting chosen at the step before it."""
        import fermentwin.twin as twin_mod

        captured = []
        real_normalize = twin_mod.normalize

        def spy(records, *args, **kwargs):
            captured.append(list(records))
            return real_normalize(records, *args, **kwargs)

        monkeypatch.setattr(twin_mod, "normalize", spy)
        schedule = TwinSchedule(step_h=1.0, total_h=8.0, refit_every=2)
        log = run_twin_loop(
            loop_setup["plant"],
            loop_setup["model"],
            loop_setup["records"],
            loop_setup["prior"],
            loop_setup["config"],
            loop_setup["candidates"],
            schedule,
        )
        n_base = len(loop_setup["records"])
        final_rolling = captured[-1]
        new_records = final_rolling[n_base:]
        first_setting = loop_setup["candidates"][0]
        expected = [(first_setting.frequency_hz, first_setting.duty_cycle)] + [
            (e.frequency_hz, e.duty_cycle) for e in log.entries[:-1]
        ]
        applied = [(r.frequency_hz, r.duty_cycle) for r in new_records]
        assert applied == expected[: len(applied)]

    def test_temperature_drift_shows_in_sensed_column(
        self, bench_truth, bench_bounds, bench_records, bench_prior, bench_model
    ):
        plant = make_plant(bench_truth, bench_bounds, noise_sd=0.0, drift=3.0)
        log = run_twin_loop(
            plant,
            bench_model,
            bench_records,
            bench_prior,
            quick_sampler_config(seed=59),
            [ActuatorSetting(frequency_hz=45_000.0, duty_cycle=0.8)],
            TwinSchedule(step_h=2.0, total_h=16.0, refit_every=0),
        )
        temps = [e.temp_c_sensed for e in log.entries]
        assert temps[-1] > temps[0]  # culture growth warms the tank
        for temp in temps:
            assert (temp / 0.0625) == round(temp / 0.0625)
