import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isingdeploy.cost import CostConstants
from isingdeploy.deployment import MachineDescription, SnnDescription
from isingdeploy.evaluation import (
    CSV_HEADER,
    AblationMode,
    UndefinedCorrelationError,
    derive_seed,
    format_samples,
    format_summary,
    format_sweep_csv,
    pearson,
    reference_setup,
    run_sweep,
)
from isingdeploy.ising import SamplerParams

SMALL_SNN = SnnDescription((("exc", 16), ("inh", 6)), 0.1)
SMALL_SAMPLER = SamplerParams(steps_eq=500, sample_interval=20, sample_count=30)


def textbook_pearson(xs, ys):
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    vx = sum((x - mx) ** 2 for x in xs)
    vy = sum((y - my) ** 2 for y in ys)
    return cov / math.sqrt(vx * vy)


class TestPearson:
    def test_perfect_positive(self):
        xs = [1.0, 2.5, 3.0, 7.0]
        assert pearson(xs, [2 * x + 3 for x in xs]) == pytest.approx(1.0, abs=1e-15)

    def test_perfect_negative(self):
        xs = [1.0, 2.5, 3.0, 7.0]
        assert pearson(xs, [-x for x in xs]) == pytest.approx(-1.0, abs=1e-15)

    def test_textbook_value(self):
        xs, ys = [1, 2, 3, 4], [1, 2, 3, 100]
        assert pearson(xs, ys) == pytest.approx(textbook_pearson(xs, ys), abs=1e-14)
        # by hand: deviations (-1.5,-.5,.5,1.5) and (-25.5,-24.5,-23.5,73.5)
        assert pearson(xs, ys) == pytest.approx(149 / math.sqrt(5 * 7205), abs=1e-14)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="equal-length"):
            pearson([1, 2, 3], [1, 2])

    def test_too_short(self):
        with pytest.raises(ValueError, match="two points"):
            pearson([1], [2])

    def test_zero_variance(self):
        with pytest.raises(UndefinedCorrelationError):
            pearson([1, 1, 1], [1, 2, 3])
        with pytest.raises(UndefinedCorrelationError):
            pearson([0.1, 0.2, 0.3], [0.1, 0.1, 0.1])

    @settings(max_examples=80, deadline=None)
    @given(
        st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=30).filter(lambda v: max(v) - min(v) > 1e-3),
        st.integers(0, 2**32 - 1),
        st.floats(0.01, 100),
        st.floats(-100, 100),
    )
    def test_symmetry_and_affine_invariance(self, xs, seed, scale, shift):
        ys = list(np.random.default_rng(seed).normal(size=len(xs)))
        r = pearson(xs, ys)
        assert -1.0 <= r <= 1.0
        assert pearson(ys, xs) == pytest.approx(r, abs=1e-12)
        assert pearson([scale * x + shift for x in xs], ys) == pytest.approx(r, abs=1e-9)


def test_derive_seed_is_per_key():
    assert derive_seed(0, 0, 5) == derive_seed(0, 0, 5)
    assert derive_seed(0, 0, 5) != derive_seed(0, 0, 6)
    assert derive_seed(0, 0, 5) != derive_seed(1, 0, 5)


@pytest.fixture(scope="module")
def small_setup():
    return reference_setup(SMALL_SNN, MachineDescription(12, cores_per_chip=2), seed=3, bins=400)


def sweep(setup, mode, seed=0, machine=None):
    return run_sweep(
        SMALL_SNN,
        machine or setup.machine,
        setup.model,
        SMALL_SAMPLER,
        CostConstants(),
        mode,
        setup.raster,
        setup.synapses,
        seed=seed,
    )


class TestSweep:
    def test_one_row_per_k(self, small_setup):
        result = sweep(small_setup, AblationMode.FULL)
        assert [r.k for r in result.rows] == list(range(1, 17))
        assert set(result.correlations) == {"energy_chips", "energy_packets", "time_packets"}
        ok = [r for r in result.rows if r.status == "ok"]
        assert all(r.predicted_cost is not None and r.energy_chips is not None for r in ok)

    def test_skipped_rows_recorded(self, small_setup):
        machine = MachineDescription(2, cores_per_chip=2)
        result = sweep(small_setup, AblationMode.FULL, machine=machine)
        assert len(result.rows) == 16
        skipped = [r for r in result.rows if r.status != "ok"]
        # k <= 5 needs more than 4 cores
        assert [r.k for r in skipped] == [1, 2, 3, 4, 5]
        assert all(r.status.startswith("skipped: need") for r in skipped)
        assert "skipped: need 22 cores" in format_sweep_csv(result.rows)

    def test_uniform_pm_shares_samples_with_full(self, small_setup):
        full = sweep(small_setup, AblationMode.FULL)
        upm = sweep(small_setup, AblationMode.UNIFORM_PM)
        assert format_samples(full.samples) == format_samples(upm.samples)
        for a, b in zip(full.rows, upm.rows):
            assert b.predicted_cost == pytest.approx(SMALL_SAMPLER.sample_count * a.predicted_cost, rel=1e-12)
            assert (a.energy_chips, a.energy_packets, a.time_packets) == (b.energy_chips, b.energy_packets, b.time_packets)

    @pytest.mark.parametrize("mode", list(AblationMode))
    def test_deterministic(self, small_setup, mode):
        a, b = sweep(small_setup, mode, seed=9), sweep(small_setup, mode, seed=9)
        assert format_sweep_csv(a.rows) == format_sweep_csv(b.rows)
        assert format_summary(a) == format_summary(b)
        assert format_samples(a.samples) == format_samples(b.samples)

    def test_random_modes_use_uniform_states(self, small_setup):
        result = sweep(small_setup, AblationMode.RANDOM_SAMPLES)
        stacked = np.concatenate(list(result.samples.values()))
        assert abs(((stacked + 1) / 2).mean() - 0.5) < 0.03

    def test_row_independent_of_other_ks(self, small_setup):
        # the small machine skips k <= 5; the remaining rows must not notice
        full = sweep(small_setup, AblationMode.FULL)
        fewer = sweep(small_setup, AblationMode.FULL, machine=MachineDescription(2, cores_per_chip=2))
        assert [r.csv() for r in full.rows[5:]] == [r.csv() for r in fewer.rows[5:]]
        for k in range(6, 17):
            np.testing.assert_array_equal(full.samples[k], fewer.samples[k])

    def test_csv_header(self, small_setup):
        text = format_sweep_csv(sweep(small_setup, AblationMode.RANDOM_MODEL).rows)
        lines = text.split("\n")
        assert lines[0] == CSV_HEADER
        assert text.endswith("\n") and "\r" not in text
        assert len(lines) == 16 + 2

    def test_summary_echoes_mode(self, small_setup):
        text = format_summary(sweep(small_setup, AblationMode.UNIFORM_PM), {"seed": 0})
        assert text.startswith("metric,pearson\nenergy_chips,")
        assert "# mode=uniform_pm" in text and "# weighting=uniform_one" in text and "# seed=0" in text

    def test_model_size_mismatch(self, small_setup):
        with pytest.raises(ValueError, match="model has 22 neurons"):
            run_sweep(
                SnnDescription((("a", 5),)),
                small_setup.machine,
                small_setup.model,
                SMALL_SAMPLER,
                CostConstants(),
                AblationMode.FULL,
                small_setup.raster,
                small_setup.synapses,
            )


def test_ablation_mode_parse():
    assert AblationMode.parse("random_model") is AblationMode.RANDOM_MODEL
    with pytest.raises(ValueError, match="full, random_samples, uniform_pm, random_model"):
        AblationMode.parse("bogus")
