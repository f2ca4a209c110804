"""Tables LUE, intégration de la biomasse et registre des récoltes."""

import pandas as pd
import pytest

from vfarm.models.crop import CropParams, CropState
from vfarm.services.crop_service import crop_service, grid_interpolators
from vfarm.utils.errors import ConfigValidationError


@pytest.fixture
def params():
    return CropParams()


def test_lookup_on_a_grid_node(lue_table):
    dm, fm, clamped = crop_service.lue_lookup(lue_table, 24.0, 1400.0, 250.0)
    assert fm == pytest.approx(2.5e-5)
    assert dm == pytest.approx(0.05 * 2.5e-5)
    assert not clamped


def test_lookup_clamps_outside_the_grid(lue_table):
    edge = crop_service.lue_lookup(lue_table, 24.0, 1400.0, 2000.0)
    beyond = crop_service.lue_lookup(lue_table, 24.0, 1400.0, 3000.0)
    assert beyond[2] is True
    assert beyond[1] == pytest.approx(edge[1])


def test_lookup_interpolates_linearly(lue_table):
    low = crop_service.lue_lookup(lue_table, 24.0, 1400.0, 250.0)[1]
    high = crop_service.lue_lookup(lue_table, 24.0, 1400.0, 400.0)[1]
    mid = crop_service.lue_lookup(lue_table, 24.0, 1400.0, 325.0)[1]
    assert mid == pytest.approx((low + high) / 2)


def test_calibration_factor_scales_lookup(lue_table):
    base = crop_service.lue_lookup(lue_table, 24.0, 1400.0, 250.0)
    scaled = crop_service.lue_lookup(lue_table.with_factor(1.2), 24.0, 1400.0, 250.0)
    assert scaled[0] == pytest.approx(1.2 * base[0])
    assert scaled[1] == pytest.approx(1.2 * base[1])


def test_vectorised_lookup_flags_each_point(lue_table):
    dm, fm, clamped = crop_service.lue_lookup_many(
        lue_table, [24.0, 24.0, 40.0], 1400.0, [250.0, 0.0, 250.0]
    )
    assert list(clamped) == [False, True, True]
    assert fm.shape == (3,)


def _write_lue(path, frame):
    frame.to_csv(path, index=False)
    return path


def test_lue_table_needs_every_column(tmp_path):
    frame = pd.DataFrame({'T': [20, 24], 'CO2': [400, 400], 'PPFD': [100, 100]})
    with pytest.raises(ConfigValidationError, match='lacks columns'):
        crop_service.load_lue_table(_write_lue(tmp_path / 'lue.csv', frame))


def test_lue_table_needs_a_full_grid(tmp_path):
    rows = [
        {'T': t, 'CO2': c, 'PPFD': p, 'lue_dm': 1e-6, 'lue_fm': 2e-5}
        for t in (20, 24)
        for c in (400, 1400)
        for p in (100, 250)
    ]
    frame = pd.DataFrame(rows).iloc[:-1]
    with pytest.raises(ConfigValidationError, match='complete'):
        crop_service.load_lue_table(_write_lue(tmp_path / 'lue.csv', frame))


def test_lue_table_rejects_non_positive_values(tmp_path):
    rows = [
        {'T': t, 'CO2': c, 'PPFD': p, 'lue_dm': 1e-6, 'lue_fm': 0.0}
        for t in (20, 24)
        for c in (400, 1400)
        for p in (100, 250)
    ]
    with pytest.raises(ConfigValidationError):
        crop_service.load_lue_table(_write_lue(tmp_path / 'lue.csv', pd.DataFrame(rows)))


def test_interception():
    assert crop_service.interception(0.0, 0.9) == 0.0
    assert 0.0 < crop_service.interception(1.0, 0.9) < crop_service.interception(3.0, 0.9) < 1.0


def test_darkness_only_ages_the_crop(params):
    state = crop_service.transplant(params)
    after = crop_service.advance(state, 0.0, 3600.0, params, 1e-6, 2e-5)
    assert after.dry_mass == state.dry_mass
    assert after.fresh_mass == state.fresh_mass
    assert after.days_since_transplant == pytest.approx(1 / 24)


def test_light_grows_the_crop(params):
    state = crop_service.transplant(params)
    after = crop_service.advance(state, 250.0, 3600.0, params, 1.25e-6, 2.5e-5)
    assert after.dry_mass > state.dry_mass
    assert after.fresh_mass > state.fresh_mass
    assert after.fresh_mass >= after.dry_mass
    assert after.lai == pytest.approx(params.specific_leaf_area * after.dry_mass)


def test_leaf_area_is_capped(params):
    state = crop_service.transplant(params).model_copy(
        update={'dry_mass': 500.0, 'fresh_mass': 5000.0, 'lai': 6.0}
    )
    after = crop_service.advance(state, 250.0, 3600.0, params, 1.25e-6, 2.5e-5)
    assert after.lai == params.lai_cap


def test_step_must_be_positive(params):
    with pytest.raises(ValueError):
        crop_service.advance(crop_service.transplant(params), 250.0, 0.0, params, 1e-6, 1e-5)


def test_growth_step_uses_the_table(params, lue_table):
    state = crop_service.transplant(params)
    direct = crop_service.advance(state, 250.0, 3600.0, params, 1.25e-6, 2.5e-5)
    looked_up = crop_service.growth_step(state, 250.0, 3600.0, params, lue_table, 24.0, 1400.0)
    assert looked_up.fresh_mass == pytest.approx(direct.fresh_mass)


def test_harvest_books_the_tier_mass_and_replants(params):
    ripe = crop_service.transplant(params).model_copy(
        update={'dry_mass': 300.0, 'fresh_mass': params.harvest_fresh_mass, 'lai': 6.0}
    )
    after, kg = crop_service.harvest_if_due(ripe, params)
    # 250 g x 25 plants m-2 x 30 m2
    assert kg == pytest.approx(187.5)
    assert after.harvested_kg == pytest.approx(187.5)
    assert after.cycles == 1
    assert after.fresh_mass == params.initial_fresh_mass


def test_unripe_tier_is_left_alone(params):
    state = crop_service.transplant(params)
    after, kg = crop_service.harvest_if_due(state, params)
    assert kg == 0.0
    assert after is state


def test_plant_heat_sink(params):
    assert crop_service.plant_heat_sink(0.0, 2.0, 0.9, 30.0, 4.56) == 0.0
    assert crop_service.plant_heat_sink(250.0, 0.0, 0.9, 30.0, 4.56) == 0.0
    q = crop_service.plant_heat_sink(250.0, 3.0, 0.9, 30.0, 4.56)
    assert q == pytest.approx(250.0 * crop_service.interception(3.0, 0.9) * 30.0 / 4.56)


def test_initial_state_staggers_tiers(lue_table):
    params = CropParams(tier_offsets_days=[0.0, 7.0, 14.0])
    state = crop_service.initial_state(params, lue_table, 24.0, 1400.0, 250.0)
    masses = [t.fresh_mass for t in state.tiers]
    assert masses[0] == params.initial_fresh_mass
    assert masses[0] < masses[1] < masses[2]
    assert state.harvested_kg == 0.0


def test_normalized_yield_counts_partial_cycles(params):
    start = CropState(tiers=[crop_service.transplant(params)])
    half = (params.initial_fresh_mass + params.harvest_fresh_mass) / 2
    end = CropState(
        tiers=[
            crop_service.transplant(params).model_copy(
                update={'fresh_mass': half, 'dry_mass': 100.0, 'harvested_kg': 375.0}
            )
        ]
    )
    value = crop_service.normalized_yield(start, end, params)
    assert value == pytest.approx(375.0 + 0.5 * params.harvest_mass_kg)


def test_crop_params_validation():
    with pytest.raises(ValueError):
        CropParams(initial_fresh_mass=1.0, initial_dry_mass=2.0)
    with pytest.raises(ValueError):
        CropParams(target_fresh_mass=1.0)


def test_factor_copies_share_one_interpolator(lue_table):
    grid_interpolators.cache_clear()
    for i in range(50):
        scaled = lue_table.with_factor(1.0 + i / 100)
        fm = crop_service.lue_lookup(scaled, 24.0, 1400.0, 250.0)[1]
        assert fm == pytest.approx(2.5e-5 * scaled.calibration_factor)
    assert grid_interpolators.cache_info().currsize == 1


def test_grid_key_ignores_the_factor(lue_table):
    assert lue_table.with_factor(2.0).grid_key() == lue_table.grid_key()
    hash(lue_table.grid_key())


def test_shipped_table_levels_off_at_high_ppfd(lue_table):
    growth = {
        ppfd: ppfd * crop_service.lue_lookup(lue_table, 24.0, 1400.0, ppfd)[1]
        for ppfd in (100.0, 250.0, 400.0, 1000.0, 2000.0)
    }
    assert growth[100.0] < growth[250.0]
    assert growth[400.0] == pytest.approx(growth[250.0], rel=0.05)
    assert growth[2000.0] < growth[400.0]


def _grow(params, lue_table, days, dt):
    """Un seul étage, photopériode 4-20 h à 250 umol m-2 s-1"""
    state = crop_service.transplant(params)
    start = CropState(tiers=[state])
    for hour in range(days * 24):
        ppfd = 250.0 if 4 <= hour % 24 < 20 else 0.0
        for _ in range(int(3600 / dt)):
            state = crop_service.growth_step(state, ppfd, dt, params, lue_table, 24.0, 1400.0)
            state, _ = crop_service.harvest_if_due(state, params)
    return crop_service.normalized_yield(start, CropState(tiers=[state]), params)


def test_yield_does_not_depend_on_the_time_step(params, lue_table):
    hourly = _grow(params, lue_table, 60, 3600.0)
    half_hourly = _grow(params, lue_table, 60, 1800.0)
    assert hourly > 2 * params.harvest_mass_kg
    assert half_hourly == pytest.approx(hourly, rel=5e-3)
