"""Optique des conduits : lois géométriques, apports et tables d'efficacité sur disque."""

import math

import numpy as np
import pandas as pd
import pytest

from vfarm.models.optics import BAND_EDGES, LpGeometry
from vfarm.services.optics_service import SOLAR_PPF_PER_WATT, optics_service
from vfarm.utils.errors import InputDataError


def test_mirror_tilt_bisects_beam_and_axis():
    assert optics_service.mirror_tilt(50.0) == 70.0
    assert optics_service.mirror_tilt(90.0) == 90.0
    with pytest.raises(ValueError):
        optics_service.mirror_tilt(95.0)


def test_dome_bands_cover_the_whole_hemisphere():
    fractions = optics_service.band_fractions()
    assert len(fractions) == len(BAND_EDGES)
    assert fractions.sum() == pytest.approx(1.0)
    assert np.all(fractions > 0)
    with pytest.raises(ValueError):
        optics_service.dome_band_fraction(15)


def test_mirror_interception_ratio():
    assert optics_service.mirror_interception_ratio(90.0) == pytest.approx(0.0, abs=1e-12)
    assert optics_service.mirror_interception_ratio(20.0) > 1.0
    with pytest.raises(ValueError):
        optics_service.mirror_interception_ratio(0.0)


def test_fleet_aperture_area(geometry):
    assert geometry.aperture_area * 750 == pytest.approx(13.25, abs=0.01)


def test_reference_flux_per_pipe(geometry):
    flux = optics_service.reference_flux_per_pipe(geometry, dni_ref=833.0, eta_ref=0.75)
    assert 24.8 * 0.99 <= flux <= 24.9 * 1.01


def test_capped_reference_flux(geometry):
    # 400 umol m-2 s-1 sur la cible de 0.2 m x 0.2 m
    flux = optics_service.reference_flux_per_pipe(geometry, cap_ppfd=400.0)
    assert flux == pytest.approx(16.0)


@pytest.mark.parametrize('tau, expected', [(0.98, 0.447), (0.90, 0.410)])
def test_filtered_efficiency(tau, expected):
    value = optics_service.filtered_efficiency(0.456, tau)
    assert value == pytest.approx(expected, rel=0.005)


def test_filtered_efficiency_rejects_bad_inputs():
    with pytest.raises(ValueError):
        optics_service.filtered_efficiency(0.0, 0.9)
    with pytest.raises(ValueError):
        optics_service.filtered_efficiency(0.5, 1.2)


def test_gains_vanish_with_sun_down_or_no_pipes(efficiency_table, geometry):
    night = optics_service.lp_solar_gains(efficiency_table, 0.0, 50.0, -3.0, geometry, 750)
    assert night.q_sol == 0.0 and night.q_diff_crop == 0.0
    none = optics_service.lp_solar_gains(efficiency_table, 800.0, 100.0, 50.0, geometry, 0)
    assert none.q_sol == 0.0


def test_gains_scale_with_pipe_count(efficiency_table, geometry):
    one = optics_service.lp_solar_gains(efficiency_table, 800.0, 100.0, 50.0, geometry, 1)
    many = optics_service.lp_solar_gains(efficiency_table, 800.0, 100.0, 50.0, geometry, 750)
    assert many.q_dir == pytest.approx(750 * one.q_dir)
    assert many.q_diff_th == pytest.approx(750 * one.q_diff_th)


def test_direct_gain_formula(efficiency_table, geometry):
    gains = optics_service.lp_solar_gains(efficiency_table, 800.0, 0.0, 50.0, geometry, 1)
    eta, outside = efficiency_table.direct_efficiency(50.0)
    assert not outside
    expected = 800.0 * math.sin(math.radians(50.0)) * eta * geometry.aperture_area
    assert gains.q_dir == pytest.approx(expected)
    assert gains.q_diff_th == 0.0


def test_diffuse_sees_only_the_front_half_dome(efficiency_table, geometry):
    gains = optics_service.lp_solar_gains(efficiency_table, 0.0, 100.0, 50.0, geometry, 1)
    eta_th, eta_crop, _ = efficiency_table.diffuse_efficiencies(50.0)
    weights = optics_service.band_fractions(efficiency_table.bands)
    expected = float(np.dot(weights, eta_th)) * 50.0 * geometry.aperture_area
    assert gains.q_diff_th == pytest.approx(expected)
    assert gains.q_diff_crop <= gains.q_diff_th


def test_low_sun_is_flagged_as_extrapolated(efficiency_table, geometry):
    gains = optics_service.lp_solar_gains(efficiency_table, 200.0, 30.0, 2.0, geometry, 10)
    assert gains.extrapolated
    assert gains.q_dir > 0


def test_negative_irradiance_is_rejected(efficiency_table, geometry):
    with pytest.raises(ValueError):
        optics_service.lp_solar_gains(efficiency_table, -1.0, 0.0, 40.0, geometry, 1)


def test_crop_ppfd_conversion(efficiency_table, geometry):
    gains = optics_service.lp_solar_gains(efficiency_table, 800.0, 100.0, 60.0, geometry, 750)
    ppfd = optics_service.lp_crop_ppfd(gains, 30.0)
    assert ppfd == pytest.approx(
        (gains.q_dir + gains.q_diff_crop) * SOLAR_PPF_PER_WATT / 30.0
    )
    with pytest.raises(ValueError):
        optics_service.lp_crop_ppfd(gains, 0.0)


def test_greenhouse_canopy_gets_its_occupancy_share():
    gh = optics_service.gh_gains(800.0, 100.0, 90.0, 49.0, 0.82, 30.0 / 49.0, 30.0)
    assert gh.q_sol == pytest.approx(900.0 * 0.82 * 49.0)
    assert gh.q_crop == pytest.approx(gh.q_sol * 30.0 / 49.0)
    assert gh.ppfd == pytest.approx(gh.q_crop * SOLAR_PPF_PER_WATT / 30.0)


def test_table_interpolates_and_clamps(efficiency_table):
    low, outside_low = efficiency_table.direct_efficiency(1.0)
    assert outside_low
    assert low == efficiency_table.eta_dir[0]
    mid, outside_mid = efficiency_table.direct_efficiency(47.5)
    assert not outside_mid
    i = efficiency_table.altitudes.index(45.0)
    assert mid == pytest.approx(
        (efficiency_table.eta_dir[i] + efficiency_table.eta_dir[i + 1]) / 2
    )


def test_table_rejects_crop_above_chamber(efficiency_table):
    document = efficiency_table.model_dump()
    document['eta_diff_crop'] = [[0.9] * len(BAND_EDGES)] * len(document['altitudes'])
    with pytest.raises(ValueError):
        type(efficiency_table).model_validate(document)


def test_imported_table_matches_exported(table_stem, efficiency_table):
    loaded = optics_service.import_table(table_stem)
    assert loaded.provenance == 'imported'
    assert loaded.altitudes == efficiency_table.altitudes
    np.testing.assert_allclose(loaded.eta_diff_crop, efficiency_table.eta_diff_crop)


def test_import_rejects_missing_column(tmp_path, table_stem):
    direct = pd.read_csv(f'{table_stem}_direct.csv', comment='#')
    direct.drop(columns=['eta_dir']).to_csv(tmp_path / 'bad_direct.csv', index=False)
    diffuse = pd.read_csv(f'{table_stem}_diffuse.csv', comment='#')
    diffuse.to_csv(tmp_path / 'bad_diffuse.csv', index=False)
    with pytest.raises(InputDataError, match='eta_dir'):
        optics_service.import_table(tmp_path / 'bad')


def test_geometry_hash_tracks_every_input():
    base = LpGeometry()
    assert base.geometry_hash(10_000, 1) == LpGeometry().geometry_hash(10_000, 1)
    assert base.geometry_hash(10_000, 1) != base.geometry_hash(10_000, 2)
    changed = LpGeometry(wall_reflectance=0.95)
    assert base.geometry_hash(10_000, 1) != changed.geometry_hash(10_000, 1)
