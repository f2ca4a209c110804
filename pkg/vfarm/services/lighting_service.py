"""
Électricité des LED, rendement des drivers à charge partielle et pilotage de l'étage 3
"""

import logging
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from vfarm.models.economics import SQFT_PER_M2
from vfarm.models.lighting import (
    ControlConfig,
    DriverCurve,
    EcFilm,
    EcSetting,
    LedArray,
    LightingCommand,
    Strategy,
)
from vfarm.utils.errors import ConfigValidationError

logger = logging.getLogger(__name__)


def _ec_tau(film: EcFilm, voltage):
    a, b, c = film.numerator
    d, e, f = film.denominator
    v = np.asarray(voltage, dtype=float)
    return (a * v**2 + b * v + c) / (d * v**2 + e * v + f)


@lru_cache(maxsize=16)
def _ec_curve(film: EcFilm) -> dict:
    """Extrema de la courbe du film sur son domaine de tension, trouvés sur grille puis affinés"""
    grid = np.linspace(film.v_min, film.v_max, film.grid_points)
    tau = _ec_tau(film, grid)
    if not np.all(np.isfinite(tau)) or np.any(tau <= 0):
        raise ConfigValidationError(
            'EC transmittance curve is not positive and finite over its voltage range',
            field='lighting.control.ec',
        )
    step = grid[1] - grid[0]

    def refine(index: int, sign: float) -> tuple[float, float]:
        lo = max(film.v_min, grid[index] - step)
        hi = min(film.v_max, grid[index] + step)
        found = minimize_scalar(
            lambda v: sign * float(_ec_tau(film, v)), bounds=(lo, hi), method='bounded'
        )
        v = float(found.x)
        return v, float(_ec_tau(film, v))

    v_low, tau_low = refine(int(np.argmin(tau)), 1.0)
    v_high, tau_high = refine(int(np.argmax(tau)), -1.0)
    slope = np.sign(np.diff(tau))
    slope = slope[slope != 0]
    non_monotone = bool(np.any(slope[1:] != slope[:-1]))
    if non_monotone:
        logger.warning(
            f'EC transmittance is non-monotone in [{film.v_min}, {film.v_max}] V; '
            f'searching between {v_low:.2f} V and {v_high:.2f} V'
        )
    return {
        'v_low': v_low,
        'tau_low': tau_low,
        'v_high': v_high,
        'tau_high': tau_high,
        'non_monotone': non_monotone,
    }


class LightingService:
    """Service pour l'éclairage LED et son pilotage"""

    def led_electric_power(
        self, ppfd: float, area: float, ppe: float, driver_efficiency: float = 1.0
    ) -> float:
        """Puissance électrique [W] pour maintenir un PPFD sur une surface"""
        if ppfd <= 0:
            return 0.0
        if area <= 0 or ppe <= 0 or not 0 < driver_efficiency <= 1:
            raise ValueError('area, PPE and driver efficiency must be positive')
        return ppfd * area / ppe / driver_efficiency

    def driver_efficiency(self, dim: float, curve: DriverCurve) -> Optional[float]:
        """Rendement à charge partielle ; None quand les LED sont éteintes"""
        if dim == 0:
            return None
        if dim < curve.min_dim or dim > 1.0:
            raise ConfigValidationError(
                f'Dim fraction {dim:.3f} outside [{curve.min_dim}, 1.0]',
                field='lighting.driver.min_dim',
            )
        return float(np.interp(dim, curve.dim_points, curve.efficiency_points))

    def ec_transmittance(self, voltage: float, film: EcFilm) -> float:
        return float(_ec_tau(film, voltage))

    def ec_diagnostics(self, film: EcFilm) -> dict:
        return dict(_ec_curve(film))

    def ec_control(self, ppfd_raw: float, film: EcFilm) -> EcSetting:
        """État le plus transparent du film qui garde la lumière du jour sous le plafond"""
        if ppfd_raw < 0:
            raise ValueError('ppfd_raw must be non-negative')
        curve = _ec_curve(film)
        tau_high, tau_low = curve['tau_high'], curve['tau_low']

        if ppfd_raw * tau_high <= film.cap:
            v, tau, unreachable = curve['v_high'], tau_high, False
        elif ppfd_raw * tau_low > film.cap:
            v, tau, unreachable = curve['v_low'], tau_low, True
        else:
            wanted = film.cap / ppfd_raw
            v = brentq(
                lambda x: float(_ec_tau(film, x)) - wanted,
                curve['v_low'],
                curve['v_high'],
                xtol=1e-10,
            )
            # La racine peut dépasser le plafond d'un cheveu ; on revient du bon côté
            tau = min(float(_ec_tau(film, v)), wanted)
            unreachable = False

        return EcSetting(
            voltage=float(v),
            transmittance=tau,
            ppfd_out=ppfd_raw * tau,
            cap_unreachable=unreachable,
        )

    def filtered_daylight(
        self, strategy: Strategy, ppfd_raw: float, control: ControlConfig
    ) -> tuple[float, Optional[EcSetting]]:
        """Lumière du jour sur la canopée après le filtre IR ou le film EC du scénario"""
        if not strategy.has_light_pipes:
            return 0.0, None
        if strategy is Strategy.LP_DIM_EC:
            setting = self.ec_control(ppfd_raw, control.ec)
            return setting.ppfd_out, setting
        if control.ir_transmittance is not None:
            return ppfd_raw * control.ir_transmittance, None
        return ppfd_raw, None

    def control_tier3(
        self,
        strategy: Strategy,
        ppfd_daylight: float,
        clock_hour: float,
        led: LedArray,
        control: ControlConfig,
        driver: Optional[DriverCurve] = None,
    ) -> LightingCommand:
        """Commande des LED de l'étage 3 pour une heure.

        ``ppfd_daylight`` est le PPFD brut des conduits pour les stratégies LP et celui
        du vitrage pour GH ; les filtres et le film EC sont appliqués ici.
        """
        if not isinstance(strategy, Strategy):
            try:
                strategy = Strategy(strategy)
            except ValueError:
                raise ConfigValidationError(
                    f'Unknown strategy {strategy!r}', field='scenario', error='unknown'
                )
        ppfd_daylight = max(0.0, ppfd_daylight)
        nominal = led.nominal_ppfd
        lit = led.is_on_period(clock_hour)

        if strategy is Strategy.BENCH:
            led_ppfd = nominal if lit else 0.0
            return LightingCommand(led_ppfd=led_ppfd, dim=1.0 if led_ppfd else 0.0)

        if strategy is Strategy.GH:
            return LightingCommand(led_ppfd=0.0, dim=0.0, daylight_ppfd=ppfd_daylight)

        daylight, ec = self.filtered_daylight(strategy, ppfd_daylight, control)
        extra = {}
        if ec is not None:
            extra = {
                'ec_voltage': ec.voltage,
                'ec_transmittance': ec.transmittance,
                'ec_cap_unreachable': ec.cap_unreachable,
            }

        led_ppfd = 0.0
        if lit and strategy.min_nominal is not None:
            if daylight < control.min_threshold:
                led_ppfd = strategy.min_nominal
        elif lit and strategy.is_dimming:
            required = control.dim_target - daylight
            # Sous le seuil de gradation du driver, les LED sont éteintes
            floor = (driver or DriverCurve()).min_dim
            if required >= floor * nominal and required > 0:
                led_ppfd = min(required, nominal)

        dim = led_ppfd / nominal if nominal > 0 else 0.0
        return LightingCommand(
            led_ppfd=led_ppfd, dim=min(dim, 1.0), daylight_ppfd=daylight, **extra
        )

    def led_capex_per_watt(
        self, ppe: float, cost_per_ft2: float = 35.0, ppfd_ref: float = 250.0
    ) -> float:
        """$ ft-2 -> $ m-2 -> $ per umol s-1 -> $ W-1"""
        return cost_per_ft2 * SQFT_PER_M2 / ppfd_ref * ppe

    def daylight_utilization(self, tau_glass: float, occupancy: float) -> float:
        """Part de la lumière incidente sur le vitrage qui atteint la canopée"""
        if not 0 < tau_glass <= 1 or not 0 <= occupancy <= 1:
            raise ValueError('transmittance and occupancy must be fractions')
        return tau_glass * occupancy


lighting_service = LightingService()
