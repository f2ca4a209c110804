"""
Bilan énergétique de la chambre, pertes par convection des conduits et électricité CVC
"""

import logging
import math

from vfarm.models.optics import LpGeometry
from vfarm.models.thermal import (
    AirProperties,
    ChamberGeometry,
    CopModel,
    HvacPower,
    LatentLoads,
    LatentModel,
    PowerBreakdown,
    TransientParams,
)

logger = logging.getLogger(__name__)

KELVIN = 273.15
RA_RANGE = (1e7, 1e11)


class ThermalService:
    """Service pour le bilan énergétique de la chambre de culture"""

    def lp_convection(
        self,
        t_in: float,
        t_ext: float,
        geom: LpGeometry,
        props: AirProperties,
        n_pipes: int,
    ) -> tuple[float, bool]:
        """Perte par convection naturelle dans le conduit [W], et si Ra sort du domaine.

        Nulle (0 W) tant que la chambre n'est pas plus chaude que l'extérieur.
        """
        delta_t = t_in - t_ext
        if delta_t <= 0 or n_pipes == 0:
            return 0.0, False

        length = props.length or geom.length_m
        rayleigh = props.g * props.beta * delta_t * length**3 / (props.nu**2 / props.prandtl)
        nusselt = 0.15 * rayleigh**0.33
        u_lp = nusselt * props.k_air / length
        if props.area_basis == 'lateral':
            area = math.pi * geom.pipe_diameter_mm / 1000.0 * geom.length_m
        else:
            area = geom.aperture_area

        out_of_range = not RA_RANGE[0] <= rayleigh <= RA_RANGE[1]
        return u_lp * area * delta_t * n_pipes, out_of_range

    def envelope_surfaces(
        self, chamber: ChamberGeometry, glazed_roof: bool = False, roof_aperture: float = 0.0
    ) -> list[tuple[str, float, float]]:
        """(nom, U, A) par paroi ; les ouvertures des conduits sont retirées du toit"""
        roof_area = max(0.0, chamber.roof_area - roof_aperture)
        roof_u = chamber.u_glazing if glazed_roof else chamber.u_roof
        return [
            ('walls', chamber.u_walls, chamber.wall_area),
            ('roof', roof_u, roof_area),
            ('floor', chamber.u_floor, chamber.floor_area),
        ]

    def envelope_load(self, surfaces, t_in: float, t_ext: float) -> float:
        """Apport par transmission dans la chambre [W] ; positif quand il fait plus chaud dehors"""
        return sum(u * a for _, u, a in surfaces) * (t_ext - t_in)

    def latent_balance(
        self,
        transpiration_kg_h: float,
        lights_on: bool,
        model: LatentModel,
    ) -> LatentLoads:
        """Bilan d'humidité pour une heure.

        L'eau transpirée est retirée sur la batterie froide quand la lumière est allumée ;
        dans le noir, la CTA déshumidifie et retire aussi de la chaleur sensible.
        """
        transpiration_kg_h = max(0.0, transpiration_kg_h)
        q_eva = transpiration_kg_h * model.latent_heat / 3600.0
        q_hum = model.humidification_rate * model.latent_heat / 3600.0
        latent_to_remove = q_eva + q_hum
        q_ahu = 0.0 if lights_on else model.dark_ahu_ratio * latent_to_remove
        removed_kg = transpiration_kg_h + model.humidification_rate
        return LatentLoads(
            q_eva=q_eva,
            q_ahu=q_ahu,
            q_hum=q_hum,
            coil_latent=latent_to_remove,
            transpired_kg=transpiration_kg_h,
            condensate_l=removed_kg * model.condensate_recovery,
            humidifier_kg=model.humidification_rate,
        )

    def solve_hvac_load(
        self,
        q_env: float = 0.0,
        q_led: float = 0.0,
        q_lp_sol: float = 0.0,
        q_lp_conv: float = 0.0,
        q_plant: float = 0.0,
        q_eva: float = 0.0,
        q_ahu: float = 0.0,
        q_hum: float = 0.0,
        temperature: float = 24.0,
    ) -> PowerBreakdown:
        """Fermeture quasi stationnaire : dT/dt = 0, résolue pour le terme q_hc"""
        q_hc = -(q_env + q_led + q_lp_sol - q_lp_conv - q_plant - q_eva - q_ahu - q_hum)
        return PowerBreakdown(
            q_env=q_env,
            q_led=q_led,
            q_lp_sol=q_lp_sol,
            q_lp_conv=q_lp_conv,
            q_plant=q_plant,
            q_eva=q_eva,
            q_hc=q_hc,
            q_ahu=q_ahu,
            q_hum=q_hum,
            temperature=temperature,
        )

    def integrate_hour(
        self,
        t_start: float,
        setpoint: float,
        chamber: ChamberGeometry,
        params: TransientParams,
        gains_excluding_envelope: float,
        envelope_ua: float,
        t_ext: float,
        convection,
    ) -> tuple[float, float, float, float]:
        """Température de l'air en sous-pas explicites sous un thermostat borné.

        ``gains_excluding_envelope`` regroupe les termes constants sur l'heure, sauf
        l'enveloppe et la convection des conduits, qui dépendent de la température et
        que ``convection`` renvoie pour une température intérieure donnée. Renvoie la
        température finale et les moyennes horaires de (q_hc, q_env, q_lp_conv).
        """
        capacity = chamber.air_capacity
        steps = max(1, int(round(3600.0 / params.substep_seconds)))
        dt = 3600.0 / steps
        half_band = params.deadband / 2.0
        cool_cap = params.cooling_capacity or math.inf
        heat_cap = params.heating_capacity or math.inf

        t = t_start
        sum_hc = sum_env = sum_conv = 0.0
        for _ in range(steps):
            q_env = envelope_ua * (t_ext - t)
            q_conv = convection(t)
            net = gains_excluding_envelope + q_env - q_conv
            if abs(t - setpoint) > half_band:
                # Ramène l'air à la consigne dans ce sous-pas
                wanted = -net - capacity * (t - setpoint) / dt
                q_hc = min(max(wanted, -cool_cap), heat_cap)
            else:
                q_hc = 0.0
            t = t + (net + q_hc) * dt / capacity
            sum_hc += q_hc
            sum_env += q_env
            sum_conv += q_conv
        return t, sum_hc / steps, sum_env / steps, sum_conv / steps

    def cop_cooling(self, t_ext: float, model: CopModel) -> float:
        t_evap = model.t_evap + KELVIN
        t_cond = t_ext + model.approach + KELVIN
        if t_cond <= t_evap:
            return model.cop_max
        cop = model.eta_ii * t_evap / (t_cond - t_evap)
        return min(max(cop, model.cop_min), model.cop_max)

    def cop_heating(self, t_ext: float, t_supply: float, model: CopModel) -> float:
        """Pompe à chaleur entre l'air extérieur et la température de soufflage"""
        t_hot = t_supply + model.approach + KELVIN
        t_cold = t_ext - model.approach + KELVIN
        if t_hot <= t_cold:
            return model.cop_max
        cop = model.eta_ii * t_hot / (t_hot - t_cold)
        return min(max(cop, model.cop_min), model.cop_max)

    def hvac_electricity(
        self,
        q_cool: float,
        q_heat: float,
        t_ext: float,
        model: CopModel,
        t_setpoint: float = 24.0,
    ) -> HvacPower:
        """Puissance électrique [W] pour les charges thermiques couvertes dans l'heure"""
        cop_c = self.cop_cooling(t_ext, model)
        cop_h = self.cop_heating(t_ext, t_setpoint, model)
        return HvacPower(
            cooling=abs(q_cool) / cop_c,
            heating=max(0.0, q_heat) / cop_h,
            cop_cooling=cop_c,
            cop_heating=cop_h,
        )


thermal_service = ThermalService()
