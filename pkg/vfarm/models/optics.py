"""
Modèles de données pour la chaîne optique des conduits et ses tables d'efficacité
"""

import hashlib
import json
import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

BAND_EDGES = tuple(range(10, 100, 10))


class LpGeometry(BaseModel):
    """Géométrie du conduit et constantes optiques (longueurs en mm sauf mention)"""

    model_config = ConfigDict(frozen=True)

    pipe_diameter_mm: float = Field(default=150.0, gt=0)
    pipe_length_mm: float = Field(default=1000.0, gt=0)
    dome_transmittance: float = Field(default=0.91, gt=0, le=1)
    wall_reflectance: float = Field(default=0.90, gt=0, le=1)
    mirror_reflectance: float = Field(default=0.90, gt=0, le=1)
    prism_pitch_mm: float = Field(default=2.0, gt=0)
    pyramid_height_mm: float = Field(default=4.0, gt=0)
    apex_angle_deg: float = Field(default=152.0, gt=0, lt=180)
    refractive_index: float = Field(default=1.49, ge=1.0)
    diffuser_throughput: float = Field(
        default=0.80,
        gt=0,
        le=1,
        description='Bulk throughput of the diffuser sheet (absorption and Fresnel losses)',
    )
    canopy_distance_m: float = Field(default=0.5, gt=0)
    target_width_m: float = Field(default=0.20, gt=0)
    target_depth_m: float = Field(default=0.20, gt=0)
    mirror_enabled: bool = Field(default=True)
    diffuser_enabled: bool = Field(default=True)
    mirror_diameter_mm: Optional[float] = Field(
        default=None, gt=0, description='Defaults to the pipe diameter'
    )
    hinge_offset_mm: Optional[float] = Field(
        default=None,
        description='Hinge position along the sun axis from the pipe axis; defaults to the rear rim',
    )
    housing_height_mm: Optional[float] = Field(
        default=None, gt=0, description='Mirror housing height above the pipe inlet'
    )

    @property
    def radius_m(self) -> float:
        return self.pipe_diameter_mm / 2000.0

    @property
    def length_m(self) -> float:
        return self.pipe_length_mm / 1000.0

    @property
    def mirror_radius_m(self) -> float:
        diameter = self.mirror_diameter_mm or self.pipe_diameter_mm
        return diameter / 2000.0

    @property
    def hinge_x_m(self) -> float:
        if self.hinge_offset_mm is None:
            return -self.radius_m
        return self.hinge_offset_mm / 1000.0

    @property
    def housing_height_m(self) -> float:
        return (self.housing_height_mm or self.pipe_diameter_mm) / 1000.0

    @property
    def facet_slope_deg(self) -> float:
        """Inclinaison des facettes par rapport au plan de la plaque"""
        return 90.0 - self.apex_angle_deg / 2.0

    @computed_field  # type: ignore[prop-decorator]
    @property
    def aperture_area(self) -> float:
        """A_LP = pi d^2 / 4 [m2]"""
        return math.pi * self.radius_m**2

    def geometry_hash(self, ray_count: int, seed: int) -> str:
        payload = self.model_dump(mode='json')
        payload['_ray_count'] = ray_count
        payload['_seed'] = seed
        canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


class FluxMap(BaseModel):
    """Éclairement sur le plan de culture pour un faisceau incident de référence.

    ``cells[j, i]`` vaut W m-2 à la cellule (x_i, y_j) ; la grille est centrée sur
    l'axe du conduit et couvre ``extent_x`` x ``extent_y`` mètres.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    cells: np.ndarray
    pitch: float = Field(gt=0, description='Cell size [m]')
    extent_x: float = Field(gt=0)
    extent_y: float = Field(gt=0)
    target_width: float = Field(gt=0)
    target_depth: float = Field(gt=0)
    incident_power: float = Field(
        ge=0, description='Beam power on the horizontal aperture [W]'
    )

    def cell_centres(self) -> tuple[np.ndarray, np.ndarray]:
        ny, nx = self.cells.shape
        x = (np.arange(nx) + 0.5) * self.pitch - self.extent_x / 2
        y = (np.arange(ny) + 0.5) * self.pitch - self.extent_y / 2
        return x, y

    def target_mask(self) -> np.ndarray:
        x, y = self.cell_centres()
        in_x = np.abs(x) < self.target_width / 2
        in_y = np.abs(y) < self.target_depth / 2
        return np.outer(in_y, in_x)

    def target_power(self) -> float:
        return float(self.cells[self.target_mask()].sum() * self.pitch**2)

    def efficiency(self) -> float:
        if self.incident_power <= 0:
            return 0.0
        return self.target_power() / self.incident_power


class TraceTallies(BaseModel):
    """Fractions de puissance du faisceau incident, selon leur devenir"""

    target: float = 0.0
    outside: float = 0.0
    wall_absorbed: float = 0.0
    mirror_absorbed: float = 0.0
    dome_absorbed: float = 0.0
    diffuser_absorbed: float = 0.0
    escaped: float = 0.0
    bounce_cap: float = 0.0

    @property
    def chamber(self) -> float:
        """Puissance sortie du diffuseur vers la chambre"""
        return self.target + self.outside

    @property
    def total(self) -> float:
        return (
            self.target
            + self.outside
            + self.wall_absorbed
            + self.mirror_absorbed
            + self.dome_absorbed
            + self.diffuser_absorbed
            + self.escaped
            + self.bounce_cap
        )

    def conservation_residual(self) -> float:
        return self.total - 1.0


class DirectTrace(BaseModel):
    altitude: float
    efficiency: float = Field(ge=0, le=1)
    stderr: float = Field(ge=0)
    chamber_efficiency: float = Field(ge=0, le=1)
    tallies: TraceTallies
    ray_count: int
    flux_map: Optional[FluxMap] = None

    model_config = ConfigDict(arbitrary_types_allowed=True)


class DiffuseBand(BaseModel):
    band: int = Field(description='Upper band edge [deg]')
    eta_th: float = Field(ge=0, le=1)
    eta_crop: float = Field(ge=0, le=1)
    stderr_th: float = Field(ge=0)
    stderr_crop: float = Field(ge=0)
    tallies: Optional[TraceTallies] = None


class OpticalEfficiencyTable(BaseModel):
    """Efficacités directe et diffuse par bande, résolues en hauteur solaire.

    Les lignes diffuses suivent l'inclinaison du miroir, fonction de la hauteur,
    elles partagent donc l'axe des hauteurs avec la courbe directe.
    """

    altitudes: list[float] = Field(description='Sample altitudes [deg], increasing')
    eta_dir: list[float]
    eta_dir_stderr: list[float]
    interception_ratio: Optional[list[float]] = None
    bands: list[int] = Field(default_factory=lambda: list(BAND_EDGES))
    eta_diff_th: list[list[float]] = Field(description='Rows per altitude, columns per band')
    eta_diff_crop: list[list[float]]
    eta_diff_th_stderr: list[list[float]]
    eta_diff_crop_stderr: list[list[float]]
    provenance: Literal['traced', 'imported'] = 'traced'
    geometry_hash: Optional[str] = None

    @model_validator(mode='after')
    def check_shapes_and_bounds(self):
        n_alt = len(self.altitudes)
        if n_alt == 0:
            raise ValueError('efficiency table has no altitude samples')
        if any(b <= a for a, b in zip(self.altitudes, self.altitudes[1:])):
            raise ValueError('altitudes must be strictly increasing')
        for name in ('eta_dir', 'eta_dir_stderr'):
            if len(getattr(self, name)) != n_alt:
                raise ValueError(f'{name} must have one value per altitude')
        for name in (
            'eta_diff_th',
            'eta_diff_crop',
            'eta_diff_th_stderr',
            'eta_diff_crop_stderr',
        ):
            rows = getattr(self, name)
            if len(rows) != n_alt or any(len(r) != len(self.bands) for r in rows):
                raise ValueError(f'{name} must be altitudes x bands')

        eta_dir = np.asarray(self.eta_dir)
        th = np.asarray(self.eta_diff_th)
        crop = np.asarray(self.eta_diff_crop)
        for name, values in (('eta_dir', eta_dir), ('eta_diff_th', th), ('eta_diff_crop', crop)):
            if np.any(values < 0) or np.any(values > 1):
                raise ValueError(f'{name} values must lie in [0, 1]')
        if np.any(crop > th + 1e-12):
            raise ValueError('eta_diff_crop must not exceed eta_diff_th')
        return self

    def direct_efficiency(self, altitude: float) -> tuple[float, bool]:
        """Interpolation linéaire ; hors de la plage, l'échantillon le plus proche"""
        outside = altitude < self.altitudes[0] or altitude > self.altitudes[-1]
        value = float(np.interp(altitude, self.altitudes, self.eta_dir))
        return value, outside

    def diffuse_efficiencies(self, altitude: float) -> tuple[np.ndarray, np.ndarray, bool]:
        """(eta_th, eta_crop) par bande à l'inclinaison du miroir qui suit cette hauteur"""
        outside = altitude < self.altitudes[0] or altitude > self.altitudes[-1]
        th = np.asarray(self.eta_diff_th)
        crop = np.asarray(self.eta_diff_crop)
        eta_th = np.array(
            [np.interp(altitude, self.altitudes, th[:, j]) for j in range(len(self.bands))]
        )
        eta_crop = np.array(
            [np.interp(altitude, self.altitudes, crop[:, j]) for j in range(len(self.bands))]
        )
        return eta_th, eta_crop, outside


class LpGains(BaseModel):
    """Apports solaires des conduits pour une heure, sommés sur l'ensemble [W]"""

    model_config = ConfigDict(frozen=True)

    q_dir: float = Field(default=0.0, ge=0)
    q_diff_th: float = Field(default=0.0, ge=0)
    q_diff_crop: float = Field(default=0.0, ge=0)
    extrapolated: bool = Field(
        default=False, description='Altitude outside the table support'
    )

    @computed_field  # type: ignore[prop-decorator]
    @property
    def q_sol(self) -> float:
        return self.q_dir + self.q_diff_th

    def scaled(self, factor: float) -> 'LpGains':
        return LpGains(
            q_dir=self.q_dir * factor,
            q_diff_th=self.q_diff_th * factor,
            q_diff_crop=self.q_diff_crop * factor,
            extrapolated=self.extrapolated,
        )


class GreenhouseGains(BaseModel):
    model_config = ConfigDict(frozen=True)

    q_sol: float = Field(ge=0, description='Power transmitted through the glazing [W]')
    q_crop: float = Field(ge=0, description='Share landing on the tier-3 canopy [W]')
    ppfd: float = Field(ge=0, description='Tier-3 daylight PPFD [umol m-2 s-1]')
