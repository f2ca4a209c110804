"""
Modèles de données pour la croissance de la laitue
"""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class CropParams(BaseModel):
    extinction_coefficient: float = Field(default=0.9, gt=0, description='k')
    plant_density: float = Field(default=25.0, gt=0, description='[plants m-2]')
    target_fresh_mass: float = Field(default=250.0, gt=0, description='[g plant-1]')
    tier_area: float = Field(default=30.0, gt=0, description='A_crop per tier [m2]')
    specific_leaf_area: float = Field(default=0.05, gt=0, description='[m2 g-1 DM]')
    lai_cap: float = Field(default=6.0, gt=0)
    initial_dry_mass: float = Field(default=2.5, ge=0, description='DM0 [g m-2]')
    initial_fresh_mass: float = Field(default=50.0, ge=0, description='FM0 [g m-2]')
    tier_offsets_days: list[float] = Field(
        default_factory=lambda: [0.0, 0.0, 0.0],
        description='Days already grown at January 1, per tier',
    )
    substeps: int = Field(default=6, ge=1, le=3600, description='Euler sub-steps per hour')

    @model_validator(mode='after')
    def check_initial_state(self):
        if self.initial_fresh_mass < self.initial_dry_mass:
            raise ValueError('initial_fresh_mass must be >= initial_dry_mass')
        if self.initial_fresh_mass >= self.harvest_fresh_mass:
            raise ValueError('initial fresh mass must be below the harvest target')
        return self

    @property
    def harvest_fresh_mass(self) -> float:
        """Seuil de récolte [g m-2]"""
        return self.target_fresh_mass * self.plant_density

    @property
    def plants_per_tier(self) -> float:
        return self.plant_density * self.tier_area

    @property
    def harvest_mass_kg(self) -> float:
        return self.target_fresh_mass * self.plants_per_tier / 1000.0

    @property
    def initial_lai(self) -> float:
        return min(self.specific_leaf_area * self.initial_dry_mass, self.lai_cap)


class LueTable(BaseModel):
    """Grille d'efficacité d'utilisation de la lumière sur (T, CO2, PPFD) [g umol-1]"""

    model_config = ConfigDict(frozen=True)

    temperatures: list[float]
    co2_levels: list[float]
    ppfd_levels: list[float]
    lue_dm: list[list[list[float]]] = Field(description='Indexed [T][CO2][PPFD]')
    lue_fm: list[list[list[float]]]
    calibration_factor: float = Field(default=1.0, gt=0)
    source: Optional[str] = None

    @model_validator(mode='after')
    def check_grid(self):
        axes = (self.temperatures, self.co2_levels, self.ppfd_levels)
        for axis in axes:
            if len(axis) < 2:
                raise ValueError('every LUE axis needs at least two grid values')
            if any(b <= a for a, b in zip(axis, axis[1:])):
                raise ValueError('LUE axes must be strictly increasing')
        shape = tuple(len(a) for a in axes)
        for name in ('lue_dm', 'lue_fm'):
            grid = getattr(self, name)
            if len(grid) != shape[0] or any(len(p) != shape[1] for p in grid):
                raise ValueError(f'{name} does not match the axes')
            for plane in grid:
                for row in plane:
                    if len(row) != shape[2]:
                        raise ValueError(f'{name} does not match the axes')
                    if any(v <= 0 for v in row):
                        raise ValueError(f'{name} values must be positive')
        return self

    def with_factor(self, factor: float) -> 'LueTable':
        return self.model_copy(update={'calibration_factor': factor})

    def grid_key(self) -> tuple:
        """Axes et valeurs hachables, sans le facteur de calibration"""

        def flat(grid):
            return tuple(v for plane in grid for row in plane for v in row)

        return (
            tuple(self.temperatures),
            tuple(self.co2_levels),
            tuple(self.ppfd_levels),
            flat(self.lue_dm),
            flat(self.lue_fm),
        )


class TierState(BaseModel):
    model_config = ConfigDict(frozen=True)

    dry_mass: float = Field(ge=0, description='DM [g m-2]')
    fresh_mass: float = Field(ge=0, description='FM [g m-2]')
    lai: float = Field(ge=0)
    days_since_transplant: float = Field(default=0.0, ge=0)
    harvested_kg: float = Field(default=0.0, ge=0)
    cycles: int = Field(default=0, ge=0)

    @model_validator(mode='after')
    def check_masses(self):
        if self.fresh_mass + 1e-9 < self.dry_mass:
            raise ValueError('fresh mass must not be below dry mass')
        return self

    def fresh_mass_per_plant(self, density: float) -> float:
        return self.fresh_mass / density


class CropState(BaseModel):
    model_config = ConfigDict(frozen=True)

    tiers: list[TierState]

    @property
    def harvested_kg(self) -> float:
        return sum(t.harvested_kg for t in self.tiers)
