"""
Lancer de rayons Monte Carlo spéculaire pour la chaîne optique des conduits.

Repère : z vers le haut, axe du conduit sur z, le soleil (ou la portion de ciel
échantillonnée) du côté +x. La fenêtre collectrice est le disque horizontal du
rayon du conduit en haut du boîtier du miroir (z = H) ; l'entrée du conduit est à
z = 0 et le diffuseur à z = -L. Les rayons partent uniformément sur la fenêtre,
la puissance de référence d'un faisceau à la hauteur a vaut donc I sin(a) A_LP,
la même normalisation que pour les apports.

Les pertes sont des partages de poids déterministes (pas de roulette russe) :
chaque rayon finit dans un seul compteur terminal et les compteurs somment au
nombre de rayons aux arrondis près.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from vfarm.config import OPTICS_CONFIG
from vfarm.models.optics import DiffuseBand, DirectTrace, FluxMap, LpGeometry, TraceTallies

logger = logging.getLogger(__name__)

TALLY_FIELDS = (
    'target',
    'outside',
    'wall_absorbed',
    'mirror_absorbed',
    'dome_absorbed',
    'diffuser_absorbed',
    'escaped',
    'bounce_cap',
)
_EPS = 1e-9


@dataclass
class ChunkTally:
    """Sommes brutes pour un lot de rayons"""

    rays: int
    tallies: np.ndarray  # poids par entrée de TALLY_FIELDS
    target_sum: float
    target_sumsq: float
    chamber_sum: float
    chamber_sumsq: float
    histogram: Optional[np.ndarray]

    @classmethod
    def merge(cls, chunks: list['ChunkTally']) -> 'ChunkTally':
        """Réduction dans un ordre fixe"""
        histogram = None
        if chunks[0].histogram is not None:
            histogram = np.zeros_like(chunks[0].histogram)
        total = cls(0, np.zeros(len(TALLY_FIELDS)), 0.0, 0.0, 0.0, 0.0, histogram)
        for chunk in chunks:
            total.rays += chunk.rays
            total.tallies = total.tallies + chunk.tallies
            total.target_sum += chunk.target_sum
            total.target_sumsq += chunk.target_sumsq
            total.chamber_sum += chunk.chamber_sum
            total.chamber_sumsq += chunk.chamber_sumsq
            if histogram is not None:
                total.histogram = total.histogram + chunk.histogram
        return total

    def mean_and_stderr(self, which: str) -> tuple[float, float]:
        s = getattr(self, f'{which}_sum')
        sq = getattr(self, f'{which}_sumsq')
        n = self.rays
        mean = s / n
        if n < 2:
            return mean, 0.0
        variance = max(0.0, (sq - s * s / n) / (n - 1))
        return mean, math.sqrt(variance / n)

    def to_tallies(self) -> TraceTallies:
        fractions = self.tallies / self.rays
        return TraceTallies(**{name: float(v) for name, v in zip(TALLY_FIELDS, fractions)})


def _refract(d: np.ndarray, normal: np.ndarray, eta: float) -> tuple[np.ndarray, np.ndarray]:
    """Réfraction de Snell ; ``normal`` est opposée à ``d`` ; renvoie (direction, ok)"""
    cos_i = -np.einsum('ij,ij->i', d, normal)
    k = 1.0 - eta * eta * (1.0 - cos_i * cos_i)
    ok = k >= 0.0
    out = eta * d + (eta * cos_i - np.sqrt(np.maximum(k, 0.0)))[:, None] * normal
    out /= np.linalg.norm(out, axis=1)[:, None]
    return out, ok


def _facet_normals(geom: LpGeometry) -> np.ndarray:
    """Normales sortantes (vers le bas) des quatre faces de la pyramide"""
    beta = math.radians(geom.facet_slope_deg)
    s, c = math.sin(beta), math.cos(beta)
    return np.array([[s, 0.0, -c], [-s, 0.0, -c], [0.0, s, -c], [0.0, -s, -c]])


def _mirror_frame(geom: LpGeometry, tilt: float):
    t = math.radians(tilt)
    u = np.array([math.cos(t), 0.0, math.sin(t)])
    normal = np.array([math.sin(t), 0.0, -math.cos(t)])
    centre = np.array([geom.hinge_x_m, 0.0, 0.0]) + geom.mirror_radius_m * u
    return centre, normal


def _launch(n: int, geom: LpGeometry, rng: np.random.Generator, source: dict):
    """Origines sur la fenêtre collectrice et directions entrantes"""
    radius = geom.radius_m
    r = radius * np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    origins = np.column_stack(
        [r * np.cos(theta), r * np.sin(theta), np.full(n, geom.housing_height_m)]
    )

    if source['kind'] == 'beam':
        a = math.radians(source['altitude'])
        directions = np.tile([-math.cos(a), 0.0, -math.sin(a)], (n, 1))
    else:
        # Bande de ciel isotrope : pondérée en cosinus sur la fenêtre horizontale
        lo = math.sin(math.radians(source['low'])) ** 2
        hi = math.sin(math.radians(source['high'])) ** 2
        sin_a = np.sqrt(lo + (hi - lo) * rng.random(n))
        cos_a = np.sqrt(1.0 - sin_a * sin_a)
        phi = np.pi * (rng.random(n) - 0.5)
        directions = np.column_stack([-cos_a * np.cos(phi), -cos_a * np.sin(phi), -sin_a])
    return origins, directions


def _trace_chunk(
    geom: LpGeometry,
    tilt: float,
    source: dict,
    n: int,
    seed: np.random.SeedSequence,
    bounce_cap: int,
    map_edges: Optional[tuple[np.ndarray, np.ndarray]],
) -> ChunkTally:
    rng = np.random.default_rng(seed)
    tallies = dict.fromkeys(TALLY_FIELDS, 0.0)
    radius = geom.radius_m
    top = geom.housing_height_m
    bottom = -geom.length_m

    o, d = _launch(n, geom, rng, source)
    w = np.full(n, geom.dome_transmittance)
    tallies['dome_absorbed'] += n * (1.0 - geom.dome_transmittance)
    idx = np.arange(n)
    bounces = np.zeros(n, dtype=int)

    use_mirror = geom.mirror_enabled
    if use_mirror:
        m_centre, m_normal = _mirror_frame(geom, tilt)
        m_radius2 = geom.mirror_radius_m**2

    # Rayons qui atteignent le plan du diffuseur
    out_o, out_d, out_w, out_idx = [], [], [], []

    while idx.size:
        m = idx.size
        t_hit = np.full((m, 4), np.inf)  # paroi, fenêtre, plan du diffuseur, miroir

        a = d[:, 0] ** 2 + d[:, 1] ** 2
        b = o[:, 0] * d[:, 0] + o[:, 1] * d[:, 1]
        c = o[:, 0] ** 2 + o[:, 1] ** 2 - radius * radius
        moving = a > 1e-14
        disc = np.maximum(b * b - a * c, 0.0)
        with np.errstate(divide='ignore', invalid='ignore'):
            t_wall = np.where(moving, (-b + np.sqrt(disc)) / a, np.inf)
        t_hit[:, 0] = np.where(t_wall > _EPS, t_wall, np.inf)

        up = d[:, 2] > 1e-14
        down = d[:, 2] < -1e-14
        with np.errstate(divide='ignore', invalid='ignore'):
            t_hit[:, 1] = np.where(up, (top - o[:, 2]) / d[:, 2], np.inf)
            t_hit[:, 2] = np.where(down, (bottom - o[:, 2]) / d[:, 2], np.inf)

        if use_mirror:
            denom = d @ m_normal
            num = (m_centre - o) @ m_normal
            with np.errstate(divide='ignore', invalid='ignore'):
                t_m = np.where(np.abs(denom) > 1e-12, num / denom, np.inf)
            t_m = np.where(t_m > _EPS, t_m, np.inf)
            finite = np.isfinite(t_m)
            p = o + np.where(finite, t_m, 0.0)[:, None] * d
            on_disc = np.sum((p - m_centre) ** 2, axis=1) <= m_radius2
            in_tube = p[:, 0] ** 2 + p[:, 1] ** 2 <= radius * radius * (1 + 1e-9)
            in_housing = (p[:, 2] >= -_EPS) & (p[:, 2] <= top + _EPS)
            t_hit[:, 3] = np.where(finite & on_disc & in_tube & in_housing, t_m, np.inf)

        event = np.argmin(t_hit, axis=1)
        t_min = t_hit[np.arange(m), event]
        o = o + np.where(np.isfinite(t_min), t_min, 0.0)[:, None] * d
        keep = np.ones(m, dtype=bool)

        # Rayons dégénérés sans surface devant eux
        stuck = ~np.isfinite(t_min)
        tallies['bounce_cap'] += w[stuck].sum()
        keep &= ~stuck
        event = np.where(stuck, -1, event)

        escaped = event == 1
        tallies['escaped'] += w[escaped].sum()
        keep &= ~escaped

        reached = event == 2
        out_o.append(o[reached])
        out_d.append(d[reached])
        out_w.append(w[reached])
        out_idx.append(idx[reached])
        keep &= ~reached

        if use_mirror:
            hit_m = event == 3
            front = hit_m & (denom < 0)
            back = hit_m & ~front
            tallies['mirror_absorbed'] += w[back].sum()
            keep &= ~back
            tallies['mirror_absorbed'] += (w[front] * (1.0 - geom.mirror_reflectance)).sum()
            w = np.where(front, w * geom.mirror_reflectance, w)
            d[front] = d[front] - 2.0 * (d[front] @ m_normal)[:, None] * m_normal
            bounces += front

        hit_w = event == 0
        if hit_w.any():
            xy = o[hit_w, :2]
            r_now = np.linalg.norm(xy, axis=1)
            normal = np.zeros((xy.shape[0], 3))
            normal[:, :2] = xy / r_now[:, None]
            o[hit_w, :2] = normal[:, :2] * radius * (1.0 - 1e-12)
            dn = np.einsum('ij,ij->i', d[hit_w], normal)
            d[hit_w] = d[hit_w] - 2.0 * dn[:, None] * normal
            tallies['wall_absorbed'] += (w[hit_w] * (1.0 - geom.wall_reflectance)).sum()
            w = np.where(hit_w, w * geom.wall_reflectance, w)
            bounces += hit_w

        capped = keep & (bounces > bounce_cap)
        tallies['bounce_cap'] += w[capped].sum()
        keep &= ~capped

        o, d, w, idx, bounces = o[keep], d[keep], w[keep], idx[keep], bounces[keep]

    o = np.concatenate(out_o) if out_o else np.zeros((0, 3))
    d = np.concatenate(out_d) if out_d else np.zeros((0, 3))
    w = np.concatenate(out_w) if out_w else np.zeros(0)
    idx = np.concatenate(out_idx) if out_idx else np.zeros(0, dtype=int)

    if geom.diffuser_enabled and idx.size:
        tallies['diffuser_absorbed'] += (w * (1.0 - geom.diffuser_throughput)).sum()
        w = w * geom.diffuser_throughput
        entry_normal = np.tile([0.0, 0.0, 1.0], (idx.size, 1))
        d1, _ = _refract(d, entry_normal, 1.0 / geom.refractive_index)

        facets = _facet_normals(geom)
        weights = np.maximum(d1 @ facets.T, 0.0)
        weights /= np.maximum(weights.sum(axis=1), 1e-300)[:, None]
        pick = (rng.random(idx.size)[:, None] > np.cumsum(weights, axis=1)).sum(axis=1)
        pick = np.minimum(pick, 3)
        d2, ok = _refract(d1, -facets[pick], geom.refractive_index)

        # La réflexion totale interne sur la facette compte comme perte du diffuseur
        tallies['diffuser_absorbed'] += w[~ok].sum()
        o, d, w, idx = o[ok], d2[ok], w[ok], idx[ok]

    target_w = np.zeros(n)
    chamber_w = np.zeros(n)
    histogram = None
    if idx.size:
        chamber_w[idx] = w
        downward = d[:, 2] < -1e-12
        with np.errstate(divide='ignore', invalid='ignore'):
            t_plane = np.where(downward, geom.canopy_distance_m / -d[:, 2], 0.0)
        x = o[:, 0] + t_plane * d[:, 0]
        y = o[:, 1] + t_plane * d[:, 1]
        on_target = (
            downward
            & (np.abs(x) <= geom.target_width_m / 2)
            & (np.abs(y) <= geom.target_depth_m / 2)
        )
        tallies['target'] += w[on_target].sum()
        tallies['outside'] += w[~on_target].sum()
        target_w[idx[on_target]] = w[on_target]
        if map_edges is not None:
            histogram, _, _ = np.histogram2d(
                y[downward], x[downward], bins=[map_edges[1], map_edges[0]], weights=w[downward]
            )
    elif map_edges is not None:
        histogram = np.zeros((map_edges[1].size - 1, map_edges[0].size - 1))

    return ChunkTally(
        rays=n,
        tallies=np.array([tallies[name] for name in TALLY_FIELDS]),
        target_sum=float(target_w.sum()),
        target_sumsq=float((target_w**2).sum()),
        chamber_sum=float(chamber_w.sum()),
        chamber_sumsq=float((chamber_w**2).sum()),
        histogram=histogram,
    )


class MonteCarloTracer:
    """Traceur par lots, avec graine ; les lots sont réduits dans l'ordre des indices"""

    def __init__(self, chunk_size=None, bounce_cap=None, map_pitch=None):
        self.chunk_size = chunk_size or OPTICS_CONFIG['chunk_size']
        self.bounce_cap = bounce_cap or OPTICS_CONFIG['bounce_cap']
        self.map_pitch = map_pitch or OPTICS_CONFIG['flux_map_pitch']

    def _chunks(self, ray_count: int) -> list[int]:
        full, rest = divmod(ray_count, self.chunk_size)
        return [self.chunk_size] * full + ([rest] if rest else [])

    def _map_edges(self, geom: LpGeometry):
        extent_x = 2.0 * geom.target_width_m
        extent_y = 2.0 * geom.target_depth_m
        nx = max(1, int(round(extent_x / self.map_pitch)))
        ny = max(1, int(round(extent_y / self.map_pitch)))
        return (
            np.linspace(-extent_x / 2, extent_x / 2, nx + 1),
            np.linspace(-extent_y / 2, extent_y / 2, ny + 1),
        )

    def run(
        self,
        geom: LpGeometry,
        tilt: float,
        source: dict,
        ray_count: int,
        seed: int,
        stream: int = 0,
        workers: int = 1,
        flux_map: bool = False,
    ) -> ChunkTally:
        sizes = self._chunks(ray_count)
        seeds = np.random.SeedSequence([seed, stream]).spawn(len(sizes))
        edges = self._map_edges(geom) if flux_map else None
        jobs = (
            delayed(_trace_chunk)(geom, tilt, source, size, child, self.bounce_cap, edges)
            for size, child in zip(sizes, seeds)
        )
        if workers > 1:
            chunks = Parallel(n_jobs=workers)(jobs)
        else:
            chunks = [fn(*args, **kwargs) for fn, args, kwargs in jobs]
        return ChunkTally.merge(chunks)

    def trace_direct(
        self,
        geom: LpGeometry,
        altitude: float,
        tilt: float,
        ray_count: int,
        seed: int,
        workers: int = 1,
        reference_irradiance: float = 1000.0,
    ) -> DirectTrace:
        if not 0 < altitude <= 90:
            raise ValueError(f'altitude must lie in (0, 90], got {altitude}')
        stream = int(round(altitude * 1000))
        total = self.run(
            geom,
            tilt,
            {'kind': 'beam', 'altitude': altitude},
            ray_count,
            seed,
            stream=stream,
            workers=workers,
            flux_map=True,
        )
        eta, stderr = total.mean_and_stderr('target')
        eta_chamber, _ = total.mean_and_stderr('chamber')

        incident = reference_irradiance * math.sin(math.radians(altitude)) * geom.aperture_area
        edges_x, edges_y = self._map_edges(geom)
        pitch_x = edges_x[1] - edges_x[0]
        cells = total.histogram / total.rays * incident / pitch_x**2
        flux = FluxMap(
            cells=cells,
            pitch=pitch_x,
            extent_x=edges_x[-1] - edges_x[0],
            extent_y=edges_y[-1] - edges_y[0],
            target_width=geom.target_width_m,
            target_depth=geom.target_depth_m,
            incident_power=incident,
        )
        logger.debug(f'Direct trace at {altitude:.1f} deg: eta={eta:.4f} +/- {stderr:.4f}')
        return DirectTrace(
            altitude=altitude,
            efficiency=min(eta, 1.0),
            stderr=stderr,
            chamber_efficiency=min(eta_chamber, 1.0),
            tallies=total.to_tallies(),
            ray_count=total.rays,
            flux_map=flux,
        )

    def trace_band(
        self,
        geom: LpGeometry,
        band: int,
        tilt: float,
        ray_count: int,
        seed: int,
        workers: int = 1,
    ) -> DiffuseBand:
        """Une bande de ciel de dix degrés sur le demi-dôme avant"""
        stream = 10_000_000 + band * 1000 + int(round(tilt * 10))
        total = self.run(
            geom,
            tilt,
            {'kind': 'band', 'low': band - 10, 'high': band},
            ray_count,
            seed,
            stream=stream,
            workers=workers,
        )
        eta_crop, se_crop = total.mean_and_stderr('target')
        eta_th, se_th = total.mean_and_stderr('chamber')
        return DiffuseBand(
            band=band,
            eta_th=min(eta_th, 1.0),
            eta_crop=min(eta_crop, eta_th, 1.0),
            stderr_th=se_th,
            stderr_crop=se_crop,
            tallies=total.to_tallies(),
        )


tracer = MonteCarloTracer()
