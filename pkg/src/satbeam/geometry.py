"""MEO satellite scenes: user drops, URA response and line-of-sight link budget.

The channel column of user ``m`` is

    h_m = sqrt(G_link,m) * exp(j psi_m) * a(theta_m, phi_m)

with ``G_link = (lambda / (4 pi d))**2 * G_user`` (free-space loss times the
user terminal gain), ``psi_m`` a uniform random carrier phase and ``a`` the
URA steering vector with a ``cos**q`` element power pattern.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import constants

from .codebook import DftCodebook, Window

EARTH_RADIUS_M = 6378e3


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform rectangular array of ``nx * ny`` elements."""

    nx: int
    ny: int
    spacing_over_lambda: float = 1.0
    element_pattern_exponent: float = 1.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"URA dimensions must be positive, got {self.nx}x{self.ny}")
        if not 0.1 <= self.spacing_over_lambda <= 10:
            raise ValueError(
                f"element spacing {self.spacing_over_lambda} (in wavelengths) outside [0.1, 10]"
            )
        if self.element_pattern_exponent < 0:
            raise ValueError("element pattern exponent must be non-negative")

    @property
    def k(self) -> int:
        return self.nx * self.ny

    def element_indices(self) -> tuple[np.ndarray, np.ndarray]:
        """(kx, ky) of every element in raster (row-major) order."""
        kx, ky = np.meshgrid(np.arange(self.nx), np.arange(self.ny), indexing="ij")
        return kx.ravel(), ky.ravel()


@dataclass(frozen=True)
class Geometry:
    altitude_m: float = 8000e3
    min_elevation_deg: float = 5.0
    earth_radius_m: float = EARTH_RADIUS_M

    def __post_init__(self):
        if self.altitude_m <= 0 or self.earth_radius_m <= 0:
            raise ValueError("altitude and Earth radius must be positive")
        if not 0.0 <= self.min_elevation_deg <= 90.0:
            raise ValueError(f"minimum elevation {self.min_elevation_deg} outside [0, 90] deg")


class UserDrop(NamedTuple):
    off_nadir: np.ndarray  # rad, seen from the satellite
    azimuth: np.ndarray  # rad
    central_angle: np.ndarray  # rad, Earth-centred angle from the sub-satellite point
    slant_range: np.ndarray  # m


def max_off_nadir(geometry: Geometry) -> float:
    """Off-nadir angle of the coverage edge:
    ``sin(theta_max) = R / (R + h) * cos(elev_min)``."""
    r, h = geometry.earth_radius_m, geometry.altitude_m
    return float(np.arcsin(r / (r + h) * np.cos(np.radians(geometry.min_elevation_deg))))


def max_central_angle(geometry: Geometry) -> float:
    return float(np.pi / 2 - np.radians(geometry.min_elevation_deg) - max_off_nadir(geometry))


def slant_range(geometry: Geometry, central_angle) -> np.ndarray:
    r, h = geometry.earth_radius_m, geometry.altitude_m
    gamma = np.asarray(central_angle, dtype=float)
    d2 = r**2 + (r + h) ** 2 - 2 * r * (r + h) * np.cos(gamma)
    return np.sqrt(np.maximum(d2, 0.0))


def off_nadir_angle(geometry: Geometry, central_angle) -> np.ndarray:
    r, h = geometry.earth_radius_m, geometry.altitude_m
    gamma = np.asarray(central_angle, dtype=float)
    return np.arctan2(r * np.sin(gamma), r + h - r * np.cos(gamma))


def drop_users(m: int, geometry: Geometry, rng) -> UserDrop:
    """Drop ``m`` users uniformly (by area) over the visible spherical cap.

    ``rng`` is a seed or a ``numpy.random.Generator``; the draw order is
    central angle, then azimuth.
    """
    if m < 1:
        raise ValueError(f"need at least one user, got {m}")
    rng = np.random.default_rng(rng)
    gamma_max = max_central_angle(geometry)
    if gamma_max < -1e-12:
        raise ValueError("empty coverage footprint")
    gamma_max = max(gamma_max, 0.0)  # 90 deg elevation: round-off below zero
    # uniform on a sphere cap: cos(gamma) is uniform
    cos_gamma = rng.uniform(np.cos(gamma_max), 1.0, size=m)
    azimuth = rng.uniform(0.0, 2 * np.pi, size=m)
    gamma = np.arccos(np.clip(cos_gamma, -1.0, 1.0))
    return UserDrop(
        off_nadir=off_nadir_angle(geometry, gamma),
        azimuth=azimuth,
        central_angle=gamma,
        slant_range=slant_range(geometry, gamma),
    )


def steering_vector(array: ArrayConfig, theta, phi) -> np.ndarray:
    """URA response towards off-nadir ``theta`` and azimuth ``phi`` (rad).

    Scalar angles give a length-K vector; arrays of M angles give a K x M
    matrix. Element (kx, ky) carries phase
    ``2 pi d/lambda (kx sin(theta) cos(phi) + ky sin(theta) sin(phi))`` and
    amplitude ``cos(theta)**(q/2)``.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(theta < 0) or np.any(theta >= np.pi / 2):
        raise ValueError("off-nadir angle must lie in [0, pi/2)")
    kx, ky = array.element_indices()
    u = np.sin(theta) * np.cos(phi)
    v = np.sin(theta) * np.sin(phi)
    phase = 2 * np.pi * array.spacing_over_lambda * (
        np.multiply.outer(kx, u) + np.multiply.outer(ky, v)
    )
    amplitude = np.cos(theta) ** (array.element_pattern_exponent / 2)
    return amplitude * np.exp(1j * phase)


def wavelength(carrier_hz: float) -> float:
    return constants.c / carrier_hz


def fspl_db(distance_m, carrier_hz: float):
    """Free-space path loss ``20 log10(4 pi d / lambda)``."""
    return 20 * np.log10(4 * np.pi * np.asarray(distance_m) / wavelength(carrier_hz))


def thermal_noise_power(temperature_k: float, bandwidth_hz: float) -> float:
    return constants.k * temperature_k * bandwidth_hz


@dataclass(frozen=True)
class Scenario:
    """System parameters of one scene.

    Defaults describe a MEO Ka-band payload: 8000 km altitude, 19 GHz
    carrier, 500 MHz bandwidth, 256-point DFT feeding a 10 x 10 array at
    one-wavelength spacing, 3 kW shared by 45 users.
    """

    power_w: float = 3000.0
    users: int = 45
    ura: tuple[int, int] = (10, 10)
    spacing: float = 1.0
    fft_size: int = 256
    window_start: int | None = None
    carrier_hz: float = 19e9
    bandwidth_hz: float = 500e6
    altitude_m: float = 8000e3
    min_elevation_deg: float = 5.0
    user_gain_dbi: float = 41.45
    noise_temp_k: float = 224.5
    element_pattern_exponent: float = 1.0
    earth_radius_m: float = EARTH_RADIUS_M

    def __post_init__(self):
        object.__setattr__(self, "ura", tuple(int(x) for x in self.ura))
        if len(self.ura) != 2:
            raise ValueError(f"ura must have two dimensions, got {self.ura}")
        if self.users < 1:
            raise ValueError(f"users must be >= 1, got {self.users}")
        if self.power_w <= 0:
            raise ValueError("power budget must be positive")
        if self.bandwidth_hz <= 0 or self.carrier_hz <= 0 or self.noise_temp_k <= 0:
            raise ValueError("carrier, bandwidth and noise temperature must be positive")
        array = self.array  # validates URA and spacing
        if array.k > self.fft_size:
            raise ValueError(f"URA has {array.k} elements but the FFT size is {self.fft_size}")
        if self.users > array.k:
            raise ValueError(f"{self.users} users exceed the {array.k} antenna elements")
        self.window.check(self.fft_size)
        self.geometry  # noqa: B018 - validates altitude/elevation

    @property
    def array(self) -> ArrayConfig:
        return ArrayConfig(self.ura[0], self.ura[1], self.spacing, self.element_pattern_exponent)

    @property
    def k(self) -> int:
        return self.ura[0] * self.ura[1]

    @property
    def geometry(self) -> Geometry:
        return Geometry(self.altitude_m, self.min_elevation_deg, self.earth_radius_m)

    @property
    def window(self) -> Window:
        if self.window_start is None:
            return Window.centered(self.fft_size, self.k)
        return Window(self.window_start, self.k)

    def codebook(self) -> DftCodebook:
        return DftCodebook(self.fft_size)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class Scene:
    """Channel realisation consumed by every scheme.

    ``h`` is K x M (linear amplitude gains); powers are in watts.
    """

    h: np.ndarray
    noise_power: float
    power_budget: float
    bandwidth_hz: float
    carrier_hz: float
    seed: int | None = None
    drop: UserDrop | None = None
    scenario: Scenario | None = field(default=None, repr=False)

    def __post_init__(self):
        h = np.array(self.h, dtype=complex)
        if h.ndim != 2:
            raise ValueError("channel must be a K x M matrix")
        if not np.all(np.isfinite(h)):
            raise ValueError("channel has non-finite entries")
        if np.any(np.linalg.norm(h, axis=0) <= 0):
            raise ValueError("every user channel must have positive norm")
        if self.noise_power <= 0 or self.power_budget <= 0:
            raise ValueError("noise power and power budget must be positive")
        if h.shape[1] > h.shape[0]:
            raise ValueError(f"{h.shape[1]} users exceed {h.shape[0]} antennas")
        h.flags.writeable = False
        object.__setattr__(self, "h", h)

    @property
    def m_users(self) -> int:
        return self.h.shape[1]

    @property
    def k(self) -> int:
        return self.h.shape[0]

    def with_power(self, power_budget: float) -> "Scene":
        return dataclasses.replace(self, power_budget=power_budget)


def link_gain(scenario: Scenario, distance_m) -> np.ndarray:
    """Free-space gain times user antenna gain, linear."""
    lam = wavelength(scenario.carrier_hz)
    return (lam / (4 * np.pi * np.asarray(distance_m))) ** 2 * 10 ** (scenario.user_gain_dbi / 10)


def build_scene(scenario: Scenario, seed: int) -> Scene:
    """Draw users and phases from ``seed`` and assemble the channel."""
    rng = np.random.default_rng(seed)
    drop = drop_users(scenario.users, scenario.geometry, rng)
    psi = rng.uniform(0.0, 2 * np.pi, size=scenario.users)
    a = steering_vector(scenario.array, drop.off_nadir, drop.azimuth)
    if a.ndim == 1:
        a = a[:, None]
    h = np.sqrt(link_gain(scenario, drop.slant_range)) * np.exp(1j * psi) * a
    return Scene(
        h=h,
        noise_power=thermal_noise_power(scenario.noise_temp_k, scenario.bandwidth_hz),
        power_budget=scenario.power_w,
        bandwidth_hz=scenario.bandwidth_hz,
        carrier_hz=scenario.carrier_hz,
        seed=seed,
        drop=drop,
        scenario=scenario,
    )
