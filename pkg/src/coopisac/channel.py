"""Channel synthesis for the BS -> CUE -> DUE scenario.

Indices ``k``, ``m``, ``u`` are 0-based throughout. Every random quantity
is drawn from its own sub-stream keyed by ``(seed, tag, k, m[, u])`` so a
larger population never perturbs the channels of existing users.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

_TAG_RICIAN = 1
_TAG_SENSING = 2


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class Geometry:
    bs_position: np.ndarray
    cue_positions: np.ndarray
    due_positions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bs_position", np.asarray(self.bs_position, dtype=float).reshape(3))
        object.__setattr__(self, "cue_positions", np.asarray(self.cue_positions, dtype=float).reshape(-1, 3))
        object.__setattr__(self, "due_positions", np.asarray(self.due_positions, dtype=float).reshape(-1, 3))
        pts = np.vstack([self.bs_position, self.cue_positions, self.due_positions])
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        np.fill_diagonal(d, np.inf)
        if np.any(d <= 0):
            raise ValueError("geometry has coincident nodes")

    @property
    def K(self) -> int:
        return len(self.cue_positions)

    @property
    def M(self) -> int:
        return len(self.due_positions)

    @classmethod
    def default(cls) -> "Geometry":
        r2 = np.sqrt(2.0)
        return cls(
            bs_position=[0.0, 0.0, 50.0],
            cue_positions=[[50.0, 50.0, 10.0], [-50.0, 50.0, 10.0], [0.0, -50.0 * r2, 10.0]],
            due_positions=[
                [150.0, 50.0, 5.0],
                [25.0, 200.0, 5.0],
                [-25.0, 200.0, 5.0],
                [-150.0, -50.0, 5.0],
                [0.0, -150.0 * r2, 5.0],
            ],
        )


@dataclass(frozen=True)
class RadioParams:
    carrier_freq: float = 3e9
    rician_factor: float = 10.0
    rcs: float = 1.0
    noise_cue: float = 1e-12
    noise_due: float = 1e-12
    noise_sense: float = 1e-12
    grid: tuple[int, int] = (4, 4)

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(int(g) for g in self.grid))
        if self.carrier_freq <= 0:
            raise ValueError("carrier_freq must be positive")
        if self.rician_factor < 0:
            raise ValueError("rician_factor must be nonnegative")
        if min(self.noise_cue, self.noise_due, self.noise_sense) <= 0:
            raise ValueError("noise powers must be positive")
        if len(self.grid) != 2 or min(self.grid) < 1:
            raise ValueError("grid must be (N_r, N_c) with both >= 1")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def N(self) -> int:
        return self.grid[0] * self.grid[1]


@dataclass
class ChannelSet:
    """One realization of every channel plus the receiver noise powers.

    Shapes: ``h`` (K, N); ``g`` (K, M, N); ``z`` (K, M, U, N) with U = K.
    """

    h: np.ndarray
    g: np.ndarray
    z: np.ndarray
    noise_cue: float
    noise_due: float
    noise_sense: float
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return self.h.shape[0]

    @property
    def M(self) -> int:
        return self.g.shape[1]

    @property
    def N(self) -> int:
        return self.h.shape[1]

    def h_ext(self, k: int) -> np.ndarray:
        """(K+1)-fold extension of ``h_k``."""
        return np.tile(self.h[k], self.K + 1)

    def g_ext(self, k: int, m: int) -> np.ndarray:
        """M-fold extension of ``g_{k,m}``."""
        return np.tile(self.g[k, m], self.M)

    def z_ext(self, k: int, u: int) -> np.ndarray:
        """Stack of ``z_{k,1,u} .. z_{k,M,u}``."""
        return self.z[k, :, u, :].reshape(-1)


def _angles(src: np.ndarray, dst: np.ndarray) -> tuple[float, float, float]:
    delta = np.asarray(dst, float) - np.asarray(src, float)
    d = float(np.linalg.norm(delta))
    if d <= 0:
        raise ValueError("zero-distance link")
    theta = float(np.arccos(np.clip(delta[2] / d, -1.0, 1.0)))
    phi = float(np.arctan2(delta[1], delta[0]))
    return d, theta, phi


def steering_vector(theta: float, phi: float, grid) -> np.ndarray:
    """UPA response: kron(row phase ramp, column phase ramp)."""
    n_r, n_c = int(grid[0]), int(grid[1])
    s = np.sin(theta)
    row = np.exp(-1j * np.pi * s * np.cos(phi) * np.arange(n_r))
    col = np.exp(-2j * np.pi * s * np.sin(phi) * np.arange(n_c))
    return np.kron(row, col)


def path_loss(wavelength: float, distance: float) -> float:
    return wavelength / (4.0 * np.pi * distance)


def sensing_variance(radio: RadioParams, d_km: float, d_um: float) -> float:
    lam = radio.wavelength
    return radio.rcs * lam**2 / ((4.0 * np.pi) ** 3 * d_km**2 * d_um**2)


def los_channel(geometry: Geometry, radio: RadioParams, k: int) -> np.ndarray:
    d, theta, phi = _angles(geometry.bs_position, geometry.cue_positions[k])
    return path_loss(radio.wavelength, d) * steering_vector(theta, phi, radio.grid)


def _cn(rng: np.random.Generator, size, var: float = 1.0) -> np.ndarray:
    return np.sqrt(var / 2.0) * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def rician_channel(geometry: Geometry, radio: RadioParams, k: int, m: int, rng) -> np.ndarray:
    d, theta, phi = _angles(geometry.cue_positions[k], geometry.due_positions[m])
    kappa = radio.rician_factor
    los = steering_vector(theta, phi, radio.grid)
    nlos = _cn(rng, radio.N)
    return path_loss(radio.wavelength, d) * (
        np.sqrt(kappa / (kappa + 1.0)) * los + np.sqrt(1.0 / (kappa + 1.0)) * nlos
    )


def sensing_channel(geometry: Geometry, radio: RadioParams, k: int, m: int, u: int, rng) -> np.ndarray:
    d_km, theta, phi = _angles(geometry.cue_positions[k], geometry.due_positions[m])
    d_um = float(np.linalg.norm(geometry.due_positions[m] - geometry.cue_positions[u]))
    alpha = _cn(rng, None, sensing_variance(radio, d_km, d_um))
    phase = np.exp(-2j * np.pi * d_um / radio.wavelength)
    return alpha * phase * steering_vector(theta, phi, radio.grid)


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def generate_channels(geometry: Geometry, radio: RadioParams, seed: int) -> ChannelSet:
    K, M, N = geometry.K, geometry.M, radio.N
    h = np.stack([los_channel(geometry, radio, k) for k in range(K)])
    g = np.empty((K, M, N), complex)
    z = np.empty((K, M, K, N), complex)
    for k in range(K):
        for m in range(M):
            g[k, m] = rician_channel(geometry, radio, k, m, substream(seed, _TAG_RICIAN, k, m))
            for u in range(K):
                z[k, m, u] = sensing_channel(geometry, radio, k, m, u, substream(seed, _TAG_SENSING, k, m, u))
    meta = {
        "bs_position": geometry.bs_position.tolist(),
        "cue_positions": geometry.cue_positions.tolist(),
        "due_positions": geometry.due_positions.tolist(),
        "grid": list(radio.grid),
        "carrier_freq": radio.carrier_freq,
    }
    return ChannelSet(h, g, z, radio.noise_cue, radio.noise_due, radio.noise_sense, seed=seed, meta=meta)


def _pairs(a: np.ndarray) -> list:
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _unpairs(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def dump_channels(channels: ChannelSet, path) -> None:
    K, M = channels.K, channels.M
    doc = {
        "seed": channels.seed,
        "geometry": channels.meta,
        "noise": {"cue": channels.noise_cue, "due": channels.noise_due, "sense": channels.noise_sense},
        "channels": {},
    }
    ch = doc["channels"]
    for k in range(K):
        ch[f"h/{k}"] = _pairs(channels.h[k])
        for m in range(M):
            ch[f"g/{k}/{m}"] = _pairs(channels.g[k, m])
            for u in range(K):
                ch[f"z/{k}/{m}/{u}"] = _pairs(channels.z[k, m, u])
    Path(path).write_text(json.dumps(doc))


def load_channels(path) -> ChannelSet:
    doc = json.loads(Path(path).read_text())
    ch = doc["channels"]
    K = sum(1 for key in ch if key.startswith("h/"))
    M = sum(1 for key in ch if key.startswith("g/0/"))
    h = np.stack([_unpairs(ch[f"h/{k}"]) for k in range(K)])
    N = h.shape[1]
    g = np.empty((K, M, N), complex)
    z = np.empty((K, M, K, N), complex)
    for k in range(K):
        for m in range(M):
            g[k, m] = _unpairs(ch[f"g/{k}/{m}"])
            for u in range(K):
                z[k, m, u] = _unpairs(ch[f"z/{k}/{m}/{u}"])
    noise = doc["noise"]
    return ChannelSet(h, g, z, noise["cue"], noise["due"], noise["sense"], seed=doc.get("seed"), meta=doc.get("geometry", {}))
