"""Small scenes and dense reference computations shared by the tests."""

import numpy as np

from satbeam import baselines
from satbeam.geometry import Scenario, Scene, build_scene
from satbeam.metrics import effective_gains

# 16-point DFT feeding a 4 x 2 array
DESK = Scenario(users=3, ura=(4, 2), spacing=1.0, fft_size=16)


def desk_scene(users=3, seed=0, snr_db=10.0, **changes) -> Scene:
    """Desk scene with the power set so the greedy beams see ``snr_db``
    average SNR under equal power splitting."""
    scenario = DESK.replace(users=users, **changes)
    scene = build_scene(scenario, seed)
    codebook, window = scenario.codebook(), scenario.window
    a = baselines.greedy_assignment(scene, codebook, window)
    gain = np.mean(np.abs(np.diag(effective_gains(scene, codebook, window, a))) ** 2)
    power = 10 ** (snr_db / 10) * users * scene.noise_power / gain
    return scene.with_power(power)


def random_scene(rng, k, m, noise_power=1.0, power=1.0) -> Scene:
    h = (rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))) / np.sqrt(2)
    return Scene(h=h, noise_power=noise_power, power_budget=power, bandwidth_hz=1.0, carrier_hz=1.0)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def dense_sinr(h, phi, w, a, u, noise):
    """SINR straight from the signal chain ``y = H^H Phi W A U x + noise``."""
    chain = h.conj().T @ phi @ w @ a @ u
    out = []
    for m in range(chain.shape[0]):
        signal = abs(chain[m, m]) ** 2
        interference = sum(abs(chain[m, j]) ** 2 for j in range(chain.shape[1]) if j != m)
        out.append(signal / (interference + noise))
    return np.array(out)
