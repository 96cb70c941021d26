import numpy as np

from teleport_transition.experiment import EnsembleTable

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def synthetic_curves(t_c=2.0, nu=2.0, beta=0.3, sizes=(32, 64, 128, 256), times=None, noise=0.0, seed=0):
    """``y = N^(-2 beta/nu) f((t - t_c) N^(1/nu))`` with a smooth sigmoid master curve."""
    from teleport_transition.scaling import ScalingDataset

    times = np.round(np.arange(1.0, 3.01, 0.05), 10) if times is None else np.asarray(times)
    rng = np.random.default_rng(seed)
    N, t, y = [], [], []
    for n in sizes:
        x = (times - t_c) * n ** (1 / nu)
        f = 1.0 + np.tanh(0.5 * x + 0.3)
        N.append(np.full(times.size, n))
        t.append(times)
        y.append(n ** (-2 * beta / nu) * f)
    y = np.concatenate(y)
    sem = noise * np.abs(y) + 1e-12 if noise else np.zeros_like(y)
    if noise:
        y = y + rng.normal(0, 1, y.size) * noise * np.abs(y)
    return ScalingDataset(np.concatenate(N), np.concatenate(t), y, sem)


def binary_table(probs: dict[tuple[int, float], float], n: int, seed=0) -> EnsembleTable:
    """Trajectory samples in {0, 2} with the given probability of 2."""
    from teleport_transition.experiment import aggregate

    rng = np.random.default_rng(seed)
    samples = {k: 2 * (rng.random(n) < p).astype(np.int8) for k, p in probs.items()}
    return aggregate(samples, "alltoall", None)
