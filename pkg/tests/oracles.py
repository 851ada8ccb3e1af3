"""Independent reference computations used by the tests.

Nothing here calls into the package's numerical code: neurons are summed in
plain Python loops, integrals go through scipy.integrate.quad or Monte Carlo.
"""
import math

import numpy as np
from scipy import integrate


def relu(z):
    return max(z, 0.0)


def naive_network(neurons, x):
    """``sum a relu(w . x + b)`` with explicit loops."""
    total = 0.0
    for a, w, b in neurons:
        total += a * relu(sum(wi * xi for wi, xi in zip(w, x)) + b)
    return total


def naive_network_many(neurons, xs):
    return np.array([naive_network(neurons, x) for x in xs])


def mean_relu_first_coordinate_mc(d, n=10**6, seed=12345):
    """Monte-Carlo estimate of ``E max(u_1, 0)`` for ``u`` uniform on S^{d-1}."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, d))
    u1 = g[:, 0] / np.linalg.norm(g, axis=1)
    return float(np.mean(np.maximum(u1, 0.0)))


def mean_relu_circle_quad():
    """``(1 / 2 pi) int max(cos t, 0) dt`` by adaptive quadrature."""
    val, _ = integrate.quad(lambda t: max(math.cos(t), 0.0), 0.0, 2.0 * math.pi, points=[math.pi / 2, 3 * math.pi / 2])
    return val / (2.0 * math.pi)


def weighted_square_norm_quad():
    """``2 int_0^1 sqrt(1 + b^2) db``."""
    val, _ = integrate.quad(lambda b: 2.0 * math.sqrt(1.0 + b * b), 0.0, 1.0)
    return val


def gaussian_kernel_norm_quad():
    """``|h(0)| + |h'(0)| + int sqrt(1 + z^2) |h''(z)| dz`` for ``h = exp(-z^2/2)``."""
    val, _ = integrate.quad(
        lambda z: math.sqrt(1 + z * z) * abs(z * z - 1.0) * math.exp(-z * z / 2.0),
        -40.0, 40.0, points=[-1.0, 1.0], limit=400,
    )
    return 1.0 + val


def radial_decay_quad(h, r):
    """``(2 pi)^(-1/2) r^(-1) int_{-1}^{1} h(y) exp(-y^2 / (2 r^2)) dy`` by adaptive quadrature."""
    val, _ = integrate.quad(lambda y: h(y) * math.exp(-y * y / (2 * r * r)), -1.0, 1.0, limit=400,
                            points=list(np.linspace(-1, 1, 41)[1:-1]))
    return val / (math.sqrt(2 * math.pi) * r)


def central_difference(fn, x, v, h=1e-6):
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return (fn(x + h * v) - fn(x - h * v)) / (2 * h)


def one_sided_differences(fn, x, v, h=1e-6):
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    f0 = fn(x)
    return (fn(x + h * v) - f0) / h, (f0 - fn(x - h * v)) / h


def random_unit(rng, d):
    g = rng.standard_normal(d)
    return g / np.linalg.norm(g)


def random_rotation(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))
