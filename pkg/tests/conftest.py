"""Shared independent oracles for the test suite.

Both helpers deliberately avoid the package's own integration engine:
the excitation oracle steps the driven-decay ODE with a fixed-step RK4
scheme, and the emission oracle contracts the symmetrized wavefunction
against the memory weights on a dense tensor mesh.  They share nothing
with the code under test beyond pulse-envelope evaluation.
"""

import math
from itertools import permutations

import numpy as np
from scipy.integrate import quad


def rk4_excitation(gamma_bw: float, t_end: float, n_steps: int = 20000):
    """Excited-state trace for a one-photon exponential drive.

    Integrates db/dt = -b - xi(t) with xi(t) = sqrt(G) exp(-G t / 2)
    from b(0) = 0 by classical fixed-step RK4 and returns (times, |b|^2)
    on the step grid.
    """
    def xi(t):
        return math.sqrt(gamma_bw) * math.exp(-0.5 * gamma_bw * t)

    def rhs(t, b):
        return -b - xi(t)

    dt = t_end / n_steps
    times = np.linspace(0.0, t_end, n_steps + 1)
    vals = np.empty(n_steps + 1)
    b = 0.0
    vals[0] = 0.0
    for i in range(n_steps):
        t = times[i]
        k1 = rhs(t, b)
        k2 = rhs(t + 0.5 * dt, b + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, b + 0.5 * dt * k2)
        k4 = rhs(t + dt, b + dt * k3)
        b = b + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        vals[i + 1] = b * b
    return times, vals


def _profile_overlap_quad(p, q, t_end: float = 120.0) -> complex:
    def integrand_re(t):
        return (np.conj(p.value(t)) * q.value(t)).real

    def integrand_im(t):
        return (np.conj(p.value(t)) * q.value(t)).imag

    re, _ = quad(integrand_re, 0.0, t_end, limit=300)
    im, _ = quad(integrand_im, 0.0, t_end, limit=300)
    return re + 1j * im


def brute_reflection_f0(times, profiles, order: int = 40) -> complex:
    """Tensor-quadrature oracle for the fully reflected amplitude.

    Evaluates the nested windowed emission integral as a dense N-D
    Gauss-Legendre sum over the symmetrized product wavefunction, with
    the permanent normalization computed from pairwise overlaps.
    """
    times = sorted(float(t) for t in times)
    n = len(times)
    windows = [(0.0, times[0])]
    windows += [(times[i], times[i + 1]) for i in range(n - 1)]
    x, wgt = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for (a, b) in windows:
        nodes.append(0.5 * (a + b) + 0.5 * (b - a) * x)
        weights.append(0.5 * (b - a) * wgt)
    mesh = np.meshgrid(*nodes, indexing="ij")
    kern = np.ones_like(mesh[0])
    for i in range(n):
        kern = kern * np.exp(-(times[i] - mesh[i]))
    sym = np.zeros_like(mesh[0], dtype=complex)
    for perm in permutations(range(n)):
        term = np.ones_like(mesh[0], dtype=complex)
        for slot, k in enumerate(perm):
            term = term * profiles[k].value(mesh[slot])
        sym = sym + term
    wt = np.ones_like(mesh[0])
    for i in range(n):
        shape = [1] * n
        shape[i] = -1
        wt = wt * weights[i].reshape(shape)
    gram = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            if profiles[i] is profiles[j]:
                gram[i, j] = 1.0
            else:
                gram[i, j] = _profile_overlap_quad(profiles[i], profiles[j])
    perm_g = 0.0 + 0.0j
    for perm in permutations(range(n)):
        prod = 1.0 + 0.0j
        for i, j in enumerate(perm):
            prod *= gram[i, j]
        perm_g += prod
    sign = (-1.0) ** n
    raw = complex(np.sum(wt * kern * sym))
    return sign * raw / math.sqrt(abs(perm_g)) / math.sqrt(math.factorial(n))
