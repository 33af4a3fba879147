"""Detector-facing quantities built from the scattering amplitudes.

Three families live here:

* atomic excitation: probability that the emitter holds the excitation
  at a given dynamical time, for one- and two-photon drives;
* full-reversal probability for identical same-direction exponential
  trains (the closed-form product and an independent nested-quadrature
  route that never touches the product formula);
* output-norm bookkeeping that sums the two-photon channel weights as a
  unitarity check.

The nested-quadrature reversal route deliberately re-derives everything
from time-ordered integrals.  Each layer of the nest is tabulated at
Chebyshev points and interpolated in log space (the layer functions are
pure decaying exponentials, so their logs are nearly linear and the
interpolation is benign), which turns an O(q^N) cost into O(N q^2).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from .amplitudes import exp_pair_channel_values, ordered_emission_amplitude
from .kernel import h_closed_form, kernel_convolve, KernelSpan
from .model import Direction, WavepacketN
from .quadrature import (
    DEFAULT_QUAD,
    QuadratureSpec,
    gauss_legendre_nodes,
    integrate,
    integrate_semi_infinite,
)

__all__ = [
    "ExcitationTrace",
    "ReflectionResult",
    "excitation_probability",
    "excitation_trace",
    "reflection_probability_closed",
    "reflection_probability_numeric",
    "unitarity_check_two_photon",
    "worker_count",
]

_MAX_NUMERIC_PHOTONS = 5
# log-interpolation layers: nodes per layer and the decay depth (in
# e-foldings) after which contributions are treated as spent
_CHEB_NODES = 48
_DECAY_FOLDINGS = 45.0
_LOG_FLOOR = 1e-300


def worker_count(task_count: int | None = None) -> int:
    """Thread budget for embarrassingly parallel sweeps.

    Honors the SCATTER_THREADS environment variable when set; falls back
    to the CPU count.  Never exceeds the number of tasks.
    """
    raw = os.environ.get("SCATTER_THREADS")
    if raw is None or raw.strip() == "":
        n = os.cpu_count() or 1
    else:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ValueError(
                f"SCATTER_THREADS must be an integer, got {raw!r}") from exc
    n = max(1, n)
    if task_count is not None:
        n = min(n, max(1, task_count))
    return n


# ---------------------------------------------------------------------------
# atomic excitation


@dataclass
class ExcitationTrace:
    """Excitation probability sampled on a time axis."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be matching 1-D arrays")

    @property
    def peak(self) -> tuple[float, float]:
        idx = int(np.argmax(self.values))
        return float(self.times[idx]), float(self.values[idx])


def _absorb_kernel(w: WavepacketN, index: int, t: float,
                   quad: QuadratureSpec) -> complex:
    profile, _ = w.entries[index]
    if profile.is_exponential:
        return complex(h_closed_form(t, 0.0, profile.gamma_bw))
    return kernel_convolve(profile, KernelSpan(0.0, t), quad)


def _excitation_one(t: float, w: WavepacketN, quad: QuadratureSpec) -> float:
    amp = _absorb_kernel(w, 0, t, quad)
    return abs(amp) ** 2


def _pair_emission_amps_exp(w: WavepacketN, tau, t: float):
    """Emitter amplitude at time t with one photon already out at tau.

    Returns (right, left) spectator-direction amplitudes, vectorized in
    tau.  Valid only for two exponential envelopes.
    """
    (p1, d1), (p2, d2) = w.entries
    cnorm = w.separable_normalization()
    tau = np.asarray(tau, dtype=float)
    k1_t = complex(h_closed_form(t, 0.0, p1.gamma_bw))
    k2_t = complex(h_closed_form(t, 0.0, p2.gamma_bw))

    amp_right = np.zeros(tau.shape, dtype=complex)
    amp_left = np.zeros(tau.shape, dtype=complex)
    for (dk, v_spec, k_partner) in ((d1, p1.value(tau), k2_t),
                                    (d2, p2.value(tau), k1_t)):
        if dk is Direction.RIGHT:
            amp_right = amp_right - cnorm * v_spec * k_partner
        else:
            amp_left = amp_left - cnorm * v_spec * k_partner

    inside = tau <= t
    if np.any(inside):
        ts = np.where(inside, tau, 0.0)
        zero = np.zeros_like(ts)
        chain = cnorm * (h_closed_form(ts, zero, p1.gamma_bw)
                         * h_closed_form(np.full_like(ts, t), ts, p2.gamma_bw)
                         + h_closed_form(ts, zero, p2.gamma_bw)
                         * h_closed_form(np.full_like(ts, t), ts, p1.gamma_bw))
        chain = np.where(inside, chain, 0.0)
        # the emitter radiates into both directions with equal coupling,
        # so the ordered chain feeds the right and left branches alike
        amp_right = amp_right + chain
        amp_left = amp_left + chain
    return amp_right, amp_left


def _pair_emission_amps_generic(w: WavepacketN, tau: float, t: float,
                                quad: QuadratureSpec):
    """Pointwise (right, left) emitter amplitudes for arbitrary inputs."""
    from .amplitudes import _pair_with_right_spectator, _pair_with_left_spectator

    def emit(pair_fn):
        def integrand(s):
            return np.exp(-(t - s)) * pair_fn(w, s, tau)
        scale = min(1.0, w.min_timescale)
        return -integrate(integrand, 0.0, t, quad,
                          panel_width=min(0.5, scale))

    amp_r = emit(_pair_with_right_spectator)
    amp_l = emit(_pair_with_left_spectator)
    if tau <= t:
        # the emitter radiates into both directions with equal coupling
        chain = ordered_emission_amplitude(np.array([tau, t]), w, quad)
        amp_r = amp_r + chain
        amp_l = amp_l + chain
    return amp_r, amp_l


def _excitation_two(t: float, w: WavepacketN, quad: QuadratureSpec) -> float:
    if t == 0.0:
        return 0.0
    if w.all_exponential and w.kind == "separable":
        def integrand(tau):
            amp_r, amp_l = _pair_emission_amps_exp(w, tau, t)
            return np.abs(amp_r) ** 2 + np.abs(amp_l) ** 2
        scale = min(1.0, w.min_timescale)
        width = min(0.5, scale)
        # kink at tau = t where the time-ordered chain switches on
        total = integrate(integrand, 0.0, t, quad, panel_width=width)
        total += integrate_semi_infinite(integrand, t, quad, scale=scale)
        return float(total.real)

    def integrand(tau_arr):
        tau_arr = np.atleast_1d(np.asarray(tau_arr, dtype=float))
        out = np.empty(tau_arr.shape, dtype=float)
        for i, tau in enumerate(tau_arr):
            amp_r, amp_l = _pair_emission_amps_generic(w, float(tau), t, quad)
            out[i] = abs(amp_r) ** 2 + abs(amp_l) ** 2
        return out

    # the pointwise amplitudes carry the inner engine's own error floor
    # (data-resolution limited for sampled states), so the outer pass must
    # not chase tolerances below that noise
    if w.kind == "correlated2":
        h = float(np.max(np.diff(w.grid)))
        noise = h * h / 8.0
        scale = 1.0
    else:
        noise = 0.0
        scale = min(1.0, w.min_timescale)
    coarse = QuadratureSpec(rule=quad.rule,
                            rel_tol=max(quad.rel_tol, 1e-8, 4.0 * noise),
                            abs_tol=max(quad.abs_tol, 1e-11, noise * 1e-2),
                            max_subdivisions=quad.max_subdivisions)
    total = integrate(integrand, 0.0, t, coarse, panel_width=min(0.5, scale))
    total += integrate_semi_infinite(integrand, t, coarse, scale=scale)
    return float(np.real(total))


def excitation_probability(t: float, w: WavepacketN,
                           quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Probability that the emitter is excited at dynamical time t.

    Supports one- and two-photon separable drives (and two-photon
    correlated inputs through the pointwise engine).  The one-photon
    value is the squared absorption kernel; the two-photon value traces
    out the photon that has already been re-emitted.
    """
    if t < 0.0:
        raise ValueError("time must be >= 0")
    if w.n_photons == 1:
        return _excitation_one(float(t), w, quad)
    if w.n_photons == 2:
        return _excitation_two(float(t), w, quad)
    raise ValueError("excitation probability supports 1 or 2 photons")


def excitation_trace(times, w: WavepacketN,
                     quad: QuadratureSpec = DEFAULT_QUAD) -> ExcitationTrace:
    """Excitation probability on an array of times (thread-parallel)."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1:
        raise ValueError("times must be a 1-D array")
    workers = worker_count(times.size)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(
                lambda t: excitation_probability(float(t), w, quad), times))
    else:
        vals = [excitation_probability(float(t), w, quad) for t in times]
    return ExcitationTrace(times=times, values=np.array(vals))


# ---------------------------------------------------------------------------
# full-reversal probability for identical same-direction exponential trains


def reflection_probability_closed(n_photons: int, gamma_bw: float) -> float:
    """Closed-form full-reversal probability for an n-photon train.

    Product over emission layers, evaluated as a log-domain sum so deep
    suppression (large n, extreme bandwidth) cannot underflow stepwise.
    """
    if n_photons < 1 or n_photons != int(n_photons):
        raise ValueError("photon number must be a positive integer")
    if gamma_bw <= 0.0:
        raise ValueError("bandwidth must be positive")
    n = int(n_photons)
    g = float(gamma_bw)
    log_r = math.lgamma(n + 1)
    for m in range(n):
        log_r += math.log(4.0) - math.log(1.0 + m)
        log_r -= math.log(2.0 + m * g) + math.log(2.0 + g + 2.0 * m * g)
    return math.exp(log_r)


@dataclass(frozen=True)
class ReflectionResult:
    """Numeric reversal probability with its deviation from closed form."""

    n_photons: int
    gamma_bw: float
    numeric: float
    closed: float

    @property
    def abs_err(self) -> float:
        return abs(self.numeric - self.closed)


class _LogLayer:
    """Chebyshev tabulation of a positive decaying layer, stored as logs.

    Evaluations beyond the tabulated span return zero: the span is sized
    so the outer integrand has already decayed by ~exp(-45) there, and
    values past the representable range underflow anyway.
    """

    def __init__(self, evaluator, t_span: float, n_nodes: int = _CHEB_NODES):
        # probe the decay rate so the span can be capped before the
        # layer values underflow to exact zero
        f0 = evaluator(0.0)
        if not f0 > 0.0:
            raise RuntimeError("layer evaluated to a non-positive value at 0")
        probe_t = min(t_span, max(1e-3, 0.05 * t_span))
        f_probe = evaluator(probe_t)
        rate_est = 0.0
        if f_probe > 0.0 and probe_t > 0.0:
            rate_est = max(0.0, (math.log(f0) - math.log(f_probe)) / probe_t)
        if rate_est > 0.0:
            t_span = min(t_span, 500.0 / rate_est)
        self.t_span = float(t_span)
        k = np.arange(n_nodes)
        nodes = 0.5 * self.t_span * (1.0 - np.cos(np.pi * k / (n_nodes - 1)))
        logs = np.empty(n_nodes)
        for i, x in enumerate(nodes):
            val = evaluator(float(x))
            logs[i] = math.log(max(val, _LOG_FLOOR))
        self._interp = BarycentricInterpolator(nodes, logs)
        self.rate = max(0.0, (logs[0] - logs[-1]) / max(self.t_span, 1e-300))

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        out = np.zeros(tau.shape, dtype=float)
        inside = tau <= self.t_span
        if np.any(inside):
            out[inside] = np.exp(self._interp(tau[inside]))
        return out


def reflection_probability_numeric(n_photons: int, gamma_bw: float,
                                   quad: QuadratureSpec = DEFAULT_QUAD) -> ReflectionResult:
    """Full-reversal probability by nested time-ordered quadrature.

    Builds the emission nest from the innermost photon outward; each
    layer is an adaptive semi-infinite integral of the squared ordered
    kernel times the next layer, tabulated once and interpolated in log
    space.  Nothing here reuses the closed-form product.
    """
    if not 1 <= n_photons <= _MAX_NUMERIC_PHOTONS or n_photons != int(n_photons):
        raise ValueError(
            f"numeric route supports 1..{_MAX_NUMERIC_PHOTONS} photons")
    if gamma_bw <= 0.0:
        raise ValueError("bandwidth must be positive")
    n = int(n_photons)
    g = float(gamma_bw)
    base_rate = min(2.0, g)

    def layer_integral(tau_prev: float, inner, rho: float) -> float:
        def integrand(tau):
            h = h_closed_form(tau, tau_prev, g)
            val = h * h
            if inner is not None:
                val = val * inner(tau)
            return val
        return float(integrate_semi_infinite(
            integrand, tau_prev, quad, scale=1.0 / rho).real)

    inner = None
    inner_rate = 0.0
    for level in range(n, 1, -1):
        rho = base_rate + inner_rate
        # span needed by the remaining outer integrals, each of which
        # reaches at most ~45 e-foldings past its own start
        t_need = (level - 1) * (_DECAY_FOLDINGS / base_rate + 2.0) + 5.0
        captured_inner, captured_rho = inner, rho
        layer = _LogLayer(
            lambda tp: layer_integral(tp, captured_inner, captured_rho),
            t_need)
        inner, inner_rate = layer, layer.rate
    numeric = math.factorial(n) * layer_integral(
        0.0, inner, base_rate + inner_rate)
    closed = reflection_probability_closed(n, g)
    return ReflectionResult(n_photons=n, gamma_bw=g,
                            numeric=numeric, closed=closed)


# ---------------------------------------------------------------------------
# two-photon output-norm bookkeeping


def _ladder_axis(t_end: float, scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on geometrically widening panels."""
    width = min(0.25, 0.5 * scale)
    edges = [0.0]
    while edges[-1] < t_end:
        edges.append(min(t_end, edges[-1] + width))
        width = min(1.0, width * 1.4)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, wgt = gauss_legendre_nodes(10, a, b)
        nodes.append(x)
        weights.append(wgt)
    return np.concatenate(nodes), np.concatenate(weights)


def unitarity_check_two_photon(w: WavepacketN,
                               quad: QuadratureSpec = DEFAULT_QUAD,
                               t: float | None = None) -> float:
    """Total weight of the three two-photon output channels.

    Evaluated at a dynamical time late enough for the emitter to have
    relaxed, so the result should be 1 for any normalized input.  The
    time plane is integrated in (first detection, delay) coordinates so
    every quadrature panel sees a smooth integrand: the ordered-chain
    kink sits exactly on the delay = 0 panel edge.
    """
    if w.n_photons != 2:
        raise ValueError("unitarity check is defined for two-photon inputs")
    if not w.all_exponential:
        raise ValueError("unitarity check currently needs exponential envelopes")
    horizon = w.horizon
    t_end = float(t) if t is not None else horizon
    scale = min(1.0, w.min_timescale)
    base, base_w = _ladder_axis(t_end, scale)
    # the delay direction only needs to cover the slowest relaxation
    # reach (emitter at rate 1, envelopes at gamma/2 each)
    slowest = min(1.0, min(p.gamma_bw for p, _ in w.entries) / 2.0)
    delay_span = min(max(_DECAY_FOLDINGS / slowest, 10.0), t_end)
    delay, delay_w = _ladder_axis(delay_span, scale)

    a = base[:, None]
    d = delay[None, :]
    weight = base_w[:, None] * delay_w[None, :]
    total = 0.0
    for channel in ("LL", "RL", "RR"):
        upper = exp_pair_channel_values(w, channel, a, a + d, t_end)
        lower = exp_pair_channel_values(w, channel, a + d, a, t_end)
        total += float(np.sum(weight * (np.abs(upper) ** 2
                                        + np.abs(lower) ** 2)))
    return total
