"""Time-domain scattering amplitudes built from the memory kernel.

The central object is the vacuum amplitude for the atom emitting at an
ordered list of times tau_1 <= ... <= tau_N while absorbing every input
photon.  Emission at tau_i restricts the matching absorption to the
window (tau_{i-1}, tau_i], weighted by the atomic memory; absorption is
direction blind, so for separable inputs the amplitude is a permanent of
per-photon kernel integrals over the windows.  Each emission carries a
dipole sign (-1), applied here exactly once (the kernel is unsigned).

Conventions:

* Heaviside gates are closed-boundary: an emission exactly at the
  observation time counts, theta(0) = 1.
* Output channels for two photons are tagged LL (both reflected),
  RL (first slot transmitted, second reflected) and RR (both
  transmitted), for inputs incident from the left.
* The two-photon channel amplitudes f0 (LL) and f2 (RR) absorb a factor
  1/sqrt(2) so that their plain L2 norms enter unitarity sums directly;
  the nonlinear correction B is stated in the same normalization.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .kernel import KernelSpan, h_closed_form, kernel_convolve
from .model import Direction, InitialState, WavepacketN, _permanent
from .quadrature import DEFAULT_QUAD, QuadratureSpec, integrate, integrate_2d_box

_SQRT2 = math.sqrt(2.0)

CHANNELS = ("LL", "RL", "RR")


def _effective_quad(w: WavepacketN, quad: QuadratureSpec) -> QuadratureSpec:
    """Floor the tolerance at the data resolution of interpolated states.

    A sampled two-photon state enters integrands through bilinear
    interpolation, which carries an O(h^2) representation error on grid
    spacing h.  Driving quadrature orders of magnitude below that floor
    burns panels without gaining accuracy, so the engine tolerance is
    clamped to the interpolation error scale.
    """
    if w.kind != "correlated2":
        return quad
    h = float(np.max(np.diff(w.grid)))
    floor = h * h / 8.0
    if quad.rel_tol >= floor:
        return quad
    return replace(quad, rel_tol=floor, abs_tol=max(quad.abs_tol, floor * 1e-3))


def _validate_times(times) -> np.ndarray:
    arr = np.asarray(times, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("emission times must form a non-empty 1-D sequence")
    if np.any(arr < 0.0):
        raise ValueError("emission times must be >= 0")
    if np.any(np.diff(arr) < 0.0):
        raise ValueError("emission times must be sorted ascending")
    return arr


# -- wavepacket contractions (two-photon) ------------------------------------

def _pair_with_right_spectator(w: WavepacketN, s, tau_b):
    """Amplitude for extracting one photon at s with a right-mover left at tau_b."""
    return (_SQRT2 * w.component(2, (tau_b, s)) + w.component(1, (tau_b, s)))


def _pair_with_left_spectator(w: WavepacketN, s, tau_b):
    return (w.component(1, (s, tau_b)) + _SQRT2 * w.component(0, (s, tau_b)))


def _double_extraction(w: WavepacketN, s1, s2):
    """Amplitude for extracting both photons at (s1, s2); symmetric."""
    return (_SQRT2 * w.component(0, (s1, s2))
            + w.component(1, (s1, s2)) + w.component(1, (s2, s1))
            + _SQRT2 * w.component(2, (s1, s2)))


# -- ordered emission ---------------------------------------------------------

def _absorption_chain(spans, w: WavepacketN, quad: QuadratureSpec) -> complex:
    """(-1)^n <vacuum| windowed-absorption chain |w>, one window per photon."""
    n = len(spans)
    if w.n_photons != n:
        raise ValueError("window count must match the photon number")
    quad = _effective_quad(w, quad)
    sign = -1.0 if n % 2 else 1.0
    if w.kind == "separable":
        if n == 0:
            return complex(sign)
        profiles = [p for p, _ in w.entries]
        mat = np.empty((n, n), dtype=complex)
        for i, span in enumerate(spans):
            for j, p in enumerate(profiles):
                mat[i, j] = kernel_convolve(p, span, quad)
        return sign * w.separable_normalization() * _permanent(mat)
    # correlated two-photon state: nested window integral of the joint
    # extraction amplitude (bilinear interpolation supplies the integrand)
    span1, span2 = spans

    def integrand(t1, t2):
        return (np.exp(-(span1.end - t1)) * np.exp(-(span2.end - t2))
                * _double_extraction(w, t1, t2))

    width = min(0.5, w.min_timescale * 8.0)
    val = integrate_2d_box(integrand, (span1.start, span1.end),
                           (span2.start, span2.end), quad, panel_width=width)
    return sign * val


def ordered_emission_amplitude(times, state: InitialState | WavepacketN,
                               quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """Vacuum amplitude for the atom emitting at the ordered times.

    ``state`` may superpose a ground branch (all excitations in the
    field) and an excited branch (atom initially excited, one photon
    fewer); a bare wavepacket is treated as the ground branch.  The
    excited branch re-emits its stored excitation first: amplitude
    exp(-tau_1) times the absorption chain over the remaining windows.
    All kernel integrals here go through quadrature; the closed-form
    fast path lives in :func:`reflection_amplitude_f0`.
    """
    if isinstance(state, WavepacketN):
        state = InitialState(c_g=1.0, field_g=state)
    arr = _validate_times(times)
    n = arr.size
    if state.total_excitations != n:
        raise ValueError(
            f"state carries {state.total_excitations} excitations, got {n} emission times")
    amp = 0.0 + 0.0j
    if state.c_g != 0:
        spans = [KernelSpan(0.0, arr[0])]
        spans += [KernelSpan(arr[i], arr[i + 1]) for i in range(n - 1)]
        amp += state.c_g * _absorption_chain(spans, state.field_g, quad)
    if state.c_e != 0:
        spans = [KernelSpan(arr[i], arr[i + 1]) for i in range(n - 1)]
        amp += state.c_e * math.exp(-arr[0]) * _absorption_chain(spans, state.field_e, quad)
    return amp


def linear_beamsplitter_amplitude(tau1: float, tau2: float, w: WavepacketN,
                                  quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """Double-emission amplitude with both absorption windows opened from 0.

    This is the prediction of two independent linear scatterings (no
    saturation): each emission integrates the full history [0, tau_i]
    instead of the window between consecutive emissions.  The difference
    from :func:`ordered_emission_amplitude` is the nonlinear correction.
    """
    if w.n_photons != 2:
        raise ValueError("linear beamsplitter amplitude is a two-photon construct")
    quad = _effective_quad(w, quad)

    def integrand(t1, t2):
        return (np.exp(-(tau1 - t1)) * np.exp(-(tau2 - t2))
                * _double_extraction(w, t1, t2))

    if tau1 == 0.0 or tau2 == 0.0:
        return 0.0 + 0.0j
    width = min(0.5, w.min_timescale * 8.0) if w.kind == "correlated2" else min(
        0.5, w.min_timescale)
    return integrate_2d_box(integrand, (0.0, tau1), (0.0, tau2), quad,
                            panel_width=width)


def nonlinear_correction_B(tau1: float, tau2: float, w: WavepacketN,
                           quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """Saturation correction to the linear two-photon amplitude.

    B(t1, t2) = -exp(-|t2 - t1|) * Q(min(t1, t2)), with

        Q(tau) = double integral over [0, tau]^2 of
                 exp(-(tau - s1)) exp(-(tau - s2)) * (joint extraction)/sqrt 2.

    It removes the doubly-counted histories in which both absorptions
    precede the earlier emission; only the earlier emission time enters
    the square window.  Stated in the f0 normalization (divided by
    sqrt 2), so the raw amplitudes obey ordered = linear + sqrt(2) B.
    Symmetric under exchange of its arguments; at t1 = t2 the single
    earlier-window term applies once.
    """
    if w.n_photons != 2:
        raise ValueError("nonlinear correction is a two-photon construct")
    quad = _effective_quad(w, quad)
    if tau1 < 0.0 or tau2 < 0.0:
        raise ValueError("emission times must be >= 0")
    lo = min(tau1, tau2)
    hi = max(tau1, tau2)
    if lo == 0.0:
        return 0.0 + 0.0j

    def integrand(t1, t2):
        return (np.exp(-(lo - t1)) * np.exp(-(lo - t2))
                * _double_extraction(w, t1, t2) / _SQRT2)

    width = min(0.5, w.min_timescale * 8.0) if w.kind == "correlated2" else min(
        0.5, w.min_timescale)
    q = integrate_2d_box(integrand, (0.0, lo), (0.0, lo), quad, panel_width=width)
    return -math.exp(-(hi - lo)) * q


# -- reflection amplitude -----------------------------------------------------

def reflection_amplitude_f0(times, w: WavepacketN, t: float,
                            quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """Fully reflected N-photon amplitude f0 at detection times ``times``.

    Requires all photons incident from one side.  Causality gates the
    result: zero unless every emission time has been reached (tau_i <= t,
    boundary included).  For separable inputs the nested absorption
    integral factorizes over the windows into a permanent of kernel
    integrals, evaluated in closed form for exponential envelopes.  The
    sqrt(N!) bosonic bookkeeping is handled here: the returned f0 is the
    emission amplitude divided by sqrt(N!).
    """
    arr = np.sort(_validate_times(times))
    n = arr.size
    if w.n_photons != n:
        raise ValueError("photon number must match the number of detection times")
    if np.any(arr > t):
        return 0.0 + 0.0j
    if w.kind == "separable":
        dirs = {d for _, d in w.entries}
        if len(dirs) > 1:
            raise ValueError("reflection amplitude needs all photons on one side")
        profiles = [p for p, _ in w.entries]
        spans = [(0.0, arr[0])] + [(arr[i], arr[i + 1]) for i in range(n - 1)]
        mat = np.empty((n, n), dtype=complex)
        for i, (a, b) in enumerate(spans):
            for j, p in enumerate(profiles):
                if p.is_exponential:
                    mat[i, j] = h_closed_form(b, a, p.gamma_bw)
                else:
                    mat[i, j] = kernel_convolve(p, KernelSpan(a, b), quad)
        sign = -1.0 if n % 2 else 1.0
        amp = sign * w.separable_normalization() * _permanent(mat)
        return amp / math.sqrt(math.factorial(n))
    # correlated pair: one-sidedness means a single nonzero component
    live = {k for k, v in w.tensors.items() if np.any(v)}
    if not live <= {0} and not live <= {2}:
        raise ValueError("reflection amplitude needs all photons on one side")
    spans = [KernelSpan(0.0, arr[0]), KernelSpan(arr[0], arr[1])]
    return _absorption_chain(spans, w, quad) / _SQRT2


# -- two-photon output channels ----------------------------------------------

def two_photon_outputs(tau1: float, tau2: float, t: float, w: WavepacketN,
                       quad: QuadratureSpec = DEFAULT_QUAD) -> dict:
    """Channel amplitudes {LL, RL, RR} at detection times (tau1, tau2).

    Each channel sums four histories: neither photon touched the atom,
    either one was absorbed and re-emitted (the other passing as a
    spectator), or both were.  Emissions are gated by theta(t - tau_i)
    with the closed boundary.  Pointwise, quadrature-backed evaluation;
    the vectorized exponential fast path is :func:`two_photon_channel_grid`.
    """
    if w.n_photons != 2:
        raise ValueError("two-photon outputs need a two-photon input")
    if tau1 < 0.0 or tau2 < 0.0:
        raise ValueError("detection times must be >= 0")
    quad = _effective_quad(w, quad)
    g1 = 1.0 if tau1 <= t else 0.0
    g2 = 1.0 if tau2 <= t else 0.0
    xi0 = w.component(0, (tau1, tau2))
    xi1 = w.component(1, (tau1, tau2))
    xi2 = w.component(2, (tau1, tau2))
    width = min(0.5, w.min_timescale * (8.0 if w.kind == "correlated2" else 1.0))

    def emit_with_spectator(tau_a, pair_fn, tau_b):
        if tau_a == 0.0:
            return 0.0 + 0.0j
        def integrand(s):
            return np.exp(-(tau_a - s)) * pair_fn(w, s, tau_b)
        return -integrate(integrand, 0.0, tau_a, quad, panel_width=width)

    s_r1 = emit_with_spectator(tau1, _pair_with_right_spectator, tau2) if g1 else 0.0
    s_r2 = emit_with_spectator(tau2, _pair_with_right_spectator, tau1) if g2 else 0.0
    s_l1 = emit_with_spectator(tau1, _pair_with_left_spectator, tau2) if g1 else 0.0
    s_l2 = emit_with_spectator(tau2, _pair_with_left_spectator, tau1) if g2 else 0.0

    t2 = 0.0 + 0.0j
    if g1 and g2:
        lo, hi = sorted((tau1, tau2))
        spans = [KernelSpan(0.0, lo), KernelSpan(lo, hi)]
        t2 = _absorption_chain(spans, w, quad)

    f2 = (_SQRT2 * xi2 + g1 * s_r1 + g2 * s_r2 + g1 * g2 * t2) / _SQRT2
    f1 = xi1 + g1 * s_l1 + g2 * s_r2 + g1 * g2 * t2
    f0 = (_SQRT2 * xi0 + g1 * s_l1 + g2 * s_l2 + g1 * g2 * t2) / _SQRT2
    return {"LL": complex(f0), "RL": complex(f1), "RR": complex(f2)}


def exp_pair_channel_values(w: WavepacketN, channel: str, tau1, tau2, t: float) -> np.ndarray:
    """Closed-form channel amplitudes for two exponential envelopes.

    ``tau1`` and ``tau2`` broadcast together (meshes, axis pairs, or
    scalars).  The envelope tails past their truncation horizons are
    below exp(-20), so the analytic kernel closed form stands in for the
    truncated integral everywhere.
    """
    if channel not in CHANNELS:
        raise ValueError(f"channel must be one of {CHANNELS}")
    if not (w.all_exponential and w.n_photons == 2):
        raise ValueError("closed-form path needs two exponential envelopes")
    (p1, d1), (p2, d2) = w.entries
    cnorm = w.separable_normalization()
    T1 = np.asarray(tau1, dtype=float)
    T2 = np.asarray(tau2, dtype=float)
    T1, T2 = np.broadcast_arrays(T1, T2)
    zero1 = np.zeros_like(T1)
    zero2 = np.zeros_like(T2)
    g1 = (T1 <= t).astype(float)
    g2 = (T2 <= t).astype(float)

    k1_at1 = h_closed_form(T1, zero1, p1.gamma_bw)
    k2_at1 = h_closed_form(T1, zero1, p2.gamma_bw)
    k1_at2 = h_closed_form(T2, zero2, p1.gamma_bw)
    k2_at2 = h_closed_form(T2, zero2, p2.gamma_bw)
    v1_at1 = np.asarray(p1.value(T1), dtype=complex)
    v2_at1 = np.asarray(p2.value(T1), dtype=complex)
    v1_at2 = np.asarray(p1.value(T2), dtype=complex)
    v2_at2 = np.asarray(p2.value(T2), dtype=complex)

    def spectator_sum(direction, emit_first):
        # emission re-radiates the partner of each spectator photon whose
        # direction matches the observed channel slot
        spec_vals = (v1_at2, v2_at2) if emit_first else (v1_at1, v2_at1)
        kern_vals = (k2_at1, k1_at1) if emit_first else (k2_at2, k1_at2)
        total = 0.0
        for (dk, v_spec, k_partner) in zip((d1, d2), spec_vals, kern_vals):
            if dk is direction:
                total = total + v_spec * k_partner
        return -cnorm * total

    s_right_1 = spectator_sum(Direction.RIGHT, True)
    s_left_1 = spectator_sum(Direction.LEFT, True)
    s_right_2 = spectator_sum(Direction.RIGHT, False)
    s_left_2 = spectator_sum(Direction.LEFT, False)

    lo = np.minimum(T1, T2)
    hi = np.maximum(T1, T2)
    zl = np.zeros_like(lo)
    t2_term = cnorm * (h_closed_form(lo, zl, p1.gamma_bw)
                       * h_closed_form(hi, lo, p2.gamma_bw)
                       + h_closed_form(lo, zl, p2.gamma_bw)
                       * h_closed_form(hi, lo, p1.gamma_bw))

    if channel == "RR":
        xi2 = w.component(2, (T1, T2))
        return xi2 + (g1 * s_right_1 + g2 * s_right_2 + g1 * g2 * t2_term) / _SQRT2
    if channel == "RL":
        xi1 = w.component(1, (T1, T2))
        return xi1 + g1 * s_left_1 + g2 * s_right_2 + g1 * g2 * t2_term
    xi0 = w.component(0, (T1, T2))
    return xi0 + (g1 * s_left_1 + g2 * s_left_2 + g1 * g2 * t2_term) / _SQRT2


def two_photon_channel_grid(w: WavepacketN, channel: str, axis1, axis2, t: float,
                            quad: QuadratureSpec = DEFAULT_QUAD) -> "AmplitudeGrid":
    """Channel amplitude tensor over axis1 x axis2 at dynamical time t.

    Vectorized closed-form evaluation when every envelope is exponential
    (processed in row blocks to bound temporaries); otherwise falls back
    to the pointwise engine (slow, intended for small grids and
    correlated inputs).
    """
    if channel not in CHANNELS:
        raise ValueError(f"channel must be one of {CHANNELS}")
    ax1 = np.asarray(axis1, dtype=float)
    ax2 = np.asarray(axis2, dtype=float)
    if np.any(ax1 < 0.0) or np.any(ax2 < 0.0):
        raise ValueError("detection-time axes must be >= 0")
    if w.all_exponential and w.n_photons == 2:
        values = np.empty((ax1.size, ax2.size), dtype=complex)
        block = max(1, int(4_000_000 // max(ax2.size, 1)))
        for i0 in range(0, ax1.size, block):
            rows = ax1[i0:i0 + block, None]
            values[i0:i0 + block] = exp_pair_channel_values(
                w, channel, rows, ax2[None, :], t)
    else:
        values = np.empty((ax1.size, ax2.size), dtype=complex)
        for i, t1 in enumerate(ax1):
            for j, t2 in enumerate(ax2):
                values[i, j] = two_photon_outputs(t1, t2, t, w, quad)[channel]
    return AmplitudeGrid(axes=(ax1, ax2), values=values, channel=channel,
                         dynamical_time=t)


# -- grids and serialization --------------------------------------------------

@dataclass
class AmplitudeGrid:
    """Sampled channel amplitude over a tensor grid of detection times."""
    axes: tuple
    values: np.ndarray
    channel: str
    dynamical_time: float

    def __post_init__(self):
        self.axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        expected = tuple(a.size for a in self.axes)
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape} does not match axes {expected}")
        for a in self.axes:
            if np.any(np.diff(a) <= 0.0):
                raise ValueError("grid axes must be strictly increasing")

    @property
    def ndim(self) -> int:
        return len(self.axes)

    def max_asymmetry(self) -> float:
        """Largest |f(t1, t2) - f(t2, t1)| on shared axes (symmetric channels)."""
        if self.ndim != 2 or self.axes[0].size != self.axes[1].size:
            raise ValueError("asymmetry check needs a square 2-D grid")
        return float(np.max(np.abs(self.values - self.values.T)))


def _fmt(x: float) -> str:
    return f"{x:.11e}"


def write_grid_csv(grid: AmplitudeGrid, csv_path, header_path=None) -> None:
    """Deterministic CSV dump: one row per node, 12 significant digits."""
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        tags = [f"tau{i + 1}" for i in range(grid.ndim)]
        writer.writerow(tags + ["t", "re", "im"])
        meshes = np.meshgrid(*grid.axes, indexing="ij")
        flat = [m.ravel() for m in meshes]
        vals = grid.values.ravel()
        for idx in range(vals.size):
            row = [_fmt(m[idx]) for m in flat]
            row.append(_fmt(grid.dynamical_time))
            row.append(_fmt(vals[idx].real))
            row.append(_fmt(vals[idx].imag))
            writer.writerow(row)
    if header_path is not None:
        header = {
            "channel": grid.channel,
            "dynamical_time": grid.dynamical_time,
            "axes": [{"points": int(a.size), "min": float(a[0]), "max": float(a[-1])}
                     for a in grid.axes],
            "columns": [f"tau{i + 1}" for i in range(grid.ndim)] + ["t", "re", "im"],
        }
        with open(header_path, "w") as fh:
            json.dump(header, fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_grid_csv(csv_path, header_path) -> AmplitudeGrid:
    with open(header_path) as fh:
        header = json.load(fh)
    ndim = len(header["axes"])
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    data = np.atleast_2d(data)
    axes = [np.unique(data[:, i]) for i in range(ndim)]
    shape = tuple(a.size for a in axes)
    vals = (data[:, ndim + 1] + 1j * data[:, ndim + 2]).reshape(shape)
    return AmplitudeGrid(axes=tuple(axes), values=vals,
                         channel=header["channel"],
                         dynamical_time=float(header["dynamical_time"]))
