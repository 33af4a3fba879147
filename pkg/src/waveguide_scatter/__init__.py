"""Few-photon scattering on a two-level emitter in a 1-D waveguide.

Time-domain amplitudes from the emitter memory kernel, closed-form and
numeric reversal probabilities, excitation dynamics, output-channel
grids, and a frequency-domain bridge for cross-validation.
"""

from .model import (
    Direction,
    InitialState,
    NormalizationError,
    PulseProfile,
    WavepacketN,
    default_horizon,
    excited_atom,
    make_exponential_profile,
    make_product_wavepacket,
    photons_in_ground,
    profile_overlap,
    wavepacket_component,
    wavepacket_from_json,
    wavepacket_to_json,
)
from .quadrature import (
    ConvergenceError,
    DEFAULT_QUAD,
    QuadratureSpec,
    gauss_legendre_nodes,
    integrate,
    integrate_2d_box,
    integrate_semi_infinite,
)
from .kernel import (
    GAMMA_DEGENERATE_TOL,
    KernelSpan,
    h_closed_form,
    kernel_convolve,
    weighted_h_norm_integral,
)
from .amplitudes import (
    AmplitudeGrid,
    CHANNELS,
    exp_pair_channel_values,
    linear_beamsplitter_amplitude,
    load_grid_csv,
    nonlinear_correction_B,
    ordered_emission_amplitude,
    reflection_amplitude_f0,
    two_photon_channel_grid,
    two_photon_outputs,
    write_grid_csv,
)
from .observables import (
    ExcitationTrace,
    ReflectionResult,
    excitation_probability,
    excitation_trace,
    reflection_probability_closed,
    reflection_probability_numeric,
    unitarity_check_two_photon,
    worker_count,
)
from .spectral import (
    ChannelComparison,
    ComparisonReport,
    FreqAmplitudeGrid,
    appendix_comparison,
    fourier_bridge,
    freq_channel_grid,
    freq_nonlinear_correction,
    freq_two_photon_outputs,
    lorentzian_mode,
    single_photon_bridge_error,
    single_photon_r_t,
    single_photon_reflection_freq,
)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeGrid",
    "CHANNELS",
    "ChannelComparison",
    "ComparisonReport",
    "ConvergenceError",
    "DEFAULT_QUAD",
    "Direction",
    "ExcitationTrace",
    "FreqAmplitudeGrid",
    "GAMMA_DEGENERATE_TOL",
    "InitialState",
    "KernelSpan",
    "NormalizationError",
    "PulseProfile",
    "QuadratureSpec",
    "ReflectionResult",
    "WavepacketN",
    "appendix_comparison",
    "default_horizon",
    "excitation_probability",
    "excitation_trace",
    "excited_atom",
    "exp_pair_channel_values",
    "fourier_bridge",
    "freq_channel_grid",
    "freq_nonlinear_correction",
    "freq_two_photon_outputs",
    "gauss_legendre_nodes",
    "h_closed_form",
    "integrate",
    "integrate_2d_box",
    "integrate_semi_infinite",
    "kernel_convolve",
    "linear_beamsplitter_amplitude",
    "load_grid_csv",
    "lorentzian_mode",
    "make_exponential_profile",
    "make_product_wavepacket",
    "nonlinear_correction_B",
    "ordered_emission_amplitude",
    "photons_in_ground",
    "profile_overlap",
    "reflection_amplitude_f0",
    "reflection_probability_closed",
    "reflection_probability_numeric",
    "single_photon_bridge_error",
    "single_photon_r_t",
    "single_photon_reflection_freq",
    "two_photon_channel_grid",
    "two_photon_outputs",
    "unitarity_check_two_photon",
    "wavepacket_component",
    "wavepacket_from_json",
    "wavepacket_to_json",
    "weighted_h_norm_integral",
    "write_grid_csv",
    "worker_count",
]
