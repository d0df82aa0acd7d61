"""Post-run diagnostics: field spectra, band energies, convergence summaries.

The spectrum is the one-sided discrete Fourier transform of the field
samples on an angular-frequency axis, normalized so the squared
magnitudes sum to the squared field samples (discrete Parseval). No
window is applied by default: the update envelope already takes the
field to zero at both ends. Zero-padding is available for smoother
plots and is display-only.
"""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Spectrum:
    """One-sided magnitude spectrum of a sampled field.

    ``magnitudes[j]`` is the weight of angular frequency
    ``frequencies[j]``; ``normalization`` is the total spectral energy
    (sum of squared magnitudes), equal to the sum of squared samples.
    """

    frequencies: np.ndarray
    magnitudes: np.ndarray
    normalization: float


def field_spectrum(field, hann_window=False, zero_pad=1):
    """Magnitude spectrum of a control field.

    Args:
        field: the sampled field.
        hann_window: apply a Hann window before transforming (optional;
            the shaped fields are already tapered).
        zero_pad: integer >= 1; transform length multiplier for display
            smoothness. Parseval normalization refers to the padded
            sequence, which has the same energy as the raw one.
    """
    n = field.n_steps
    if n < 2:
        raise ValueError("spectrum needs at least 2 samples")
    if int(zero_pad) < 1:
        raise ValueError("zero_pad must be >= 1")
    samples = np.asarray(field.samples, dtype=float)
    if hann_window:
        samples = samples * np.hanning(n)
    n_fft = n * int(zero_pad)
    coeff = np.fft.rfft(samples, n=n_fft)
    # weights making sum(magnitudes^2) == sum(samples^2) exactly
    weights = np.full(coeff.shape[0], 2.0)
    weights[0] = 1.0
    if n_fft % 2 == 0:
        weights[-1] = 1.0
    magnitudes = np.abs(coeff) * np.sqrt(weights / n_fft)
    # rfftfreq is in cycles per unit time; the models use angular units
    frequencies = 2.0 * np.pi * np.fft.rfftfreq(n_fft, d=field.dt)
    return Spectrum(frequencies=frequencies, magnitudes=magnitudes,
                    normalization=float(np.sum(magnitudes**2)))


def band_energy_fraction(spec, lo, hi):
    """Fraction of spectral energy with lo <= omega < hi (0 for a zero field)."""
    if spec.normalization <= 0:
        return 0.0
    mask = (spec.frequencies >= lo) & (spec.frequencies < hi)
    return float(np.sum(spec.magnitudes[mask] ** 2) / spec.normalization)


@dataclass(frozen=True)
class ConvergenceSummary:
    iterations_run: int
    iterations_to_convergence: int
    final_j: float
    final_fidelity: float
    final_leakage: float
    monotonicity_violations: int
    status: str


def convergence_summary(report, violation_tol=1e-10):
    """Condense an optimization report.

    ``monotonicity_violations`` counts consecutive-record objective
    decreases beyond ``violation_tol`` over the recorded series
    (guess record included). Fields are None when no iterations ran.
    """
    records = report.all_records
    if len(records) <= 1:
        return ConvergenceSummary(
            iterations_run=0,
            iterations_to_convergence=None,
            final_j=None if not records else records[-1].j,
            final_fidelity=None if not records else records[-1].fidelity,
            final_leakage=None if not records else records[-1].leakage,
            monotonicity_violations=0,
            status=report.status,
        )
    js = np.array([r.j for r in records])
    violations = int(np.sum(np.diff(js) < -violation_tol))
    last = records[-1]
    return ConvergenceSummary(
        iterations_run=len(records) - 1,
        iterations_to_convergence=(len(records) - 1) if report.converged else None,
        final_j=last.j,
        final_fidelity=last.fidelity,
        final_leakage=last.leakage,
        monotonicity_violations=violations,
        status=report.status,
    )
