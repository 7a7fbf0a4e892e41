#pragma once

#include "trapablate/ablation.hpp"
#include "trapablate/trapmodel.hpp"

#include <cstdint>
#include <vector>

namespace trapablate {

struct HeightSample {
    double beam_height = 0.0; // [m]
    double intensity = 0.0;   // arbitrary units; 1 = full beam on the defect
};

struct HeightScanTrace {
    std::vector<HeightSample> samples;
    double beam_waist = 0.0;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    /// Throws DomainError unless heights strictly increase.
    void validate() const;
};

/// n evenly spaced beam heights from lo to hi inclusive.
std::vector<double> scan_heights(double lo, double hi, std::size_t n);

/// Fraction of a Gaussian sheet of 1/e^2 radius w centred at z_b that falls
/// on [0, h]: 1/2 [erf(sqrt2 (h - z_b)/w) + erf(sqrt2 z_b/w)].
double height_scan_overlap(double height, double waist, double beam_height);

/// Noiseless overlap plus N(0, noise_sigma) per sample. Noisy samples are not
/// clipped, so a noise-only trace averages to zero.
HeightScanTrace simulate_height_scan(double defect_height, double waist, const std::vector<double>& heights,
                                     double noise_sigma, std::uint64_t seed);

struct HeightEstimate {
    double height = 0.0;
    double uncertainty = 0.0; // half the mean sample spacing
    double fwhm = 0.0;        // between the outermost half-maximum crossings
    double peak = 0.0;
    double noise = 0.0;       // standard deviation of the scan tails
};

/// Full width at half maximum of the noiseless trace for (height, waist).
double height_scan_fwhm(double height, double waist);

/// Half-maximum edges of the trace, converted to a height by inverting
/// height_scan_fwhm for the trace's beam waist. Throws EstimationError when
/// the peak does not clear 10x the tail noise or no crossings exist.
HeightEstimate estimate_height(const HeightScanTrace& trace);

struct TrialRecord {
    long long n_trials = 0;
    long long n_failures = 0;
    double confidence = 0.95;

    void validate() const;
};

/// One-sided exact bound 1 - (1 - c)^(1/n) for zero observed failures.
double zero_failure_upper_bound(const TrialRecord& rec);

/// Clopper-Pearson one-sided upper limit on the failure probability.
double clopper_pearson_upper(const TrialRecord& rec);

/// Fraction of a guide beam (circular Gaussian, 1/e^2 radius `waist`,
/// centred at (x, z) = (beam_x, beam_z)) striking the defect's remaining
/// side-view rectangle.
double guide_scattering(const DefectState& defect, double beam_x, double beam_z, double waist);

} // namespace trapablate
