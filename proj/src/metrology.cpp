#include "trapablate/metrology.hpp"

#include "trapablate/errors.hpp"
#include "trapablate/rng.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace trapablate {
namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

double interval_fraction(double lo, double hi, double center, double waist) {
    return 0.5 * (std::erf(kSqrt2 * (hi - center) / waist) - std::erf(kSqrt2 * (lo - center) / waist));
}

double crossing(const HeightSample& a, const HeightSample& b, double level) {
    const double t = (level - a.intensity) / (b.intensity - a.intensity);
    return a.beam_height + t * (b.beam_height - a.beam_height);
}

template <class F>
double bracket_root(F f, double lo, double hi) {
    std::uintmax_t max_iter = 200;
    const auto r =
        boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), max_iter);
    return 0.5 * (r.first + r.second);
}

} // namespace

void HeightScanTrace::validate() const {
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (!(samples[i].beam_height > samples[i - 1].beam_height)) {
            throw DomainError("scan heights must be strictly increasing");
        }
    }
}

std::vector<double> scan_heights(double lo, double hi, std::size_t n) {
    if (n < 2 || !(hi > lo)) {
        throw DomainError("scan needs n >= 2 and hi > lo");
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return out;
}

double height_scan_overlap(double height, double waist, double beam_height) {
    if (height < 0.0) {
        throw DomainError("defect height must be non-negative");
    }
    if (!(waist > 0.0)) {
        throw DomainError("beam waist must be positive");
    }
    return interval_fraction(0.0, height, beam_height, waist);
}

HeightScanTrace simulate_height_scan(double defect_height, double waist, const std::vector<double>& heights,
                                     double noise_sigma, std::uint64_t seed) {
    if (noise_sigma < 0.0) {
        throw DomainError("noise sigma must be non-negative");
    }
    HeightScanTrace trace;
    trace.beam_waist = waist;
    trace.noise_sigma = noise_sigma;
    trace.seed = seed;
    NormalSource rng(seed);
    for (double zb : heights) {
        double v = height_scan_overlap(defect_height, waist, zb);
        if (noise_sigma > 0.0) {
            v += noise_sigma * rng.normal();
        }
        trace.samples.push_back({zb, v});
    }
    trace.validate();
    return trace;
}

double height_scan_fwhm(double height, double waist) {
    if (!(height > 0.0) || !(waist > 0.0)) {
        throw DomainError("height and waist must be positive");
    }
    const double center = 0.5 * height;
    const double half = 0.5 * height_scan_overlap(height, waist, center);
    const double lo =
        bracket_root([&](double z) { return height_scan_overlap(height, waist, z) - half; }, -4.0 * waist, center);
    return height - 2.0 * lo;
}

HeightEstimate estimate_height(const HeightScanTrace& trace) {
    trace.validate();
    const auto& s = trace.samples;
    const std::size_t n = s.size();
    if (n < 20) {
        throw DomainError("height estimate needs at least 20 samples");
    }
    if (!(trace.beam_waist > 0.0)) {
        throw DomainError("trace has no beam waist");
    }

    HeightEstimate est;
    const std::size_t tail = std::max<std::size_t>(3, n / 10);
    std::vector<double> tails;
    for (std::size_t i = 0; i < tail; ++i) {
        tails.push_back(s[i].intensity);
        tails.push_back(s[n - 1 - i].intensity);
    }
    double mean = 0.0;
    for (double v : tails) {
        mean += v;
    }
    mean /= static_cast<double>(tails.size());
    double var = 0.0;
    for (double v : tails) {
        var += (v - mean) * (v - mean);
    }
    est.noise = std::sqrt(var / static_cast<double>(tails.size() - 1));

    for (std::size_t i = 1; i + 1 < n; ++i) {
        est.peak = std::max(est.peak, (s[i - 1].intensity + s[i].intensity + s[i + 1].intensity) / 3.0);
    }
    if (!(est.peak > 0.0) || est.peak < 10.0 * est.noise) {
        throw EstimationError(
            fmt::format("no defect signal: peak {:.3g} against tail noise {:.3g}", est.peak, est.noise));
    }

    const double half = 0.5 * est.peak;
    std::size_t first = 0;
    while (first < n && s[first].intensity < half) {
        ++first;
    }
    std::size_t last = n - 1;
    while (last > 0 && s[last].intensity < half) {
        --last;
    }
    if (first == 0 || last == n - 1 || first > last) {
        throw EstimationError("half-maximum crossings not found inside the scan range");
    }
    est.fwhm = crossing(s[last + 1], s[last], half) - crossing(s[first - 1], s[first], half);
    est.uncertainty = 0.5 * (s.back().beam_height - s.front().beam_height) / static_cast<double>(n - 1);

    const double w = trace.beam_waist;
    auto mismatch = [&](double h) { return height_scan_fwhm(h, w) - est.fwhm; };
    const double tiny = 1e-6 * w;
    if (mismatch(tiny) >= 0.0) {
        est.height = 0.0;
        return est;
    }
    double hi = std::max(est.fwhm, w);
    while (mismatch(hi) < 0.0) {
        hi *= 2.0;
    }
    est.height = bracket_root(mismatch, tiny, hi);
    return est;
}

void TrialRecord::validate() const {
    if (n_trials < 1 || n_failures < 0 || n_failures > n_trials) {
        throw DomainError("trial record needs 0 <= failures <= trials and trials >= 1");
    }
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw DomainError("confidence must lie in (0, 1)");
    }
}

double zero_failure_upper_bound(const TrialRecord& rec) {
    rec.validate();
    if (rec.n_failures != 0) {
        throw DomainError("zero-failure bound needs n_failures = 0; use clopper_pearson_upper");
    }
    return -std::expm1(std::log1p(-rec.confidence) / static_cast<double>(rec.n_trials));
}

double clopper_pearson_upper(const TrialRecord& rec) {
    rec.validate();
    if (rec.n_failures == rec.n_trials) {
        return 1.0;
    }
    return boost::math::ibeta_inv(static_cast<double>(rec.n_failures + 1),
                                  static_cast<double>(rec.n_trials - rec.n_failures), rec.confidence);
}

double guide_scattering(const DefectState& defect, double beam_x, double beam_z, double waist) {
    if (!(waist > 0.0)) {
        throw DomainError("guide beam waist must be positive");
    }
    if (defect.cleared || !(defect.height > 0.0) || !(defect.cross_section > 0.0)) {
        return 0.0;
    }
    const double half_axial = 0.5 * defect.descriptor.footprint_axial;
    const double cx = defect.descriptor.center.x();
    return interval_fraction(cx - half_axial, cx + half_axial, beam_x, waist) *
           interval_fraction(0.0, defect.height, beam_z, waist);
}

} // namespace trapablate
