#include "trapablate/beamoptics.hpp"
#include "trapablate/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <doctest.h>

#include <cmath>
#include <random>

using namespace trapablate;

namespace {

BeamSpec golden_beam() {
    BeamSpec b;
    b.focus_position = Vec3(715e-6, 44e-6, 60e-6);
    b.propagation_axis = Vec3::UnitY();
    return b;
}

// Fixed-order Gauss-Legendre on equal panels.
template <class F>
double composite_gauss(F f, double a, double b, int panels) {
    using boost::math::quadrature::gauss;
    const double h = (b - a) / panels;
    double sum = 0.0;
    for (int i = 0; i < panels; ++i) {
        sum += gauss<double, 20>::integrate(f, a + i * h, a + (i + 1) * h);
    }
    return sum;
}

} // namespace

TEST_SUITE("beamoptics") {

TEST_CASE("focused waist arithmetic") {
    BeamSpec b;
    const double w0 = focused_waist(b);
    CHECK(w0 == doctest::Approx(29.67e-6).epsilon(0.1e-6 / 29.67e-6));
    CHECK(w0 == doctest::Approx(532e-9 * 0.150 / (M_PI * 0.856e-3)).epsilon(1e-14));
    BeamSpec doubled = b;
    doubled.input_waist_radius *= 2.0;
    CHECK(focused_waist(doubled) == doctest::Approx(w0 / 2.0).epsilon(1e-15));
    BeamSpec twenty = b;
    twenty.input_waist_radius = 532e-9 * 0.150 / (M_PI * 20e-6);
    CHECK(twenty.input_waist_radius == doctest::Approx(1.270e-3).epsilon(1e-3));
    CHECK(focused_waist(twenty) == doctest::Approx(20e-6).epsilon(1e-12));
}

TEST_CASE("Rayleigh range and beam radius") {
    const double zr = rayleigh_range(20e-6, 532e-9);
    CHECK(zr == doctest::Approx(2.362e-3).epsilon(1e-3));
    CHECK(beam_radius(20e-6, 0.0, 532e-9) == 20e-6);
    CHECK(beam_radius(20e-6, zr, 532e-9) == doctest::Approx(28.28e-6).epsilon(1e-3));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uz(0, 0.05);
    for (int i = 0; i < 20; ++i) {
        const double z = uz(rng);
        CHECK(beam_radius(20e-6, z, 532e-9) == beam_radius(20e-6, -z, 532e-9));
    }
    CHECK_THROWS_AS(rayleigh_range(0.0, 532e-9), DomainError);
}

TEST_CASE("on-axis and off-axis fluence") {
    const BeamSpec b = golden_beam();
    const double w0 = focused_waist(b);
    CHECK(peak_fluence(94e-6, 29.67e-6) == doctest::Approx(6.80).epsilon(0.01));
    CHECK(fluence_at(94e-6, b, b.focus_position) == doctest::Approx(2 * 94e-6 / (M_PI * w0 * w0) / 1e4));
    const double off = fluence_at(94e-6, b, b.focus_position - Vec3(0, 0, 60e-6));
    CHECK(off == doctest::Approx(1.9e-3).epsilon(0.10));
    CHECK(off == doctest::Approx(6.8 * std::exp(-2.0 * std::pow(60.0 / 29.67, 2))).epsilon(0.01));
    CHECK(fluence_at(0.0, b, b.focus_position) == 0.0);
    CHECK(pulse_energy_for_peak_fluence(peak_fluence(5e-5, w0), w0) == doctest::Approx(5e-5).epsilon(1e-14));
}

TEST_CASE("fluence integrates to the pulse energy on any transverse plane") {
    const BeamSpec b = golden_beam();
    const double energy = 80e-6;
    for (double dy : {0.0, 1e-3, -4e-3}) {
        const double w = beam_radius(focused_waist(b), dy, b.wavelength);
        const double span = 5.0 * w;
        auto inner = [&](double x) {
            auto f = [&](double z) {
                return fluence_at(energy, b, b.focus_position + Vec3(x, dy, z)) * kJoulePerM2PerJoulePerCm2;
            };
            return composite_gauss(f, -span, span, 8);
        };
        const double total = composite_gauss(inner, -span, span, 8);
        CHECK(total == doctest::Approx(energy).epsilon(1e-3));
    }
}

TEST_CASE("fluence peaks on axis at the focus") {
    const BeamSpec b = golden_beam();
    const double f0 = fluence_at(1e-4, b, b.focus_position);
    for (double dx = -50e-6; dx <= 50e-6; dx += 10e-6) {
        for (double dy = -2e-3; dy <= 2e-3; dy += 0.5e-3) {
            for (double dz = -50e-6; dz <= 50e-6; dz += 10e-6) {
                CHECK(fluence_at(1e-4, b, b.focus_position + Vec3(dx, dy, dz)) <= f0);
            }
        }
    }
}

TEST_CASE("percent calibration") {
    const PowerCalibration cal;
    CHECK(percent_to_fluence(cal, 10) == doctest::Approx(0.56));
    CHECK(percent_to_fluence(cal, 80) == doctest::Approx(6.8));
    CHECK(percent_to_fluence(cal, 45) == doctest::Approx(0.56 + 6.24 * 35.0 / 70.0).epsilon(1e-12));
    CHECK(percent_to_fluence(cal, 45) == doctest::Approx(3.68));
    double prev = 0.0;
    for (double p = 10; p <= 80; p += 0.5) {
        const double f = percent_to_fluence(cal, p);
        CHECK(f >= prev);
        prev = f;
    }
    CHECK_THROWS_AS(percent_to_fluence(cal, 9.9), RangeError);
    CHECK_THROWS_AS(percent_to_fluence(cal, 80.1), RangeError);
    PowerCalibration bad;
    bad.anchors = {{10, 1.0}, {20, 0.5}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("chip exposure profile") {
    const ChipLayout chip = default_layout();
    const BeamSpec b = golden_beam();
    const double w0 = focused_waist(b);
    const double energy = pulse_energy_for_peak_fluence(6.8, w0);
    const ExposureProfile p60 = chip_exposure_profile(b, energy, chip, 10e-6);
    CHECK(p60.maximum.fluence == doctest::Approx(1.9e-3).epsilon(0.10));
    CHECK_FALSE(p60.axis_intersects_chip);
    for (const auto& s : p60.samples) {
        CHECK(s.fluence <= p60.maximum.fluence);
    }
    double prev = p60.maximum.fluence;
    for (double h : {80e-6, 100e-6}) {
        BeamSpec raised = b;
        raised.focus_position.z() = h;
        const double m = chip_exposure_profile(raised, energy, chip, 10e-6).maximum.fluence;
        CHECK(m < prev);
        prev = m;
    }
    const ExposureProfile dark = chip_exposure_profile(b, 0.0, chip, 20e-6);
    for (const auto& s : dark.samples) {
        CHECK(s.fluence == 0.0);
    }
    CHECK_THROWS_AS(chip_exposure_profile(b, energy, chip, 0.0), DomainError);
}

}
