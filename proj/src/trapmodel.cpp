#include "trapablate/trapmodel.hpp"

#include "trapablate/errors.hpp"

#include <fmt/format.h>

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace trapablate {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_above_plane(const Vec3& p) {
    if (!(p.z() > 0.0)) {
        throw DomainError("point must lie strictly above the chip plane (z > 0)");
    }
}

void require_matching(const ChipLayout& chip, const Voltages& v) {
    if (static_cast<std::size_t>(v.size()) != chip.size()) {
        throw DomainError("voltage vector has " + std::to_string(v.size()) + " entries, chip has " +
                          std::to_string(chip.size()) + " electrodes");
    }
}

// One rectangle corner of the solid-angle expression. a = x_corner - x,
// b = y_corner - y. The rectangle potential is the signed sum over corners
// divided by 2 pi.
struct Corner {
    double a;
    double b;
    double sign;
};

std::array<Corner, 4> corners(const Electrode& e, const Vec3& p) {
    const double a1 = e.x.min - p.x();
    const double a2 = e.x.max - p.x();
    const double b1 = e.y.min - p.y();
    const double b2 = e.y.max - p.y();
    return {Corner{a2, b2, 1.0}, Corner{a1, b2, -1.0}, Corner{a2, b1, -1.0}, Corner{a1, b1, 1.0}};
}

bool overlaps(const Electrode& lhs, const Electrode& rhs) {
    const double ox = std::min(lhs.x.max, rhs.x.max) - std::max(lhs.x.min, rhs.x.min);
    const double oy = std::min(lhs.y.max, rhs.y.max) - std::max(lhs.y.min, rhs.y.min);
    return ox > 1e-12 && oy > 1e-12;
}

} // namespace

std::string to_string(ElectrodeRole role) {
    switch (role) {
    case ElectrodeRole::DC:
        return "DC";
    case ElectrodeRole::RF:
        return "RF";
    case ElectrodeRole::RotationA:
        return "RotationA";
    case ElectrodeRole::RotationB:
        return "RotationB";
    }
    return "DC";
}

ElectrodeRole parse_electrode_role(const std::string& text) {
    if (text == "DC") {
        return ElectrodeRole::DC;
    }
    if (text == "RF") {
        return ElectrodeRole::RF;
    }
    if (text == "RotationA") {
        return ElectrodeRole::RotationA;
    }
    if (text == "RotationB") {
        return ElectrodeRole::RotationB;
    }
    throw ConfigError("unknown electrode role: " + text);
}

std::size_t ChipLayout::find(ElectrodeRole role, int index) const {
    for (std::size_t i = 0; i < electrodes.size(); ++i) {
        if (electrodes[i].role == role && electrodes[i].index == index) {
            return i;
        }
    }
    throw ConfigError("no " + to_string(role) + " electrode with index " + std::to_string(index));
}

std::size_t ChipLayout::rail(ElectrodeRole role) const {
    const auto found = indices_of(role);
    if (found.size() != 1) {
        throw ConfigError("expected exactly one " + to_string(role) + " rail, found " +
                          std::to_string(found.size()));
    }
    return found.front();
}

std::vector<std::size_t> ChipLayout::indices_of(ElectrodeRole role) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < electrodes.size(); ++i) {
        if (electrodes[i].role == role) {
            out.push_back(i);
        }
    }
    return out;
}

Interval ChipLayout::x_span() const {
    Interval span{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& e : electrodes) {
        span.min = std::min(span.min, e.x.min);
        span.max = std::max(span.max, e.x.max);
    }
    return span;
}

Interval ChipLayout::y_span() const {
    Interval span{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& e : electrodes) {
        span.min = std::min(span.min, e.y.min);
        span.max = std::max(span.max, e.y.max);
    }
    return span;
}

Interval ChipLayout::dc_span() const {
    Interval span{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& e : electrodes) {
        if (e.role == ElectrodeRole::DC) {
            span.min = std::min(span.min, e.x.min);
            span.max = std::max(span.max, e.x.max);
        }
    }
    if (span.min > span.max) {
        throw ConfigError("chip has no DC electrodes");
    }
    return span;
}

void ChipLayout::validate() const {
    if (electrodes.empty()) {
        throw ConfigError("chip has no electrodes");
    }
    if (!(ion_height > 0.0)) {
        throw ConfigError("ion_height must be positive");
    }
    if (!(dc_pitch > 0.0)) {
        throw ConfigError("dc_pitch must be positive");
    }
    for (std::size_t i = 0; i < electrodes.size(); ++i) {
        const auto& e = electrodes[i];
        if (!(e.x.min < e.x.max) || !(e.y.min < e.y.max)) {
            throw ConfigError("electrode " + e.name + " has an empty extent");
        }
        for (std::size_t j = i + 1; j < electrodes.size(); ++j) {
            const auto& other = electrodes[j];
            if (e.role == other.role && overlaps(e, other)) {
                throw ConfigError("electrodes " + e.name + " and " + other.name + " overlap");
            }
            if (e.role == other.role && e.index == other.index) {
                throw ConfigError("duplicate " + to_string(e.role) + " index " + std::to_string(e.index));
            }
        }
    }
    rail(ElectrodeRole::RotationA);
    rail(ElectrodeRole::RotationB);
}

ChipLayout default_layout() {
    constexpr double um = 1e-6;
    ChipLayout chip;
    chip.dc_pitch = 110.0 * um;
    chip.ion_height = 100.0 * um;

    // Centre DC rail, electrode k centred at (k - 1) * pitch.
    for (int k = 1; k <= 11; ++k) {
        const double xc = (k - 1) * chip.dc_pitch;
        chip.electrodes.push_back(Electrode{"DC" + std::to_string(k), k, ElectrodeRole::DC,
                                            {xc - 0.5 * chip.dc_pitch, xc + 0.5 * chip.dc_pitch},
                                            {-70.0 * um, 70.0 * um}});
    }
    // RF null of two gapless strips [a, b] sits at sqrt(a b) = 100 um.
    const Interval rails_x{-500.0 * um, 1600.0 * um};
    const double rf_inner = 70.0 * um;
    const double rf_outer = (100.0 * um) * (100.0 * um) / rf_inner;
    chip.electrodes.push_back(Electrode{"RF1", 1, ElectrodeRole::RF, rails_x, {rf_inner, rf_outer}});
    chip.electrodes.push_back(Electrode{"RF2", 2, ElectrodeRole::RF, rails_x, {-rf_outer, -rf_inner}});
    chip.electrodes.push_back(
        Electrode{"RotA", 1, ElectrodeRole::RotationA, rails_x, {300.0 * um, 420.0 * um}});
    chip.electrodes.push_back(
        Electrode{"RotB", 1, ElectrodeRole::RotationB, rails_x, {-420.0 * um, -300.0 * um}});
    return chip;
}

void DefectDescriptor::validate() const {
    if (!(footprint_axial > 0.0) || !(footprint_transverse > 0.0)) {
        throw ConfigError("defect footprint extents must be positive");
    }
    if (!(height > 0.0)) {
        throw ConfigError("defect height must be positive");
    }
    if (!(ablation_threshold > 0.0)) {
        throw ConfigError("defect ablation_threshold must be positive");
    }
}

double electrode_basis_potential(const Electrode& e, const Vec3& p) {
    require_above_plane(p);
    const double z = p.z();
    double sum = 0.0;
    for (const auto& c : corners(e, p)) {
        const double r = std::sqrt(c.a * c.a + c.b * c.b + z * z);
        sum += c.sign * std::atan2(c.a * c.b, z * r);
    }
    return sum / kTwoPi;
}

Vec3 electrode_basis_gradient(const Electrode& e, const Vec3& p) {
    require_above_plane(p);
    const double z = p.z();
    const double z2 = z * z;
    Vec3 g = Vec3::Zero();
    for (const auto& c : corners(e, p)) {
        const double a2 = c.a * c.a;
        const double b2 = c.b * c.b;
        const double r = std::sqrt(a2 + b2 + z2);
        const double fa = c.b * z / ((a2 + z2) * r);
        const double fb = c.a * z / ((b2 + z2) * r);
        const double fz = -c.a * c.b * (a2 + b2 + 2.0 * z2) / ((a2 + z2) * (b2 + z2) * r);
        // d/dx = -d/da, d/dy = -d/db
        g += c.sign * Vec3(-fa, -fb, fz);
    }
    return g / kTwoPi;
}

Mat3 electrode_basis_hessian(const Electrode& e, const Vec3& p) {
    require_above_plane(p);
    const double z = p.z();
    const double z2 = z * z;
    Mat3 h = Mat3::Zero();
    for (const auto& c : corners(e, p)) {
        const double a2 = c.a * c.a;
        const double b2 = c.b * c.b;
        const double r2 = a2 + b2 + z2;
        const double r = std::sqrt(r2);
        const double r3 = r2 * r;
        const double az = a2 + z2;
        const double bz = b2 + z2;
        const double faa = -c.a * c.b * z * (2.0 / (az * az * r) + 1.0 / (az * r3));
        const double fbb = -c.a * c.b * z * (2.0 / (bz * bz * r) + 1.0 / (bz * r3));
        const double fab = z / r3;
        const double faz = c.b / (az * r) * (1.0 - 2.0 * z2 / az - z2 / r2);
        const double fbz = c.a / (bz * r) * (1.0 - 2.0 * z2 / bz - z2 / r2);
        const double fzz = -(faa + fbb); // each corner term is harmonic
        Mat3 corner;
        corner << faa, fab, -faz,
                  fab, fbb, -fbz,
                  -faz, -fbz, fzz;
        h += c.sign * corner;
    }
    return h / kTwoPi;
}

double total_potential(const ChipLayout& chip, const Voltages& voltages, const Vec3& p) {
    require_matching(chip, voltages);
    require_above_plane(p);
    double phi = 0.0;
    for (std::size_t i = 0; i < chip.size(); ++i) {
        if (voltages[static_cast<Eigen::Index>(i)] != 0.0) {
            phi += voltages[static_cast<Eigen::Index>(i)] * electrode_basis_potential(chip.electrodes[i], p);
        }
    }
    return phi;
}

Vec3 static_field(const ChipLayout& chip, const Voltages& voltages, const Vec3& p) {
    require_matching(chip, voltages);
    require_above_plane(p);
    Vec3 grad = Vec3::Zero();
    for (std::size_t i = 0; i < chip.size(); ++i) {
        const double v = voltages[static_cast<Eigen::Index>(i)];
        if (v != 0.0) {
            grad += v * electrode_basis_gradient(chip.electrodes[i], p);
        }
    }
    return -grad;
}

Mat3 potential_hessian(const ChipLayout& chip, const Voltages& voltages, const Vec3& p) {
    require_matching(chip, voltages);
    require_above_plane(p);
    Mat3 h = Mat3::Zero();
    for (std::size_t i = 0; i < chip.size(); ++i) {
        const double v = voltages[static_cast<Eigen::Index>(i)];
        if (v != 0.0) {
            h += v * electrode_basis_hessian(chip.electrodes[i], p);
        }
    }
    return h;
}

double rf_null_height(const ChipLayout& chip, double x) {
    const auto rf = chip.indices_of(ElectrodeRole::RF);
    if (rf.empty()) {
        return chip.ion_height;
    }
    auto dz = [&](double z) {
        double g = 0.0;
        for (std::size_t i : rf) {
            g += electrode_basis_gradient(chip.electrodes[i], Vec3(x, 0.0, z)).z();
        }
        return g;
    };
    const double lo = 0.5 * chip.ion_height;
    const double hi = 1.5 * chip.ion_height;
    const double f_lo = dz(lo);
    const double f_hi = dz(hi);
    if (std::signbit(f_lo) == std::signbit(f_hi)) {
        throw DomainError(fmt::format("no RF null above x = {:.6g} m", x));
    }
    std::uintmax_t max_iter = 200;
    const auto r = boost::math::tools::toms748_solve(dz, lo, hi, f_lo, f_hi,
                                                     boost::math::tools::eps_tolerance<double>(50), max_iter);
    return 0.5 * (r.first + r.second);
}

Vec3 trap_axis_point(const ChipLayout& chip, double x) { return Vec3(x, 0.0, rf_null_height(chip, x)); }

} // namespace trapablate
