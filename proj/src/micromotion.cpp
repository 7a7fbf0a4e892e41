#include "trapablate/micromotion.hpp"

#include "trapablate/errors.hpp"

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace trapablate {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec3 in_plane(Vec3 v) {
    v.z() = 0.0;
    return v;
}

struct RfBasis {
    Vec3 gradient = Vec3::Zero();
    Mat3 hessian = Mat3::Zero();
};

RfBasis rf_basis(const ChipLayout& chip, const Vec3& p) {
    RfBasis out;
    for (std::size_t i : chip.indices_of(ElectrodeRole::RF)) {
        out.gradient += electrode_basis_gradient(chip.electrodes[i], p);
        out.hessian += electrode_basis_hessian(chip.electrodes[i], p);
    }
    return out;
}

double pseudo_prefactor(const IonSpecies& ion, const RFDrive& rf) {
    return ion.charge * ion.charge / (4.0 * ion.mass * rf.omega_rf * rf.omega_rf);
}

Vec3 energy_gradient(const ChipLayout& chip, const IonSpecies& ion, const RFDrive& rf, const Voltages& voltages,
                     const Vec3& p) {
    const RfBasis b = rf_basis(chip, p);
    const double a = pseudo_prefactor(ion, rf) * rf.amplitude * rf.amplitude;
    return -ion.charge * static_field(chip, voltages, p) + 2.0 * a * b.hessian * b.gradient;
}

Mat3 energy_hessian(const ChipLayout& chip, const IonSpecies& ion, const RFDrive& rf, const Voltages& voltages,
                    const Vec3& p) {
    constexpr double h = 1e-8;
    Mat3 hess;
    for (int j = 0; j < 3; ++j) {
        Vec3 d = Vec3::Zero();
        d[j] = h;
        hess.col(j) = (energy_gradient(chip, ion, rf, voltages, p + d) -
                       energy_gradient(chip, ion, rf, voltages, p - d)) / (2.0 * h);
    }
    return 0.5 * (hess + hess.transpose());
}

double beta_at(const IonSpecies& ion, const RFDrive& rf, const Vec3& stray, const Vec3& actuator, double v) {
    return signed_modulation_index(ion, excess_micromotion_amplitude(ion, rf, in_plane(stray + v * actuator)));
}

} // namespace

Vec3 IonSpecies::k_hat() const {
    return Vec3(std::cos(cooling_k_angle), std::sin(cooling_k_angle), 0.0);
}

double IonSpecies::k_magnitude() const { return kTwoPi / cooling_wavelength; }

void IonSpecies::validate() const {
    if (!(mass > 0.0) || !(charge > 0.0)) {
        throw ConfigError("ion mass and charge must be positive");
    }
    if (!(cooling_wavelength > 0.0)) {
        throw ConfigError("cooling wavelength must be positive");
    }
}

double RFDrive::mathieu_q() const { return 2.0 * std::numbers::sqrt2 * omega_sec / omega_rf; }

void RFDrive::validate() const {
    if (!(omega_sec > 0.0) || !(omega_rf > omega_sec)) {
        throw ConfigError("RF drive needs omega_rf > omega_sec > 0");
    }
    if (amplitude < 0.0) {
        throw ConfigError("RF amplitude must be non-negative");
    }
}

StrayFieldSource StrayFieldSource::pre_ablation(const Vec3& defect_center, double charge) {
    return {{PointCharge{defect_center, charge}}};
}

StrayFieldSource StrayFieldSource::post_ablation(const Vec3& crater_position, double crater_charge) {
    return {{PointCharge{crater_position, crater_charge}}};
}

StrayFieldSource StrayFieldSource::scaled(double factor) const {
    StrayFieldSource out = *this;
    for (auto& c : out.charges) {
        c.charge *= factor;
    }
    return out;
}

Vec3 stray_field(const StrayFieldSource& src, const Vec3& p) {
    if (!(p.z() > 0.0)) {
        throw DomainError("stray field is defined only above the chip plane (z > 0)");
    }
    Vec3 e = Vec3::Zero();
    for (const auto& c : src.charges) {
        if (!(c.position.z() > 0.0)) {
            throw DomainError("stray charge must sit above the chip plane");
        }
        const Vec3 r1 = p - c.position;
        const Vec3 r2 = p - Vec3(c.position.x(), c.position.y(), -c.position.z());
        const double d1 = r1.norm();
        if (d1 < 1e-12) {
            throw DomainError("stray field evaluated at the charge location");
        }
        const double d2 = r2.norm();
        e += kCoulombConstant * c.charge * (r1 / (d1 * d1 * d1) - r2 / (d2 * d2 * d2));
    }
    return e;
}

double rf_null_displacement(const IonSpecies& ion, const RFDrive& rf, double field) {
    if (!(rf.omega_sec > 0.0)) {
        throw DomainError("secular frequency must be positive");
    }
    return ion.charge * field / (ion.mass * rf.omega_sec * rf.omega_sec);
}

double excess_micromotion_amplitude(const IonSpecies& ion, const RFDrive& rf, double field) {
    if (!(rf.omega_rf > 0.0)) {
        throw DomainError("RF drive frequency must be positive");
    }
    return 0.5 * rf.mathieu_q() * rf_null_displacement(ion, rf, field);
}

Vec3 excess_micromotion_amplitude(const IonSpecies& ion, const RFDrive& rf, const Vec3& field) {
    const double per_field = excess_micromotion_amplitude(ion, rf, 1.0);
    return per_field * field;
}

double signed_modulation_index(const IonSpecies& ion, const Vec3& u) {
    return ion.k_magnitude() * ion.k_hat().dot(u);
}

double modulation_index(const IonSpecies& ion, const Vec3& u) { return std::abs(signed_modulation_index(ion, u)); }

CompensationActuator CompensationActuator::rotation_pair(const ChipLayout& chip) {
    return {{{chip.rail(ElectrodeRole::RotationA), 1.0}, {chip.rail(ElectrodeRole::RotationB), -1.0}}};
}

Voltages CompensationActuator::voltages(const ChipLayout& chip, double v) const {
    Voltages out = Voltages::Zero(static_cast<Eigen::Index>(chip.size()));
    for (const auto& [index, weight] : weights) {
        if (index >= chip.size()) {
            throw DomainError("compensation actuator references a missing electrode");
        }
        out[static_cast<Eigen::Index>(index)] += weight * v;
    }
    return out;
}

void CompensationConfig::validate() const {
    if (!(v_max > 0.0)) {
        throw ConfigError("compensation v_max must be positive");
    }
    if (!(nulling_tolerance > 0.0 && nulling_tolerance < 1.0)) {
        throw ConfigError("nulling tolerance must lie in (0, 1)");
    }
}

Vec3 rf_null_point(const ChipLayout& chip, double axial_position) {
    return trap_axis_point(chip, axial_position);
}

CompensationResult solve_compensation(const ChipLayout& chip, const IonSpecies& ion, const RFDrive& rf,
                                      const StrayFieldSource& src, double axial_position,
                                      const CompensationActuator& actuator, const CompensationConfig& cfg) {
    cfg.validate();
    const Vec3 p = rf_null_point(chip, axial_position);
    const Vec3 stray = stray_field(src, p);
    const Vec3 act = static_field(chip, actuator.voltages(chip, 1.0), p);
    if (in_plane(act).norm() == 0.0) {
        throw DomainError("compensation actuator has no in-plane field at the ion");
    }
    auto beta = [&](double v) { return beta_at(ion, rf, stray, act, v); };

    CompensationResult res;
    res.axial_position = axial_position;
    res.uncompensated_beta = std::abs(beta(0.0));
    if (res.uncompensated_beta == 0.0) {
        return res;
    }

    const double lo = -cfg.v_max;
    const double hi = cfg.v_max;
    const double f_lo = beta(lo);
    const double f_hi = beta(hi);
    double v = 0.0;
    if (f_lo == 0.0) {
        v = lo;
    } else if (f_hi == 0.0) {
        v = hi;
    } else if (std::signbit(f_lo) == std::signbit(f_hi)) {
        res.bounded = false;
        v = std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
    } else {
        std::uintmax_t max_iter = 200;
        const auto bracket = boost::math::tools::toms748_solve(beta, lo, hi, f_lo, f_hi,
                                                               boost::math::tools::eps_tolerance<double>(50),
                                                               max_iter);
        v = 0.5 * (bracket.first + bracket.second);
    }
    res.compensation_voltage = v;
    res.compensation_field = in_plane(v * act).norm();
    res.residual_beta = std::abs(beta(v));
    if (res.bounded && res.residual_beta > cfg.nulling_tolerance * res.uncompensated_beta) {
        throw SolverFailure(fmt::format("compensation at x = {:.6g} m left beta = {:.3g} (uncompensated {:.3g})",
                                        axial_position, res.residual_beta, res.uncompensated_beta));
    }
    return res;
}

std::vector<CompensationResult> compensation_profile(const ChipLayout& chip, const IonSpecies& ion,
                                                     const RFDrive& rf, const StrayFieldSource& src,
                                                     const std::vector<double>& positions,
                                                     const CompensationActuator& actuator,
                                                     const CompensationConfig& cfg) {
    std::vector<CompensationResult> out;
    out.reserve(positions.size());
    for (double x : positions) {
        out.push_back(solve_compensation(chip, ion, rf, src, x, actuator, cfg));
    }
    return out;
}

ProfilePeaks profile_peaks(const std::vector<CompensationResult>& profile) {
    if (profile.empty()) {
        throw DomainError("empty compensation profile");
    }
    ProfilePeaks out;
    std::vector<double> a;
    a.reserve(profile.size());
    for (const auto& r : profile) {
        a.push_back(r.compensation_field);
    }
    out.peak = static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin());
    double best = -1.0;
    for (std::size_t j = 1; j + 1 < a.size(); ++j) {
        if (j != out.peak && a[j] >= a[j - 1] && a[j] >= a[j + 1] && a[j] > best) {
            best = a[j];
            out.next = static_cast<std::ptrdiff_t>(j);
        }
    }
    return out;
}

QuadraticFit fit_quadratic_about(const std::vector<double>& x, const std::vector<double>& y, double center) {
    if (x.size() != y.size() || x.size() < 3) {
        throw DomainError("quadratic fit needs at least three (x, y) pairs");
    }
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd m(n, 2);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = x[static_cast<std::size_t>(i)] - center;
        m(i, 0) = 1.0;
        m(i, 1) = d * d;
        v[i] = y[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector2d c = m.colPivHouseholderQr().solve(v);
    const Eigen::VectorXd r = v - m * c;
    const double mean = v.mean();
    const double ss_tot = (v.array() - mean).square().sum();
    QuadraticFit fit;
    fit.c0 = c[0];
    fit.c2 = c[1];
    fit.points = x.size();
    fit.r_squared = ss_tot > 0.0 ? 1.0 - r.squaredNorm() / ss_tot : 1.0;
    return fit;
}

QuadraticFit approach_region_fit(const std::vector<CompensationResult>& profile, double center) {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& r : profile) {
        if (!r.bounded) {
            break;
        }
        x.push_back(r.axial_position);
        y.push_back(r.compensation_field);
    }
    return fit_quadratic_about(x, y, center);
}

double calibrate_crater_charge(const ChipLayout& chip, const IonSpecies& ion, const RFDrive& rf,
                               const Vec3& crater_position, const std::vector<double>& positions,
                               const CompensationActuator& actuator, const CompensationConfig& cfg,
                               double target_peak) {
    if (!(target_peak > 0.0)) {
        throw DomainError("target peak field must be positive");
    }
    auto residual = [&](double q) {
        const auto prof =
            compensation_profile(chip, ion, rf, StrayFieldSource::post_ablation(crater_position, q), positions,
                                 actuator, cfg);
        return prof[profile_peaks(prof).peak].compensation_field - target_peak;
    };
    double q0 = 1e-16;
    double q1 = 2e-16;
    double f0 = residual(q0);
    double f1 = residual(q1);
    for (int iter = 0; iter < 60; ++iter) {
        if (std::abs(f1) <= 1e-12 * target_peak) {
            return q1;
        }
        if (f1 == f0) {
            break;
        }
        const double q2 = q1 - f1 * (q1 - q0) / (f1 - f0);
        q0 = q1;
        f0 = f1;
        q1 = q2;
        f1 = residual(q1);
    }
    if (std::abs(f1) <= 1e-9 * target_peak) {
        return q1;
    }
    throw SolverFailure("crater charge calibration did not converge");
}

double pseudopotential(const ChipLayout& chip, const IonSpecies& ion, const RFDrive& rf, const Vec3& p) {
    const RfBasis b = rf_basis(chip, p);
    return pseudo_prefactor(ion, rf) * rf.amplitude * rf.amplitude * b.gradient.squaredNorm();
}

double calibrate_rf_amplitude(const ChipLayout& chip, const IonSpecies& ion, const RFDrive& rf,
                              const Voltages& dc_voltages, const Vec3& p) {
    const RfBasis b = rf_basis(chip, p);
    const double dc_yy = ion.charge * potential_hessian(chip, dc_voltages, p)(1, 1);
    const double need = ion.mass * rf.omega_sec * rf.omega_sec - dc_yy;
    const double per_volt2 = 2.0 * pseudo_prefactor(ion, rf) * b.hessian.col(1).squaredNorm();
    if (!(need > 0.0) || !(per_volt2 > 0.0)) {
        throw DomainError("RF amplitude cannot reach the requested transverse frequency here");
    }
    return std::sqrt(need / per_volt2);
}

Equilibrium find_equilibrium(const ChipLayout& chip, const IonSpecies& ion, const RFDrive& rf,
                             const Voltages& voltages, const Vec3& guess) {
    Equilibrium eq;
    eq.position = guess;
    bool converged = false;
    for (int iter = 0; iter < 100; ++iter) {
        const Vec3 g = energy_gradient(chip, ion, rf, voltages, eq.position);
        eq.hessian = energy_hessian(chip, ion, rf, voltages, eq.position);
        const Vec3 step = eq.hessian.ldlt().solve(g);
        eq.position -= step;
        eq.iterations = iter + 1;
        if (step.norm() < 1e-15) {
            converged = true;
            break;
        }
    }
    eq.hessian = energy_hessian(chip, ion, rf, voltages, eq.position);
    Eigen::SelfAdjointEigenSolver<Mat3> eig(eq.hessian, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues().minCoeff() > 0.0)) {
        throw SolverFailure("equilibrium is unstable (energy Hessian not positive definite)");
    }
    if (!converged && energy_gradient(chip, ion, rf, voltages, eq.position).norm() >
                          1e-9 * eq.hessian.norm() * 1e-9) {
        throw SolverFailure("equilibrium search did not converge");
    }
    return eq;
}

Eigen::MatrixXd voltage_to_position_jacobian(const ChipLayout& chip, const IonSpecies& ion, const RFDrive& rf,
                                             const Voltages& voltages, const std::vector<std::size_t>& electrodes,
                                             const Vec3& guess, double step) {
    if (!(step > 0.0)) {
        throw DomainError("Jacobian step must be positive");
    }
    const Equilibrium base = find_equilibrium(chip, ion, rf, voltages, guess);
    Eigen::MatrixXd jac(3, static_cast<Eigen::Index>(electrodes.size()));
    for (std::size_t c = 0; c < electrodes.size(); ++c) {
        if (electrodes[c] >= chip.size()) {
            throw DomainError("Jacobian electrode index out of range");
        }
        Voltages plus = voltages;
        Voltages minus = voltages;
        plus[static_cast<Eigen::Index>(electrodes[c])] += step;
        minus[static_cast<Eigen::Index>(electrodes[c])] -= step;
        const Vec3 xp = find_equilibrium(chip, ion, rf, plus, base.position).position;
        const Vec3 xm = find_equilibrium(chip, ion, rf, minus, base.position).position;
        jac.col(static_cast<Eigen::Index>(c)) = (xp - xm) / (2.0 * step);
    }
    return jac;
}

} // namespace trapablate
