#include "trapablate/transport.hpp"

#include "trapablate/boxqp.hpp"
#include "trapablate/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace trapablate {
void SolverConfig::validate() const {
    if (!(v_max >= 0.0)) {
        throw ConfigError("solver v_max must be non-negative");
    }
    if (smoothness_weight < 0.0 || voltage_weight < 0.0 || field_weight < 0.0 || curvature_weight < 0.0) {
        throw ConfigError("solver weights must be non-negative");
    }
    if (!(smoothness_weight + voltage_weight > 0.0)) {
        throw ConfigError("solver needs smoothness_weight + voltage_weight > 0");
    }
    if (!(field_scale > 0.0) || !(position_tolerance > 0.0) || !(curvature_tolerance > 0.0) ||
        !(convergence_tolerance > 0.0) || max_iterations < 1) {
        throw ConfigError("solver scales and tolerances must be positive");
    }
}

double axial_curvature_for_frequency(double mass, double charge, double omega) {
    if (!(mass > 0.0) || !(charge > 0.0)) {
        throw DomainError("mass and charge must be positive");
    }
    return mass * omega * omega / charge;
}

std::vector<double> transport_positions(double start, double end, double step) {
    if (!(step > 0.0)) {
        throw DomainError("transport step must be positive");
    }
    std::vector<double> out{start};
    const double span = std::abs(end - start);
    if (span == 0.0) {
        return out;
    }
    const double dir = end > start ? 1.0 : -1.0;
    const auto full = static_cast<long>(std::floor(span / step + 1e-9));
    for (long i = 1; i <= full; ++i) {
        out.push_back(start + dir * static_cast<double>(i) * step);
    }
    if (std::abs(out.back() - end) > 1e-12) {
        out.push_back(end);
    } else {
        out.back() = end;
    }
    return out;
}

double realized_well_position(const ChipLayout& chip, const Voltages& voltages, double guess) {
    double x = guess;
    const double z = rf_null_height(chip, guess);
    for (int iter = 0; iter < 100; ++iter) {
        const Vec3 p(x, 0.0, z);
        const double slope = -static_field(chip, voltages, p).x();
        const double curvature = potential_hessian(chip, voltages, p)(0, 0);
        if (!(curvature > 0.0)) {
            throw SolverFailure(fmt::format("no axial well near x = {:.6g} m (curvature {:.3g})", x, curvature));
        }
        const double dx = -slope / curvature;
        x += dx;
        if (std::abs(dx) < 1e-14) {
            break;
        }
    }
    return x;
}

FrameSolution solve_frame(const ChipLayout& chip, const WellTarget& target, const Voltages& warm_start,
                          const SolverConfig& cfg) {
    cfg.validate();
    if (static_cast<std::size_t>(warm_start.size()) != chip.size()) {
        throw DomainError("warm start length does not match the electrode count");
    }
    const Interval span = chip.dc_span();
    if (!span.contains(target.axial_position)) {
        throw DomainError(fmt::format("target {:.6g} m lies outside the DC span [{:.6g}, {:.6g}]",
                                      target.axial_position, span.min, span.max));
    }
    if (!(target.target_axial_curvature > 0.0)) {
        throw DomainError("target axial curvature must be positive");
    }

    const auto dc = chip.indices_of(ElectrodeRole::DC);
    const auto n = static_cast<Eigen::Index>(dc.size());
    const Vec3 p = trap_axis_point(chip, target.axial_position);
    const double k = target.target_axial_curvature;

    // Feature rows: field components (as well offsets in units of field_scale)
    // and axial curvature relative to its target.
    const int field_rows = target.field_null ? 3 : 1;
    Eigen::MatrixXd A(field_rows + 1, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(field_rows + 1);
    const double field_row_scale = cfg.field_weight / (k * cfg.field_scale);
    const double curvature_row_scale = cfg.curvature_weight / k;
    for (Eigen::Index j = 0; j < n; ++j) {
        const Electrode& e = chip.electrodes[dc[static_cast<std::size_t>(j)]];
        const Vec3 grad = electrode_basis_gradient(e, p);
        const Mat3 hess = electrode_basis_hessian(e, p);
        for (int r = 0; r < field_rows; ++r) {
            A(r, j) = field_row_scale * grad[r];
        }
        A(field_rows, j) = curvature_row_scale * hess(0, 0);
    }
    b[field_rows] = curvature_row_scale * k;

    Eigen::VectorXd warm(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        warm[j] = warm_start[static_cast<Eigen::Index>(dc[static_cast<std::size_t>(j)])];
    }

    const double lambda = cfg.smoothness_weight;
    const double mu = cfg.voltage_weight;
    const Eigen::MatrixXd H =
        2.0 * (A.transpose() * A + (lambda + mu) * Eigen::MatrixXd::Identity(n, n));
    const Eigen::VectorXd g = -2.0 * (A.transpose() * b + lambda * warm);
    const Eigen::VectorXd lower = Eigen::VectorXd::Constant(n, -cfg.v_max);
    const Eigen::VectorXd upper = Eigen::VectorXd::Constant(n, cfg.v_max);

    const BoxQpResult qp =
        solve_box_qp(H, g, lower, upper, warm, {cfg.convergence_tolerance, cfg.max_iterations});
    if (!qp.converged) {
        throw SolverFailure(fmt::format("frame solve at x = {:.6g} m did not converge (projected gradient {:.3g})",
                                        target.axial_position, qp.projected_gradient_norm));
    }

    FrameSolution sol;
    sol.voltages = Voltages::Zero(static_cast<Eigen::Index>(chip.size()));
    for (Eigen::Index j = 0; j < n; ++j) {
        sol.voltages[static_cast<Eigen::Index>(dc[static_cast<std::size_t>(j)])] = qp.x[j];
    }
    sol.iterations = qp.iterations;
    sol.projected_gradient_norm = qp.projected_gradient_norm;

    const Vec3 field = static_field(chip, sol.voltages, p);
    sol.field_residual = target.field_null ? field.norm() : std::abs(field.x());
    sol.curvature = potential_hessian(chip, sol.voltages, p)(0, 0);

    const double curvature_error = std::abs(sol.curvature - k) / k;
    if (curvature_error > cfg.curvature_tolerance || sol.field_residual / k > cfg.position_tolerance) {
        throw SolverFailure(fmt::format(
            "frame at x = {:.6g} m infeasible within |V| <= {:g}: field residual {:.3g} V/m, curvature error {:.3g}",
            target.axial_position, cfg.v_max, sol.field_residual, curvature_error));
    }
    sol.well_position = realized_well_position(chip, sol.voltages, target.axial_position);
    if (std::abs(sol.well_position - target.axial_position) > cfg.position_tolerance) {
        throw SolverFailure(fmt::format("realised well at {:.9g} m misses target {:.9g} m", sol.well_position,
                                        target.axial_position));
    }
    return sol;
}

Waveform synthesize_waveform(const ChipLayout& chip, double start, double end, double step,
                             double target_curvature, const SolverConfig& cfg) {
    Waveform wf;
    wf.step_size = step;
    wf.start = start;
    wf.end = end;
    for (const auto& e : chip.electrodes) {
        wf.electrode_names.push_back(e.name);
    }
    wf.positions = transport_positions(start, end, step);

    // First frame: no smoothness term.
    SolverConfig first = cfg;
    if (cfg.voltage_weight > 0.0) {
        first.smoothness_weight = 0.0;
    }
    Voltages warm = Voltages::Zero(static_cast<Eigen::Index>(chip.size()));
    for (std::size_t i = 0; i < wf.positions.size(); ++i) {
        try {
            const FrameSolution sol =
                solve_frame(chip, {wf.positions[i], target_curvature, true}, warm, i == 0 ? first : cfg);
            wf.frames.push_back(sol.voltages);
            warm = sol.voltages;
        } catch (const SolverFailure& err) {
            throw SolverFailure(fmt::format("frame {}: {}", i, err.what()));
        }
    }
    return wf;
}

Waveform apply_rotation_offset(const Waveform& waveform, double dv, const ChipLayout& chip) {
    const auto a = static_cast<Eigen::Index>(chip.rail(ElectrodeRole::RotationA));
    const auto b = static_cast<Eigen::Index>(chip.rail(ElectrodeRole::RotationB));
    Waveform out = waveform;
    for (auto& frame : out.frames) {
        if (frame.size() != static_cast<Eigen::Index>(chip.size())) {
            throw DomainError("waveform frame length does not match the chip");
        }
        frame[a] += dv;
        frame[b] -= dv;
    }
    return out;
}

} // namespace trapablate
