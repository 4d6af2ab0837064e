/** @file io.hpp
    @brief CSV and binary artifacts: fields, histories, gradients, shapes, probes.
*/
#pragma once

#include "lensopt/optimizer.hpp"

#include <iosfwd>
#include <string>

namespace lensopt {

/// Control point table "patch,i1,i2,x,y,value"; a shared dof is listed once per patch.
std::string field_csv(const MultiPatchDomain& domain, const Eigen::VectorXd& coeffs);
void write_field_csv(const std::string& path, const MultiPatchDomain& domain, const Eigen::VectorXd& coeffs);

/// Binary container: magic "LOTS", version, n_dofs, n_steps, T_final, then value/rate/accel column major.
void write_time_series(const std::string& path, const TimeSeriesField& f);
/// CSV fallback: header "step,t,dof,value,rate,accel".
void write_time_series_csv(const std::string& path, const TimeSeriesField& f);
/// Reads either format, chosen by the leading bytes.
TimeSeriesField read_time_series(const std::string& path);

std::string history_csv(const OptimizationHistory& h);
void write_history_csv(const std::string& path, const OptimizationHistory& h);

/// "dof,global,x,y,gradient".
void write_gradient_csv(const std::string& path, const LensShape& shape, const Eigen::VectorXd& g);
/// "dof,global,boundary,x,y,pinned".
void write_shape_csv(const std::string& path, const LensShape& shape);

/// Point evaluation of a coefficient vector; throws DomainError when x is outside every patch.
double eval_at_point(const MultiPatchDomain& domain, const Eigen::VectorXd& coeffs, const Point& x);
/// "t,u0,u1,..." for the given probe points.
void write_probe_csv(const std::string& path, const MultiPatchDomain& domain, const TimeSeriesField& f,
                     const std::vector<Point>& probes);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

} // namespace lensopt
