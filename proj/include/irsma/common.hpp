// SPDX-License-Identifier: Apache-2.0
//
// irsma: joint IRS site selection and movable-antenna placement planner
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef IRSMA_COMMON_HPP
#define IRSMA_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace irsma
{
    using cdouble = std::complex<double>;
    using Vec3 = Eigen::Vector3d;
    using RVec = Eigen::VectorXd;
    using CVec = Eigen::VectorXcd;
    using RMat = Eigen::MatrixXd;
    using CMat = Eigen::MatrixXcd;

    inline constexpr double kPi = std::numbers::pi;

    // Error taxonomy. Every failure surfaced by the library is one of these.
    struct PlanningError : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };
    struct InvalidGeometry : PlanningError
    {
        using PlanningError::PlanningError;
    };
    struct DegenerateGeometry : PlanningError
    {
        using PlanningError::PlanningError;
    };
    struct DimensionMismatch : PlanningError
    {
        using PlanningError::PlanningError;
    };
    struct AuditError : PlanningError
    {
        using PlanningError::PlanningError;
    };
    struct NoLinkError : PlanningError
    {
        using PlanningError::PlanningError;
    };
    struct InfeasibleProblem : PlanningError
    {
        using PlanningError::PlanningError;
    };
    struct SolverFailure : PlanningError
    {
        using PlanningError::PlanningError;
    };
    struct SchemaError : PlanningError
    {
        using PlanningError::PlanningError;
    };

    inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
    inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
    inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

    // Distance of a scalar from {0,1}.
    inline double binary_violation(double v) { return std::abs(v * (1.0 - v)); }

    inline bool is_binary(double v, double tol = 1e-9)
    {
        return std::abs(v) <= tol || std::abs(v - 1.0) <= tol;
    }

} // namespace irsma

#endif // IRSMA_COMMON_HPP
