#pragma once

// Independent test oracles. The projection oracle computes sums of squares
// from explicit indicator-basis projections and must stay independent of the
// library's sweep implementation.

#include <Eigen/Dense>

#include "doe/anova.hpp"
#include "doe/diagram.hpp"
#include "doe/plan.hpp"
#include "doe/rng.hpp"

namespace oracle {

inline Eigen::VectorXd project(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.cols() == 0) return Eigen::VectorXd::Zero(y.size());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    double tol = 1e-12 * sv(0) * static_cast<double>(std::max(X.rows(), X.cols()));
    long rank = 0;
    for (long i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++rank;
    Eigen::MatrixXd U = svd.matrixU().leftCols(rank);
    return U * (U.transpose() * y);
}

inline Eigen::MatrixXd indicators(const doe::Diagram& d, const doe::DataTable& data,
                                  const std::vector<doe::FactorId>& factors) {
    const long n = static_cast<long>(data.rows.size());
    long cols = 0;
    for (doe::FactorId f : factors) cols += d.factors[f].levels;
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, cols);
    long offset = 0;
    for (doe::FactorId f : factors) {
        auto classes = doe::factor_classes(d, data, f);
        for (long r = 0; r < n; ++r) X(r, offset + classes[r]) = 1.0;
        offset += d.factors[f].levels;
    }
    return X;
}

// SS(f) = |P_[ancestors + f] y|^2 - |P_ancestors y|^2.
inline double projection_ss(const doe::Diagram& d, const doe::DataTable& data, doe::FactorId f) {
    Eigen::VectorXd y(static_cast<long>(data.response.size()));
    for (long i = 0; i < y.size(); ++i) y(i) = data.response[i];
    std::vector<doe::FactorId> above = d.ancestors(f);
    std::vector<doe::FactorId> with = above;
    with.push_back(f);
    double full = project(indicators(d, data, with), y).squaredNorm();
    double anc = project(indicators(d, data, above), y).squaredNorm();
    return full - anc;
}

// Balanced random dataset over a seeded plan.
inline doe::DataTable random_data(const doe::Diagram& d, std::uint64_t seed) {
    doe::Rng rng(seed);
    doe::Plan plan = doe::generate_plan(d, rng.next());
    doe::DataTable data;
    data.columns = plan.columns;
    data.column_ids = plan.column_ids;
    data.rows = plan.rows;
    data.response.resize(plan.rows.size());
    for (auto& y : data.response) y = 10.0 * rng.uniform01() - 5.0;
    return data;
}

}  // namespace oracle
