#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace apara {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Norm on the state space U = R^dim.
enum class Norm { Max, Euclid };

inline double norm_of(const Vec& v, Norm n = Norm::Max) {
    return n == Norm::Max ? v.lpNorm<Eigen::Infinity>() : v.norm();
}

inline Vec make_vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace apara
