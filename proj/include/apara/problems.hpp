#pragma once

#include "apara/ode_system.hpp"

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace apara {

/// Brusselator reaction system
///   x' = A + x^2 y - (B+1) x,   y' = B x - x^2 y,   u0 = (0, 1).
/// The fixed point (A, B/A) loses stability for B > 1 + A^2.
inline OdeSystem make_brusselator(double A = 1.0, double B = 3.0) {
    require(A > 0.0 && B > 0.0, "brusselator: A and B must be positive");
    OdeSystem sys;
    sys.name = "brusselator";
    sys.dim = 2;
    sys.params = {{"A", A}, {"B", B}};
    sys.u0 = make_vec({0.0, 1.0});
    sys.rhs = [A, B](double, const Vec& u, Vec& out) {
        const double x = u[0], y = u[1];
        out[0] = A + x * x * y - (B + 1.0) * x;
        out[1] = B * x - x * x * y;
    };
    sys.jacobian = [B](double, const Vec& u, Mat& jac) {
        const double x = u[0], y = u[1];
        jac(0, 0) = -(B + 1.0) + 2.0 * x * y;
        jac(0, 1) = x * x;
        jac(1, 0) = B - 2.0 * x * y;
        jac(1, 1) = -x * x;
    };
    return sys;
}

/// Van der Pol oscillator x' = y, y' = mu (1 - x^2) y - x, u0 = (2, 0).
inline OdeSystem make_van_der_pol(double mu = 4.0) {
    require(mu >= 0.0, "van_der_pol: mu must be nonnegative");
    OdeSystem sys;
    sys.name = "van_der_pol";
    sys.dim = 2;
    sys.params = {{"mu", mu}};
    sys.u0 = make_vec({2.0, 0.0});
    sys.rhs = [mu](double, const Vec& u, Vec& out) {
        const double x = u[0], y = u[1];
        out[0] = y;
        out[1] = mu * (1.0 - x * x) * y - x;
    };
    sys.jacobian = [mu](double, const Vec& u, Mat& jac) {
        const double x = u[0], y = u[1];
        jac(0, 0) = 0.0;
        jac(0, 1) = 1.0;
        jac(1, 0) = -2.0 * mu * x * y - 1.0;
        jac(1, 1) = mu * (1.0 - x * x);
    };
    return sys;
}

struct OregonatorParams {
    double s = 77.27;
    double q = 8.375e-6;
    double w = 0.1610;
};

/// Scaled Field-Noyes Oregonator (the classical stiff OREGO benchmark):
///   y1' = s (y2 + y1 (1 - q y1 - y2))
///   y2' = (y3 - (1 + y1) y2) / s
///   y3' = w (y1 - y3)
/// with u0 = (1, 2, 3).
inline OdeSystem make_oregonator(OregonatorParams p = {}) {
    require(p.s > 0.0 && p.q > 0.0 && p.w > 0.0, "oregonator: parameters must be positive");
    OdeSystem sys;
    sys.name = "oregonator";
    sys.dim = 3;
    sys.params = {{"s", p.s}, {"q", p.q}, {"w", p.w}};
    sys.u0 = make_vec({1.0, 2.0, 3.0});
    const double s = p.s, q = p.q, w = p.w;
    sys.rhs = [s, q, w](double, const Vec& u, Vec& out) {
        const double y1 = u[0], y2 = u[1], y3 = u[2];
        out[0] = s * (y2 + y1 * (1.0 - q * y1 - y2));
        out[1] = (y3 - (1.0 + y1) * y2) / s;
        out[2] = w * (y1 - y3);
    };
    sys.jacobian = [s, q, w](double, const Vec& u, Mat& jac) {
        const double y1 = u[0], y2 = u[1];
        jac(0, 0) = s * (1.0 - 2.0 * q * y1 - y2);
        jac(0, 1) = s * (1.0 - y1);
        jac(0, 2) = 0.0;
        jac(1, 0) = -y2 / s;
        jac(1, 1) = -(1.0 + y1) / s;
        jac(1, 2) = 1.0 / s;
        jac(2, 0) = w;
        jac(2, 1) = 0.0;
        jac(2, 2) = -w;
    };
    return sys;
}

struct SeirParams {
    double beta0 = 2.8 / 5.0;  // R0 * gamma
    double alpha = 0.4239;     // governmental action strength
    double kappa = 1117.3;     // individual reaction intensity
    double mu = 0.0205;        // emigration rate
    double sigma = 1.0 / 3.0;  // inverse incubation period
    double gamma = 1.0 / 5.0;  // inverse infectious period
    double d = 0.2;            // severe-case fraction feeding risk perception
    double lambda = 1.0 / 11.2;  // inverse duration of public reaction
    double N0 = 1.4e7;
    double E0 = 200.0;
    double I0 = 40.0;
};

/// SEIR epidemic model with individual reaction and governmental action
/// (Lin et al. 2020). State (S, E, I, R, N, D, C) with time-varying
/// transmission beta(t) = beta0 (1 - alpha) (1 - D/N)^kappa:
///   S' = -beta S I / N - mu S
///   E' =  beta S I / N - (sigma + mu) E
///   I' =  sigma E - (gamma + mu) I
///   R' =  gamma I - mu R
///   N' = -mu N
///   D' =  d gamma I - lambda D
///   C' =  sigma E
inline OdeSystem make_seir(SeirParams p = {}) {
    require(p.beta0 > 0 && p.kappa > 0 && p.mu > 0 && p.sigma > 0 && p.gamma > 0 && p.d > 0 &&
                p.lambda > 0 && p.N0 > 0,
            "seir: rates and population must be positive");
    require(p.alpha >= 0 && p.alpha < 1, "seir: alpha must lie in [0, 1)");
    OdeSystem sys;
    sys.name = "seir";
    sys.dim = 7;
    sys.params = {{"beta0", p.beta0}, {"alpha", p.alpha},   {"kappa", p.kappa}, {"mu", p.mu},
                  {"sigma", p.sigma}, {"gamma", p.gamma},   {"d", p.d},         {"lambda", p.lambda},
                  {"N0", p.N0},       {"E0", p.E0},         {"I0", p.I0}};
    const double S0 = p.N0 - p.E0 - p.I0;
    sys.u0 = make_vec({S0, p.E0, p.I0, 0.0, p.N0, 0.0, p.I0});
    const SeirParams q = p;
    sys.rhs = [q](double, const Vec& u, Vec& out) {
        const double S = u[0], E = u[1], I = u[2], R = u[3], N = u[4], D = u[5];
        const double beta = q.beta0 * (1.0 - q.alpha) * std::pow(std::max(1.0 - D / N, 0.0), q.kappa);
        const double infection = beta * S * I / N;
        out[0] = -infection - q.mu * S;
        out[1] = infection - (q.sigma + q.mu) * E;
        out[2] = q.sigma * E - (q.gamma + q.mu) * I;
        out[3] = q.gamma * I - q.mu * R;
        out[4] = -q.mu * N;
        out[5] = q.d * q.gamma * I - q.lambda * D;
        out[6] = q.sigma * E;
    };
    return sys;
}

/// Scalar (or diagonal) linear test problem u' = lambda u.
inline OdeSystem make_linear_decay(double lambda = -1.0, double u0 = 1.0) {
    OdeSystem sys;
    sys.name = "linear_decay";
    sys.dim = 1;
    sys.params = {{"lambda", lambda}};
    sys.u0 = make_vec({u0});
    sys.rhs = [lambda](double, const Vec& u, Vec& out) { out[0] = lambda * u[0]; };
    sys.jacobian = [lambda](double, const Vec&, Mat& jac) { jac(0, 0) = lambda; };
    return sys;
}

/// Builds a benchmark system by name, applying parameter overrides.
inline OdeSystem make_system(const std::string& name,
                             const std::map<std::string, double>& overrides = {}) {
    auto get = [&](const char* key, double dflt) {
        auto it = overrides.find(key);
        return it == overrides.end() ? dflt : it->second;
    };
    if (name == "brusselator") return make_brusselator(get("A", 1.0), get("B", 3.0));
    if (name == "van_der_pol") return make_van_der_pol(get("mu", 4.0));
    if (name == "oregonator") {
        OregonatorParams p;
        p.s = get("s", p.s);
        p.q = get("q", p.q);
        p.w = get("w", p.w);
        return make_oregonator(p);
    }
    if (name == "seir") {
        SeirParams p;
        p.beta0 = get("beta0", p.beta0);
        p.alpha = get("alpha", p.alpha);
        p.kappa = get("kappa", p.kappa);
        p.mu = get("mu", p.mu);
        p.sigma = get("sigma", p.sigma);
        p.gamma = get("gamma", p.gamma);
        p.d = get("d", p.d);
        p.lambda = get("lambda", p.lambda);
        p.N0 = get("N0", p.N0);
        p.E0 = get("E0", p.E0);
        p.I0 = get("I0", p.I0);
        return make_seir(p);
    }
    if (name == "linear_decay") return make_linear_decay(get("lambda", -1.0), get("u0", 1.0));
    throw std::invalid_argument("unknown system: " + name);
}

}  // namespace apara
