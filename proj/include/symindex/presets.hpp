#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "symindex/orbit_model.hpp"

namespace symindex {

struct PresetParams {
    std::optional<double> h;
    std::string variant;  // negative_P_synthetic: "free" (default) or "kepler"
    int samples = 257;
};

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"flat_torus", "circle_free_particle", "harmonic_loop",
                                                "kepler_circular", "negative_P_synthetic"};
    return names;
}

namespace presets {

constexpr double kPi = std::numbers::pi;

// L = σ·½|v|² on a torus of side ℓ, straight closed geodesic along e₁
inline OrbitData straight_line(const std::string& name, int n, double sigma, double h, double ell) {
    if (sigma * h <= 0) throw InvalidInput(name + ": energy must have the sign of the kinetic term");
    OrbitData o;
    o.name = name;
    o.n = n;
    o.h = h;
    o.T = ell / std::sqrt(2 * sigma * h);
    o.A = Mat::Identity(n, n);
    o.period_of_h = [sigma, ell](double e) { return ell / std::sqrt(2 * sigma * e); };
    o.tprime_h = -sigma * ell * std::pow(2 * sigma * h, -1.5);
    Vec xp = Vec::Zero(n);
    xp(0) = ell;
    o.coeffs = [n, sigma, xp](double) {
        Coefficients c;
        c.P = sigma * Mat::Identity(n, n);
        c.Q = Mat::Zero(n, n);
        c.R = Mat::Zero(n, n);
        c.Lq = Vec::Zero(n);
        c.xp = xp;
        c.xpp = Vec::Zero(n);
        return c;
    };
    LagrangianCallbacks cb;
    cb.x = [xp](double t) { return Vec(xp * t); };
    cb.xprime = [xp](double) { return xp; };
    cb.L = [sigma](const Vec&, const Vec& v) { return 0.5 * sigma * v.squaredNorm(); };
    cb.L_q = [n](const Vec&, const Vec&) { return Vec(Vec::Zero(n)); };
    cb.L_v = [sigma](const Vec&, const Vec& v) { return Vec(sigma * v); };
    o.callbacks = cb;
    return o;
}

// L = σ(½|v|² + 1/|q|), circular orbit of radius r
inline OrbitData kepler(const std::string& name, double sigma, double h) {
    if (sigma * h >= 0) throw InvalidInput(name + ": circular orbits need sigma*h < 0");
    const double r = -1.0 / (2 * sigma * h);
    OrbitData o;
    o.name = name;
    o.n = 2;
    o.h = h;
    o.T = 2 * kPi * std::pow(r, 1.5);
    o.A = Mat::Identity(2, 2);
    o.period_of_h = [sigma](double e) { return 2 * kPi * std::pow(-2 * sigma * e, -1.5); };
    o.tprime_h = sigma * 6 * kPi * std::pow(-2 * sigma * h, -2.5);
    auto x = [r](double t) { return Vec(Eigen::Vector2d(r * std::cos(2 * kPi * t), r * std::sin(2 * kPi * t))); };
    auto xp = [r](double t) {
        return Vec(Eigen::Vector2d(-2 * kPi * r * std::sin(2 * kPi * t), 2 * kPi * r * std::cos(2 * kPi * t)));
    };
    o.coeffs = [sigma, r, x, xp](double t) {
        Coefficients c;
        Vec q = x(t);
        c.P = sigma * Mat::Identity(2, 2);
        c.Q = Mat::Zero(2, 2);
        c.R = sigma * (3 * q * q.transpose() / (r * r) - Mat::Identity(2, 2)) / (r * r * r);
        c.Lq = -sigma * q / (r * r * r);
        c.xp = xp(t);
        c.xpp = -4 * kPi * kPi * q;
        return c;
    };
    LagrangianCallbacks cb;
    cb.x = x;
    cb.xprime = xp;
    cb.L = [sigma](const Vec& q, const Vec& v) { return sigma * (0.5 * v.squaredNorm() + 1.0 / q.norm()); };
    cb.L_q = [sigma](const Vec& q, const Vec&) { return Vec(-sigma * q / std::pow(q.norm(), 3)); };
    cb.L_v = [sigma](const Vec&, const Vec& v) { return Vec(sigma * v); };
    o.callbacks = cb;
    return o;
}

// L = ½|v|² − ½|q|², circle of amplitude √h
inline OrbitData harmonic(double h) {
    if (h <= 0) throw InvalidInput("harmonic_loop: h must be positive");
    const double a = std::sqrt(h);
    OrbitData o;
    o.name = "harmonic_loop";
    o.n = 2;
    o.h = h;
    o.T = 2 * kPi;
    o.A = Mat::Identity(2, 2);
    o.period_of_h = [](double) { return 2 * kPi; };
    o.tprime_h = 0.0;
    auto x = [a](double t) { return Vec(Eigen::Vector2d(a * std::cos(2 * kPi * t), a * std::sin(2 * kPi * t))); };
    auto xp = [a](double t) {
        return Vec(Eigen::Vector2d(-2 * kPi * a * std::sin(2 * kPi * t), 2 * kPi * a * std::cos(2 * kPi * t)));
    };
    o.coeffs = [x, xp](double t) {
        Coefficients c;
        c.P = Mat::Identity(2, 2);
        c.Q = Mat::Zero(2, 2);
        c.R = -Mat::Identity(2, 2);
        c.Lq = -x(t);
        c.xp = xp(t);
        c.xpp = -4 * kPi * kPi * x(t);
        return c;
    };
    LagrangianCallbacks cb;
    cb.x = x;
    cb.xprime = xp;
    cb.L = [](const Vec& q, const Vec& v) { return 0.5 * v.squaredNorm() - 0.5 * q.squaredNorm(); };
    cb.L_q = [](const Vec& q, const Vec&) { return Vec(-q); };
    cb.L_v = [](const Vec&, const Vec& v) { return v; };
    o.callbacks = cb;
    return o;
}

}  // namespace presets

inline OrbitData make_preset(const std::string& name, const PresetParams& p = {}) {
    OrbitData o;
    if (name == "flat_torus") {
        o = presets::straight_line(name, 2, 1.0, p.h.value_or(0.5), 1.0);
    } else if (name == "circle_free_particle") {
        o = presets::straight_line(name, 1, 1.0, p.h.value_or(0.5), 1.0);
    } else if (name == "harmonic_loop") {
        o = presets::harmonic(p.h.value_or(1.0));
    } else if (name == "kepler_circular") {
        const double h = p.h.value_or(-0.5);
        if (h >= 0) throw InvalidInput("kepler_circular: h must be negative");
        o = presets::kepler(name, 1.0, h);
    } else if (name == "negative_P_synthetic") {
        if (p.variant.empty() || p.variant == "free") {
            o = presets::straight_line(name, 2, -1.0, p.h.value_or(-0.5), 1.0);
        } else if (p.variant == "kepler") {
            o = presets::kepler(name, -1.0, p.h.value_or(0.5));
        } else {
            throw InvalidInput("negative_P_synthetic: unknown variant '" + p.variant + "'");
        }
    } else {
        throw InvalidInput("unknown preset '" + name + "'");
    }
    sample_from_evaluator(o, std::max(4, p.samples));
    return o;
}

}  // namespace symindex
