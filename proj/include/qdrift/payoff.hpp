#ifndef QDRIFT_PAYOFF_HPP
#define QDRIFT_PAYOFF_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"

namespace qdrift {

enum class PayoffKind { forward, call, put, straddle, digital, smooth_call, custom };

inline std::string to_string(PayoffKind k) {
    switch (k) {
    case PayoffKind::forward: return "forward";
    case PayoffKind::call: return "call";
    case PayoffKind::put: return "put";
    case PayoffKind::straddle: return "straddle";
    case PayoffKind::digital: return "digital";
    case PayoffKind::smooth_call: return "smooth_call";
    case PayoffKind::custom: return "custom";
    }
    return "unknown";
}

/// Piecewise cubic payout: on [nodes[i], nodes[i+1]] the value is
/// a + b t + c t^2 + d t^3 with t = x - nodes[i]; linear beyond the ends.
struct PiecewiseCubic {
    std::vector<double> nodes;
    std::vector<std::array<double, 4>> coeffs;
    double left_slope = 0.0;
    double right_slope = 0.0;
};

/// European payout U0(x).  Digitals are a continuous ramp of width epsilon
/// centred on the strike; smooth_call is softplus with sharpness beta.
struct Payoff {
    PayoffKind kind = PayoffKind::forward;
    double strike = 0.0;
    double epsilon = 1e-3;
    double beta = 1.0;
    PiecewiseCubic cubic;

    static Payoff forward(double k = 0.0) { return make(PayoffKind::forward, k); }
    static Payoff call(double k = 0.0) { return make(PayoffKind::call, k); }
    static Payoff put(double k = 0.0) { return make(PayoffKind::put, k); }
    static Payoff straddle(double k = 0.0) { return make(PayoffKind::straddle, k); }
    static Payoff digital(double k = 0.0, double eps = 1e-3) {
        if (!(eps > 0.0)) throw DomainError("digital ramp width must be positive");
        auto p = make(PayoffKind::digital, k);
        p.epsilon = eps;
        return p;
    }
    static Payoff smooth_call(double k = 0.0, double beta = 1.0) {
        if (!(beta > 0.0)) throw DomainError("smooth_call beta must be positive");
        auto p = make(PayoffKind::smooth_call, k);
        p.beta = beta;
        return p;
    }
    static Payoff custom(PiecewiseCubic pc);

private:
    static Payoff make(PayoffKind kind, double k) {
        Payoff p;
        p.kind = kind;
        p.strike = k;
        return p;
    }
};

namespace detail {

inline double logistic(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

inline double cubic_eval(const std::array<double, 4>& c, double t, int order) {
    switch (order) {
    case 0: return c[0] + t * (c[1] + t * (c[2] + t * c[3]));
    case 1: return c[1] + t * (2.0 * c[2] + 3.0 * t * c[3]);
    case 2: return 2.0 * c[2] + 6.0 * t * c[3];
    case 3: return 6.0 * c[3];
    default: return 0.0;
    }
}

// Interval index for x; right-continuous at interior nodes.
inline std::ptrdiff_t cubic_interval(const PiecewiseCubic& pc, double x) {
    if (x < pc.nodes.front()) return -1;
    if (x >= pc.nodes.back()) return static_cast<std::ptrdiff_t>(pc.coeffs.size());
    auto it = std::upper_bound(pc.nodes.begin(), pc.nodes.end(), x);
    return static_cast<std::ptrdiff_t>(it - pc.nodes.begin()) - 1;
}

inline double cubic_value(const PiecewiseCubic& pc, double x, int order) {
    const auto i = cubic_interval(pc, x);
    const auto m = static_cast<std::ptrdiff_t>(pc.coeffs.size());
    if (i < 0) {
        const double u0 = cubic_eval(pc.coeffs.front(), 0.0, 0);
        if (order == 0) return u0 + pc.left_slope * (x - pc.nodes.front());
        return order == 1 ? pc.left_slope : 0.0;
    }
    if (i >= m) {
        const double h = pc.nodes.back() - pc.nodes[pc.nodes.size() - 2];
        const double u1 = cubic_eval(pc.coeffs.back(), h, 0);
        if (order == 0) return u1 + pc.right_slope * (x - pc.nodes.back());
        return order == 1 ? pc.right_slope : 0.0;
    }
    return cubic_eval(pc.coeffs[static_cast<std::size_t>(i)], x - pc.nodes[static_cast<std::size_t>(i)], order);
}

} // namespace detail

inline Payoff Payoff::custom(PiecewiseCubic pc) {
    if (pc.nodes.size() < 2 || pc.coeffs.size() + 1 != pc.nodes.size())
        throw ValidationError("custom payoff needs n+1 nodes for n cubic pieces");
    for (std::size_t i = 0; i + 1 < pc.nodes.size(); ++i)
        if (!(pc.nodes[i + 1] > pc.nodes[i])) throw ValidationError("custom payoff nodes must increase");
    for (const auto& c : pc.coeffs)
        for (double v : c)
            if (!std::isfinite(v)) throw ValidationError("custom payoff coefficients must be finite");
    for (std::size_t i = 0; i + 1 < pc.coeffs.size(); ++i) {
        const double end = detail::cubic_eval(pc.coeffs[i], pc.nodes[i + 1] - pc.nodes[i], 0);
        if (std::abs(end - pc.coeffs[i + 1][0]) > 1e-12 * std::max(1.0, std::abs(end)))
            throw ValidationError("custom payoff must be continuous");
    }
    Payoff p;
    p.kind = PayoffKind::custom;
    p.cubic = std::move(pc);
    return p;
}

/// d^order U0 / dx^order at x, order 0..4.  Kinks take the right limit and
/// the distributional part of higher derivatives is dropped.
inline double payoff_derivative(const Payoff& p, double x, int order) {
    const double z = x - p.strike;
    switch (p.kind) {
    case PayoffKind::forward:
        return order == 0 ? z : (order == 1 ? 1.0 : 0.0);
    case PayoffKind::call:
        if (order == 0) return std::max(z, 0.0);
        return order == 1 ? (z >= 0.0 ? 1.0 : 0.0) : 0.0;
    case PayoffKind::put:
        if (order == 0) return std::max(-z, 0.0);
        return order == 1 ? (z >= 0.0 ? 0.0 : -1.0) : 0.0;
    case PayoffKind::straddle:
        if (order == 0) return std::abs(z);
        return order == 1 ? (z >= 0.0 ? 1.0 : -1.0) : 0.0;
    case PayoffKind::digital: {
        const double lo = -0.5 * p.epsilon;
        const double hi = 0.5 * p.epsilon;
        if (order == 0) return std::clamp((z - lo) / p.epsilon, 0.0, 1.0);
        if (order == 1) return (z >= lo && z < hi) ? 1.0 / p.epsilon : 0.0;
        return 0.0;
    }
    case PayoffKind::smooth_call: {
        const double b = p.beta;
        const double bz = b * z;
        const double s = detail::logistic(bz);
        switch (order) {
        case 0: return (std::max(bz, 0.0) + std::log1p(std::exp(-std::abs(bz)))) / b;
        case 1: return s;
        case 2: return b * s * (1.0 - s);
        case 3: return b * b * s * (1.0 - s) * (1.0 - 2.0 * s);
        case 4: return b * b * b * s * (1.0 - s) * (1.0 - 6.0 * s + 6.0 * s * s);
        default: return 0.0;
        }
    }
    case PayoffKind::custom:
        return detail::cubic_value(p.cubic, x, order);
    }
    return 0.0;
}

inline double payoff_value(const Payoff& p, double x) { return payoff_derivative(p, x, 0); }
inline double payoff_delta(const Payoff& p, double x) { return payoff_derivative(p, x, 1); }
inline double payoff_gamma(const Payoff& p, double x) { return payoff_derivative(p, x, 2); }

/// Points where the delta jumps.
inline std::vector<double> payoff_kinks(const Payoff& p) {
    switch (p.kind) {
    case PayoffKind::call:
    case PayoffKind::put:
    case PayoffKind::straddle: return {p.strike};
    case PayoffKind::digital: return {p.strike - 0.5 * p.epsilon, p.strike + 0.5 * p.epsilon};
    case PayoffKind::custom: {
        std::vector<double> out;
        const auto& pc = p.cubic;
        for (std::size_t i = 0; i < pc.nodes.size(); ++i) {
            const double x = pc.nodes[i];
            const double left = i == 0 ? pc.left_slope
                                       : detail::cubic_eval(pc.coeffs[i - 1], x - pc.nodes[i - 1], 1);
            const double right = i + 1 == pc.nodes.size() ? pc.right_slope : detail::cubic_eval(pc.coeffs[i], 0.0, 1);
            if (std::abs(left - right) > 1e-12 * std::max(1.0, std::abs(left))) out.push_back(x);
        }
        return out;
    }
    default: return {};
    }
}

/// True when x sits on a kink, where payoff_delta reports the right limit.
inline bool is_kink(const Payoff& p, double x) {
    const auto k = payoff_kinks(p);
    return std::find(k.begin(), k.end(), x) != k.end();
}

/// Points where any derivative up to U''' jumps (the nodes of a custom cubic).
inline std::vector<double> payoff_breakpoints(const Payoff& p) {
    if (p.kind == PayoffKind::custom) return p.cubic.nodes;
    return payoff_kinks(p);
}

struct DeltaSegment {
    double lo;
    double hi;
    int sign; ///< +1 buyer, 0 neutral, -1 seller
};

using DeltaSegmentation = std::vector<DeltaSegment>;

namespace detail {

inline void push_segment(DeltaSegmentation& out, double lo, double hi, int sign) {
    if (!(hi > lo)) return;
    if (!out.empty() && out.back().sign == sign) {
        out.back().hi = hi;
        return;
    }
    out.push_back({lo, hi, sign});
}

inline int sign_of(double v, double scale) {
    const double tol = 1e-14 * std::max(1.0, scale);
    return v > tol ? 1 : (v < -tol ? -1 : 0);
}

// Split points of a custom cubic: nodes plus real roots of the quadratic delta.
inline std::vector<double> cubic_split_points(const PiecewiseCubic& pc) {
    std::vector<double> pts(pc.nodes.begin(), pc.nodes.end());
    for (std::size_t i = 0; i < pc.coeffs.size(); ++i) {
        const auto& c = pc.coeffs[i];
        const double h = pc.nodes[i + 1] - pc.nodes[i];
        const double qa = 3.0 * c[3], qb = 2.0 * c[2], qc = c[1];
        std::vector<double> roots;
        if (std::abs(qa) > 1e-300) {
            const double disc = qb * qb - 4.0 * qa * qc;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                const double q = -0.5 * (qb + std::copysign(sq, qb));
                roots.push_back(q / qa);
                if (q != 0.0) roots.push_back(qc / q);
            }
        } else if (std::abs(qb) > 1e-300) {
            roots.push_back(-qc / qb);
        }
        for (double r : roots)
            if (r > 0.0 && r < h) pts.push_back(pc.nodes[i] + r);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

} // namespace detail

/// Buyer / neutral / seller partition of the real line by the sign of the delta.
inline DeltaSegmentation segment_delta(const Payoff& p) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double k = p.strike;
    DeltaSegmentation out;
    switch (p.kind) {
    case PayoffKind::forward:
    case PayoffKind::smooth_call: return {{-inf, inf, 1}};
    case PayoffKind::call: return {{-inf, k, 0}, {k, inf, 1}};
    case PayoffKind::put: return {{-inf, k, -1}, {k, inf, 0}};
    case PayoffKind::straddle: return {{-inf, k, -1}, {k, inf, 1}};
    case PayoffKind::digital:
        return {{-inf, k - 0.5 * p.epsilon, 0}, {k - 0.5 * p.epsilon, k + 0.5 * p.epsilon, 1},
                {k + 0.5 * p.epsilon, inf, 0}};
    case PayoffKind::custom: {
        const auto& pc = p.cubic;
        double scale = std::max(std::abs(pc.left_slope), std::abs(pc.right_slope));
        for (const auto& c : pc.coeffs) scale = std::max({scale, std::abs(c[1]), std::abs(c[2]), std::abs(c[3])});
        if (!std::isfinite(scale)) throw DomainError("custom payoff delta has no detectable sign pattern");
        const auto pts = detail::cubic_split_points(pc);
        detail::push_segment(out, -inf, pts.front(), detail::sign_of(pc.left_slope, scale));
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            const double mid = 0.5 * (pts[i] + pts[i + 1]);
            detail::push_segment(out, pts[i], pts[i + 1], detail::sign_of(payoff_delta(p, mid), scale));
        }
        detail::push_segment(out, pts.back(), inf, detail::sign_of(pc.right_slope, scale));
        return out;
    }
    }
    return out;
}

namespace detail {

// Re-expand the cubic c (origin 0) about t0.
inline std::array<double, 4> shift_cubic(const std::array<double, 4>& c, double t0) {
    return {cubic_eval(c, t0, 0), cubic_eval(c, t0, 1), 0.5 * cubic_eval(c, t0, 2), c[3]};
}

inline Payoff short_put(double k) {
    PiecewiseCubic pc;
    pc.nodes = {k - 1.0, k};
    pc.coeffs = {{-1.0, 1.0, 0.0, 0.0}};
    pc.left_slope = 1.0;
    pc.right_slope = 0.0;
    return Payoff::custom(std::move(pc));
}

} // namespace detail

/// Write a European payout as a signed sum of payouts whose delta is
/// non-negative: U0 = sum sign_i * piece_i.
inline std::vector<std::pair<Payoff, int>> decompose_monotone(const Payoff& p) {
    switch (p.kind) {
    case PayoffKind::forward:
    case PayoffKind::call:
    case PayoffKind::digital:
    case PayoffKind::smooth_call: return {{p, 1}};
    case PayoffKind::put: return {{detail::short_put(p.strike), -1}};
    case PayoffKind::straddle: return {{Payoff::call(p.strike), 1}, {detail::short_put(p.strike), -1}};
    case PayoffKind::custom: break;
    }

    // Rising part P and falling part N with U0 = P - N; P absorbs the constant.
    const auto& pc = p.cubic;
    const auto pts = detail::cubic_split_points(pc);
    PiecewiseCubic up, down;
    up.nodes = down.nodes = pts;
    double up_level = payoff_value(p, pts.front());
    double down_level = 0.0;
    bool any_down = pc.left_slope < 0.0;
    up.left_slope = std::max(pc.left_slope, 0.0);
    down.left_slope = std::max(-pc.left_slope, 0.0);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double mid = 0.5 * (pts[i] + pts[i + 1]);
        const auto j = static_cast<std::size_t>(detail::cubic_interval(pc, mid));
        auto local = detail::shift_cubic(pc.coeffs[j], pts[i] - pc.nodes[j]);
        const double h = pts[i + 1] - pts[i];
        const double rise = detail::cubic_eval(local, h, 0) - local[0];
        const double d = payoff_delta(p, mid);
        if (d > 0.0) {
            up.coeffs.push_back({up_level, local[1], local[2], local[3]});
            down.coeffs.push_back({down_level, 0.0, 0.0, 0.0});
            up_level += rise;
        } else if (d < 0.0) {
            any_down = true;
            up.coeffs.push_back({up_level, 0.0, 0.0, 0.0});
            down.coeffs.push_back({down_level, -local[1], -local[2], -local[3]});
            down_level -= rise;
        } else {
            up.coeffs.push_back({up_level, 0.0, 0.0, 0.0});
            down.coeffs.push_back({down_level, 0.0, 0.0, 0.0});
        }
    }
    up.right_slope = std::max(pc.right_slope, 0.0);
    down.right_slope = std::max(-pc.right_slope, 0.0);
    any_down = any_down || pc.right_slope < 0.0;

    std::vector<std::pair<Payoff, int>> out;
    out.emplace_back(Payoff::custom(std::move(up)), 1);
    if (any_down) out.emplace_back(Payoff::custom(std::move(down)), -1);
    return out;
}

inline nlohmann::json to_json(const Payoff& p) {
    nlohmann::json j{{"kind", to_string(p.kind)}, {"strike", p.strike}};
    if (p.kind == PayoffKind::digital) j["epsilon"] = p.epsilon;
    if (p.kind == PayoffKind::smooth_call) j["beta"] = p.beta;
    if (p.kind == PayoffKind::custom) {
        j["nodes"] = p.cubic.nodes;
        j["coeffs"] = p.cubic.coeffs;
        j["left_slope"] = p.cubic.left_slope;
        j["right_slope"] = p.cubic.right_slope;
    }
    return j;
}

inline Payoff payoff_from_json(const nlohmann::json& j) {
    try {
        const std::string kind = j.at("kind").get<std::string>();
        const double k = j.value("strike", 0.0);
        if (kind == "forward") return Payoff::forward(k);
        if (kind == "call") return Payoff::call(k);
        if (kind == "put") return Payoff::put(k);
        if (kind == "straddle") return Payoff::straddle(k);
        if (kind == "digital") return Payoff::digital(k, j.value("epsilon", 1e-3));
        if (kind == "smooth_call") return Payoff::smooth_call(k, j.value("beta", 1.0));
        if (kind == "custom") {
            PiecewiseCubic pc;
            pc.nodes = j.at("nodes").get<std::vector<double>>();
            pc.coeffs = j.at("coeffs").get<std::vector<std::array<double, 4>>>();
            pc.left_slope = j.value("left_slope", 0.0);
            pc.right_slope = j.value("right_slope", 0.0);
            return Payoff::custom(std::move(pc));
        }
        throw ValidationError("unknown payoff kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed payoff: ") + e.what());
    } catch (const DomainError& e) {
        throw ValidationError(e.what());
    }
}

} // namespace qdrift

#endif // QDRIFT_PAYOFF_HPP
