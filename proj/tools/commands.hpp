#ifndef QDRIFT_TOOLS_COMMANDS_HPP
#define QDRIFT_TOOLS_COMMANDS_HPP

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include <qdrift/qdrift.hpp>

#include "run_config.hpp"

namespace qdrift::cli {

/// Files to write (atomically, by the caller) and text for standard output.
struct Outputs {
    std::vector<std::pair<std::filesystem::path, std::string>> files;
    std::string summary;
};

struct FigureCurve {
    std::string label;
    ReturnDistribution dist;
    DistributionMoments moments;
    double drift; ///< spectral drift carried by this curve alone
};

struct FigureResult {
    int id = 1;
    nlohmann::json parameters;
    std::vector<FigureCurve> curves;
    nlohmann::json checks;
};

namespace detail {

inline FigureCurve make_curve(std::string label, ReturnDistribution d) {
    const auto m = distribution_moments(d);
    const double mu = quantum_drift_spectral(d);
    return {std::move(label), std::move(d), m, mu};
}

inline std::vector<double> normalised_density(const ReturnDistribution& d) {
    auto rho = d.density();
    for (double& v : rho) v /= d.mass;
    return rho;
}

inline std::string label_sigma(const char* name, double v) { return std::string(name) + "=" + io::format_number(v); }

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

/// Header block shared by every CSV output.
inline std::vector<std::pair<std::string, std::string>> csv_header(const RunConfig& c) {
    return {{"config", to_json(c).dump()}, {"convention", transform_convention}};
}

inline nlohmann::json report_header(const RunConfig& c) {
    return {{"config", to_json(c)}, {"convention", transform_convention}};
}

/// Keeps the part of each curve above 1e-4 of the overall peak and thins
/// every series to at most `max_points` samples.
inline std::vector<io::Series> plot_series(const std::vector<FigureCurve>& curves, std::size_t max_points = 1500) {
    double peak = 0.0;
    std::vector<std::vector<double>> rho;
    for (const auto& c : curves) {
        rho.push_back(normalised_density(c.dist));
        for (double v : rho.back()) peak = std::max(peak, v);
    }
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t k = 0; k < curves.size(); ++k)
        for (std::size_t i = 0; i < rho[k].size(); ++i)
            if (rho[k][i] >= 1e-4 * peak) {
                lo = std::min(lo, curves[k].dist.lambda[i]);
                hi = std::max(hi, curves[k].dist.lambda[i]);
            }
    std::vector<io::Series> out;
    for (std::size_t k = 0; k < curves.size(); ++k) {
        io::Series s{curves[k].label, {}, {}};
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < rho[k].size(); ++i)
            if (curves[k].dist.lambda[i] >= lo && curves[k].dist.lambda[i] <= hi) idx.push_back(i);
        const std::size_t stride = std::max<std::size_t>(1, (idx.size() + max_points - 1) / max_points);
        for (std::size_t j = 0; j < idx.size(); j += stride) {
            s.x.push_back(curves[k].dist.lambda[idx[j]]);
            s.y.push_back(rho[k][idx[j]]);
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace detail

/// Curves for the three figure parameter sets.  Figure 2 evaluates the
/// sigma_H = 0.1 curve on the sigma_H = 0.2 window scaled by 1/4 with the
/// same sample count, so the rescaling is checked sample by sample.
inline FigureResult figure_data(int id) {
    FigureResult r;
    r.id = id;
    const double s = 0.2;
    if (id == 1) {
        r.parameters = {{"sigma_s", s}, {"sigma_h", s}, {"alpha", 0.0}, {"metrics", {"g=1", "g=1{x>0}"}}};
        const auto state = make_gaussian(0.0, s);
        r.curves.push_back(detail::make_curve("g=1", auto_transform(state, unit_metric(), s)));
        r.curves.push_back(detail::make_curve("g=1{x>0}", auto_transform(state, indicator_metric(), s)));
        const auto& a = r.curves[0].moments;
        const auto& b = r.curves[1].moments;
        r.checks = {{"means_within_1e-6", std::abs(a.mean) <= 1e-6 && std::abs(b.mean) <= 1e-6},
                    {"indicator_variance_larger", b.variance > a.variance}};
    } else if (id == 2) {
        r.parameters = {{"sigma_s", s}, {"alpha", 1.0}, {"sigma_h", {0.2, 0.1}}, {"metric", "g=1{x>0}"}};
        const auto state = make_gaussian(0.0, s, 1.0);
        auto wide = auto_transform(state, indicator_metric(), 0.2);
        const double w = wide.lambda.back();
        auto narrow = eigen_transform(state, indicator_metric(), 0.1, -w / 4.0, w / 4.0, wide.lambda.size());
        const auto rho_w = detail::normalised_density(wide);
        const auto rho_n = detail::normalised_density(narrow);
        double worst = 0.0, peak = 0.0;
        for (std::size_t i = 0; i < rho_n.size(); ++i) {
            worst = std::max(worst, std::abs(rho_n[i] - 4.0 * rho_w[i]));
            peak = std::max(peak, rho_n[i]);
        }
        r.curves.push_back(detail::make_curve(detail::label_sigma("sigma_H", 0.2), std::move(wide)));
        r.curves.push_back(detail::make_curve(detail::label_sigma("sigma_H", 0.1), std::move(narrow)));
        const double width_ratio =
            std::sqrt(r.curves[1].moments.variance) / std::sqrt(r.curves[0].moments.variance);
        r.checks = {{"rescaling_error", worst / peak},
                    {"rescaling_within_1e-6", worst / peak <= 1e-6},
                    {"width_ratio_0.1_over_0.2", width_ratio},
                    {"smaller_sigma_h_is_tighter", width_ratio < 1.0}};
    } else if (id == 3) {
        r.parameters = {{"sigma_s", s}, {"sigma_h", s}, {"alpha", {1.0, -1.0}}, {"metric", "g=1{x>0}"}};
        for (double alpha : {1.0, -1.0}) {
            const auto state = make_gaussian(0.0, s, alpha);
            r.curves.push_back(
                detail::make_curve(detail::label_sigma("alpha", alpha), auto_transform(state, indicator_metric(), s)));
        }
        const double mp = r.curves[0].moments.mean, mm = r.curves[1].moments.mean;
        r.checks = {{"mean_plus", mp},
                    {"mean_minus", mm},
                    {"mean_sum", mp + mm},
                    {"opposite_equal_within_1e-8", mp != 0.0 && mm != 0.0 && std::abs(mp + mm) <= 1e-8}};
    } else {
        throw ValidationError("figure id must be 1, 2 or 3");
    }
    return r;
}

inline Outputs cmd_figure(const RunConfig& c) {
    const auto fig = figure_data(c.figure);
    const std::string stem = "figure" + std::to_string(c.figure);
    const std::filesystem::path dir = c.out.empty() ? "." : c.out;
    if (!std::filesystem::is_directory(dir)) throw IoError("output directory '" + dir.string() + "' does not exist");

    io::CsvTable table;
    table.metadata = detail::csv_header(c);
    table.metadata.emplace_back("figure_parameters", fig.parameters.dump());
    for (std::size_t k = 0; k < fig.curves.size(); ++k)
        table.metadata.emplace_back("curve " + std::to_string(k), fig.curves[k].label);
    table.columns = {"curve", "lambda", "density"};
    for (std::size_t k = 0; k < fig.curves.size(); ++k) {
        const auto rho = detail::normalised_density(fig.curves[k].dist);
        for (std::size_t i = 0; i < rho.size(); ++i)
            table.add_row({static_cast<double>(k), fig.curves[k].dist.lambda[i], rho[i]});
    }

    auto report = detail::report_header(c);
    report["figure_parameters"] = fig.parameters;
    report["curves"] = nlohmann::json::array();
    std::ostringstream summary;
    summary << "figure " << c.figure << "\n";
    for (const auto& curve : fig.curves) {
        report["curves"].push_back({{"label", curve.label},
                                    {"mean", curve.moments.mean},
                                    {"variance", curve.moments.variance},
                                    {"mass", curve.dist.mass},
                                    {"drift", curve.drift},
                                    {"lambda_max", curve.dist.lambda.back()},
                                    {"samples", curve.dist.lambda.size()}});
        summary << "  " << curve.label << ": mean " << io::format_number(curve.moments.mean) << ", variance "
                << io::format_number(curve.moments.variance) << ", drift " << io::format_number(curve.drift) << "\n";
    }
    report["checks"] = fig.checks;
    summary << "  checks " << fig.checks.dump() << "\n";

    io::LineChart chart;
    chart.title = "Figure " + std::to_string(c.figure) + ": return distributions";
    chart.x_label = "lambda";
    chart.y_label = "density";
    chart.series = detail::plot_series(fig.curves);
    chart.metadata = report.at("config").dump() + " " + transform_convention;

    Outputs o;
    o.files.emplace_back(dir / (stem + ".csv"), io::to_csv(table));
    o.files.emplace_back(dir / (stem + ".json"), detail::dump(report));
    o.files.emplace_back(dir / (stem + ".svg"), io::to_svg(chart));
    o.summary = summary.str();
    return o;
}

/// Output path, or standard output when none is given.
inline void emit(Outputs& o, const RunConfig& c, std::string content) {
    if (c.out.empty())
        o.summary += content;
    else
        o.files.emplace_back(c.out, std::move(content));
}

inline Outputs cmd_price(const RunConfig& c) {
    const auto state = make_state(c);
    const auto payoff = make_payoff(c);
    const auto h = make_hamiltonian(c);
    auto report = detail::report_header(c);
    report["payoff"] = to_json(payoff);
    if (c.t == 0.0) {
        report["p0"] = zeroth_price(state, payoff);
    } else {
        const auto e = first_order_price(state, payoff, h, c.t, c.rate, c.spectral);
        report["p0"] = e.p0;
        report["mu"] = e.mu;
        if (e.mu_spectral) report["mu_spectral"] = *e.mu_spectral;
        report["t"] = e.t;
        report["rate"] = e.rate;
        report["price"] = e.price;
        report["validity_horizon"] = std::isfinite(e.horizon) ? nlohmann::json(e.horizon) : nlohmann::json(nullptr);
        if (std::isfinite(e.horizon) && e.t > e.horizon) report["warning"] = "t exceeds the first-order validity horizon";
        const auto m = martingale_check(state, h);
        report["martingale"] = {{"expected_momentum", m.expected_momentum},
                                {"commutator_norm", m.commutator_norm},
                                {"arbitrage_free", m.arbitrage_free}};
    }
    Outputs o;
    emit(o, c, detail::dump(report));
    return o;
}

inline Metric selected_metric(const RunConfig& c, const Payoff& p) {
    const auto metrics = payoff_metrics(p);
    if (c.segment < 0 || static_cast<std::size_t>(c.segment) >= metrics.size())
        throw ValidationError("segment " + std::to_string(c.segment) + " does not exist; the payoff has " +
                              std::to_string(metrics.size()) + " non-neutral delta segment(s)");
    return metrics[static_cast<std::size_t>(c.segment)];
}

inline Outputs cmd_transform(const RunConfig& c) {
    const auto state = make_state(c);
    const auto payoff = make_payoff(c);
    const auto metric = selected_metric(c, payoff);
    const auto d = c.lambda_min ? eigen_transform(state, metric, c.sigma_h, *c.lambda_min, *c.lambda_max,
                                                  static_cast<std::size_t>(c.n.value_or(4097)))
                                : auto_transform(state, metric, c.sigma_h);
    const auto m = distribution_moments(d);
    Outputs o;
    if (c.format == "svg") {
        io::LineChart chart;
        chart.title = "Return distribution";
        chart.x_label = "lambda";
        chart.y_label = "density";
        chart.series = detail::plot_series({detail::make_curve(to_string(payoff.kind), d)});
        chart.metadata = to_json(c).dump() + " " + transform_convention;
        emit(o, c, io::to_svg(chart));
        return o;
    }
    if (c.format == "json") {
        auto report = detail::report_header(c);
        report["orientation"] = d.orientation;
        report["mass"] = d.mass;
        report["mean"] = m.mean;
        report["variance"] = m.variance;
        report["drift"] = quantum_drift_spectral(d);
        report["lambda"] = d.lambda;
        report["density"] = d.density();
        emit(o, c, detail::dump(report));
        return o;
    }
    io::CsvTable t;
    t.metadata = detail::csv_header(c);
    t.metadata.emplace_back("orientation", std::to_string(d.orientation));
    t.metadata.emplace_back("mass", io::format_number(d.mass));
    t.metadata.emplace_back("mean", io::format_number(m.mean));
    t.metadata.emplace_back("variance", io::format_number(m.variance));
    t.columns = {"lambda", "re_psi_tilde", "im_psi_tilde", "density"};
    for (std::size_t i = 0; i < d.lambda.size(); ++i)
        t.add_row({d.lambda[i], d.psi_tilde[i].real(), d.psi_tilde[i].imag(), std::norm(d.psi_tilde[i])});
    emit(o, c, io::to_csv(t));
    return o;
}

inline EvolutionSettings evolution_settings(const RunConfig& c) {
    EvolutionSettings s;
    s.grid_n = static_cast<std::size_t>(c.grid_n);
    s.x_min = c.x_min;
    s.x_max = c.x_max;
    return s;
}

/// Largest pairwise disagreement: relative when the scale exceeds 1e-8,
/// absolute otherwise.
inline double pairwise_spread(const std::vector<double>& v) {
    double worst = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size(); ++j) {
            const double scale = std::max(std::abs(v[i]), std::abs(v[j]));
            const double diff = std::abs(v[i] - v[j]);
            worst = std::max(worst, scale > 1e-8 ? diff / scale : diff);
        }
    return worst;
}

inline Outputs cmd_oracle(const RunConfig& c) {
    const auto state = make_state(c);
    const auto payoff = make_payoff(c);
    const auto h = make_hamiltonian(c);
    const auto settings = evolution_settings(c);
    const double t_curve = c.t > 0.0 ? c.t : 0.05;
    const auto curve = heisenberg_expectation_curve(state, payoff, h, t_curve, static_cast<std::size_t>(c.steps),
                                                    settings);
    const double mu_c = quantum_drift_commutator(state, payoff, h);
    const double mu_s = spectral_drift(state, payoff, h.sigma_h);
    const double mu_f = evolution_drift(state, payoff, h, 1e-3, settings);

    auto report = detail::report_header(c);
    report["payoff"] = to_json(payoff);
    report["p0"] = zeroth_price(state, payoff);
    report["drift"] = {{"commutator", mu_c}, {"spectral", mu_s}, {"finite_difference", mu_f}};
    report["max_pairwise_disagreement"] = pairwise_spread({mu_c, mu_s, mu_f});
    report["spectral_constant"] = spectral_drift_constant;
    report["curve"] = {{"t_max", t_curve},
                       {"samples", c.steps},
                       {"max_boundary_mass", curve.max_boundary_mass},
                       {"norm_drift", std::abs(curve.norm.back() - curve.norm.front())}};

    io::CsvTable t;
    t.metadata = detail::csv_header(c);
    t.columns = {"t", "e_u", "e_x", "e_p", "norm"};
    for (std::size_t i = 0; i < curve.times.size(); ++i)
        t.add_row({curve.times[i], curve.e_u[i], curve.e_x[i], curve.e_p[i], curve.norm[i]});

    const std::string prefix = c.out.empty() ? "oracle" : c.out;
    Outputs o;
    o.files.emplace_back(prefix + ".csv", io::to_csv(t));
    o.files.emplace_back(prefix + ".json", detail::dump(report));
    o.summary = "drift commutator " + io::format_number(mu_c) + ", spectral " + io::format_number(mu_s) +
                ", finite difference " + io::format_number(mu_f) + "\n";
    return o;
}

inline Outputs cmd_sweep(const RunConfig& c) {
    const auto state = make_state(c);
    const auto payoff = make_payoff(c);
    const auto rows = classical_limit_sweep(state, payoff, c.sigma_h_list);
    bool monotone = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const bool up = rows[i].sigma_h > rows[i - 1].sigma_h;
        const double a = std::abs(rows[i - 1].mu), b = std::abs(rows[i].mu);
        if (up ? b < a : b > a) monotone = false;
    }
    Outputs o;
    if (c.format == "svg") {
        io::LineChart chart;
        chart.title = "Drift against sigma_H";
        chart.x_label = "sigma_H";
        chart.y_label = "|mu|";
        io::Series s{"|mu|", {}, {}};
        for (const auto& r : rows) {
            s.x.push_back(r.sigma_h);
            s.y.push_back(std::abs(r.mu));
        }
        chart.series.push_back(std::move(s));
        chart.metadata = to_json(c).dump() + " " + transform_convention;
        emit(o, c, io::to_svg(chart));
        return o;
    }
    io::CsvTable t;
    t.metadata = detail::csv_header(c);
    t.metadata.emplace_back("abs_mu_monotone", monotone ? "true" : "false");
    t.columns = {"sigma_h", "mu", "abs_mu", "width", "rescaling_error"};
    for (const auto& r : rows) t.add_row({r.sigma_h, r.mu, std::abs(r.mu), r.width, r.rescaling_error});
    emit(o, c, io::to_csv(t));
    return o;
}

/// Laplacian reduction residuals of both connections on a smooth payoff metric.
inline Outputs cmd_residual(const RunConfig& c) {
    const auto payoff = make_payoff(c);
    const auto metric = selected_metric(c, payoff);
    const double lo = std::max(metric.lo(), c.x_min.value_or(-2.0));
    const double hi = std::min(metric.hi(), c.x_max.value_or(2.0));
    if (!(hi > lo)) throw ValidationError("residual window does not intersect the metric domain");
    const auto n = static_cast<std::size_t>(c.n.value_or(2001));
    std::vector<double> x(n), f(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        f[i] = std::exp(-x[i] * x[i]) * std::cos(3.0 * x[i]);
    }
    auto max_abs = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double e : v) m = std::max(m, std::abs(e));
        return m;
    };
    auto report = detail::report_header(c);
    report["window"] = {lo, hi};
    report["test_function"] = "exp(-x^2) cos(3x)";
    report["residual_default_connection"] = max_abs(laplacian_residual(metric, connection_coefficients(metric), x, f));
    report["residual_simplifying_connection"] =
        max_abs(laplacian_residual(metric, simplifying_connection(metric), x, f));
    report["eigen_residual_lambda_1"] = eigen_residual(metric, 1.0, c.sigma_h, x);
    Outputs o;
    emit(o, c, detail::dump(report));
    return o;
}

/// k = 2 Sturm-Liouville spectrum: base grid, 2x-refined grid and the
/// Liouville normal form.
inline Outputs cmd_sl(const RunConfig& c) {
    const bool exponential = c.payoff == "exponential";
    const auto u = exponential ? exponential_payout() : smooth_payout(make_payoff(c));
    const double lo = c.x_min.value_or(exponential ? 0.0 : -2.0);
    const double hi = c.x_max.value_or(exponential ? 1.0 : 2.0);
    const auto sl = build_sl_problem(u, c.sigma_h, lo, hi);
    const auto n = static_cast<std::size_t>(c.n.value_or(256));
    const std::size_t k = 3;
    const auto base = sl_eigensolve(sl, n, k);
    const auto fine = sl_eigensolve(sl, 2 * n + 1, k);
    const auto wkb = wkb_eigenvalues(liouville_transform(sl), 2 * n + 1, k);
    auto report = detail::report_header(c);
    report["payout"] = u.name;
    report["interval"] = {lo, hi};
    report["lambda_scale"] = sl.lambda_scale;
    report["big_lambda"] = base.big_lambda;
    report["lambda"] = base.lambda;
    report["big_lambda_refined"] = fine.big_lambda;
    report["big_lambda_liouville"] = wkb;
    std::vector<double> rel_ref, rel_wkb;
    for (std::size_t j = 0; j < k; ++j) {
        rel_ref.push_back(std::abs(base.big_lambda[j] - fine.big_lambda[j]) / std::abs(fine.big_lambda[j]));
        rel_wkb.push_back(std::abs(wkb[j] - fine.big_lambda[j]) / std::abs(fine.big_lambda[j]));
    }
    report["relative_difference_refined"] = rel_ref;
    report["relative_difference_liouville"] = rel_wkb;
    Outputs o;
    emit(o, c, detail::dump(report));
    return o;
}

inline Outputs run(const RunConfig& c) {
    validate(c);
    if (c.command == "figure") return cmd_figure(c);
    if (c.command == "price") return cmd_price(c);
    if (c.command == "transform") return cmd_transform(c);
    if (c.command == "oracle") return cmd_oracle(c);
    if (c.command == "sweep") return cmd_sweep(c);
    if (c.command == "residual") return cmd_residual(c);
    if (c.command == "sl") return cmd_sl(c);
    throw ValidationError("unknown command '" + c.command + "'");
}

} // namespace qdrift::cli

#endif // QDRIFT_TOOLS_COMMANDS_HPP
