#include "latecomer/serialize.hpp"

#include "latecomer/csv.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace latecomer {

using json = nlohmann::ordered_json;

namespace {

std::vector<double> to_std(const Eigen::VectorXd &v) { return {v.data(), v.data() + v.size()}; }

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace

json to_json(const LassoFit &fit, const std::vector<std::string> &peer_names) {
    json j;
    json beta = json::object();
    for (std::size_t i = 0; i < peer_names.size() && static_cast<Eigen::Index>(i) < fit.beta.size(); ++i)
        beta[peer_names[i]] = fit.beta(static_cast<Eigen::Index>(i));
    json support = json::array();
    for (int s : fit.support)
        support.push_back(peer_names.at(static_cast<std::size_t>(s)));
    j["beta"] = beta;
    j["intercept"] = fit.intercept;
    j["support"] = support;
    j["lambda"] = fit.lambda;
    j["bic"] = nullable(fit.bic);
    j["path_length"] = fit.path.size();
    j["warnings"] = fit.warnings;
    return j;
}

json to_json(const EcmFit &fit) {
    json j;
    j["support"] = fit.support_names;
    j["beta"] = to_std(fit.beta);
    j["long_run_intercept"] = fit.long_run_intercept;
    j["pi"] = to_std(fit.pi);
    j["gamma"] = fit.gamma;
    j["sigma2"] = fit.sigma2;
    j["alpha"] = fit.alpha;
    j["window"] = fit.window;
    j["n_params"] = fit.n_params;
    j["fallback"] = fit.fallback;
    j["taus"] = fit.taus;
    j["fitted_log"] = to_std(fit.fitted_log);
    j["residuals_u"] = to_std(fit.residuals_u);
    j["row_weights"] = to_std(fit.row_weights);
    j["warnings"] = fit.warnings;
    return j;
}

json to_json(const ForecastPath &p) {
    json j;
    j["horizons"] = p.horizons;
    j["dates"] = p.dates;
    j["y_hat"] = p.y_hat;
    j["level_hat"] = p.level_hat;
    j["lower"] = p.lower;
    j["upper"] = p.upper;
    j["median"] = p.median;
    j["mean"] = p.mean;
    j["new_hat"] = p.new_hat;
    j["new_lower"] = p.new_lower;
    j["new_upper"] = p.new_upper;
    j["rate_hat"] = p.rate_hat;
    j["rate_lower"] = p.rate_lower;
    j["rate_upper"] = p.rate_upper;
    j["last_observed"] = p.last_observed;
    j["n_sims"] = p.n_sims;
    j["seed"] = p.seed;
    j["confidence"] = p.confidence;
    j["warnings"] = p.warnings;
    return j;
}

ForecastPath forecast_path_from_json(const json &j) {
    ForecastPath p;
    j.at("horizons").get_to(p.horizons);
    j.at("dates").get_to(p.dates);
    j.at("y_hat").get_to(p.y_hat);
    j.at("level_hat").get_to(p.level_hat);
    j.at("lower").get_to(p.lower);
    j.at("upper").get_to(p.upper);
    j.at("median").get_to(p.median);
    j.at("mean").get_to(p.mean);
    j.at("new_hat").get_to(p.new_hat);
    j.at("new_lower").get_to(p.new_lower);
    j.at("new_upper").get_to(p.new_upper);
    j.at("rate_hat").get_to(p.rate_hat);
    j.at("rate_lower").get_to(p.rate_lower);
    j.at("rate_upper").get_to(p.rate_upper);
    j.at("last_observed").get_to(p.last_observed);
    j.at("n_sims").get_to(p.n_sims);
    j.at("seed").get_to(p.seed);
    j.at("confidence").get_to(p.confidence);
    j.at("warnings").get_to(p.warnings);
    return p;
}

json to_json(const Score &s) {
    json j;
    j["mape_total"] = s.mape_total;
    j["mape_worst"] = s.mape_worst;
    json by_h = json::array();
    for (double v : s.mape_by_horizon)
        by_h.push_back(nullable(v));
    j["mape_by_horizon"] = by_h;
    j["cells_by_horizon"] = s.cells_by_horizon;
    j["n_scored"] = s.n_scored;
    return j;
}

json to_json(const BacktestReport &r) {
    json j;
    j["target"] = r.target;
    j["horizon"] = r.horizon;
    json origins = json::array();
    for (Date d : r.origins)
        origins.push_back(format_iso(d));
    j["origins"] = origins;
    json fits = json::array();
    for (const auto &f : r.fits)
        fits.push_back({{"origin", format_iso(f.origin)},
                        {"tau_len", f.tau_len},
                        {"selected_peers", f.selected_peers},
                        {"lambda", f.lambda},
                        {"gamma", f.gamma},
                        {"alpha", f.alpha},
                        {"fallback", f.fallback}});
    j["fits"] = fits;
    json skipped = json::array();
    for (const auto &s : r.skipped)
        skipped.push_back({{"origin", format_iso(s.origin)}, {"reason", s.reason}});
    j["skipped"] = skipped;
    json cells = json::array();
    for (const auto &c : r.cells)
        cells.push_back({{"origin", format_iso(c.origin)},
                         {"date", format_iso(c.target_date)},
                         {"horizon", c.horizon},
                         {"level", c.level},
                         {"lower", c.lower},
                         {"upper", c.upper},
                         {"calendar_leak", c.calendar_leak}});
    j["cells"] = cells;
    json observed = json::object();
    for (const auto &[d, v] : r.observed)
        observed[format_iso(d)] = v;
    j["observed"] = observed;
    j["score"] = r.score ? to_json(*r.score) : json(nullptr);
    return j;
}

std::string forecast_table_csv(const ForecastPath &p) {
    std::ostringstream out;
    out << "Date,Total,New,GrowthRatePct,Lower,Upper\n";
    for (std::size_t i = 0; i < p.horizons.size(); ++i)
        out << p.dates[i] << ',' << std::llround(p.level_hat[i]) << ',' << std::llround(p.new_hat[i]) << ','
            << fixed(100.0 * p.rate_hat[i], 2) << ',' << std::llround(p.lower[i]) << ','
            << std::llround(p.upper[i]) << '\n';
    return out.str();
}

std::string backtest_matrix_csv(const BacktestReport &r) {
    std::ostringstream out;
    out << "Date,Observed";
    for (Date d : r.origins)
        out << ',' << format_iso(d);
    out << '\n';
    if (r.cells.empty())
        return out.str();

    std::set<Date> dates;
    for (const auto &c : r.cells)
        dates.insert(c.target_date);
    std::map<std::pair<Date, Date>, double> by_cell;
    for (const auto &c : r.cells)
        by_cell[{c.target_date, c.origin}] = c.level;

    for (Date d = *dates.begin(); d <= *dates.rbegin(); d = add_days(d, 1)) {
        out << format_iso(d) << ',';
        if (auto it = r.observed.find(d); it != r.observed.end())
            out << std::llround(it->second);
        for (Date o : r.origins) {
            out << ',';
            if (auto it = by_cell.find({d, o}); it != by_cell.end())
                out << std::llround(it->second);
        }
        out << '\n';
    }
    return out.str();
}

} // namespace latecomer
