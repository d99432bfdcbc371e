#include "flowsentry/traffic_model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace flowsentry {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
}

// Acklam's rational approximation to the inverse normal CDF (~1e-9 before
// refinement).
double quantile_estimate(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

std::string_view to_string(AnomalyDirection direction) {
    return direction == AnomalyDirection::Above ? "above" : "below";
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("normal_quantile: p must lie in (0, 1)");
    double x = quantile_estimate(p);
    // One Newton step against the erfc-based CDF.
    double pdf = normal_pdf(x);
    if (pdf > 0.0) x -= (normal_cdf(x) - p) / pdf;
    return x;
}

TrafficModel fit_model(std::span<const IntervalSample> samples, double epsilon,
                       std::size_t min_fit_samples) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::domain_error("fit_model: epsilon must lie in (0, 1)");

    std::vector<const IntervalSample*> used;
    used.reserve(samples.size());
    for (const auto& s : samples)
        if (s.active_flows > 0) used.push_back(&s);

    if (!samples.empty() && used.empty())
        throw FitError(FitError::Kind::DegenerateFit, "all samples have zero active flows");
    if (used.size() < min_fit_samples)
        throw FitError(FitError::Kind::InsufficientData,
                       "need " + std::to_string(min_fit_samples) + " nonempty samples, have " +
                           std::to_string(used.size()));

    // Long double accumulation keeps integer-valued sums exact, so perfectly
    // linear input yields k = 0 exactly.
    long double sum_nb = 0.0L;
    long double sum_nn = 0.0L;
    for (const auto* s : used) {
        const long double n = static_cast<long double>(s->active_flows);
        sum_nb += n * static_cast<long double>(s->load_bps);
        sum_nn += n * n;
    }
    if (sum_nn <= 0.0L)
        throw FitError(FitError::Kind::DegenerateFit, "all samples have zero active flows");
    const double b = static_cast<double>(sum_nb / sum_nn);
    if (!(b > 0.0)) throw FitError(FitError::Kind::DegenerateFit, "nonpositive per-flow rate");

    long double sum_r = 0.0L;
    long double sum_rr = 0.0L;
    for (const auto* s : used) {
        const long double n = static_cast<long double>(s->active_flows);
        const long double r = (static_cast<long double>(s->load_bps) - b * n) /
                              (static_cast<long double>(b) * std::sqrt(n));
        sum_r += r;
        sum_rr += r * r;
    }
    const auto count = static_cast<long double>(used.size());
    double k = 0.0;
    if (used.size() > 1) {
        const long double var = (sum_rr - sum_r * sum_r / count) / (count - 1.0L);
        k = var > 0.0L ? static_cast<double>(std::sqrt(var)) : 0.0;
    }

    TrafficModel model;
    model.b = b;
    model.k = k;
    model.epsilon = epsilon;
    model.quantile = normal_quantile(1.0 - epsilon / 2.0);
    model.fitted_on = used.size();
    return model;
}

Band band(const TrafficModel& model, std::uint64_t active_flows) {
    const double n = static_cast<double>(active_flows);
    const double half_width = model.k * model.quantile * std::sqrt(n);
    return Band{std::max(0.0, model.b * (n - half_width)), model.b * (n + half_width)};
}

std::vector<AnomalyEvent> detect_anomalies(const TrafficModel& model,
                                           std::span<const IntervalSample> samples,
                                           std::uint32_t min_run) {
    std::vector<AnomalyEvent> events;
    AnomalyEvent run;
    auto flush = [&] {
        if (run.run_length >= min_run) events.push_back(std::move(run));
        run = AnomalyEvent{};
    };
    for (const auto& s : samples) {
        const Band limits = band(model, s.active_flows);
        if (outside_band(limits, s.load_bps)) {
            if (run.run_length == 0) {
                run.window_start = s.window_start;
                run.direction = s.load_bps > limits.upper ? AnomalyDirection::Above
                                                          : AnomalyDirection::Below;
            }
            ++run.run_length;
            run.samples.push_back(s);
        } else {
            flush();
        }
    }
    flush();
    return events;
}

std::string serialize_model(const TrafficModel& model) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "b %.17g\nk %.17g\nepsilon %.17g\nquantile %.17g\nfitted_on %llu\n"
                  "fitted_at %lld\n",
                  model.b, model.k, model.epsilon, model.quantile,
                  static_cast<unsigned long long>(model.fitted_on),
                  static_cast<long long>(model.fitted_at));
    return buf;
}

std::optional<TrafficModel> parse_model(std::string_view text) {
    std::map<std::string, std::string> kv;
    std::istringstream in{std::string(text)};
    std::string key, value;
    while (in >> key >> value) kv[key] = value;
    TrafficModel model;
    try {
        model.b = std::stod(kv.at("b"));
        model.k = std::stod(kv.at("k"));
        model.epsilon = std::stod(kv.at("epsilon"));
        model.quantile = std::stod(kv.at("quantile"));
        model.fitted_on = std::stoull(kv.at("fitted_on"));
        model.fitted_at = std::stoll(kv.at("fitted_at"));
    } catch (const std::exception&) {
        return std::nullopt;
    }
    if (!(model.b > 0.0) || model.k < 0.0 || !(model.epsilon > 0.0 && model.epsilon < 1.0))
        return std::nullopt;
    return model;
}

void save_model(const std::string& path, const TrafficModel& model) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << serialize_model(model);
}

std::optional<TrafficModel> load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::ostringstream text;
    text << in.rdbuf();
    return parse_model(text.str());
}

}  // namespace flowsentry
