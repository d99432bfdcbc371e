#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowsentry/aggregate.hpp"

namespace flowsentry {

// Two-parameter traffic model: expected load grows linearly with the active
// flow count, B = b*N, and normal traffic stays inside the confidence band
//
//     b * (N +- k * A(1 - epsilon/2) * sqrt(N))
//
// all but a fraction epsilon of the time. b is the mean per-flow rate in
// bits per second, k the dimensionless dispersion of per-window residuals.
struct TrafficModel {
    double b = 0.0;
    double k = 0.0;
    double epsilon = 0.05;
    double quantile = 0.0;  // cached A(1 - epsilon/2)
    std::uint64_t fitted_on = 0;
    TimestampMs fitted_at = 0;
};

struct Band {
    double lower = 0.0;
    double upper = 0.0;
};

enum class AnomalyDirection { Above, Below };

std::string_view to_string(AnomalyDirection direction);

// A maximal run of >= m consecutive samples outside the band. The direction
// is that of the first offending sample in the run.
struct AnomalyEvent {
    TimestampMs window_start = 0;
    std::uint32_t run_length = 0;
    AnomalyDirection direction = AnomalyDirection::Above;
    std::vector<IntervalSample> samples;
};

// Inverse of the standard normal CDF, |error| < 1e-6 over [1e-9, 1-1e-9].
// Throws std::domain_error unless 0 < p < 1.
double normal_quantile(double p);

class FitError : public std::runtime_error {
  public:
    enum class Kind { InsufficientData, DegenerateFit };

    FitError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

// Least squares through the origin over samples with N > 0:
//   b = sum(N*B) / sum(N^2),  k = sample stddev of (B - b*N) / (b*sqrt(N)).
// Throws FitError when fewer than min_fit_samples nonempty samples exist or
// the fit degenerates (all N = 0 or b <= 0).
TrafficModel fit_model(std::span<const IntervalSample> samples, double epsilon,
                       std::size_t min_fit_samples = 24);

Band band(const TrafficModel& model, std::uint64_t active_flows);

inline bool outside_band(const Band& band, double load_bps) {
    return load_bps < band.lower || load_bps > band.upper;
}

// Scans window-ordered samples and emits one event per maximal run of at
// least min_run consecutive samples strictly outside the band at their N.
std::vector<AnomalyEvent> detect_anomalies(const TrafficModel& model,
                                           std::span<const IntervalSample> samples,
                                           std::uint32_t min_run);

// Key-value text persistence so a restart reuses the last fit.
std::string serialize_model(const TrafficModel& model);
std::optional<TrafficModel> parse_model(std::string_view text);
void save_model(const std::string& path, const TrafficModel& model);
std::optional<TrafficModel> load_model(const std::string& path);

}  // namespace flowsentry
