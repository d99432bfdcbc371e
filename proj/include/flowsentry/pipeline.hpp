#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowsentry/aggregate.hpp"
#include "flowsentry/classify.hpp"
#include "flowsentry/mitigate.hpp"
#include "flowsentry/traffic_model.hpp"

namespace flowsentry {

// Which sampling grid the consecutive-run anomaly criterion watches. The
// model is fit on fit-window samples, so FitWindows is the default; pick
// ClassifyWindows only with a model fit at that cadence.
enum class AnomalyGrid { FitWindows, ClassifyWindows };

struct PipelineConfig {
    DurationMs classify_window = 60'000;  // classification cadence, "once a minute"
    DurationMs fit_window = 300'000;      // model-fitting sample grid
    DurationMs grace = 60'000;            // completed flows stay active this long
    Thresholds thresholds;
    double epsilon = 0.05;
    std::uint32_t consecutive_m = 3;  // out-of-band run length that raises an event
    DurationMs block_ttl = 300'000;
    DurationMs refit_interval = 3'600'000;
    std::string listen = "0.0.0.0:2055";
    std::vector<IPv4Prefix> whitelist;

    // Operational knobs beyond the core cadences.
    AnomalyGrid anomaly_grid = AnomalyGrid::FitWindows;
    FlowCountMode flow_count_mode = FlowCountMode::ActiveInWindow;
    std::size_t min_fit_samples = 24;
    DurationMs fit_history = 24 * 3'600'000;
    RuleDialect rule_dialect = RuleDialect::LinuxPacketFilter;
    bool auto_refit = true;  // off for batch runs with a pinned model
    // Economy mode: skip the per-source algorithm while the window sits
    // inside the band. Needs a model fit on the classify grid to be useful;
    // off by default, matching the deployment that classifies every minute.
    bool classify_only_on_anomaly = false;
};

struct TickOutput {
    // Last classify window closed by this tick, if any.
    std::optional<IntervalSample> sample;
    std::optional<Band> band_limits;
    bool outside_band = false;
    std::vector<AnomalyEvent> anomaly_events;  // runs completed this tick
    std::vector<SuspectReport> new_reports;    // retained after dedupe
    std::size_t blacklist_size = 0;
    bool rules_changed = false;
    std::vector<std::string> rules;  // populated when rules_changed
    double tick_millis = 0.0;
    std::string status_line;
};

// Ties ingest, aggregation, the traffic model, classification and mitigation
// into one loop. The clock is injected: tick(now) closes every classify and
// fit window that ends at or before now. Feed records (from the UDP queue or
// a file) before the tick that should see them; the per-source classifier
// runs every tick, the band criterion is reported alongside.
class Pipeline {
  public:
    explicit Pipeline(PipelineConfig config, JournalWriter* journal = nullptr);

    void feed(const FlowRecord& record);
    void feed(std::span<const FlowRecord> records);

    TickOutput tick(TimestampMs now);

    void set_model(const TrafficModel& model);
    const std::optional<TrafficModel>& model() const { return model_; }
    const Blacklist& blacklist() const { return blacklist_; }
    const std::vector<SuspectReport>& report_history() const { return report_history_; }
    const PipelineConfig& config() const { return config_; }
    std::size_t buffered_records() const { return buffer_.size(); }

  private:
    struct FitSample {
        IntervalSample sample;
        bool outside = false;  // vs the model current when it was taken
    };

    struct RunState {
        std::uint32_t length = 0;
        AnomalyDirection direction = AnomalyDirection::Above;
        TimestampMs window_start = 0;
        std::vector<IntervalSample> samples;
    };

    void close_classify_window(TimestampMs window_start, TimestampMs now, TickOutput& out);
    void close_fit_window(TimestampMs window_start, TickOutput& out);
    bool band_check(const IntervalSample& sample, RunState& run, TickOutput& out);
    void maybe_refit(TimestampMs now);
    void prune(TimestampMs now);

    PipelineConfig config_;
    JournalWriter* journal_;
    std::vector<FlowRecord> buffer_;
    std::optional<TrafficModel> model_;
    std::vector<SuspectReport> report_history_;
    Blacklist blacklist_;
    std::vector<FitSample> fit_samples_;
    RunState fit_run_;
    RunState classify_run_;
    std::optional<TimestampMs> next_classify_start_;
    std::optional<TimestampMs> next_fit_start_;
    TimestampMs last_fit_at_ = 0;
};

// Time from attack start to the first report naming the attacker, driving
// the pipeline over the records in export order (a flow becomes visible at
// end_time, when the router exports it). nullopt when the run completes
// without a matching report.
std::optional<DurationMs> detection_latency(const PipelineConfig& config,
                                            std::span<const FlowRecord> records,
                                            TimestampMs attack_start, IPv4Addr attacker);

// Offline analysis of a recorded stream: fit-grid samples over the full
// span (empty windows included), the band model (supplied, or fit from the
// input), anomaly runs, and the deduped reports from a virtual-time replay.
struct BatchResult {
    std::vector<IntervalSample> fit_samples;
    std::optional<TrafficModel> model;
    std::vector<AnomalyEvent> anomalies;
    std::vector<SuspectReport> reports;
};

BatchResult analyze_batch(const PipelineConfig& config, std::span<const FlowRecord> records,
                          std::optional<TrafficModel> model = std::nullopt);

}  // namespace flowsentry
