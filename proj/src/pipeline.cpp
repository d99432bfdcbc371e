#include "flowsentry/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

namespace flowsentry {

namespace {

bool whitelisted(IPv4Addr addr, std::span<const IPv4Prefix> whitelist) {
    return std::any_of(whitelist.begin(), whitelist.end(),
                       [&](const IPv4Prefix& p) { return p.contains(addr); });
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config, JournalWriter* journal)
    : config_(std::move(config)), journal_(journal) {}

void Pipeline::feed(const FlowRecord& record) { buffer_.push_back(record); }

void Pipeline::feed(std::span<const FlowRecord> records) {
    buffer_.insert(buffer_.end(), records.begin(), records.end());
}

void Pipeline::set_model(const TrafficModel& model) { model_ = model; }

bool Pipeline::band_check(const IntervalSample& sample, RunState& run, TickOutput& out) {
    if (!model_) return false;
    const Band limits = band(*model_, sample.active_flows);
    const bool outside = outside_band(limits, sample.load_bps);
    if (outside) {
        if (run.length == 0) {
            run.window_start = sample.window_start;
            run.direction = sample.load_bps > limits.upper ? AnomalyDirection::Above
                                                           : AnomalyDirection::Below;
        }
        ++run.length;
        run.samples.push_back(sample);
    } else {
        if (run.length >= config_.consecutive_m) {
            AnomalyEvent event;
            event.window_start = run.window_start;
            event.run_length = run.length;
            event.direction = run.direction;
            event.samples = std::move(run.samples);
            out.anomaly_events.push_back(std::move(event));
        }
        run = RunState{};
    }
    return outside;
}

void Pipeline::close_fit_window(TimestampMs window_start, TickOutput& out) {
    // Grace is a classification rule; model samples attribute bytes and
    // activity on the bare window so that B stays an unbiased mean of b*N.
    const auto assigned = window_slice(buffer_, window_start, config_.fit_window, 0);
    FitSample fit;
    fit.sample = sample_interval(window_start, config_.fit_window, buffer_, assigned,
                                 config_.flow_count_mode);
    if (config_.anomaly_grid == AnomalyGrid::FitWindows)
        fit.outside = band_check(fit.sample, fit_run_, out);
    fit_samples_.push_back(std::move(fit));

    const TimestampMs horizon = window_start + config_.fit_window - config_.fit_history;
    std::erase_if(fit_samples_,
                  [&](const FitSample& s) { return s.sample.window_start < horizon; });
}

void Pipeline::maybe_refit(TimestampMs now) {
    if (!config_.auto_refit) return;
    if (model_ && now - last_fit_at_ < config_.refit_interval) return;
    std::vector<IntervalSample> clean;
    clean.reserve(fit_samples_.size());
    for (const auto& s : fit_samples_)
        if (!s.outside && s.sample.active_flows > 0) clean.push_back(s.sample);
    if (clean.size() < config_.min_fit_samples) return;
    try {
        TrafficModel model = fit_model(clean, config_.epsilon, config_.min_fit_samples);
        model.fitted_at = now;
        model_ = model;
        last_fit_at_ = now;
    } catch (const FitError&) {
        // Not enough usable data yet; keep the previous model.
    }
}

void Pipeline::close_classify_window(TimestampMs window_start, TimestampMs now,
                                     TickOutput& out) {
    const auto assigned =
        window_slice(buffer_, window_start, config_.classify_window, config_.grace);
    out.sample = sample_interval(window_start, config_.classify_window, buffer_, assigned,
                                 config_.flow_count_mode);
    if (model_) {
        out.band_limits = band(*model_, out.sample->active_flows);
        if (config_.anomaly_grid == AnomalyGrid::ClassifyWindows)
            out.outside_band = band_check(*out.sample, classify_run_, out);
        else
            out.outside_band = outside_band(*out.band_limits, out.sample->load_bps);
    }

    std::vector<SuspectReport> reports;
    const bool economy_skip =
        config_.classify_only_on_anomaly && model_.has_value() && !out.outside_band;
    if (!economy_skip) {
        const auto stats =
            source_stats(window_start, buffer_, assigned, config_.thresholds.tiny_flow_bytes);
        reports = classify_window(stats, buffer_, assigned, config_.thresholds);
        std::erase_if(reports, [&](const SuspectReport& r) {
            return whitelisted(r.src_addr, config_.whitelist);
        });
    }

    const std::size_t prior = report_history_.size();
    report_history_ = merge_reports(std::move(report_history_), reports, config_.block_ttl);
    std::vector<SuspectReport> retained(report_history_.begin() +
                                            static_cast<std::ptrdiff_t>(prior),
                                        report_history_.end());

    auto events = blacklist_.update(retained, now, config_.block_ttl, config_.whitelist);
    auto expired = blacklist_.expire(now);
    if (journal_) {
        journal_->append(events);
        journal_->append(expired);
    }
    out.rules_changed |= !events.empty() || !expired.empty();
    out.new_reports.insert(out.new_reports.end(), std::make_move_iterator(retained.begin()),
                           std::make_move_iterator(retained.end()));
}

void Pipeline::prune(TimestampMs now) {
    TimestampMs cutoff = now;
    if (next_classify_start_) cutoff = std::min(cutoff, *next_classify_start_);
    if (next_fit_start_) cutoff = std::min(cutoff, *next_fit_start_);
    std::erase_if(buffer_, [&](const FlowRecord& r) {
        return std::max(end_time(r) + config_.grace, r.start_time + 1) <= cutoff;
    });
}

TickOutput Pipeline::tick(TimestampMs now) {
    const auto t0 = std::chrono::steady_clock::now();
    TickOutput out;

    if (!next_classify_start_) {
        // Open the grids at the last complete window, or earlier when the
        // buffer already holds older records.
        TimestampMs classify_anchor = now - config_.classify_window;
        TimestampMs fit_anchor = now - config_.fit_window;
        for (const auto& r : buffer_) {
            classify_anchor = std::min(classify_anchor, r.start_time);
            fit_anchor = std::min(fit_anchor, r.start_time);
        }
        next_classify_start_ = window_start_for(classify_anchor, config_.classify_window);
        next_fit_start_ = window_start_for(fit_anchor, config_.fit_window);
    }

    // A clock jump (or a buffered record with an ancient timestamp) must not
    // stall the loop on millions of empty windows; skip to a bounded backlog.
    constexpr std::int64_t kMaxCatchupWindows = 1440;
    if ((now - *next_classify_start_) / config_.classify_window > kMaxCatchupWindows)
        *next_classify_start_ = window_start_for(
            now - kMaxCatchupWindows * config_.classify_window, config_.classify_window);
    if ((now - *next_fit_start_) / config_.fit_window > kMaxCatchupWindows)
        *next_fit_start_ =
            window_start_for(now - kMaxCatchupWindows * config_.fit_window, config_.fit_window);

    while (*next_classify_start_ + config_.classify_window <= now) {
        const TimestampMs w = *next_classify_start_;
        close_classify_window(w, w + config_.classify_window, out);
        *next_classify_start_ += config_.classify_window;
    }
    while (*next_fit_start_ + config_.fit_window <= now) {
        close_fit_window(*next_fit_start_, out);
        *next_fit_start_ += config_.fit_window;
        maybe_refit(*next_fit_start_);
    }

    prune(now);
    out.blacklist_size = blacklist_.size();
    if (out.rules_changed) out.rules = blacklist_.firewall_rules(config_.rule_dialect);

    out.tick_millis =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();

    char buf[256];
    if (out.sample) {
        char lo[32] = "-";
        char hi[32] = "-";
        if (out.band_limits) {
            std::snprintf(lo, sizeof(lo), "%.6g", out.band_limits->lower);
            std::snprintf(hi, sizeof(hi), "%.6g", out.band_limits->upper);
        }
        std::snprintf(buf, sizeof(buf),
                      "window=%s n=%llu load_bps=%.6g band_lo=%s band_hi=%s anomaly=%d "
                      "reports=%zu blacklist=%zu tick_ms=%.3f",
                      format_timestamp(out.sample->window_start).c_str(),
                      static_cast<unsigned long long>(out.sample->active_flows),
                      out.sample->load_bps, lo, hi, out.outside_band ? 1 : 0,
                      out.new_reports.size(), out.blacklist_size, out.tick_millis);
    } else {
        std::snprintf(buf, sizeof(buf), "window=- blacklist=%zu tick_ms=%.3f",
                      out.blacklist_size, out.tick_millis);
    }
    out.status_line = buf;
    return out;
}

std::optional<DurationMs> detection_latency(const PipelineConfig& config,
                                            std::span<const FlowRecord> records,
                                            TimestampMs attack_start, IPv4Addr attacker) {
    if (records.empty()) return std::nullopt;

    std::vector<const FlowRecord*> by_export;
    by_export.reserve(records.size());
    for (const auto& r : records) by_export.push_back(&r);
    std::sort(by_export.begin(), by_export.end(),
              [](const FlowRecord* a, const FlowRecord* b) { return end_time(*a) < end_time(*b); });

    Pipeline pipeline(config);
    const TimestampMs first_arrival = end_time(*by_export.front());
    const TimestampMs last_arrival = end_time(*by_export.back());
    const TimestampMs horizon = last_arrival + config.grace + 2 * config.classify_window;

    std::size_t fed = 0;
    for (TimestampMs t = window_start_for(first_arrival, config.classify_window) +
                         config.classify_window;
         t <= horizon; t += config.classify_window) {
        while (fed < by_export.size() && end_time(*by_export[fed]) <= t)
            pipeline.feed(*by_export[fed++]);
        const TickOutput out = pipeline.tick(t);
        for (const auto& report : out.new_reports)
            if (report.src_addr == attacker) return t - attack_start;
    }
    return std::nullopt;
}

BatchResult analyze_batch(const PipelineConfig& config, std::span<const FlowRecord> records,
                          std::optional<TrafficModel> model) {
    BatchResult result;
    if (records.empty()) {
        result.model = std::move(model);
        return result;
    }

    // Fit-grid samples over the full span, empty windows included.
    const auto assignments = assign_to_windows(records, config.fit_window, 0);
    TimestampMs lo = records.front().start_time;
    TimestampMs hi = lo;
    for (const auto& r : records) {
        lo = std::min(lo, r.start_time);
        hi = std::max(hi, end_time(r));
    }
    static const std::vector<Assigned> kNone;
    for (TimestampMs w = window_start_for(lo, config.fit_window);
         w <= window_start_for(hi, config.fit_window); w += config.fit_window) {
        auto it = assignments.find(w);
        const auto& assigned = it == assignments.end() ? kNone : it->second;
        result.fit_samples.push_back(
            sample_interval(w, config.fit_window, records, assigned, config.flow_count_mode));
    }

    if (model) {
        result.model = std::move(model);
    } else {
        try {
            result.model = fit_model(result.fit_samples, config.epsilon, config.min_fit_samples);
        } catch (const FitError&) {
            result.model = std::nullopt;
        }
    }
    if (result.model)
        result.anomalies =
            detect_anomalies(*result.model, result.fit_samples, config.consecutive_m);

    // Virtual-time replay for the classifier; the model is pinned.
    PipelineConfig replay_config = config;
    replay_config.auto_refit = false;
    std::vector<const FlowRecord*> by_export;
    by_export.reserve(records.size());
    for (const auto& r : records) by_export.push_back(&r);
    std::sort(by_export.begin(), by_export.end(),
              [](const FlowRecord* a, const FlowRecord* b) { return end_time(*a) < end_time(*b); });

    Pipeline pipeline(replay_config);
    if (result.model) pipeline.set_model(*result.model);
    const TimestampMs horizon =
        end_time(*by_export.back()) + config.grace + 2 * config.classify_window;
    std::size_t fed = 0;
    for (TimestampMs t = window_start_for(end_time(*by_export.front()),
                                          config.classify_window) +
                         config.classify_window;
         t <= horizon; t += config.classify_window) {
        while (fed < by_export.size() && end_time(*by_export[fed]) <= t)
            pipeline.feed(*by_export[fed++]);
        pipeline.tick(t);
    }
    result.reports = pipeline.report_history();
    return result;
}

}  // namespace flowsentry
