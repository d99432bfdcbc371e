#include "flowsentry/config.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace flowsentry {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

DurationMs seconds_value(const std::string& value, bool allow_zero = false) {
    std::size_t used = 0;
    const double secs = std::stod(value, &used);
    if (used != value.size() || secs < 0.0 || (!allow_zero && secs == 0.0))
        throw ConfigError("expected a positive duration");
    return static_cast<DurationMs>(std::llround(secs * 1000.0));
}

template <typename T>
T int_value(const std::string& value) {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size() || v < 0) throw ConfigError("expected a nonnegative integer");
    return static_cast<T>(v);
}

std::vector<IPv4Prefix> prefix_list(const std::string& value) {
    std::vector<IPv4Prefix> out;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        auto prefix = parse_ipv4_prefix(item);
        if (!prefix) throw ConfigError("bad address or prefix: " + item);
        out.push_back(*prefix);
    }
    return out;
}

}  // namespace

void apply_config_entry(const std::string& key, const std::string& value, AppConfig& config) {
    auto& p = config.pipeline;
    try {
        if (key == "classify_window") p.classify_window = seconds_value(value);
        else if (key == "fit_window") p.fit_window = seconds_value(value);
        else if (key == "grace") p.grace = seconds_value(value, /*allow_zero=*/true);
        else if (key == "epsilon") {
            p.epsilon = std::stod(value);
            if (!(p.epsilon > 0.0 && p.epsilon < 1.0))
                throw ConfigError("epsilon must lie in (0, 1)");
        } else if (key == "consecutive_m") p.consecutive_m = int_value<std::uint32_t>(value);
        else if (key == "block_ttl") p.block_ttl = seconds_value(value);
        else if (key == "refit_interval") p.refit_interval = seconds_value(value);
        else if (key == "listen") p.listen = value;
        else if (key == "whitelist") p.whitelist = prefix_list(value);
        else if (key == "anomaly_grid") {
            if (value == "fit") p.anomaly_grid = AnomalyGrid::FitWindows;
            else if (value == "classify") p.anomaly_grid = AnomalyGrid::ClassifyWindows;
            else throw ConfigError("anomaly_grid must be fit or classify");
        } else if (key == "classify_only_on_anomaly") {
            if (value == "true") p.classify_only_on_anomaly = true;
            else if (value == "false") p.classify_only_on_anomaly = false;
            else throw ConfigError("classify_only_on_anomaly must be true or false");
        } else if (key == "flow_count_mode") {
            if (value == "active") p.flow_count_mode = FlowCountMode::ActiveInWindow;
            else if (value == "completed") p.flow_count_mode = FlowCountMode::CompletedInWindow;
            else throw ConfigError("flow_count_mode must be active or completed");
        } else if (key == "min_fit_samples") p.min_fit_samples = int_value<std::size_t>(value);
        else if (key == "fit_history") p.fit_history = seconds_value(value);
        else if (key == "dialect") {
            auto dialect = parse_rule_dialect(value);
            if (!dialect) throw ConfigError("unknown dialect: " + value);
            p.rule_dialect = *dialect;
        } else if (key == "thresholds.tiny_flow_bytes")
            p.thresholds.tiny_flow_bytes = int_value<std::uint64_t>(value);
        else if (key == "thresholds.high_flow_count")
            p.thresholds.high_flow_count = int_value<std::uint64_t>(value);
        else if (key == "thresholds.long_flow_duration")
            p.thresholds.long_flow_duration = seconds_value(value);
        else if (key == "thresholds.ddos_min_sources")
            p.thresholds.ddos_min_sources = int_value<std::uint32_t>(value);
        else if (key == "thresholds.tiny_fraction") {
            p.thresholds.tiny_fraction = std::stod(value);
            if (!(p.thresholds.tiny_fraction > 0.0 && p.thresholds.tiny_fraction <= 1.0))
                throw ConfigError("tiny_fraction must lie in (0, 1]");
        } else if (key == "thresholds.long_flow_packets")
            p.thresholds.long_flow_packets = int_value<std::uint64_t>(value);
        else if (key == "journal") config.journal = value;
        else if (key == "model") config.model = value;
        else if (key == "reports") config.reports = value;
        else if (key == "rules") config.rules = value;
        else throw ConfigError("unknown key: " + key);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("bad value for " + key + ": " + value);
    }
}

void apply_config(std::istream& in, AppConfig& config) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            apply_config_entry(key, value, config);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    validate_app_config(config);
}

void validate_app_config(const AppConfig& config) {
    if (config.pipeline.classify_window > config.pipeline.fit_window)
        throw ConfigError("classify_window must not exceed fit_window");
}

AppConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    AppConfig config;
    apply_config(in, config);
    return config;
}

}  // namespace flowsentry
