#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "flowsentry/config.hpp"
#include "flowsentry/flow_csv.hpp"
#include "flowsentry/netflow_v5.hpp"
#include "flowsentry/pipeline.hpp"
#include "flowsentry/simulate.hpp"
#include "flowsentry/udp_listener.hpp"

namespace fs = flowsentry;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitReports = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

fs::AppConfig resolve_config(const std::string& config_path,
                             const std::vector<std::string>& overrides) {
    fs::AppConfig config;
    std::string path = config_path;
    if (path.empty()) {
        if (const char* env = std::getenv("FLOWSENTRY_CONFIG")) path = env;
    }
    if (!path.empty()) config = fs::load_config_file(path);
    for (const auto& entry : overrides) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos)
            throw fs::ConfigError("--set expects key=value, got: " + entry);
        fs::apply_config_entry(entry.substr(0, eq), entry.substr(eq + 1), config);
    }
    fs::validate_app_config(config);
    return config;
}

std::vector<fs::FlowRecord> read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open flow csv: " + path);
    auto result = fs::read_flow_csv(in);
    for (const auto& e : result.errors)
        std::cerr << path << ":" << e.line_no << ": skipped: " << e.reason << "\n";
    if (!result.errors.empty())
        std::cerr << path << ": " << result.errors.size() << " malformed line(s) skipped\n";
    return std::move(result.records);
}

std::optional<fs::TrafficModel> resolve_model(const std::string& model_flag,
                                              const fs::AppConfig& config) {
    if (!model_flag.empty()) {
        auto model = fs::load_model(model_flag);
        if (!model) throw std::ios_base::failure("cannot read model file: " + model_flag);
        return model;
    }
    if (!config.model.empty()) return fs::load_model(config.model);  // absent file is fine
    return std::nullopt;
}

// Framed v5 datagrams for pcap-less UDP replay: u32 big-endian length, then
// the datagram, repeated. Batches of up to 30 records in export order; each
// header's export clock is the latest completion in the batch.
void write_netflow_replay(std::ostream& out, std::vector<fs::FlowRecord> records) {
    std::sort(records.begin(), records.end(),
              [](const fs::FlowRecord& a, const fs::FlowRecord& b) {
                  return fs::end_time(a) < fs::end_time(b);
              });
    fs::TimestampMs boot = records.empty() ? 0 : records.front().start_time;
    for (const auto& r : records) boot = std::min(boot, r.start_time);

    std::uint32_t sequence = 0;
    for (std::size_t i = 0; i < records.size(); i += fs::kV5MaxRecords) {
        const std::size_t n = std::min<std::size_t>(fs::kV5MaxRecords, records.size() - i);
        std::span<const fs::FlowRecord> batch{records.data() + i, n};
        const fs::TimestampMs export_ms = fs::end_time(batch.back());
        fs::NetflowV5Header meta;
        meta.unix_secs = static_cast<std::uint32_t>(export_ms / 1000);
        meta.unix_nsecs = static_cast<std::uint32_t>((export_ms % 1000) * 1'000'000);
        meta.sys_uptime_ms = static_cast<std::uint32_t>(export_ms - boot);
        meta.flow_sequence = sequence;
        sequence += static_cast<std::uint32_t>(n);
        const auto bytes = fs::encode_netflow_v5(meta, batch);
        const auto len = static_cast<std::uint32_t>(bytes.size());
        const std::uint8_t prefix[4] = {
            static_cast<std::uint8_t>(len >> 24), static_cast<std::uint8_t>(len >> 16),
            static_cast<std::uint8_t>(len >> 8), static_cast<std::uint8_t>(len)};
        out.write(reinterpret_cast<const char*>(prefix), 4);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
    }
}

int cmd_simulate(const std::string& spec_path, const std::string& out_path,
                 const std::string& format) {
    std::ifstream spec_in(spec_path);
    if (!spec_in) throw std::ios_base::failure("cannot open scenario spec: " + spec_path);
    nlohmann::json j;
    try {
        spec_in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw fs::InvalidSpec(std::string("scenario json: ") + e.what());
    }
    const auto spec = fs::scenario_from_json(j);
    const auto records = fs::gen_scenario(spec);

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot write: " + out_path);
    if (format == "csv") {
        fs::write_flow_csv(out, records);
    } else if (format == "netflow-pcapless-udp-replay") {
        write_netflow_replay(out, records);
    } else {
        std::cerr << "unknown format: " << format << "\n";
        return kExitUsage;
    }
    std::cerr << "wrote " << records.size() << " flow records to " << out_path << "\n";
    return kExitOk;
}

// Sends a framed replay file over UDP, pacing datagrams by their export
// times (scaled by --speed) and rewriting each header clock to the send
// time, the way a router exporting right now would stamp it. Flow ages
// inside the records are preserved.
int cmd_replay(const std::string& in_path, const std::string& target, double speed) {
    const auto colon = target.rfind(':');
    if (colon == std::string::npos) {
        std::cerr << "target must be host:port, got: " << target << "\n";
        return kExitUsage;
    }
    if (!(speed > 0.0)) {
        std::cerr << "--speed must be positive\n";
        return kExitUsage;
    }
    std::ifstream in(in_path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open replay file: " + in_path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());

    struct Frame {
        std::size_t offset;
        std::uint32_t length;
        fs::TimestampMs export_ms;
    };
    std::vector<Frame> frames;
    std::size_t pos = 0;
    while (pos + 4 <= bytes.size()) {
        const std::uint32_t len = (std::uint32_t{bytes[pos]} << 24) |
                                  (std::uint32_t{bytes[pos + 1]} << 16) |
                                  (std::uint32_t{bytes[pos + 2]} << 8) | bytes[pos + 3];
        pos += 4;
        if (pos + len > bytes.size() || len < fs::kV5HeaderSize) {
            std::cerr << "truncated replay frame at offset " << pos - 4 << "\n";
            return kExitIo;
        }
        const auto header = fs::decode_netflow_v5({bytes.data() + pos, len}).header;
        frames.push_back(Frame{pos, len, fs::export_time_ms(header)});
        pos += len;
    }
    if (frames.empty()) {
        std::cerr << "no datagrams in " << in_path << "\n";
        return kExitIo;
    }

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(std::atoi(target.c_str() + colon + 1)));
    const std::string host = target.substr(0, colon);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        std::cerr << "bad target host: " << host << "\n";
        return kExitUsage;
    }
    const int sock = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (sock < 0) throw std::ios_base::failure("cannot open UDP socket");

    const auto wall_start = std::chrono::system_clock::now();
    const fs::TimestampMs base = frames.front().export_ms;
    for (const auto& frame : frames) {
        const auto offset = std::chrono::milliseconds(
            static_cast<std::int64_t>(static_cast<double>(frame.export_ms - base) / speed));
        std::this_thread::sleep_until(wall_start + offset);
        const fs::TimestampMs send_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(
                (wall_start + offset).time_since_epoch())
                .count();
        auto* header = bytes.data() + frame.offset;
        const auto secs = static_cast<std::uint32_t>(send_ms / 1000);
        const auto nsecs = static_cast<std::uint32_t>((send_ms % 1000) * 1'000'000);
        header[8] = static_cast<std::uint8_t>(secs >> 24);
        header[9] = static_cast<std::uint8_t>(secs >> 16);
        header[10] = static_cast<std::uint8_t>(secs >> 8);
        header[11] = static_cast<std::uint8_t>(secs);
        header[12] = static_cast<std::uint8_t>(nsecs >> 24);
        header[13] = static_cast<std::uint8_t>(nsecs >> 16);
        header[14] = static_cast<std::uint8_t>(nsecs >> 8);
        header[15] = static_cast<std::uint8_t>(nsecs);
        ::sendto(sock, header, frame.length, 0, reinterpret_cast<const sockaddr*>(&addr),
                 sizeof(addr));
    }
    ::close(sock);
    std::cerr << "replayed " << frames.size() << " datagrams to " << target << "\n";
    return kExitOk;
}

int cmd_fit(const std::string& in_path, const std::string& out_path,
            const fs::AppConfig& config) {
    const auto records = read_csv_file(in_path);
    const auto result = fs::analyze_batch(config.pipeline, records);
    if (!result.model) {
        std::cerr << "fit failed: not enough nonempty fit windows (need "
                  << config.pipeline.min_fit_samples << ")\n";
        return kExitIo;
    }
    fs::save_model(out_path, *result.model);
    std::cerr << "model: b=" << result.model->b << " k=" << result.model->k
              << " epsilon=" << result.model->epsilon << " windows=" << result.model->fitted_on
              << "\n";
    return kExitOk;
}

int cmd_analyze(const std::string& in_path, const std::string& model_flag,
                const std::string& reports_path, const fs::AppConfig& config) {
    const auto records = read_csv_file(in_path);
    auto model = resolve_model(model_flag, config);
    const bool model_supplied = model.has_value();
    const auto result = fs::analyze_batch(config.pipeline, records, std::move(model));

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!reports_path.empty()) {
        file.open(reports_path, std::ios::trunc);
        if (!file) throw std::ios_base::failure("cannot write reports: " + reports_path);
        out = &file;
    }
    fs::write_reports(*out, result.reports);

    std::cerr << "records: " << records.size() << ", fit windows: " << result.fit_samples.size()
              << "\n";
    if (result.model)
        std::cerr << "model (" << (model_supplied ? "supplied" : "fit from input")
                  << "): b=" << result.model->b << " k=" << result.model->k << "\n";
    else
        std::cerr << "model: none (too little data); band criterion skipped\n";
    for (const auto& event : result.anomalies)
        std::cerr << "anomaly: " << fs::format_timestamp(event.window_start) << " run of "
                  << event.run_length << " " << fs::to_string(event.direction) << " the band\n";
    std::cerr << "reports: " << result.reports.size() << "\n";
    return result.reports.empty() ? kExitOk : kExitReports;
}

int cmd_plot_data(const std::string& in_path, const std::string& model_flag,
                  const std::string& out_path, const fs::AppConfig& config) {
    const auto records = read_csv_file(in_path);
    const auto result =
        fs::analyze_batch(config.pipeline, records, resolve_model(model_flag, config));

    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw std::ios_base::failure("cannot write: " + out_path);
    out << "window_start,n,load_bps,band_lower,band_upper,anomaly_flag\n";
    char line[160];
    for (const auto& s : result.fit_samples) {
        if (result.model) {
            const auto limits = fs::band(*result.model, s.active_flows);
            std::snprintf(line, sizeof(line), "%s,%llu,%.6f,%.6f,%.6f,%d\n",
                          fs::format_timestamp(s.window_start).c_str(),
                          static_cast<unsigned long long>(s.active_flows), s.load_bps,
                          limits.lower, limits.upper,
                          fs::outside_band(limits, s.load_bps) ? 1 : 0);
        } else {
            std::snprintf(line, sizeof(line), "%s,%llu,%.6f,,,0\n",
                          fs::format_timestamp(s.window_start).c_str(),
                          static_cast<unsigned long long>(s.active_flows), s.load_bps);
        }
        out << line;
    }
    return kExitOk;
}

int cmd_blacklist(const std::string& journal_path, const std::string& dialect_name,
                  const std::string& at_text) {
    const auto dialect = fs::parse_rule_dialect(dialect_name);
    if (!dialect) {
        std::cerr << "unknown dialect: " << dialect_name << "\n";
        return kExitUsage;
    }
    fs::TimestampMs at;
    if (at_text.empty()) {
        at = std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
                 .count();
    } else {
        auto parsed = fs::parse_timestamp(at_text);
        if (!parsed) {
            std::cerr << "bad --at timestamp; expected YYYY-MM-DD HH:MM:SS.mmm\n";
            return kExitUsage;
        }
        at = *parsed;
    }

    std::ifstream in(journal_path);
    if (!in) throw std::ios_base::failure("cannot open journal: " + journal_path);
    auto result = fs::replay_journal(in, at);
    if (result.warning) std::cerr << "warning: " << *result.warning << "\n";
    result.blacklist.expire(at);
    for (const auto& rule : result.blacklist.firewall_rules(*dialect)) std::cout << rule << "\n";
    return kExitOk;
}

int cmd_watch(const fs::AppConfig& config) {
    const auto& listen = config.pipeline.listen;
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) {
        std::cerr << "listen must be host:port, got: " << listen << "\n";
        return kExitUsage;
    }
    const std::string host = listen.substr(0, colon);
    const int port = std::atoi(listen.c_str() + colon + 1);
    if (port < 0 || port > 65535) {
        std::cerr << "bad listen port in: " << listen << "\n";
        return kExitUsage;
    }

    fs::JournalWriter journal(config.journal);
    fs::Pipeline pipeline(config.pipeline, &journal);
    if (!config.model.empty()) {
        if (auto model = fs::load_model(config.model)) {
            pipeline.set_model(*model);
            std::cerr << "loaded model from " << config.model << " (b=" << model->b
                      << ", k=" << model->k << ")\n";
        }
    }

    fs::BoundedQueue<fs::FlowRecord> queue(1 << 16);
    fs::UdpListener listener(host, static_cast<std::uint16_t>(port), queue);
    listener.start();
    std::cerr << "listening for NetFlow v5 on " << host << ":" << listener.port() << "\n";

    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);

    auto wall_ms = [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
    fs::TimestampMs next_tick =
        fs::window_start_for(wall_ms(), config.pipeline.classify_window) +
        config.pipeline.classify_window;
    fs::TimestampMs last_saved_fit = 0;

    while (!g_stop.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        if (wall_ms() < next_tick) continue;

        const auto batch = queue.drain();
        pipeline.feed(batch);
        const auto out = pipeline.tick(next_tick);
        std::cout << out.status_line << "\n" << std::flush;

        if (!out.new_reports.empty()) {
            if (config.reports.empty()) {
                fs::write_reports(std::cerr, out.new_reports);
            } else {
                std::ofstream reports(config.reports, std::ios::app);
                fs::write_reports(reports, out.new_reports);
            }
        }
        if (out.rules_changed) {
            if (config.rules.empty()) {
                for (const auto& rule : out.rules) std::cout << rule << "\n";
            } else {
                std::ofstream rules(config.rules, std::ios::trunc);
                for (const auto& rule : out.rules) rules << rule << "\n";
            }
        }
        if (!config.model.empty() && pipeline.model() &&
            pipeline.model()->fitted_at > last_saved_fit) {
            fs::save_model(config.model, *pipeline.model());
            last_saved_fit = pipeline.model()->fitted_at;
        }
        next_tick += config.pipeline.classify_window;
    }

    listener.stop();
    queue.close();
    std::cerr << "shutting down; " << listener.stats().records_ok.load()
              << " records ingested, " << listener.stats().decode_errors.load()
              << " decode errors\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flow-level attack detection for NetFlow v5 exports"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "config file (or FLOWSENTRY_CONFIG)");
    app.add_option("--set", overrides, "override a config entry, key=value")->take_all();

    auto* sim = app.add_subcommand("simulate", "generate a synthetic scenario");
    std::string sim_spec, sim_out, sim_format = "csv";
    sim->add_option("--spec", sim_spec, "scenario json")->required();
    sim->add_option("--out", sim_out, "output path")->required();
    sim->add_option("--format", sim_format, "csv | netflow-pcapless-udp-replay");

    auto* analyze = app.add_subcommand("analyze", "classify a recorded flow csv");
    std::string an_in, an_model, an_reports;
    analyze->add_option("--in", an_in, "flow csv")->required();
    analyze->add_option("--model", an_model, "model file (default: fit from input)");
    analyze->add_option("--reports", an_reports, "report output (default: stdout)");

    auto* fit = app.add_subcommand("fit", "fit the traffic model from a flow csv");
    std::string fit_in, fit_out;
    fit->add_option("--in", fit_in, "flow csv")->required();
    fit->add_option("--out", fit_out, "model output file")->required();

    auto* watch = app.add_subcommand("watch", "live collector + detection loop");

    auto* replay = app.add_subcommand("replay", "send a recorded replay file over UDP");
    std::string rp_in, rp_target = "127.0.0.1:2055";
    double rp_speed = 1.0;
    replay->add_option("--in", rp_in, "netflow-pcapless-udp-replay file")->required();
    replay->add_option("--target", rp_target, "collector address (host:port)");
    replay->add_option("--speed", rp_speed, "time compression factor");

    auto* blacklist = app.add_subcommand("blacklist", "export firewall rules from the journal");
    std::string bl_journal, bl_dialect = "linux-packet-filter", bl_at;
    blacklist->add_option("--journal", bl_journal, "journal file (default: from config)");
    blacklist->add_option("--dialect", bl_dialect, "linux-packet-filter | generic-deny-list");
    blacklist->add_option("--at", bl_at, "evaluate at this time instead of now");

    auto* plot = app.add_subcommand("plot-data", "per-window N/B/band csv for plotting");
    std::string plot_in, plot_model, plot_out;
    plot->add_option("--in", plot_in, "flow csv")->required();
    plot->add_option("--model", plot_model, "model file (default: fit from input)");
    plot->add_option("--out", plot_out, "output csv")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        const auto config = resolve_config(config_path, overrides);
        if (sim->parsed()) return cmd_simulate(sim_spec, sim_out, sim_format);
        if (analyze->parsed()) return cmd_analyze(an_in, an_model, an_reports, config);
        if (fit->parsed()) return cmd_fit(fit_in, fit_out, config);
        if (watch->parsed()) return cmd_watch(config);
        if (replay->parsed()) return cmd_replay(rp_in, rp_target, rp_speed);
        if (blacklist->parsed())
            return cmd_blacklist(bl_journal.empty() ? config.journal : bl_journal, bl_dialect,
                                 bl_at);
        if (plot->parsed()) return cmd_plot_data(plot_in, plot_model, plot_out, config);
    } catch (const fs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const fs::InvalidSpec& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
