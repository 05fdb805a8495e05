#pragma once

// Result files: CSV (one row per trial, '#' metadata lines on top, stats in
// a sidecar file) and JSON (everything in one document). Both read back
// into the same reports.

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "netcon/engine.hpp"
#include "netcon/harness/stats.hpp"

namespace netcon {

enum class ResultFormat { csv, json };

inline ResultFormat result_format_from_string(const std::string& text) {
    if (text == "csv") return ResultFormat::csv;
    if (text == "json") return ResultFormat::json;
    throw std::invalid_argument("unknown format '" + text + "' (csv|json)");
}

using Metadata = std::map<std::string, std::string>;

struct ResultSet {
    Metadata metadata;
    std::vector<TrialReport> reports;
    std::vector<AggregateStats> stats;
};

inline const std::vector<std::string>& base_columns() {
    static const std::vector<std::string> columns = {"protocol", "n",           "trial",   "seed",
                                                     "interactions", "parallel_time", "success", "stop_reason"};
    return columns;
}

inline std::string stats_sidecar_path(const std::string& path) { return path + ".stats.csv"; }

namespace detail {

inline std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                current += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                current += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current += c;
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

inline std::string decimal(double x) {
    if (std::isnan(x)) return "nan";
    std::ostringstream out;
    out.precision(10);
    out << x;
    return out.str();
}

inline std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

inline void check_written(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

inline std::vector<std::string> extra_columns(const std::vector<TrialReport>& reports) {
    std::set<std::string> keys;
    for (const auto& r : reports)
        for (const auto& [key, value] : r.summary) keys.insert(key);
    return {keys.begin(), keys.end()};
}

inline nlohmann::json stats_json(const AggregateStats& s) {
    nlohmann::json j = {{"protocol", s.protocol},  {"n", s.n},
                        {"k", s.k},                {"copies", s.copies},
                        {"trials", s.trials},      {"successes", s.successes},
                        {"success_rate", s.success_rate}};
    auto number = [](double x) { return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x); };
    j["mean"] = number(s.mean);
    j["median"] = number(s.median);
    j["p95"] = number(s.p95);
    j["max"] = number(s.max);
    nlohmann::json ratios = nlohmann::json::object();
    for (const auto& [name, value] : s.normalized) ratios[name] = number(value);
    j["normalized"] = ratios;
    return j;
}

inline AggregateStats stats_from_json(const nlohmann::json& j) {
    AggregateStats s;
    auto number = [](const nlohmann::json& x) {
        return x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>();
    };
    s.protocol = j.at("protocol").get<std::string>();
    s.n = j.at("n").get<std::uint64_t>();
    s.k = j.at("k").get<std::size_t>();
    s.copies = j.at("copies").get<std::size_t>();
    s.trials = j.at("trials").get<std::size_t>();
    s.successes = j.at("successes").get<std::size_t>();
    s.success_rate = j.at("success_rate").get<double>();
    s.mean = number(j.at("mean"));
    s.median = number(j.at("median"));
    s.p95 = number(j.at("p95"));
    s.max = number(j.at("max"));
    for (const auto& [name, value] : j.at("normalized").items()) s.normalized[name] = number(value);
    return s;
}

inline TrialReport report_from_fields(const std::map<std::string, std::string>& fields) {
    TrialReport r;
    r.protocol = fields.at("protocol");
    r.n = std::stoull(fields.at("n"));
    r.trial = std::stoull(fields.at("trial"));
    r.seed = std::stoull(fields.at("seed"));
    r.interactions = std::stoull(fields.at("interactions"));
    r.parallel_time = parallel_time(r.interactions, r.n);
    const auto& success = fields.at("success");
    if (success != "true" && success != "false") throw std::invalid_argument("bad success value '" + success + "'");
    r.success = success == "true";
    r.stop_reason = stop_reason_from_string(fields.at("stop_reason"));
    return r;
}

}  // namespace detail

inline void write_csv(const std::vector<TrialReport>& reports, const Metadata& metadata, std::ostream& out) {
    for (const auto& [key, value] : metadata) out << "# " << key << '=' << value << '\n';
    const auto extras = detail::extra_columns(reports);
    bool first = true;
    for (const auto& c : base_columns()) {
        out << (first ? "" : ",") << c;
        first = false;
    }
    for (const auto& c : extras) out << ',' << detail::csv_field(c);
    out << '\n';
    for (const auto& r : reports) {
        out << detail::csv_field(r.protocol) << ',' << r.n << ',' << r.trial << ',' << r.seed << ',' << r.interactions
            << ',' << detail::decimal(r.parallel_time.to_double()) << ',' << (r.success ? "true" : "false") << ','
            << to_string(r.stop_reason);
        for (const auto& c : extras) {
            auto it = r.summary.find(c);
            out << ',' << (it == r.summary.end() ? "" : detail::csv_field(it->second));
        }
        out << '\n';
    }
}

inline void write_stats_csv(const std::vector<AggregateStats>& stats, std::ostream& out) {
    std::set<std::string> names;
    for (const auto& s : stats)
        for (const auto& [name, value] : s.normalized) names.insert(name);
    out << "protocol,n,k,copies,trials,successes,success_rate,mean,median,p95,max";
    for (const auto& name : names) out << ",ratio_" << name;
    out << '\n';
    for (const auto& s : stats) {
        out << detail::csv_field(s.protocol) << ',' << s.n << ',' << s.k << ',' << s.copies << ',' << s.trials << ','
            << s.successes << ',' << detail::decimal(s.success_rate) << ',' << detail::decimal(s.mean) << ','
            << detail::decimal(s.median) << ',' << detail::decimal(s.p95) << ',' << detail::decimal(s.max);
        for (const auto& name : names) {
            auto it = s.normalized.find(name);
            out << ',' << (it == s.normalized.end() ? "" : detail::decimal(it->second));
        }
        out << '\n';
    }
}

inline nlohmann::json to_json(const TrialReport& r) {
    return {{"protocol", r.protocol},
            {"n", r.n},
            {"trial", r.trial},
            {"seed", r.seed},
            {"interactions", r.interactions},
            {"parallel_time", r.parallel_time.to_double()},
            {"success", r.success},
            {"stop_reason", to_string(r.stop_reason)},
            {"summary", r.summary}};
}

inline nlohmann::json to_json(const ResultSet& set) {
    nlohmann::json reports = nlohmann::json::array();
    for (const auto& r : set.reports) reports.push_back(to_json(r));
    nlohmann::json stats = nlohmann::json::array();
    for (const auto& s : set.stats) stats.push_back(detail::stats_json(s));
    return {{"metadata", set.metadata}, {"reports", reports}, {"stats", stats}};
}

/// Writes reports (and stats, when given) to `path`. CSV stats go to the
/// sidecar `<path>.stats.csv`.
inline void emit_results(const std::vector<TrialReport>& reports, const std::vector<AggregateStats>& stats,
                         ResultFormat format, const std::string& path, const Metadata& metadata = {}) {
    auto out = detail::open_for_write(path);
    if (format == ResultFormat::json) {
        out << to_json(ResultSet{metadata, reports, stats}).dump(2) << '\n';
        detail::check_written(out, path);
        return;
    }
    write_csv(reports, metadata, out);
    detail::check_written(out, path);
    if (!stats.empty()) {
        const auto sidecar = stats_sidecar_path(path);
        auto side = detail::open_for_write(sidecar);
        write_stats_csv(stats, side);
        detail::check_written(side, sidecar);
    }
}

inline ResultSet read_csv_results(std::istream& in, const std::string& origin = "<stream>") {
    ResultSet set;
    std::string line;
    std::vector<std::string> header;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto body = line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
            const auto eq = body.find('=');
            if (eq != std::string::npos) set.metadata[body.substr(0, eq)] = body.substr(eq + 1);
            continue;
        }
        auto fields = detail::split_csv_line(line);
        if (header.empty()) {
            header = std::move(fields);
            for (std::size_t i = 0; i < base_columns().size(); ++i)
                if (i >= header.size() || header[i] != base_columns()[i])
                    throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": unexpected CSV header");
            continue;
        }
        if (fields.size() != header.size())
            throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(header.size()) + " fields, got " +
                                        std::to_string(fields.size()));
        std::map<std::string, std::string> by_name;
        for (std::size_t i = 0; i < header.size(); ++i) by_name[header[i]] = fields[i];
        try {
            auto r = detail::report_from_fields(by_name);
            for (std::size_t i = base_columns().size(); i < header.size(); ++i)
                if (!fields[i].empty()) r.summary[header[i]] = fields[i];
            set.reports.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return set;
}

inline ResultSet read_json_results(std::istream& in, const std::string& origin = "<stream>") {
    ResultSet set;
    try {
        const auto doc = nlohmann::json::parse(in);
        set.metadata = doc.value("metadata", Metadata{});
        for (const auto& j : doc.at("reports")) {
            std::map<std::string, std::string> fields;
            for (const auto& c : base_columns()) {
                const auto& v = j.at(c);
                fields[c] = v.is_string() ? v.get<std::string>() : v.dump();
            }
            auto r = detail::report_from_fields(fields);
            r.summary = j.value("summary", std::map<std::string, std::string>{});
            set.reports.push_back(std::move(r));
        }
        if (doc.contains("stats"))
            for (const auto& j : doc.at("stats")) set.stats.push_back(detail::stats_from_json(j));
    } catch (const std::exception& e) {
        throw std::invalid_argument(origin + ": " + e.what());
    }
    return set;
}

/// Reads a file written by emit_results; the format follows the extension
/// (.json, anything else is CSV). A CSV stats sidecar is not read back.
inline ResultSet read_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
    return json ? read_json_results(in, path) : read_csv_results(in, path);
}

}  // namespace netcon
