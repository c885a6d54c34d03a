// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvcrush/serialize.hpp"

#include <charconv>
#include <sstream>

#include "json.hpp"
#include "kvcrush/error.hpp"

namespace kvcrush {

namespace {

using nlohmann::json;

constexpr std::string_view kDecisionFormat = "kvcrush-decision";
constexpr int kDecisionVersion = 1;

json latency_json(const PhaseLatency& l) {
    return {{"scoring", l.scoring_ns}, {"fingerprint", l.fingerprint_ns}, {"grouping", l.grouping_ns},
            {"merge", l.merge_ns}};
}

json layer_report_json(const LayerReport& r) {
    return {{"attention_mass_retained", r.attention_mass_retained},
            {"renormalized_output_error", r.renormalized_output_error},
            {"compression_ratio", r.compression_ratio},
            {"latency_ns", latency_json(r.latency)},
            {"distance_op_count", r.distance_op_count}};
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) {
        return "nan";
    }
    return std::string(buf, end);
}

std::string decision_to_json(const EvictionDecision& decision) {
    json layers = json::array();
    for (const auto& d : decision.layers) {
        json retained = json::array();
        for (const auto& r : d.retained) {
            retained.push_back({{"index", r.index}, {"provenance", to_string(r.provenance)}});
        }
        layers.push_back({{"layer", d.layer},
                          {"budget", d.budget},
                          {"compression_ratio", d.compression_ratio},
                          {"distance_ops", d.distance_ops},
                          {"retained", std::move(retained)}});
    }
    json doc = {{"format", kDecisionFormat},
                {"version", kDecisionVersion},
                {"seq_len", decision.seq_len},
                {"num_layers", decision.num_layers},
                {"granularity", to_string(decision.granularity)},
                {"unit_size", decision.unit_size},
                {"layers", std::move(layers)}};
    return doc.dump(2) + "\n";
}

EvictionDecision decision_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        raise(ErrorCode::Schema, std::string("decision is not valid JSON: ") + e.what());
    }
    try {
        require(doc.value("format", "") == kDecisionFormat, ErrorCode::Schema, "not a kvcrush decision document");
        require(doc.at("version").get<int>() == kDecisionVersion, ErrorCode::Schema, "unsupported decision version");
        EvictionDecision out;
        out.seq_len = doc.at("seq_len").get<std::size_t>();
        out.num_layers = doc.at("num_layers").get<std::size_t>();
        const auto granularity = parse_granularity(doc.at("granularity").get<std::string>());
        require(granularity.has_value(), ErrorCode::Schema, "unknown granularity");
        out.granularity = *granularity;
        out.unit_size = doc.at("unit_size").get<std::size_t>();
        for (const auto& l : doc.at("layers")) {
            LayerDecision d;
            d.layer = l.at("layer").get<std::size_t>();
            d.budget = l.at("budget").get<std::size_t>();
            d.compression_ratio = l.at("compression_ratio").get<double>();
            d.distance_ops = l.value("distance_ops", std::uint64_t{0});
            std::size_t previous = 0;
            for (const auto& r : l.at("retained")) {
                const auto p = parse_provenance(r.at("provenance").get<std::string>());
                require(p.has_value(), ErrorCode::Schema, "unknown provenance tag");
                const auto index = r.at("index").get<std::size_t>();
                require(d.retained.empty() || index > previous, ErrorCode::Schema,
                        "retained indices must be strictly increasing");
                previous = index;
                d.retained.push_back({index, *p});
            }
            out.layers.push_back(std::move(d));
        }
        require(out.layers.size() == out.num_layers, ErrorCode::Schema, "layer list length != num_layers");
        return out;
    } catch (const json::exception& e) {
        raise(ErrorCode::Schema, std::string("malformed decision document: ") + e.what());
    }
}

std::string report_to_json(const EvalReport& report) {
    json layers = json::array();
    for (const auto& r : report.layers) {
        json entry = layer_report_json(r);
        entry["layer"] = r.layer;
        layers.push_back(std::move(entry));
    }
    json doc = {{"layers", std::move(layers)}, {"aggregate", layer_report_json(report.aggregate)}};
    return doc.dump(2) + "\n";
}

std::string report_to_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "layer,attention_mass_retained,renormalized_output_error,compression_ratio,"
           "scoring_ns,fingerprint_ns,grouping_ns,merge_ns,distance_op_count\n";
    for (const auto& r : report.layers) {
        out << r.layer << ',' << format_double(r.attention_mass_retained) << ','
            << format_double(r.renormalized_output_error) << ',' << format_double(r.compression_ratio) << ','
            << r.latency.scoring_ns << ',' << r.latency.fingerprint_ns << ',' << r.latency.grouping_ns << ','
            << r.latency.merge_ns << ',' << r.distance_op_count << '\n';
    }
    return out.str();
}

}  // namespace kvcrush
