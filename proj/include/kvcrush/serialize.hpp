// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include "kvcrush/eval.hpp"
#include "kvcrush/pipeline.hpp"

namespace kvcrush {

/// {"format", "version", "seq_len", "num_layers", "granularity", "unit_size",
///  "layers": [{"layer", "budget", "compression_ratio", "distance_ops",
///              "retained": [{"index", "provenance"}]}]}
/// Phase latencies are not written, so equal decisions serialize to equal
/// bytes.
std::string decision_to_json(const EvictionDecision& decision);

/// Throws Schema on malformed or inconsistent documents.
EvictionDecision decision_from_json(std::string_view text);

std::string report_to_json(const EvalReport& report);

/// Header plus one row per layer.
std::string report_to_csv(const EvalReport& report);

/// Shortest round-trippable formatting used by the CSV writers.
std::string format_double(double value);

}  // namespace kvcrush
