#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "laeids/errors.hpp"

namespace laeids::ingest {

enum class Protocol { kTcp, kUdp, kOther };

std::string to_string(Protocol p);
Protocol protocol_from_string(std::string_view s);

struct FiveTuple {
  std::string src_addr;
  std::string dst_addr;
  uint16_t src_port = 0;
  uint16_t dst_port = 0;
  Protocol protocol = Protocol::kOther;

  // Direction-normalized form: the lexicographically smaller (addr, port)
  // endpoint is listed first, so both directions of a flow share one key.
  FiveTuple canonical() const;
  std::string key() const;
};

// One bidirectional traffic session: the unit of classification.
struct FlowSession {
  std::string session_id;
  FiveTuple tuple;
  int64_t start_time_us = 0;
  std::vector<uint8_t> payload;  // concatenated packet payloads, arrival order
  std::vector<double> tabular_features;
  std::string schema_name;
  std::optional<std::string> label;
};

// Houses the feature and class vocabularies for labeled tabular datasets.
// Class index 0 is reserved for the benign class.
struct FeatureSchema {
  std::string name;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::string label_column = "label";

  int class_index(std::string_view label) const;  // -1 when unknown
  void validate() const;
  std::string digest() const;
};

struct MissingFile : Error {
  using Error::Error;
};
struct SchemaMismatch : Error {
  using Error::Error;
};
struct NonMonotonicTimestamps : Error {
  using Error::Error;
};

struct LoadResult {
  std::vector<FlowSession> sessions;
  size_t skipped_rows = 0;  // rows with non-numeric cells or unknown labels
};

// Loads a labeled CSV (UTF-8, comma separated, first row header). Every
// schema feature name must appear in the header (exact match after trimming)
// along with the label column; columns are resolved by name.
LoadResult load_flow_records(const std::string& path, const FeatureSchema& schema,
                             std::optional<size_t> limit = std::nullopt);

// Builds a schema from a CSV header: every non-label column becomes a
// feature, classes are collected from the label column with `benign_class`
// forced to index 0.
FeatureSchema infer_schema_from_csv(const std::string& path, const std::string& label_column,
                                    const std::string& benign_class);

struct Packet {
  FiveTuple tuple;
  int64_t timestamp_us = 0;
  std::vector<uint8_t> payload;
};

// Groups packets into sessions: identical canonical five-tuples with
// inter-packet gaps <= idle_timeout share a session; a larger gap starts a
// new one. Output is ordered by (canonical tuple key, start time).
std::vector<FlowSession> sessionize(std::span<const Packet> packets, double idle_timeout_s = 64.0);

// Replaces endpoint addresses with fixed placeholder tokens and zeroes the
// first `header_zero_bytes` of the payload. Idempotent.
FlowSession anonymize(FlowSession session, size_t header_zero_bytes = 0);

// Line-oriented test fixture: `tuple_id,timestamp_us,hex_payload`. Each
// distinct tuple id denotes a distinct five-tuple.
std::vector<Packet> load_packet_fixture(const std::string& path);

// Full-fidelity JSON Lines serialization used to chain CLI stages.
nlohmann::ordered_json session_to_json(const FlowSession& s);
FlowSession session_from_json(const nlohmann::json& j);
void write_sessions_jsonl(const std::string& path, std::span<const FlowSession> sessions);
std::vector<FlowSession> read_sessions_jsonl(const std::string& path);

// Exports tabular features + label in the CSV shape load_flow_records reads.
void write_sessions_csv(const std::string& path, std::span<const FlowSession> sessions,
                        const FeatureSchema& schema);

}  // namespace laeids::ingest
