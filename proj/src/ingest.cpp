#include "laeids/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "laeids/binio.hpp"
#include "laeids/digest.hpp"

namespace laeids::ingest {

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::kTcp: return "TCP";
    case Protocol::kUdp: return "UDP";
    default: return "OTHER";
  }
}

Protocol protocol_from_string(std::string_view s) {
  if (s == "TCP") return Protocol::kTcp;
  if (s == "UDP") return Protocol::kUdp;
  return Protocol::kOther;
}

FiveTuple FiveTuple::canonical() const {
  const auto src = std::make_pair(src_addr, src_port);
  const auto dst = std::make_pair(dst_addr, dst_port);
  if (dst < src) {
    FiveTuple flipped = *this;
    std::swap(flipped.src_addr, flipped.dst_addr);
    std::swap(flipped.src_port, flipped.dst_port);
    return flipped;
  }
  return *this;
}

std::string FiveTuple::key() const {
  const FiveTuple c = canonical();
  std::ostringstream os;
  os << c.src_addr << ':' << c.src_port << '-' << c.dst_addr << ':' << c.dst_port << '/'
     << to_string(c.protocol);
  return os.str();
}

int FeatureSchema::class_index(std::string_view label) const {
  for (size_t i = 0; i < class_names.size(); ++i) {
    if (class_names[i] == label) return static_cast<int>(i);
  }
  return -1;
}

void FeatureSchema::validate() const {
  if (feature_names.empty()) throw Error("schema has no features");
  std::vector<std::string> sorted = feature_names;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error("schema feature names must be unique");
  }
  if (class_names.size() < 2) throw Error("schema needs a benign class and at least one attack class");
}

std::string FeatureSchema::digest() const {
  Digest d;
  d.add(name);
  for (const auto& f : feature_names) d.add(f);
  for (const auto& c : class_names) d.add(c);
  d.add(label_column);
  return d.hex();
}

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

bool parse_double(const std::string& cell, double* out) {
  const std::string t = trim(cell);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  double v = 0;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return false;
  if (!std::isfinite(v)) return false;
  *out = v;
  return true;
}

}  // namespace

LoadResult load_flow_records(const std::string& path, const FeatureSchema& schema,
                             std::optional<size_t> limit) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open " + path);

  std::string header_line;
  if (!std::getline(in, header_line)) throw EmptyInput("no header row in " + path);
  if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();

  auto header = split_csv_line(header_line);
  std::map<std::string, size_t> column_of;
  for (size_t i = 0; i < header.size(); ++i) column_of[trim(header[i])] = i;

  std::vector<size_t> feature_cols;
  std::vector<std::string> missing;
  for (const auto& name : schema.feature_names) {
    auto it = column_of.find(name);
    if (it == column_of.end()) {
      missing.push_back(name);
    } else {
      feature_cols.push_back(it->second);
    }
  }
  auto label_it = column_of.find(schema.label_column);
  if (label_it == column_of.end()) missing.push_back(schema.label_column);
  if (!missing.empty()) {
    std::string msg = "header is missing columns:";
    for (size_t i = 0; i < missing.size() && i < 3; ++i) msg += " " + missing[i];
    throw SchemaMismatch(msg);
  }
  const size_t label_col = label_it->second;

  LoadResult result;
  std::string line;
  size_t row_index = 0;
  while (std::getline(in, line)) {
    if (limit && result.sessions.size() >= *limit) break;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    ++row_index;

    if (cells.size() < header.size()) {
      ++result.skipped_rows;
      continue;
    }
    std::vector<double> features(feature_cols.size());
    bool ok = true;
    for (size_t i = 0; i < feature_cols.size(); ++i) {
      if (!parse_double(cells[feature_cols[i]], &features[i])) {
        ok = false;
        break;
      }
    }
    const std::string label = trim(cells[label_col]);
    if (ok && schema.class_index(label) < 0) ok = false;
    if (!ok) {
      ++result.skipped_rows;
      continue;
    }

    FlowSession s;
    std::ostringstream id;
    id << "row-" << row_index;
    s.session_id = id.str();
    s.start_time_us = static_cast<int64_t>(row_index);
    s.tabular_features = std::move(features);
    s.schema_name = schema.name;
    s.label = label;
    result.sessions.push_back(std::move(s));
  }
  if (result.sessions.empty()) throw EmptyInput("no valid rows in " + path);
  return result;
}

FeatureSchema infer_schema_from_csv(const std::string& path, const std::string& label_column,
                                    const std::string& benign_class) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open " + path);
  std::string header_line;
  if (!std::getline(in, header_line)) throw EmptyInput("no header row in " + path);
  if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();

  FeatureSchema schema;
  schema.name = path;
  schema.label_column = label_column;
  auto header = split_csv_line(header_line);
  int label_col = -1;
  for (size_t i = 0; i < header.size(); ++i) {
    const std::string name = trim(header[i]);
    if (name == label_column) {
      label_col = static_cast<int>(i);
    } else {
      schema.feature_names.push_back(name);
    }
  }
  if (label_col < 0) throw SchemaMismatch("header is missing columns: " + label_column);

  std::vector<std::string> classes;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() <= static_cast<size_t>(label_col)) continue;
    const std::string label = trim(cells[static_cast<size_t>(label_col)]);
    if (label.empty()) continue;
    if (std::find(classes.begin(), classes.end(), label) == classes.end()) classes.push_back(label);
  }
  std::sort(classes.begin(), classes.end());
  schema.class_names.push_back(benign_class);
  for (const auto& c : classes) {
    if (c != benign_class) schema.class_names.push_back(c);
  }
  schema.validate();
  return schema;
}

std::vector<FlowSession> sessionize(std::span<const Packet> packets, double idle_timeout_s) {
  // Group by canonical tuple, preserving arrival order inside each group.
  std::map<std::string, std::vector<const Packet*>> groups;
  for (const Packet& p : packets) groups[p.tuple.key()].push_back(&p);

  const int64_t timeout_us = static_cast<int64_t>(idle_timeout_s * 1e6);
  std::vector<FlowSession> sessions;
  for (auto& [key, group] : groups) {
    std::stable_sort(group.begin(), group.end(),
                     [](const Packet* a, const Packet* b) { return a->timestamp_us < b->timestamp_us; });
    for (size_t i = 1; i < group.size(); ++i) {
      if (group[i]->timestamp_us < group[i - 1]->timestamp_us) {
        throw NonMonotonicTimestamps("timestamps decrease within flow " + key);
      }
    }

    size_t session_index = 0;
    FlowSession* cur = nullptr;
    int64_t last_ts = 0;
    for (const Packet* p : group) {
      if (cur == nullptr || p->timestamp_us - last_ts > timeout_us) {
        FlowSession s;
        s.tuple = p->tuple.canonical();
        s.start_time_us = p->timestamp_us;
        Digest d;
        d.add(key);
        d.add(static_cast<uint64_t>(session_index));
        std::ostringstream id;
        id << "s-" << d.hex() << '-' << session_index;
        s.session_id = id.str();
        ++session_index;
        sessions.push_back(std::move(s));
        cur = &sessions.back();
      }
      cur->payload.insert(cur->payload.end(), p->payload.begin(), p->payload.end());
      last_ts = p->timestamp_us;
    }
  }
  return sessions;
}

FlowSession anonymize(FlowSession session, size_t header_zero_bytes) {
  session.tuple.src_addr = "ANON_A";
  session.tuple.dst_addr = "ANON_B";
  const size_t n = std::min(header_zero_bytes, session.payload.size());
  std::fill(session.payload.begin(), session.payload.begin() + static_cast<ptrdiff_t>(n), uint8_t{0});
  return session;
}

std::vector<Packet> load_packet_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open " + path);
  std::vector<Packet> packets;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (cells.size() != 3) throw Error("bad packet fixture line: " + line);
    Packet p;
    const std::string id = trim(cells[0]);
    p.tuple.src_addr = "host." + id + ".a";
    p.tuple.dst_addr = "host." + id + ".b";
    p.tuple.src_port = 40000;
    p.tuple.dst_port = 443;
    p.tuple.protocol = Protocol::kTcp;
    p.timestamp_us = std::stoll(trim(cells[1]));
    p.payload = hex_decode(trim(cells[2]));
    packets.push_back(std::move(p));
  }
  return packets;
}

nlohmann::ordered_json session_to_json(const FlowSession& s) {
  nlohmann::ordered_json j;
  j["id"] = s.session_id;
  j["src"] = s.tuple.src_addr;
  j["dst"] = s.tuple.dst_addr;
  j["sport"] = s.tuple.src_port;
  j["dport"] = s.tuple.dst_port;
  j["proto"] = to_string(s.tuple.protocol);
  j["start_us"] = s.start_time_us;
  j["payload"] = hex_encode(s.payload);
  j["features"] = s.tabular_features;
  j["schema"] = s.schema_name;
  if (s.label) {
    j["label"] = *s.label;
  } else {
    j["label"] = nullptr;
  }
  return j;
}

FlowSession session_from_json(const nlohmann::json& j) {
  FlowSession s;
  s.session_id = j.at("id").get<std::string>();
  s.tuple.src_addr = j.at("src").get<std::string>();
  s.tuple.dst_addr = j.at("dst").get<std::string>();
  s.tuple.src_port = j.at("sport").get<uint16_t>();
  s.tuple.dst_port = j.at("dport").get<uint16_t>();
  s.tuple.protocol = protocol_from_string(j.at("proto").get<std::string>());
  s.start_time_us = j.at("start_us").get<int64_t>();
  s.payload = hex_decode(j.at("payload").get<std::string>());
  s.tabular_features = j.at("features").get<std::vector<double>>();
  s.schema_name = j.at("schema").get<std::string>();
  if (!j.at("label").is_null()) s.label = j.at("label").get<std::string>();
  return s;
}

void write_sessions_jsonl(const std::string& path, std::span<const FlowSession> sessions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const auto& s : sessions) out << session_to_json(s).dump() << '\n';
}

std::vector<FlowSession> read_sessions_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open " + path);
  std::vector<FlowSession> sessions;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    sessions.push_back(session_from_json(nlohmann::json::parse(line)));
  }
  return sessions;
}

void write_sessions_csv(const std::string& path, std::span<const FlowSession> sessions,
                        const FeatureSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (size_t i = 0; i < schema.feature_names.size(); ++i) {
    out << schema.feature_names[i] << ',';
  }
  out << schema.label_column << '\n';
  out.precision(17);
  for (const auto& s : sessions) {
    for (double v : s.tabular_features) out << v << ',';
    out << (s.label ? *s.label : std::string()) << '\n';
  }
}

}  // namespace laeids::ingest
