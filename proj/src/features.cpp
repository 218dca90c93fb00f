#include "dgscreen/features.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dgscreen {

StageFeatures extract_stage(const SessionRecord& record) {
  if (record.events.empty()) {
    throw InsufficientData("cannot summarize an empty record");
  }
  StageFeatures f;
  f.total_time = to_seconds(record.events.back().t);
  std::optional<Millis> first_wrong;
  Millis last_correct{0};
  for (const auto& e : record.events) {
    if (e.correct) {
      ++f.total_score;
      last_correct = e.t;
    } else if (!first_wrong) {
      first_wrong = e.t;
    }
  }
  f.first_wrong_time = first_wrong ? to_seconds(*first_wrong) : f.total_time;
  f.last_correct_time = to_seconds(last_correct);
  return f;
}

FeatureVector extract_session(const std::map<GameStage, SessionRecord>& stages) {
  FeatureVector v;
  v.values.reserve(kNumAttributes);
  for (GameStage stage : kGame2Stages) {
    auto it = stages.find(stage);
    if (it == stages.end()) {
      throw IncompleteSession("missing stage " + std::string(to_string(stage)));
    }
    const StageFeatures f = extract_stage(it->second);
    v.values.insert(v.values.end(), {f.total_time, static_cast<double>(f.total_score),
                                     f.first_wrong_time, f.last_correct_time});
  }
  return v;
}

const std::vector<std::string>& attribute_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (GameStage stage : kGame2Stages) {
      const std::string p(to_string(stage));
      for (const char* f : {"total_time", "total_score", "first_wrong_time", "last_correct_time"}) {
        n.push_back(p + "." + f);
      }
    }
    return n;
  }();
  return names;
}

FeatureTable make_feature_table(std::span<const LabeledSession> sessions) {
  FeatureTable t;
  t.attributes = attribute_names();
  t.has_labels = !sessions.empty();
  for (const auto& s : sessions) {
    t.rows.push_back(extract_session(s));
    t.labels.push_back(s.actual_label);
    if (!s.actual_label) t.has_labels = false;
  }
  if (!t.has_labels) t.labels.assign(t.rows.size(), std::nullopt);
  return t;
}

namespace {

// Shortest representation that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

void write_csv(std::ostream& out, const FeatureTable& table) {
  for (std::size_t i = 0; i < table.attributes.size(); ++i) {
    out << (i ? "," : "") << table.attributes[i];
  }
  if (table.has_labels) out << ",label";
  out << '\n';
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r].values;
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    if (table.has_labels) out << ',' << to_string(*table.labels[r]);
    out << '\n';
  }
}

FeatureTable read_csv(std::istream& in) {
  FeatureTable t;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError({"feature table is empty"});
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.attributes = split_line(line);
  if (!t.attributes.empty() && t.attributes.back() == "label") {
    t.has_labels = true;
    t.attributes.pop_back();
  }
  if (t.attributes.empty()) throw SchemaError({"feature table has no attribute columns"});

  std::vector<std::string> bad;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    const std::size_t expect = t.attributes.size() + (t.has_labels ? 1 : 0);
    if (cells.size() != expect) {
      bad.push_back("line " + std::to_string(line_no) + ": expected " + std::to_string(expect) +
                    " cells, got " + std::to_string(cells.size()));
      continue;
    }
    FeatureVector v;
    bool ok = true;
    for (std::size_t i = 0; i < t.attributes.size(); ++i) {
      double d = 0.0;
      const auto& c = cells[i];
      auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), d);
      if (ec != std::errc() || p != c.data() + c.size() || !std::isfinite(d)) {
        bad.push_back("line " + std::to_string(line_no) + ": bad number \"" + c + "\"");
        ok = false;
        break;
      }
      v.values.push_back(d);
    }
    std::optional<Label> label;
    if (ok && t.has_labels) {
      label = parse_label(cells.back());
      if (!label) {
        bad.push_back("line " + std::to_string(line_no) + ": bad label \"" + cells.back() + "\"");
        ok = false;
      }
    }
    if (ok) {
      t.rows.push_back(std::move(v));
      t.labels.push_back(label);
    }
  }
  if (!bad.empty()) throw SchemaError(std::move(bad));
  return t;
}

void write_csv_file(const std::filesystem::path& path, const FeatureTable& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  write_csv(out, table);
}

FeatureTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_csv(in);
}

}  // namespace dgscreen
