#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mfd/nn.hpp"
#include "mfd/types.hpp"

namespace mfd {

// Flat ordered record serialised as a JSON object.
using Value = std::variant<bool, long, double, std::string, std::vector<double>>;
struct Record {
  std::vector<std::pair<std::string, Value>> fields;
  std::vector<std::pair<std::string, Record>> children;
  std::vector<std::pair<std::string, std::vector<Record>>> lists;

  Record& add(const std::string& k, double v) { return put(k, v); }
  Record& add(const std::string& k, bool v) { return put(k, v); }
  Record& add(const std::string& k, long v) { return put(k, v); }
  Record& add(const std::string& k, int v) { return put(k, static_cast<long>(v)); }
  Record& add(const std::string& k, unsigned v) { return put(k, static_cast<long>(v)); }
  Record& add(const std::string& k, std::size_t v) { return put(k, static_cast<long>(v)); }
  Record& add(const std::string& k, std::string v) { return put(k, std::move(v)); }
  Record& add(const std::string& k, const char* v) { return put(k, std::string(v)); }
  Record& add(const std::string& k, std::vector<double> v) { return put(k, std::move(v)); }
  Record& child(const std::string& k, Record r) {
    children.emplace_back(k, std::move(r));
    return *this;
  }
  Record& list(const std::string& k, std::vector<Record> r) {
    lists.emplace_back(k, std::move(r));
    return *this;
  }

 private:
  Record& put(const std::string& k, Value v) {
    fields.emplace_back(k, std::move(v));
    return *this;
  }
};

std::string to_json(const Record& r, int indent = 2);
void write_json(const std::string& path, const Record& r);
void write_text(const std::string& path, const std::string& text);
void ensure_dir(const std::string& path);

// One row per point.
void write_cloud_csv(const std::string& path, const Mat& points_by_column);
void write_cloud_csv(const std::string& path, const Cloud& points);
Cloud read_cloud_csv(const std::string& path);
void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

struct TraceRow {
  int step = 0;
  double loss = 0.0;
  double alignment = 0.0;
  double manifold_error = 0.0;
  double memorization = 0.0;
};

using MetricTrace = std::vector<TraceRow>;

void write_trace_csv(const std::string& path, const MetricTrace& trace);
MetricTrace read_trace_csv(const std::string& path);

// Binary layout: 8-byte magic, u64 header length, JSON header, little-endian
// doubles of every parameter in parameter_names() order (column-major).
void save_checkpoint(const std::string& path, const ScoreNet& net, const Record& meta);
void load_checkpoint(const std::string& path, ScoreNet& net);

}  // namespace mfd
