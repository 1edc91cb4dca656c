#include "mfd/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "mfd/config.hpp"
#include "mfd/errors.hpp"

namespace mfd {

namespace {

constexpr char kMagic[8] = {'M', 'F', 'D', 'C', 'K', 'P', 'T', '1'};

nlohmann::ordered_json to_ojson(const Record& r) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.fields) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, double>) {
            // JSON has no NaN/Inf; emit them as strings so the file stays valid.
            if (std::isfinite(x))
              j[k] = x;
            else
              j[k] = std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
          } else {
            j[k] = x;
          }
        },
        v);
  }
  for (const auto& [k, c] : r.children) j[k] = to_ojson(c);
  for (const auto& [k, l] : r.lists) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : l) arr.push_back(to_ojson(c));
    j[k] = arr;
  }
  return j;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(path, mode);
  if (!f) throw InvalidArgument("cannot open " + path + " for writing");
  return f;
}

std::vector<std::vector<double>> read_numeric_csv(const std::string& path, std::string* header) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (first && header) {
      *header = line;
      first = false;
      continue;
    }
    first = false;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string to_json(const Record& r, int indent) { return to_ojson(r).dump(indent); }

void write_json(const std::string& path, const Record& r) { open_out(path) << to_json(r) << "\n"; }

void write_text(const std::string& path, const std::string& text) { open_out(path) << text; }

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw InvalidArgument("cannot create directory " + path + ": " + ec.message());
}

void write_cloud_csv(const std::string& path, const Mat& x) {
  auto f = open_out(path);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) f << (i ? "," : "") << format_double(x(i, j));
    f << "\n";
  }
}

void write_cloud_csv(const std::string& path, const Cloud& points) { write_cloud_csv(path, to_matrix(points)); }

Cloud read_cloud_csv(const std::string& path) {
  Cloud out;
  for (auto& row : read_numeric_csv(path, nullptr)) {
    Vec v(static_cast<Eigen::Index>(row.size()));
    for (std::size_t i = 0; i < row.size(); ++i) v[static_cast<Eigen::Index>(i)] = row[i];
    out.push_back(std::move(v));
  }
  return out;
}

void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  auto f = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) f << (i ? "," : "") << header[i];
  f << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << format_double(row[i]);
    f << "\n";
  }
}

void write_trace_csv(const std::string& path, const MetricTrace& trace) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : trace)
    rows.push_back({static_cast<double>(r.step), r.loss, r.alignment, r.manifold_error, r.memorization});
  write_table_csv(path, {"step", "loss", "alignment", "manifold_error", "memorization"}, rows);
}

MetricTrace read_trace_csv(const std::string& path) {
  std::string header;
  MetricTrace t;
  for (const auto& row : read_numeric_csv(path, &header)) {
    if (row.size() != 5) throw InvalidArgument("malformed trace row in " + path);
    t.push_back({static_cast<int>(row[0]), row[1], row[2], row[3], row[4]});
  }
  return t;
}

void save_checkpoint(const std::string& path, const ScoreNet& net, const Record& meta) {
  static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes a little-endian host");
  auto header = to_ojson(meta);
  const auto params = net.parameters();
  const auto names = net.parameter_names();
  auto shapes = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < params.size(); ++i)
    shapes.push_back({{"name", names[i]}, {"rows", params[i]->rows()}, {"cols", params[i]->cols()}});
  header["parameters"] = shapes;
  const std::string hs = header.dump();
  auto f = open_out(path, std::ios::out | std::ios::binary);
  f.write(kMagic, sizeof kMagic);
  const std::uint64_t len = hs.size();
  f.write(reinterpret_cast<const char*>(&len), sizeof len);
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const Mat* p : params)
    f.write(reinterpret_cast<const char*>(p->data()), static_cast<std::streamsize>(p->size() * sizeof(double)));
}

void load_checkpoint(const std::string& path, ScoreNet& net) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot open checkpoint " + path);
  char magic[8];
  f.read(magic, sizeof magic);
  if (!f || std::memcmp(magic, kMagic, sizeof magic) != 0) throw InvalidArgument(path + " is not a checkpoint");
  std::uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof len);
  std::string hs(len, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(len));
  if (!f) throw InvalidArgument("truncated checkpoint header in " + path);
  const auto header = nlohmann::json::parse(hs);
  auto params = net.parameters();
  const auto names = net.parameter_names();
  const auto& shapes = header.at("parameters");
  if (shapes.size() != params.size()) throw InvalidArgument("checkpoint parameter count does not match the network");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& s = shapes[i];
    if (s.at("name").get<std::string>() != names[i] || s.at("rows").get<long>() != params[i]->rows() ||
        s.at("cols").get<long>() != params[i]->cols())
      throw InvalidArgument("checkpoint layout mismatch at " + names[i]);
    f.read(reinterpret_cast<char*>(params[i]->data()),
           static_cast<std::streamsize>(params[i]->size() * sizeof(double)));
  }
  if (!f) throw InvalidArgument("truncated checkpoint payload in " + path);
}

}  // namespace mfd
