#include "nwpkit/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nwpkit/errors.hpp"

namespace nwpkit {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void store_le(T value, unsigned char* out) {
  std::memcpy(out, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(out, out + sizeof(T));
}

template <typename T>
T load_le(const unsigned char* in) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, in, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

std::string_view dtype_name(DType d) { return d == DType::f32 ? "f32" : "f64"; }

DType dtype_from_name(const std::string& s) {
  if (s == "f32") return DType::f32;
  if (s == "f64") return DType::f64;
  throw IoError(IoError::Kind::dtype, "unknown dtype '" + s + "'", kHeaderOffset);
}

void encode_chunk(const GridArrayd& a, DType dtype, std::vector<unsigned char>& out) {
  const std::size_t n = static_cast<std::size_t>(a.size());
  out.resize(n * dtype_size(dtype));
  const double* src = a.data();
  if (dtype == DType::f32) {
    for (std::size_t i = 0; i < n; ++i) store_le(static_cast<float>(src[i]), &out[i * 4]);
  } else {
    for (std::size_t i = 0; i < n; ++i) store_le(src[i], &out[i * 8]);
  }
}

std::string csv_field(const std::string& s, const char* what) {
  if (s.find_first_of(",\n\r\"") != std::string::npos) {
    throw ArgumentError(std::string("score ") + what + " '" + s +
                        "' contains a character not allowed in CSV output");
  }
  return s;
}

}  // namespace

std::size_t dtype_size(DType dtype) noexcept { return dtype == DType::f32 ? 4 : 8; }

// ---------------------------------------------------------------------------

Index ContainerHeader::rows() const {
  return grid->n_lat() + (padding ? 2 * padding->pad_ns : 0);
}

Index ContainerHeader::cols() const {
  return grid->n_lon() + (padding ? 2 * padding->pad_ew : 0);
}

std::uint64_t ContainerHeader::chunk_bytes() const {
  return static_cast<std::uint64_t>(rows()) * static_cast<std::uint64_t>(cols()) *
         dtype_size(dtype);
}

std::uint64_t ContainerHeader::payload_bytes() const {
  return static_cast<std::uint64_t>(time_axis.size()) * variables.size() * chunk_bytes();
}

json ContainerHeader::to_json() const {
  json j;
  j["magic"] = "GVF1";
  j["version"] = kContainerVersion;
  json g;
  g["kind"] = std::string(to_string(grid->kind()));
  g["n_lat"] = grid->n_lat();
  g["n_lon"] = grid->n_lon();
  g["lon_origin"] = grid->lon_origin();
  if (padding) {
    g["padding"] = {{"pad_ns", padding->pad_ns},
                    {"pad_ew", padding->pad_ew},
                    {"mode", padding->mode}};
  }
  j["grid"] = std::move(g);
  json vars = json::array();
  for (const auto& v : variables) {
    vars.push_back({{"name", v.key.name}, {"level", v.key.level}, {"units", v.units}});
  }
  j["variables"] = std::move(vars);
  json times = json::array();
  for (auto t : time_axis) times.push_back(format_iso(t));
  j["time_axis"] = std::move(times);
  if (!init_times.empty()) {
    json inits = json::array();
    for (auto t : init_times) inits.push_back(format_iso(t));
    j["init_times"] = std::move(inits);
  }
  j["dtype"] = std::string(dtype_name(dtype));
  j["byte_order"] = "little";
  j["attributes"] = attributes;
  return j;
}

ContainerHeader ContainerHeader::from_json(const json& j) {
  auto fail = [](const std::string& msg) {
    return IoError(IoError::Kind::header, "invalid container header: " + msg, kHeaderOffset);
  };
  try {
    if (j.at("magic").get<std::string>() != "GVF1") throw fail("magic field is not GVF1");
    if (j.at("version").get<int>() != kContainerVersion) {
      throw fail("unsupported version " + j.at("version").dump());
    }
    if (j.at("byte_order").get<std::string>() != "little") throw fail("byte_order must be little");

    ContainerHeader h;
    const json& g = j.at("grid");
    const auto kind = grid_kind_from_string(g.at("kind").get<std::string>());
    const Index n_lat = g.at("n_lat").get<Index>();
    const Index n_lon = g.at("n_lon").get<Index>();
    const double origin = g.value("lon_origin", 0.0);
    h.grid = std::make_shared<const GridSpec>(kind == GridKind::gaussian
                                                  ? GridSpec::gaussian(n_lat, n_lon, origin)
                                                  : GridSpec::equiangular(n_lat, n_lon, origin));
    if (g.contains("padding")) {
      const json& p = g.at("padding");
      h.padding = PaddingInfo{p.at("pad_ns").get<Index>(), p.at("pad_ew").get<Index>(),
                              p.at("mode").get<std::string>()};
    }
    for (const auto& v : j.at("variables")) {
      VariableInfo info{{v.at("name").get<std::string>(), v.at("level").get<std::string>()},
                        v.at("units").get<std::string>()};
      for (const auto& existing : h.variables) {
        if (existing.key == info.key) throw fail("duplicate variable " + info.key.label());
      }
      h.variables.push_back(std::move(info));
    }
    for (const auto& t : j.at("time_axis")) h.time_axis.push_back(parse_iso(t.get<std::string>()));
    if (j.contains("init_times")) {
      for (const auto& t : j.at("init_times")) {
        h.init_times.push_back(parse_iso(t.get<std::string>()));
      }
      if (h.init_times.size() != h.time_axis.size()) {
        throw fail("init_times and time_axis differ in length");
      }
    }
    h.dtype = dtype_from_name(j.at("dtype").get<std::string>());
    if (j.contains("attributes")) h.attributes = j.at("attributes");
    return h;
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw fail(e.what());
  }
}

// ---------------------------------------------------------------------------

Dataset::Dataset(std::shared_ptr<const GridSpec> grid, std::vector<VariableInfo> variables,
                 std::vector<TimePoint> times, std::vector<Field> fields,
                 std::vector<TimePoint> init_times)
    : grid_(std::move(grid)),
      variables_(std::move(variables)),
      times_(std::move(times)),
      init_times_(std::move(init_times)),
      fields_(std::move(fields)) {
  if (!grid_) throw ArgumentError("dataset has no grid");
  if (fields_.size() != times_.size() * variables_.size()) {
    throw ArgumentError("dataset holds " + std::to_string(fields_.size()) + " fields, expected " +
                        std::to_string(times_.size() * variables_.size()));
  }
  if (!init_times_.empty() && init_times_.size() != times_.size()) {
    throw ArgumentError("dataset init_times and times differ in length");
  }
  for (std::size_t v = 0; v < variables_.size(); ++v) {
    check_units(variables_[v]);
    for (std::size_t w = 0; w < v; ++w) {
      if (variables_[w].key == variables_[v].key) {
        throw ArgumentError("dataset lists variable " + variables_[v].key.label() + " twice");
      }
    }
  }
  for (std::size_t t = 0; t < times_.size(); ++t) {
    for (std::size_t v = 0; v < variables_.size(); ++v) {
      const Field& f = fields_[t * variables_.size() + v];
      if (!(f.grid() == *grid_)) {
        throw ArgumentError("field " + f.key().label() + " at " + format_iso(f.valid_time()) +
                            " is on a different grid");
      }
      if (!(f.key() == variables_[v].key) || f.valid_time() != times_[t]) {
        throw ArgumentError("field " + f.key().label() + " at " + format_iso(f.valid_time()) +
                            " is out of place in the dataset layout");
      }
    }
  }
}

Dataset Dataset::from_series(const std::vector<FieldSeries>& series,
                             const std::vector<std::string>& units) {
  if (series.empty()) throw ArgumentError("from_series: no series");
  if (units.size() != series.size()) throw ArgumentError("from_series: one unit per series");
  const std::size_t nt = series.front().size();
  std::shared_ptr<const GridSpec> grid;
  std::vector<VariableInfo> vars;
  std::vector<TimePoint> times;
  for (std::size_t v = 0; v < series.size(); ++v) {
    if (series[v].size() != nt) throw ArgumentError("from_series: series lengths differ");
    if (nt == 0) throw ArgumentError("from_series: empty series carry no grid");
    vars.push_back({series[v][0].key(), units[v]});
    if (!grid) {
      grid = series[v][0].grid_ptr();
    } else if (!(*grid == series[v][0].grid())) {
      throw ArgumentError("from_series: series " + series[v][0].key().label() +
                          " is on a different grid");
    }
  }
  std::vector<Field> fields;
  fields.reserve(nt * series.size());
  for (std::size_t t = 0; t < nt; ++t) {
    times.push_back(series[0][t].valid_time());
    for (const auto& s : series) fields.push_back(s[t]);
  }
  return Dataset(grid, std::move(vars), std::move(times), std::move(fields));
}

std::optional<std::size_t> Dataset::variable_index(const VariableKey& key) const {
  for (std::size_t v = 0; v < variables_.size(); ++v) {
    if (variables_[v].key == key) return v;
  }
  return std::nullopt;
}

std::optional<std::size_t> Dataset::time_index(TimePoint t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it != times_.end() && *it == t) return static_cast<std::size_t>(it - times_.begin());
  // Forecast files are not sorted by valid time.
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (times_[i] == t) return i;
  }
  return std::nullopt;
}

FieldSeries Dataset::series(std::size_t v) const {
  std::vector<Field> out;
  out.reserve(times_.size());
  for (std::size_t t = 0; t < times_.size(); ++t) out.push_back(field(t, v));
  return FieldSeries(std::move(out));
}

// ---------------------------------------------------------------------------

ContainerReader::ContainerReader(fs::path path) : path_(std::move(path)) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw IoError(IoError::Kind::open, "cannot open " + path_.string(), 0);
  std::error_code ec;
  const std::uint64_t file_size = fs::file_size(path_, ec);
  if (ec) throw IoError(IoError::Kind::open, "cannot stat " + path_.string(), 0);

  unsigned char prefix[kHeaderOffset];
  if (file_size < kHeaderOffset || !in.read(reinterpret_cast<char*>(prefix), kHeaderOffset)) {
    throw IoError(IoError::Kind::truncated,
                  path_.string() + ": file too short for the container prefix", file_size);
  }
  if (std::memcmp(prefix, kContainerMagic, 4) != 0) {
    throw IoError(IoError::Kind::magic, path_.string() + ": magic mismatch, not a GVF1 file", 0);
  }
  const auto header_len = load_le<std::uint64_t>(prefix + 4);
  if (header_len > file_size - kHeaderOffset) {
    throw IoError(IoError::Kind::truncated,
                  path_.string() + ": header declares " + std::to_string(header_len) +
                      " bytes but the file ends first",
                  file_size);
  }
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (text.empty() || text.back() != '\n') {
    throw IoError(IoError::Kind::header, path_.string() + ": header is not newline-terminated",
                  kHeaderOffset + header_len);
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(IoError::Kind::header, path_.string() + ": header JSON: " + e.what(),
                  kHeaderOffset + e.byte);
  }
  try {
    header_ = ContainerHeader::from_json(j);
  } catch (const IoError& e) {
    throw IoError(e.kind(), path_.string() + ": " + e.what(), e.offset());
  }

  payload_offset_ = kHeaderOffset + header_len;
  const std::uint64_t expected_end = payload_offset_ + header_.payload_bytes();
  if (file_size != expected_end) {
    // A payload of the right element count in the other dtype is a dtype mismatch.
    const DType other = header_.dtype == DType::f32 ? DType::f64 : DType::f32;
    ContainerHeader alt = header_;
    alt.dtype = other;
    if (header_.payload_bytes() > 0 && file_size == payload_offset_ + alt.payload_bytes()) {
      throw IoError(IoError::Kind::dtype,
                    path_.string() + ": header dtype " + std::string(dtype_name(header_.dtype)) +
                        " but payload length matches " + std::string(dtype_name(other)),
                    payload_offset_);
    }
    if (file_size < expected_end) {
      throw IoError(IoError::Kind::truncated,
                    path_.string() + ": truncated payload, expected " +
                        std::to_string(header_.payload_bytes()) + " bytes ending at offset " +
                        std::to_string(expected_end) + ", file has " + std::to_string(file_size),
                    file_size);
    }
    throw IoError(IoError::Kind::truncated,
                  path_.string() + ": " + std::to_string(file_size - expected_end) +
                      " trailing bytes after the payload",
                  expected_end);
  }
}

GridArrayd ContainerReader::read_chunk(std::size_t t, std::size_t v) const {
  if (t >= header_.time_axis.size() || v >= header_.variables.size()) {
    throw ArgumentError("chunk (" + std::to_string(t) + ", " + std::to_string(v) +
                        ") is outside " + path_.string());
  }
  const std::uint64_t chunk = header_.chunk_bytes();
  const std::uint64_t offset = payload_offset_ + (t * header_.variables.size() + v) * chunk;
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw IoError(IoError::Kind::open, "cannot open " + path_.string(), 0);
  in.seekg(static_cast<std::streamoff>(offset));
  std::vector<unsigned char> bytes(chunk);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(chunk))) {
    throw IoError(IoError::Kind::truncated, path_.string() + ": short read", offset);
  }
  GridArrayd a(header_.rows(), header_.cols());
  double* dst = a.data();
  const std::size_t n = static_cast<std::size_t>(a.size());
  if (header_.dtype == DType::f32) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = load_le<float>(&bytes[i * 4]);
  } else {
    for (std::size_t i = 0; i < n; ++i) dst[i] = load_le<double>(&bytes[i * 8]);
  }
  return a;
}

Field ContainerReader::read_field(std::size_t t, std::size_t v) const {
  if (header_.padding) {
    throw DataError(path_.string() + " holds padded arrays, not grid fields");
  }
  try {
    return Field(header_.grid, read_chunk(t, v), header_.variables[v].key, header_.time_axis[t]);
  } catch (const DataError& e) {
    throw DataError(path_.string() + ": " + e.what());
  }
}

Dataset ContainerReader::read_all() const {
  const std::size_t nt = header_.time_axis.size();
  const std::size_t nv = header_.variables.size();
  std::vector<Field> fields;
  fields.reserve(nt * nv);
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t v = 0; v < nv; ++v) fields.push_back(read_field(t, v));
  }
  Dataset d(header_.grid, header_.variables, header_.time_axis, std::move(fields),
            header_.init_times);
  d.attributes() = header_.attributes;
  return d;
}

Dataset read_container(const fs::path& path) { return ContainerReader(path).read_all(); }

ContainerWriter::ContainerWriter(ContainerHeader header, const fs::path& path)
    : header_(std::move(header)), path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError(IoError::Kind::write, "cannot write " + path_.string(), 0);
  const std::string text = header_.to_json().dump() + "\n";
  unsigned char prefix[kHeaderOffset];
  std::memcpy(prefix, kContainerMagic, 4);
  store_le<std::uint64_t>(text.size(), prefix + 4);
  out_.write(reinterpret_cast<const char*>(prefix), kHeaderOffset);
  out_.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void ContainerWriter::append(const GridArrayd& chunk) {
  if (chunk.rows() != header_.rows() || chunk.cols() != header_.cols()) {
    throw ArgumentError("write_container: chunk shape does not match the header grid");
  }
  if (written_ == header_.time_axis.size() * header_.variables.size()) {
    throw ArgumentError("write_container: more chunks than the header implies");
  }
  encode_chunk(chunk, header_.dtype, buf_);
  out_.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
  ++written_;
}

void ContainerWriter::finish() {
  const std::size_t expected = header_.time_axis.size() * header_.variables.size();
  if (written_ != expected) {
    throw ArgumentError("write_container: got " + std::to_string(written_) + " chunks, header implies " +
                        std::to_string(expected));
  }
  out_.flush();
  if (!out_) throw IoError(IoError::Kind::write, "write failed for " + path_.string(), written_ * header_.chunk_bytes());
  out_.close();
}

void write_container(const ContainerHeader& header, std::span<const GridArrayd> chunks,
                     const fs::path& path) {
  const std::size_t expected = header.time_axis.size() * header.variables.size();
  if (chunks.size() != expected) {
    throw ArgumentError("write_container: got " + std::to_string(chunks.size()) +
                        " chunks, header implies " + std::to_string(expected));
  }
  for (const auto& c : chunks) {
    if (c.rows() != header.rows() || c.cols() != header.cols()) {
      throw ArgumentError("write_container: chunk shape does not match the header grid");
    }
  }
  ContainerWriter w(header, path);
  for (const auto& c : chunks) w.append(c);
  w.finish();
}

void write_container(const Dataset& data, const fs::path& path, DType dtype) {
  ContainerHeader h;
  h.grid = data.grid_ptr();
  h.variables = data.variables();
  h.time_axis = data.times();
  h.init_times = data.init_times();
  h.dtype = dtype;
  h.attributes = data.attributes();
  std::vector<GridArrayd> chunks;
  chunks.reserve(data.fields().size());
  for (const auto& f : data.fields()) chunks.push_back(f.values());
  write_container(h, chunks, path);
}

// ---------------------------------------------------------------------------

ScoreFormat score_format_from_string(std::string_view text) {
  if (text == "csv") return ScoreFormat::csv;
  if (text == "jsonl") return ScoreFormat::jsonl;
  throw ArgumentError("unknown score format '" + std::string(text) + "' (csv or jsonl)");
}

std::string format_sig9(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

void write_scores(std::vector<ScoreRecord> records, const fs::path& path, ScoreFormat format) {
  if (records.empty()) throw ArgumentError("write_scores: no records for " + path.string());
  std::stable_sort(records.begin(), records.end(), [](const ScoreRecord& a, const ScoreRecord& b) {
    return std::tie(a.variable, a.lead_hours, a.metric) <
           std::tie(b.variable, b.lead_hours, b.metric);
  });
  std::ostringstream os;
  if (format == ScoreFormat::csv) {
    os << "variable,lead_hours,metric,value,ci_low,ci_high,n_inits\n";
    for (const auto& r : records) {
      os << csv_field(r.variable, "variable") << ',' << r.lead_hours << ','
         << csv_field(r.metric, "metric") << ',' << format_sig9(r.value) << ','
         << format_sig9(r.ci_low) << ',' << format_sig9(r.ci_high) << ',' << r.n_inits << '\n';
    }
  } else {
    auto num = [](double x) { return std::isfinite(x) ? format_sig9(x) : std::string("null"); };
    for (const auto& r : records) {
      os << "{\"variable\":" << json(r.variable).dump() << ",\"lead_hours\":" << r.lead_hours
         << ",\"metric\":" << json(r.metric).dump() << ",\"value\":" << num(r.value)
         << ",\"ci_low\":" << num(r.ci_low) << ",\"ci_high\":" << num(r.ci_high)
         << ",\"n_inits\":" << r.n_inits << "}\n";
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::write, "cannot write score file " + path.string(), 0);
  const std::string text = os.str();
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError(IoError::Kind::write, "write failed for " + path.string(), 0);
}

std::vector<ScoreRecord> read_scores(const fs::path& path, ScoreFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError(IoError::Kind::open, "cannot open score file " + path.string(), 0);
  std::vector<ScoreRecord> records;
  std::string line;
  std::size_t line_no = 0;
  auto bad = [&](const std::string& why) {
    return DataError(path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  if (format == ScoreFormat::csv) {
    if (!std::getline(in, line) || line != "variable,lead_hours,metric,value,ci_low,ci_high,n_inits") {
      throw bad("missing or unexpected CSV header");
    }
    ++line_no;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::vector<std::string> cols;
      std::stringstream ss(line);
      std::string col;
      while (std::getline(ss, col, ',')) cols.push_back(col);
      if (cols.size() != 7) throw bad("expected 7 columns");
      try {
        records.push_back({cols[0], std::stoi(cols[1]), cols[2], std::stod(cols[3]),
                           std::stod(cols[4]), std::stod(cols[5]), std::stoi(cols[6])});
      } catch (const std::exception& e) {
        throw bad(e.what());
      }
    }
  } else {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        auto num = [&](const char* k) {
          return j.at(k).is_null() ? std::numeric_limits<double>::quiet_NaN()
                                   : j.at(k).get<double>();
        };
        records.push_back({j.at("variable").get<std::string>(), j.at("lead_hours").get<int>(),
                           j.at("metric").get<std::string>(), num("value"), num("ci_low"),
                           num("ci_high"), j.at("n_inits").get<int>()});
      } catch (const std::exception& e) {
        throw bad(e.what());
      }
    }
  }
  return records;
}

}  // namespace nwpkit
