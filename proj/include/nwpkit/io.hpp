#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nwpkit/grid.hpp"

namespace nwpkit {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// GVF1 container
//
// Byte layout (all integers little-endian):
//   [0, 4)        ASCII "GVF1"
//   [4, 12)       uint64 header length L
//   [12, 12+L)    UTF-8 JSON header, terminated by '\n'
//   [12+L, ...)   payload: time-major, then variable, then latitude (north to
//                 south), then longitude; f32 or f64 little-endian
//
// Header keys: magic, version, grid {kind, n_lat, n_lon, lon_origin
// [, padding {pad_ns, pad_ew, mode}]}, variables [{name, level, units}],
// time_axis [ISO-8601 UTC], optional init_times (parallel to time_axis, for
// forecast files), dtype, byte_order, attributes {}.

inline constexpr char kContainerMagic[4] = {'G', 'V', 'F', '1'};
inline constexpr int kContainerVersion = 1;
inline constexpr std::uint64_t kHeaderOffset = 12;

enum class DType { f32, f64 };

std::size_t dtype_size(DType dtype) noexcept;

/// Set when the payload holds padded arrays (debug output of `pad`). The
/// grid is the source grid; payload rows/cols are extended by the padding.
struct PaddingInfo {
  Index pad_ns = 0;
  Index pad_ew = 0;
  std::string mode;
  bool operator==(const PaddingInfo&) const = default;
};

struct ContainerHeader {
  std::shared_ptr<const GridSpec> grid;
  std::vector<VariableInfo> variables;
  std::vector<TimePoint> time_axis;
  /// Empty, or one initialization time per entry of time_axis.
  std::vector<TimePoint> init_times;
  DType dtype = DType::f32;
  std::optional<PaddingInfo> padding;
  json attributes = json::object();

  Index rows() const;
  Index cols() const;
  std::uint64_t chunk_bytes() const;
  std::uint64_t payload_bytes() const;

  json to_json() const;
  static ContainerHeader from_json(const json& j);
};

/// All fields of a container, materialized. Field (t, v) is stored at
/// index t * n_vars + v.
class Dataset {
 public:
  Dataset(std::shared_ptr<const GridSpec> grid, std::vector<VariableInfo> variables,
          std::vector<TimePoint> times, std::vector<Field> fields,
          std::vector<TimePoint> init_times = {});

  /// Builds a dataset from per-variable series sharing one time axis.
  static Dataset from_series(const std::vector<FieldSeries>& series,
                             const std::vector<std::string>& units);

  const GridSpec& grid() const noexcept { return *grid_; }
  const std::shared_ptr<const GridSpec>& grid_ptr() const noexcept { return grid_; }
  const std::vector<VariableInfo>& variables() const noexcept { return variables_; }
  const std::vector<TimePoint>& times() const noexcept { return times_; }
  const std::vector<TimePoint>& init_times() const noexcept { return init_times_; }
  std::size_t n_times() const noexcept { return times_.size(); }
  std::size_t n_vars() const noexcept { return variables_.size(); }

  const Field& field(std::size_t t, std::size_t v) const { return fields_[t * n_vars() + v]; }
  const std::vector<Field>& fields() const noexcept { return fields_; }

  std::optional<std::size_t> variable_index(const VariableKey& key) const;
  std::optional<std::size_t> time_index(TimePoint t) const;
  /// The series of one variable; requires a strictly increasing uniform axis.
  FieldSeries series(std::size_t v) const;

  json& attributes() noexcept { return attributes_; }
  const json& attributes() const noexcept { return attributes_; }

 private:
  std::shared_ptr<const GridSpec> grid_;
  std::vector<VariableInfo> variables_;
  std::vector<TimePoint> times_;
  std::vector<TimePoint> init_times_;
  std::vector<Field> fields_;
  json attributes_ = json::object();
};

/// Validates the header on construction and reads (time, variable) chunks
/// on demand. Each read opens its own stream, so concurrent reads are safe.
class ContainerReader {
 public:
  explicit ContainerReader(std::filesystem::path path);

  const ContainerHeader& header() const noexcept { return header_; }
  const std::filesystem::path& path() const noexcept { return path_; }

  GridArrayd read_chunk(std::size_t t, std::size_t v) const;
  Field read_field(std::size_t t, std::size_t v) const;
  Dataset read_all() const;

 private:
  std::filesystem::path path_;
  ContainerHeader header_;
  std::uint64_t payload_offset_ = 0;
};

Dataset read_container(const std::filesystem::path& path);
void write_container(const Dataset& data, const std::filesystem::path& path,
                     DType dtype = DType::f32);

/// Streams chunks to a container in (time, variable) order. finish() checks
/// that every chunk the header implies was written.
class ContainerWriter {
 public:
  ContainerWriter(ContainerHeader header, const std::filesystem::path& path);

  const ContainerHeader& header() const noexcept { return header_; }
  void append(const GridArrayd& chunk);
  void finish();

 private:
  ContainerHeader header_;
  std::filesystem::path path_;
  std::ofstream out_;
  std::vector<unsigned char> buf_;
  std::size_t written_ = 0;
};

/// Low-level writer: `chunks` holds n_time * n_vars arrays shaped
/// header.rows() x header.cols(), time-major.
void write_container(const ContainerHeader& header, std::span<const GridArrayd> chunks,
                     const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Score files

struct ScoreRecord {
  std::string variable;
  int lead_hours = 0;
  std::string metric;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_inits = 0;
  bool operator==(const ScoreRecord&) const = default;
};

enum class ScoreFormat { csv, jsonl };

ScoreFormat score_format_from_string(std::string_view text);

/// Nine significant digits, shortest form ("%.9g").
std::string format_sig9(double value);

/// Sorts by (variable, lead_hours, metric) and writes CSV with header
/// variable,lead_hours,metric,value,ci_low,ci_high,n_inits or one JSON
/// object per line.
void write_scores(std::vector<ScoreRecord> records, const std::filesystem::path& path,
                  ScoreFormat format);
std::vector<ScoreRecord> read_scores(const std::filesystem::path& path, ScoreFormat format);

}  // namespace nwpkit
