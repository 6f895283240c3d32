#include "nwpkit/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nwpkit/errors.hpp"
#include "nwpkit/parallel.hpp"

namespace nwpkit {

namespace {

// Running mean / sum of squared deviations, merged pairwise (Chan et al.).
struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  template <typename Derived>
  void add(const Eigen::ArrayBase<Derived>& block) {
    const double nb = static_cast<double>(block.size());
    if (nb == 0.0) return;
    const double mb = block.mean();
    const double m2b = (block - mb).square().sum();
    const double total = n + nb;
    const double delta = mb - mean;
    mean += delta * nb / total;
    m2 += m2b + delta * delta * n * nb / total;
    n = total;
  }

  double variance() const { return n > 0.0 ? m2 / n : 0.0; }
  double stddev() const { return std::sqrt(variance()); }
};

std::vector<std::size_t> times_in(const Dataset& data, const Period& period) {
  std::vector<std::size_t> idx;
  for (std::size_t t = 0; t < data.n_times(); ++t) {
    if (period.contains(data.times()[t])) idx.push_back(t);
  }
  return idx;
}

constexpr int kDaysPerYear = 365;

}  // namespace

std::string_view to_string(ResidualDenominator d) {
  return d == ResidualDenominator::tendency ? "tendency" : "standardized";
}

ResidualDenominator residual_denominator_from_string(std::string_view text) {
  if (text == "tendency") return ResidualDenominator::tendency;
  if (text == "standardized") return ResidualDenominator::standardized;
  throw ArgumentError("unknown residual denominator '" + std::string(text) +
                      "' (tendency or standardized)");
}

const NormEntry& NormStats::at(const VariableKey& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) throw DataError("no normalization statistics for " + key.label());
  return it->second;
}

json NormStats::to_json() const {
  json j;
  j["period"] = {{"start", format_iso(period.start)}, {"end", format_iso(period.end)}};
  j["step_seconds"] = step.count();
  j["denominator"] = std::string(to_string(denominator));
  json arr = json::array();
  for (const auto& [key, e] : entries) {
    arr.push_back({{"name", key.name},
                   {"level", key.level},
                   {"mu", e.mu},
                   {"sigma", e.sigma},
                   {"xi", e.xi},
                   {"tendency_sigma", e.tendency_sigma}});
  }
  j["entries"] = std::move(arr);
  return j;
}

NormStats NormStats::from_json(const json& j) {
  try {
    NormStats s;
    s.period = {parse_iso(j.at("period").at("start").get<std::string>()),
                parse_iso(j.at("period").at("end").get<std::string>())};
    s.step = std::chrono::seconds{j.at("step_seconds").get<std::int64_t>()};
    s.denominator = residual_denominator_from_string(j.at("denominator").get<std::string>());
    for (const auto& e : j.at("entries")) {
      NormEntry entry{e.at("mu").get<double>(), e.at("sigma").get<double>(),
                      e.at("xi").get<double>(), e.at("tendency_sigma").get<double>()};
      if (!(entry.sigma > 0.0) || !(entry.xi > 0.0)) {
        throw DataError("sigma and xi must be positive");
      }
      s.entries[{e.at("name").get<std::string>(), e.at("level").get<std::string>()}] = entry;
    }
    return s;
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(std::string("malformed normalization statistics: ") + e.what());
  }
}

void NormStats::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::write, "cannot write " + path.string(), 0);
  out << to_json().dump(2) << '\n';
}

NormStats NormStats::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoError::Kind::open, "cannot open " + path.string(), 0);
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

NormStats compute_stats(const Dataset& data, std::optional<Period> period) {
  if (data.n_times() == 0) throw ArgumentError("compute_stats: dataset has no times");
  const Period p = period.value_or(
      Period{*std::min_element(data.times().begin(), data.times().end()),
             *std::max_element(data.times().begin(), data.times().end())});
  const auto idx = times_in(data, p);
  if (idx.empty()) {
    throw ArgumentError("compute_stats: no times inside " + format_iso(p.start) + " .. " +
                        format_iso(p.end));
  }
  std::chrono::seconds step{0};
  for (std::size_t k = 1; k < idx.size(); ++k) {
    const auto s = data.times()[idx[k]] - data.times()[idx[k - 1]];
    if (k == 1) step = s;
    if (s != step || s <= std::chrono::seconds{0}) {
      throw ArgumentError("compute_stats: non-uniform time step at " +
                          format_iso(data.times()[idx[k]]));
    }
  }

  std::vector<Moments> moments(data.n_vars());
  parallel_for(data.n_vars(), [&](std::size_t v) {
    for (auto t : idx) moments[v].add(data.field(t, v).values());
  });

  NormStats stats;
  stats.period = p;
  stats.step = step;
  for (std::size_t v = 0; v < data.n_vars(); ++v) {
    const auto& key = data.variables()[v].key;
    const double sigma = moments[v].stddev();
    if (!(sigma > 0.0)) {
      throw NumericError("variable " + key.label() + " has zero variance over the stats period");
    }
    stats.entries[key] = NormEntry{moments[v].mean, sigma, 1.0, 0.0};
  }
  return stats;
}

NormStats compute_residual_coeff(const Dataset& data, NormStats stats,
                                 ResidualDenominator denominator) {
  const auto idx = times_in(data, stats.period);
  if (idx.size() < 2) {
    throw ArgumentError("compute_residual_coeff: need at least 2 times in the stats period, got " +
                        std::to_string(idx.size()));
  }
  const std::size_t nv = data.n_vars();
  std::vector<double> tendency(nv), standardized(nv);
  parallel_for(nv, [&](std::size_t v) {
    const NormEntry& e = stats.at(data.variables()[v].key);
    Moments diff, level;
    GridArrayd prev = (data.field(idx[0], v).values() - e.mu) / e.sigma;
    level.add(prev);
    for (std::size_t k = 1; k < idx.size(); ++k) {
      GridArrayd cur = (data.field(idx[k], v).values() - e.mu) / e.sigma;
      diff.add(cur - prev);
      level.add(cur);
      prev = std::move(cur);
    }
    tendency[v] = diff.stddev();
    standardized[v] = level.stddev();
  });

  const auto& spread = denominator == ResidualDenominator::tendency ? tendency : standardized;
  double log_sum = 0.0;
  for (std::size_t v = 0; v < nv; ++v) {
    const auto& key = data.variables()[v].key;
    if (!(tendency[v] > 0.0)) {
      throw NumericError("variable " + key.label() + " has no temporal variation; xi undefined");
    }
    if (!(spread[v] > 0.0)) {
      throw NumericError("variable " + key.label() + " has zero spread in the xi denominator");
    }
    log_sum += std::log(spread[v]);
  }
  const double gmean = std::exp(log_sum / static_cast<double>(nv));
  for (std::size_t v = 0; v < nv; ++v) {
    NormEntry& e = stats.entries.at(data.variables()[v].key);
    e.tendency_sigma = tendency[v];
    e.xi = tendency[v] / gmean;
  }
  stats.denominator = denominator;
  return stats;
}

Field normalize(const Field& field, const NormStats& stats) {
  const NormEntry& e = stats.at(field.key());
  return field.with_values((field.values() - e.mu) / (e.xi * e.sigma));
}

Field denormalize(const Field& field, const NormStats& stats) {
  const NormEntry& e = stats.at(field.key());
  return field.with_values(field.values() * (e.xi * e.sigma) + e.mu);
}

namespace {

template <typename Fn>
Dataset map_fields(const Dataset& data, Fn&& fn) {
  std::vector<Field> out(data.fields().begin(), data.fields().end());
  parallel_for(out.size(), [&](std::size_t i) { out[i] = fn(data.fields()[i]); });
  Dataset d(data.grid_ptr(), data.variables(), data.times(), std::move(out), data.init_times());
  d.attributes() = data.attributes();
  return d;
}

}  // namespace

Dataset normalize(const Dataset& data, const NormStats& stats) {
  Dataset d = map_fields(data, [&](const Field& f) { return normalize(f, stats); });
  d.attributes()["normalized"] = true;
  return d;
}

Dataset denormalize(const Dataset& data, const NormStats& stats) {
  Dataset d = map_fields(data, [&](const Field& f) { return denormalize(f, stats); });
  d.attributes().erase("normalized");
  return d;
}

bool ClampSpec::applies_to(const VariableKey& key) const {
  return variables.empty() || std::find(variables.begin(), variables.end(), key.name) != variables.end();
}

Field clamp_nonnegative(const Field& field, const ClampSpec& spec) {
  if (!spec.applies_to(field.key())) return field;
  return field.with_values(clamp_floor(field.values(), spec.floor));
}

// ---------------------------------------------------------------------------

int circular_day_distance(int a, int b) {
  const int d = std::abs(a - b) % kDaysPerYear;
  return std::min(d, kDaysPerYear - d);
}

Climatology::Climatology(std::shared_ptr<const GridSpec> grid, std::vector<VariableInfo> variables,
                         std::vector<int> hours, ClimatologySpec spec)
    : grid_(std::move(grid)),
      variables_(std::move(variables)),
      hours_(std::move(hours)),
      spec_(spec) {
  if (!grid_) throw ArgumentError("climatology has no grid");
  std::sort(hours_.begin(), hours_.end());
  for (std::size_t i = 0; i < hours_.size(); ++i) {
    if (hours_[i] < 0 || hours_[i] > 23 || (i > 0 && hours_[i] == hours_[i - 1])) {
      throw ArgumentError("climatology hours must be distinct values in 0..23");
    }
  }
  if (spec_.window_days < 1) throw ArgumentError("climatology window must be at least 1 day");
  if (spec_.gaussian_std_days < 0.0) throw ArgumentError("climatology std must be non-negative");
  bins_.resize(variables_.size() * kDaysPerYear * hours_.size());
}

std::optional<std::size_t> Climatology::hour_index(int hour) const {
  auto it = std::find(hours_.begin(), hours_.end(), hour);
  if (it == hours_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - hours_.begin());
}

std::size_t Climatology::slot(std::size_t var, int doy, std::size_t hour_idx) const {
  return (var * kDaysPerYear + static_cast<std::size_t>(doy - 1)) * hours_.size() + hour_idx;
}

std::optional<std::size_t> Climatology::variable_index(const VariableKey& key) const {
  for (std::size_t v = 0; v < variables_.size(); ++v) {
    if (variables_[v].key == key) return v;
  }
  return std::nullopt;
}

bool Climatology::has(std::size_t var, int doy, int hour) const {
  const auto h = hour_index(hour);
  if (!h || var >= variables_.size() || doy < 1 || doy > kDaysPerYear) return false;
  return bins_[slot(var, doy, *h)].has_value();
}

const GridArrayd& Climatology::at(std::size_t var, int doy, int hour) const {
  if (!has(var, doy, hour)) {
    throw DataError("missing climatology bin for " +
                    (var < variables_.size() ? variables_[var].key.label() : std::string("?")) +
                    " day " + std::to_string(doy) + " hour " + std::to_string(hour));
  }
  return *bins_[slot(var, doy, *hour_index(hour))];
}

const GridArrayd& Climatology::at(const VariableKey& key, TimePoint valid_time) const {
  const auto v = variable_index(key);
  if (!v) throw DataError("climatology has no variable " + key.label());
  return at(*v, noleap_day_of_year(valid_time), hour_of_day(valid_time));
}

void Climatology::set(std::size_t var, int doy, int hour, GridArrayd mean) {
  const auto h = hour_index(hour);
  if (!h || var >= variables_.size() || doy < 1 || doy > kDaysPerYear) {
    throw ArgumentError("climatology bin (" + std::to_string(doy) + ", " + std::to_string(hour) +
                        ") is out of range");
  }
  if (mean.rows() != grid_->n_lat() || mean.cols() != grid_->n_lon()) {
    throw ArgumentError("climatology bin has the wrong shape");
  }
  bins_[slot(var, doy, *h)] = std::move(mean);
}

Dataset Climatology::to_dataset() const {
  std::vector<TimePoint> times;
  std::vector<Field> fields;
  const TimePoint jan1 = make_time(kClimatologyReferenceYear, 1, 1);
  for (int doy = 1; doy <= kDaysPerYear; ++doy) {
    for (int h : hours_) {
      bool any = false;
      for (std::size_t v = 0; v < variables_.size(); ++v) any = any || has(v, doy, h);
      if (!any) continue;
      const TimePoint t = jan1 + std::chrono::days{doy - 1} + std::chrono::hours{h};
      times.push_back(t);
      for (std::size_t v = 0; v < variables_.size(); ++v) {
        fields.emplace_back(grid_, at(v, doy, h), variables_[v].key, t);
      }
    }
  }
  Dataset d(grid_, variables_, std::move(times), std::move(fields));
  json hours = json::array();
  for (int h : hours_) hours.push_back(h);
  d.attributes() = {{"kind", "climatology"},
                    {"reference_year", kClimatologyReferenceYear},
                    {"hours", hours},
                    {"window_days", spec_.window_days},
                    {"gaussian_std_days", spec_.gaussian_std_days}};
  return d;
}

Climatology Climatology::from_dataset(const Dataset& data) {
  const json& a = data.attributes();
  if (!a.is_object() || a.value("kind", std::string()) != "climatology") {
    throw DataError("container is not a climatology (attributes.kind != climatology)");
  }
  ClimatologySpec spec{a.value("window_days", 61), a.value("gaussian_std_days", 10.0)};
  std::vector<int> hours;
  if (a.contains("hours")) {
    hours = a.at("hours").get<std::vector<int>>();
  } else {
    std::set<int> hs;
    for (auto t : data.times()) hs.insert(hour_of_day(t));
    hours.assign(hs.begin(), hs.end());
  }
  Climatology clim(data.grid_ptr(), data.variables(), hours, spec);
  for (std::size_t t = 0; t < data.n_times(); ++t) {
    const TimePoint vt = data.times()[t];
    if (year_of(vt) != kClimatologyReferenceYear) {
      throw DataError("climatology time " + format_iso(vt) + " is outside the reference year");
    }
    for (std::size_t v = 0; v < data.n_vars(); ++v) {
      clim.set(v, day_of_year(vt), hour_of_day(vt), data.field(t, v).values());
    }
  }
  return clim;
}

Climatology compute_climatology(const Dataset& data, const ClimatologySpec& spec) {
  if (data.n_times() == 0) throw ArgumentError("compute_climatology: dataset has no times");
  std::set<int> hour_set;
  for (auto t : data.times()) hour_set.insert(hour_of_day(t));
  std::vector<int> hours(hour_set.begin(), hour_set.end());
  Climatology clim(data.grid_ptr(), data.variables(), hours, spec);

  const int half = spec.window_days / 2;
  const double s = spec.gaussian_std_days;
  std::vector<double> weight(static_cast<std::size_t>(half) + 1);
  for (int d = 0; d <= half; ++d) {
    weight[d] = s > 0.0 ? std::exp(-static_cast<double>(d) * d / (2.0 * s * s)) : (d == 0 ? 1.0 : 0.0);
  }

  const std::size_t nh = hours.size();
  const Index rows = data.grid().n_lat(), cols = data.grid().n_lon();
  auto hour_idx = [&](int h) {
    return static_cast<std::size_t>(std::find(hours.begin(), hours.end(), h) - hours.begin());
  };

  // Per-(day, hour) sample counts are shared by all variables.
  std::vector<double> count(kDaysPerYear * nh, 0.0);
  for (auto t : data.times()) count[(noleap_day_of_year(t) - 1) * nh + hour_idx(hour_of_day(t))] += 1.0;

  std::vector<std::string> empty_bins;
  for (int d = 1; d <= kDaysPerYear; ++d) {
    for (std::size_t h = 0; h < nh; ++h) {
      double wsum = 0.0;
      for (int dd = -half; dd <= half; ++dd) {
        const int src = ((d - 1 + dd) % kDaysPerYear + kDaysPerYear) % kDaysPerYear;
        wsum += weight[std::abs(dd)] * count[src * nh + h];
      }
      if (!(wsum > 0.0)) {
        empty_bins.push_back("(" + std::to_string(d) + ", " + std::to_string(hours[h]) + ")");
      }
    }
  }
  if (!empty_bins.empty()) {
    std::ostringstream os;
    os << "climatology windows without samples (day, hour): ";
    for (std::size_t i = 0; i < empty_bins.size() && i < 20; ++i) os << (i ? " " : "") << empty_bins[i];
    if (empty_bins.size() > 20) os << " ... (" << empty_bins.size() << " total)";
    throw DataError(os.str());
  }

  parallel_for(data.n_vars(), [&](std::size_t v) {
    std::vector<GridArrayd> sums(kDaysPerYear * nh, GridArrayd::Zero(rows, cols));
    for (std::size_t t = 0; t < data.n_times(); ++t) {
      const TimePoint vt = data.times()[t];
      sums[(noleap_day_of_year(vt) - 1) * nh + hour_idx(hour_of_day(vt))] += data.field(t, v).values();
    }
    for (int d = 1; d <= kDaysPerYear; ++d) {
      for (std::size_t h = 0; h < nh; ++h) {
        GridArrayd acc = GridArrayd::Zero(rows, cols);
        double wsum = 0.0;
        for (int dd = -half; dd <= half; ++dd) {
          const double w = weight[std::abs(dd)];
          const int src = ((d - 1 + dd) % kDaysPerYear + kDaysPerYear) % kDaysPerYear;
          const double n = count[src * nh + h];
          if (w == 0.0 || n == 0.0) continue;
          acc += w * sums[src * nh + h];
          wsum += w * n;
        }
        clim.set(v, d, hours[h], acc / wsum);
      }
    }
  });
  return clim;
}

}  // namespace nwpkit
