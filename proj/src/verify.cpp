#include "nwpkit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "nwpkit/errors.hpp"
#include "nwpkit/parallel.hpp"

namespace nwpkit {

PairScores score_pair(const GridArrayd& forecast, const GridArrayd& target, const GridArrayd* clim,
                      const Eigen::VectorXd& w, bool skill_relation) {
  PairScores s;
  s.rmse = weighted_rmse(forecast, target, w);
  if (!clim) return s;
  const GridArrayd fa = forecast - *clim;
  const GridArrayd oa = target - *clim;
  s.acc = weighted_acc(fa, oa, w);
  if (skill_relation) {
    const double mse = s.rmse * s.rmse;
    const double mse_c = weighted_mse(*clim, target, w);
    if (!(mse_c > 0.0)) throw NumericError("skill relation undefined: climatology equals the target (MSE_C = 0)");
    s.skill_residual = (1.0 - mse / mse_c) - (2.0 * s.acc - 1.0);
    s.skill_residual_printed = mse / mse_c - (2.0 * s.acc - 1.0);
  }
  return s;
}

double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ArgumentError("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw ArgumentError("percentile must be in [0, 100]");
  const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

BootstrapSummary bootstrap_mean(std::span<const double> values, const BootstrapSpec& spec) {
  if (values.empty()) throw ArgumentError("bootstrap needs at least one value");
  if (spec.resamples < 1) throw ArgumentError("bootstrap resamples must be at least 1");
  const std::size_t n = values.size();
  std::vector<double> means(static_cast<std::size_t>(spec.resamples));
  parallel_for(means.size(), [&](std::size_t r) {
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += values[pick(rng)];
    means[r] = sum / static_cast<double>(n);
  });
  BootstrapSummary out;
  double total = 0.0;
  for (double m : means) total += m;
  out.mean = total / static_cast<double>(means.size());
  std::sort(means.begin(), means.end());
  out.ci_low = percentile_sorted(means, spec.lower_percentile);
  out.ci_high = percentile_sorted(means, spec.upper_percentile);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

long lead_of(TimePoint init, TimePoint valid) {
  const auto secs = (valid - init).count();
  if (secs < 0 || secs % 3600 != 0) {
    throw DataError("forecast valid time " + format_iso(valid) + " is not a whole number of hours after init " +
                    format_iso(init));
  }
  return static_cast<long>(secs / 3600);
}

void check_grids(const GridSpec& a, const GridSpec& b, const std::string& what) {
  if (!(a == b)) throw DataError(what + ": grids differ");
}

}  // namespace

ForecastSet::ForecastSet(Dataset forecasts, Dataset targets)
    : forecasts_(std::move(forecasts)), targets_(std::move(targets)) {
  check_grids(forecasts_.grid(), targets_.grid(), "forecast set");
  if (forecasts_.init_times().size() != forecasts_.n_times()) {
    throw DataError("forecasts carry no initialization times");
  }
  for (const auto& v : forecasts_.variables()) {
    if (!targets_.variable_index(v.key)) throw DataError("target series has no variable " + v.key.label());
  }
  target_index_.resize(forecasts_.n_times());
  for (std::size_t k = 0; k < forecasts_.n_times(); ++k) {
    const auto idx = targets_.time_index(forecasts_.times()[k]);
    if (!idx) throw DataError("no target at valid time " + format_iso(forecasts_.times()[k]));
    target_index_[k] = *idx;
    lead_of(forecasts_.init_times()[k], forecasts_.times()[k]);
  }
}

long ForecastSet::lead_hours(std::size_t k) const {
  return lead_of(forecasts_.init_times()[k], forecasts_.times()[k]);
}

std::vector<long> ForecastSet::leads() const {
  std::vector<long> out;
  for (std::size_t k = 0; k < forecasts_.n_times(); ++k) out.push_back(lead_hours(k));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

enum class Metric { rmse, acc, skill };

const GridArrayd& clim_field(const Climatology& clim, const GridSpec& grid, const VariableKey& key, TimePoint t) {
  if (!(clim.grid() == grid)) throw DataError("climatology grid differs from the forecast grid");
  return clim.at(key, t);
}

MetricResult metric(const ForecastSet& set, const Climatology* clim, const VariableKey& key, long lead,
                    const BootstrapSpec& spec, Metric which) {
  const auto fv = set.forecasts().variable_index(key);
  if (!fv) throw DataError("forecasts have no variable " + key.label());
  const std::size_t tv = *set.targets().variable_index(key);
  const Eigen::VectorXd w = metric_weights(set.grid());
  std::vector<std::pair<TimePoint, double>> rows;
  for (std::size_t k = 0; k < set.forecasts().n_times(); ++k) {
    if (set.lead_hours(k) != lead) continue;
    const TimePoint valid = set.forecasts().times()[k];
    const auto& f = set.forecasts().field(k, *fv).values();
    const auto& o = set.targets().field(set.target_index(k), tv).values();
    const GridArrayd* c = clim ? &clim_field(*clim, set.grid(), key, valid) : nullptr;
    const auto s = score_pair(f, o, c, w, which == Metric::skill);
    rows.emplace_back(set.forecasts().init_times()[k],
                      which == Metric::rmse ? s.rmse : which == Metric::acc ? s.acc : s.skill_residual);
  }
  if (rows.empty()) {
    throw DataError("no matched pairs for " + key.label() + " at lead " + std::to_string(lead) + " h");
  }
  std::sort(rows.begin(), rows.end());
  MetricResult out;
  for (const auto& [t, v] : rows) {
    out.inits.push_back(t);
    out.values.push_back(v);
  }
  out.summary = bootstrap_mean(out.values, spec);
  return out;
}

}  // namespace

MetricResult rmse(const ForecastSet& set, const VariableKey& key, long lead_hours, const BootstrapSpec& spec) {
  return metric(set, nullptr, key, lead_hours, spec, Metric::rmse);
}

MetricResult acc(const ForecastSet& set, const Climatology& clim, const VariableKey& key, long lead_hours,
                 const BootstrapSpec& spec) {
  return metric(set, &clim, key, lead_hours, spec, Metric::acc);
}

MetricResult skill_relation_check(const ForecastSet& set, const Climatology& clim, const VariableKey& key,
                                  long lead_hours, const BootstrapSpec& spec) {
  return metric(set, &clim, key, lead_hours, spec, Metric::skill);
}

// ---------------------------------------------------------------------------

ScoreCollector::ScoreCollector(VerifyOptions options, bool has_climatology)
    : options_(std::move(options)), has_clim_(has_climatology) {
  if (options_.skill_relation && !has_clim_) {
    throw ArgumentError("skill relation residuals need a climatology");
  }
}

void ScoreCollector::add(const VariableKey& key, long lead_hours, TimePoint init, const PairScores& scores) {
  entries_[{key, lead_hours}].push_back({init, scores});
}

std::vector<ScoreRecord> ScoreCollector::records() const {
  std::vector<ScoreRecord> out;
  for (const auto& [group, list] : entries_) {
    auto sorted = list;
    std::stable_sort(sorted.begin(), sorted.end(), [](const Entry& a, const Entry& b) { return a.init < b.init; });
    auto emit = [&](const std::string& name, double PairScores::*field) {
      std::vector<double> v;
      v.reserve(sorted.size());
      for (const auto& e : sorted) v.push_back(e.scores.*field);
      const auto b = bootstrap_mean(v, options_.bootstrap);
      out.push_back({group.first.label(), static_cast<int>(group.second), name, b.mean, b.ci_low, b.ci_high,
                     static_cast<int>(v.size())});
    };
    emit("rmse", &PairScores::rmse);
    if (has_clim_) emit("acc", &PairScores::acc);
    if (options_.skill_relation) {
      emit("skill_residual", &PairScores::skill_residual);
      emit("skill_residual_printed", &PairScores::skill_residual_printed);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const ScoreRecord& a, const ScoreRecord& b) {
    return std::tie(a.variable, a.lead_hours, a.metric) < std::tie(b.variable, b.lead_hours, b.metric);
  });
  return out;
}

namespace {

bool selected(const std::vector<VariableKey>& keys, const VariableKey& key) {
  return keys.empty() || std::find(keys.begin(), keys.end(), key) != keys.end();
}

bool selected(const std::vector<long>& leads, long lead) {
  return leads.empty() || std::find(leads.begin(), leads.end(), lead) != leads.end();
}

// Scores every selected (forecast time, variable) slot in parallel; the
// loader fills forecast / target arrays for slot (k, v).
template <typename Loader>
std::vector<ScoreRecord> run_verification(std::size_t n_times, const std::vector<VariableKey>& keys,
                                          const std::vector<TimePoint>& valid, const std::vector<TimePoint>& inits,
                                          const GridSpec& grid, const Climatology* clim, const VerifyOptions& options,
                                          Loader&& load) {
  if (clim) {
    if (!(clim->grid() == grid)) throw DataError("climatology grid differs from the forecast grid");
    for (const auto& k : keys) {
      if (!clim->variable_index(k)) throw DataError("climatology has no variable " + k.label());
    }
  }
  std::vector<long> leads(n_times);
  for (std::size_t k = 0; k < n_times; ++k) leads[k] = lead_of(inits[k], valid[k]);

  const Eigen::VectorXd w = metric_weights(grid);
  const std::size_t nv = keys.size();
  std::vector<std::optional<PairScores>> slots(n_times * nv);
  parallel_for(n_times, [&](std::size_t k) {
    if (!selected(options.leads, leads[k])) return;
    GridArrayd f, o;
    for (std::size_t v = 0; v < nv; ++v) {
      if (!selected(options.variables, keys[v])) continue;
      load(k, v, f, o);
      const GridArrayd* c = clim ? &clim->at(keys[v], valid[k]) : nullptr;
      slots[k * nv + v] = score_pair(f, o, c, w, options.skill_relation);
    }
  });

  ScoreCollector collector(options, clim != nullptr);
  std::size_t n_pairs = 0;
  for (std::size_t k = 0; k < n_times; ++k) {
    for (std::size_t v = 0; v < nv; ++v) {
      if (slots[k * nv + v]) {
        collector.add(keys[v], leads[k], inits[k], *slots[k * nv + v]);
        ++n_pairs;
      }
    }
  }
  if (n_pairs == 0) throw DataError("no matched forecast/target pairs for the selected variables and leads");
  return collector.records();
}

}  // namespace

std::vector<ScoreRecord> verify(const ForecastSet& set, const Climatology* clim, const VerifyOptions& options) {
  std::vector<VariableKey> keys;
  std::vector<std::size_t> tv;
  for (const auto& v : set.forecasts().variables()) {
    keys.push_back(v.key);
    tv.push_back(*set.targets().variable_index(v.key));
  }
  return run_verification(set.forecasts().n_times(), keys, set.forecasts().times(), set.forecasts().init_times(),
                          set.grid(), clim, options,
                          [&](std::size_t k, std::size_t v, GridArrayd& f, GridArrayd& o) {
                            f = set.forecasts().field(k, v).values();
                            o = set.targets().field(set.target_index(k), tv[v]).values();
                          });
}

std::vector<ScoreRecord> verify_files(const std::filesystem::path& forecasts, const std::filesystem::path& targets,
                                      const Climatology* clim, const VerifyOptions& options) {
  const ContainerReader fr(forecasts);
  const ContainerReader tr(targets);
  const auto& fh = fr.header();
  const auto& th = tr.header();
  if (fh.padding || th.padding) throw DataError("padded containers cannot be verified");
  if (!(*fh.grid == *th.grid)) {
    throw DataError(forecasts.string() + " and " + targets.string() + " are on different grids");
  }
  if (fh.init_times.size() != fh.time_axis.size()) {
    throw DataError(forecasts.string() + " has no init_times; it is not a forecast container");
  }
  std::unordered_map<std::int64_t, std::size_t> target_time;
  for (std::size_t t = 0; t < th.time_axis.size(); ++t) {
    target_time.emplace(th.time_axis[t].time_since_epoch().count(), t);
  }
  std::vector<VariableKey> keys;
  std::vector<std::size_t> tv;
  for (const auto& v : fh.variables) {
    keys.push_back(v.key);
    std::optional<std::size_t> idx;
    for (std::size_t i = 0; i < th.variables.size(); ++i) {
      if (th.variables[i].key == v.key) idx = i;
    }
    if (!idx) throw DataError(targets.string() + " has no variable " + v.key.label());
    tv.push_back(*idx);
  }
  std::vector<std::size_t> tk(fh.time_axis.size());
  for (std::size_t k = 0; k < fh.time_axis.size(); ++k) {
    const auto it = target_time.find(fh.time_axis[k].time_since_epoch().count());
    if (it == target_time.end()) {
      throw DataError(targets.string() + " has no target at valid time " + format_iso(fh.time_axis[k]));
    }
    tk[k] = it->second;
  }
  return run_verification(fh.time_axis.size(), keys, fh.time_axis, fh.init_times, *fh.grid, clim, options,
                          [&](std::size_t k, std::size_t v, GridArrayd& f, GridArrayd& o) {
                            f = fr.read_chunk(k, v);
                            o = tr.read_chunk(tk[k], tv[v]);
                          });
}

// ---------------------------------------------------------------------------

CorrelationMatrix spatial_correlation(std::span<const Field> fields, bool weighted) {
  if (fields.size() < 2) throw ArgumentError("spatial correlation needs at least two fields");
  const GridSpec& grid = fields[0].grid();
  for (const auto& f : fields) {
    if (!(f.grid() == grid)) throw DataError("spatial correlation: fields are on different grids");
  }
  const std::size_t n = fields.size();
  const Index rows = grid.n_lat(), cols = grid.n_lon();
  Eigen::ArrayXd w = weighted ? Eigen::ArrayXd(metric_weights(grid).array()) : Eigen::ArrayXd::Ones(rows);

  // Centred fields, each scaled to unit weighted norm.
  std::vector<GridArrayd> z(n);
  parallel_for(n, [&](std::size_t a) {
    const auto& x = fields[a].values();
    const double mean = (x.rowwise().sum() * w).sum() / (w.sum() * cols);
    GridArrayd c = x - mean;
    const double norm = std::sqrt((c.square().rowwise().sum() * w).sum());
    if (!(norm > 0.0) || norm <= 1e-300) {
      throw NumericError("field " + fields[a].key().label() + " has zero variance; correlation undefined");
    }
    z[a] = c / norm;
  });
  CorrelationMatrix m;
  for (const auto& f : fields) m.keys.push_back(f.key());
  m.r = Eigen::MatrixXd::Identity(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double r = std::clamp(((z[a] * z[b]).rowwise().sum() * w).sum(), -1.0, 1.0);
      m.r(static_cast<Index>(a), static_cast<Index>(b)) = r;
      m.r(static_cast<Index>(b), static_cast<Index>(a)) = r;
    }
  }
  return m;
}

CorrelationMatrix average(std::span<const CorrelationMatrix> matrices) {
  if (matrices.empty()) throw ArgumentError("average of no correlation matrices");
  CorrelationMatrix out = matrices[0];
  for (std::size_t i = 1; i < matrices.size(); ++i) {
    if (matrices[i].keys != out.keys) throw DataError("correlation matrices have different variables");
    out.r += matrices[i].r;
  }
  out.r /= static_cast<double>(matrices.size());
  out.r.diagonal().setOnes();
  return out;
}

CorrelationMatrix correlation_difference(const CorrelationMatrix& forecast, const CorrelationMatrix& reference) {
  if (forecast.keys != reference.keys) throw DataError("correlation matrices have different variables");
  CorrelationMatrix out{forecast.keys, forecast.r - reference.r};
  out.r.diagonal().setZero();
  return out;
}

void CorrelationMatrix::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& k : keys) out << ',' << k.label();
  out << '\n';
  for (std::size_t a = 0; a < keys.size(); ++a) {
    out << keys[a].label();
    for (std::size_t b = 0; b < keys.size(); ++b) out << ',' << format_sig9(r(static_cast<Index>(a), static_cast<Index>(b)));
    out << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

CorrelationMatrix CorrelationMatrix::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty correlation file");
  auto header = split(line);
  CorrelationMatrix m;
  for (std::size_t i = 1; i < header.size(); ++i) m.keys.push_back(parse_variable_key(header[i]));
  const Index n = static_cast<Index>(m.keys.size());
  m.r.resize(n, n);
  for (Index a = 0; a < n; ++a) {
    if (!std::getline(in, line)) throw DataError(path.string() + ": missing row " + std::to_string(a + 1));
    const auto cells = split(line);
    if (static_cast<Index>(cells.size()) != n + 1) {
      throw DataError(path.string() + ": row " + std::to_string(a + 1) + " has the wrong number of cells");
    }
    for (Index b = 0; b < n; ++b) m.r(a, b) = std::stod(cells[static_cast<std::size_t>(b + 1)]);
  }
  return m;
}

}  // namespace nwpkit
