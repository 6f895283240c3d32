#include "nwpkit/cli.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>

#include "CLI11.hpp"
#include "nwpkit/errors.hpp"
#include "nwpkit/padding.hpp"
#include "nwpkit/parallel.hpp"
#include "nwpkit/rollout.hpp"
#include "nwpkit/sht.hpp"
#include "nwpkit/verify.hpp"

namespace nwpkit {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr const char* kVersion = "1.0.0";

/// Bad command line or config file.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string key_of(std::string flag) {
  std::replace(flag.begin(), flag.end(), '-', '_');
  return flag;
}

// Registers every option twice: with CLI11 for the command line and as a
// JSON setter / getter for config files and the run manifest.
class Params {
 public:
  explicit Params(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* add(const std::string& flag, T& var, const std::string& help) {
    CLI::Option* opt = app_->add_option("--" + flag, var, help)->capture_default_str();
    entries_.push_back({key_of(flag), opt, [&var](const ojson& j) { var = j.get<T>(); }, [&var] { return ojson(var); }});
    return opt;
  }

  /// A file path; relative paths in a config file resolve against the config's directory.
  CLI::Option* path(const std::string& flag, std::string& var, const std::string& help) {
    CLI::Option* opt = add(flag, var, help);
    entries_.back().is_path = true;
    return opt;
  }

  CLI::Option* flag(const std::string& flag, bool& var, const std::string& help) {
    CLI::Option* opt = app_->add_flag("--" + flag, var, help);
    entries_.push_back(
        {key_of(flag), opt, [&var](const ojson& j) { var = j.get<bool>(); }, [&var] { return ojson(var); }});
    return opt;
  }

  CLI::Option* optional(const std::string& flag, std::optional<double>& var, const std::string& help) {
    CLI::Option* opt = app_->add_option_function<double>("--" + flag, [&var](const double& x) { var = x; }, help);
    entries_.push_back({key_of(flag), opt,
                        [&var](const ojson& j) {
                          if (j.is_null()) {
                            var.reset();
                          } else {
                            var = j.get<double>();
                          }
                        },
                        [&var] { return var ? ojson(*var) : ojson(nullptr); }});
    return opt;
  }

  /// Values from a config object; options given on the command line win.
  void apply(const ojson& cfg, const std::string& source) {
    if (!cfg.is_object()) throw UsageError(source + ": config must be a JSON object");
    for (const auto& [key, value] : cfg.items()) {
      const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
      if (it == entries_.end()) {
        throw UsageError(source + ": unknown config key \"" + key + "\" for " + app_->get_name());
      }
      if (it->opt->count() > 0) continue;
      try {
        if (it->is_path && value.is_string() && !value.get<std::string>().empty()) {
          const fs::path p = value.get<std::string>();
          it->set(p.is_absolute() ? p.string() : (fs::path(source).parent_path() / p).lexically_normal().string());
          continue;
        }
        it->set(value);
      } catch (const ojson::exception&) {
        throw UsageError(source + ": config key \"" + key + "\" has the wrong type");
      }
    }
  }

  ojson effective() const {
    ojson j = ojson::object();
    for (const auto& e : entries_) j[e.key] = e.get();
    return j;
  }

 private:
  struct Entry {
    std::string key;
    CLI::Option* opt;
    std::function<void(const ojson&)> set;
    std::function<ojson()> get;
    bool is_path = false;
  };
  CLI::App* app_;
  std::vector<Entry> entries_;
};

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw UsageError("missing --" + flag + " (or config key \"" + key_of(flag) + "\")");
}

// Enumerated option values are usage errors, not validation errors.
template <typename F>
auto parse_choice(const std::string& flag, F&& f) {
  try {
    return f();
  } catch (const ArgumentError& e) {
    throw UsageError("--" + flag + ": " + e.what());
  }
}

DType parse_dtype(const std::string& text) {
  if (text == "f32") return DType::f32;
  if (text == "f64") return DType::f64;
  throw UsageError("--dtype must be f32 or f64, got '" + text + "'");
}

std::vector<VariableKey> parse_keys(const std::vector<std::string>& labels, const std::string& flag) {
  std::vector<VariableKey> keys;
  for (const auto& l : labels) keys.push_back(parse_choice(flag, [&] { return parse_variable_key(l); }));
  return keys;
}

TimePoint parse_time(const std::string& text, const std::string& flag) {
  try {
    return parse_iso(text);
  } catch (const std::exception& e) {
    throw UsageError("--" + flag + ": " + e.what());
  }
}

std::string sig17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Command {
 public:
  virtual ~Command() = default;
  virtual std::string name() const = 0;
  virtual std::string summary() const = 0;
  virtual void bind(Params& p) = 0;
  /// Runs the command and returns the files written; the first one gets the manifest.
  virtual std::vector<fs::path> run() = 0;
};

// ---------------------------------------------------------------------------

class StatsCommand : public Command {
 public:
  std::string name() const override { return "stats"; }
  std::string summary() const override { return "Normalization statistics and residual coefficients"; }
  void bind(Params& p) override {
    p.path("input", input_, "Training series container");
    p.path("output", output_, "Statistics JSON file to write");
    p.add("denominator", denominator_, "Residual coefficient denominator: tendency or standardized");
    p.add("period-start", start_, "First time of the statistics period (ISO-8601 UTC); whole axis when unset");
    p.add("period-end", end_, "Last time of the statistics period (ISO-8601 UTC)");
  }
  std::vector<fs::path> run() override {
    require(input_, "input");
    require(output_, "output");
    const auto denom = parse_choice("denominator", [&] { return residual_denominator_from_string(denominator_); });
    std::optional<Period> period;
    if (!start_.empty() || !end_.empty()) {
      if (start_.empty() || end_.empty()) throw UsageError("--period-start and --period-end must be given together");
      period = Period{parse_time(start_, "period-start"), parse_time(end_, "period-end")};
    }
    const Dataset data = read_container(input_);
    compute_residual_coeff(data, compute_stats(data, period), denom).save(output_);
    return {output_};
  }

 private:
  std::string input_, output_, denominator_ = "tendency", start_, end_;
};

class NormalizeCommand : public Command {
 public:
  explicit NormalizeCommand(bool inverse) : inverse_(inverse) {}
  std::string name() const override { return inverse_ ? "denormalize" : "normalize"; }
  std::string summary() const override {
    return inverse_ ? "Map normalized fields back to physical units" : "Normalize fields with residual scaling";
  }
  void bind(Params& p) override {
    p.path("input", input_, "Input container");
    p.path("stats", stats_, "Statistics JSON written by `stats`");
    p.path("output", output_, "Output container");
    p.add("dtype", dtype_, "Output element type: f32 or f64");
  }
  std::vector<fs::path> run() override {
    require(input_, "input");
    require(stats_, "stats");
    require(output_, "output");
    const DType dtype = parse_dtype(dtype_);
    const auto stats = NormStats::load(stats_);
    const Dataset data = read_container(input_);
    write_container(inverse_ ? denormalize(data, stats) : normalize(data, stats), output_, dtype);
    return {output_};
  }

 private:
  bool inverse_;
  std::string input_, stats_, output_, dtype_ = "f64";
};

class ClimatologyCommand : public Command {
 public:
  std::string name() const override { return "climatology"; }
  std::string summary() const override { return "Day-of-year and hour-of-day climatology"; }
  void bind(Params& p) override {
    p.path("input", input_, "Multi-year series container");
    p.path("output", output_, "Climatology container");
    p.add("window-days", spec_.window_days, "Width of the circular day window");
    p.add("gaussian-std-days", spec_.gaussian_std_days, "Standard deviation of the Gaussian day weights; 0 keeps only the same day");
    p.add("dtype", dtype_, "Output element type: f32 or f64");
  }
  std::vector<fs::path> run() override {
    require(input_, "input");
    require(output_, "output");
    const DType dtype = parse_dtype(dtype_);
    write_container(compute_climatology(read_container(input_), spec_).to_dataset(), output_, dtype);
    return {output_};
  }

 private:
  std::string input_, output_, dtype_ = "f64";
  ClimatologySpec spec_;
};

class SolarCommand : public Command {
 public:
  std::string name() const override { return "solar"; }
  std::string summary() const override { return "Accumulated top-of-atmosphere solar forcing"; }
  void bind(Params& p) override {
    p.path("output", output_, "Forcing container");
    p.add("grid", kind_, "Grid type when --like is unset: gaussian or equiangular");
    p.add("n-lat", n_lat_, "Latitude count when --like is unset");
    p.add("n-lon", n_lon_, "Longitude count when --like is unset");
    p.add("lon-origin", lon_origin_, "First longitude in degrees when --like is unset");
    p.path("like", like_, "Take the grid from this container");
    p.add("start", start_, "End of the first accumulation window (ISO-8601 UTC)");
    p.add("step-hours", step_hours_, "Accumulation window length in hours");
    p.add("windows", windows_, "Number of consecutive windows");
    p.path("gsc-table", gsc_table_, "CSV of year,value solar constants in W m-2; 1361 when unset");
    p.add("dtype", dtype_, "Output element type: f32 or f64");
  }
  std::vector<fs::path> run() override {
    require(output_, "output");
    require(start_, "start");
    const DType dtype = parse_dtype(dtype_);
    if (step_hours_ < 1) throw UsageError("--step-hours must be positive");
    if (windows_ < 1) throw UsageError("--windows must be positive");
    std::shared_ptr<const GridSpec> grid;
    if (!like_.empty()) {
      grid = ContainerReader(like_).header().grid;
    } else {
      const GridKind kind = parse_choice("grid", [&] { return grid_kind_from_string(kind_); });
      grid = std::make_shared<const GridSpec>(kind == GridKind::gaussian
                                                  ? GridSpec::gaussian(n_lat_, n_lon_, lon_origin_)
                                                  : GridSpec::equiangular(n_lat_, n_lon_, lon_origin_));
    }
    SolarConfig cfg;
    if (!gsc_table_.empty()) cfg.gsc_table = read_gsc_table(gsc_table_);
    cfg.validate();
    const auto data = solar_forcing(parse_time(start_, "start"), std::chrono::hours{step_hours_},
                                    static_cast<std::size_t>(windows_), grid, cfg);
    write_container(data, output_, dtype);
    return {output_};
  }

 private:
  std::string output_, kind_ = "gaussian", like_, start_, gsc_table_, dtype_ = "f64";
  Index n_lat_ = 64, n_lon_ = 128;
  double lon_origin_ = 0.0;
  int step_hours_ = 6, windows_ = 1;
};

class PadCommand : public Command {
 public:
  std::string name() const override { return "pad"; }
  std::string summary() const override { return "Spherical boundary padding of every field, or its inverse"; }
  void bind(Params& p) override {
    p.path("input", input_, "Input container");
    p.path("output", output_, "Output container");
    p.add("pad-ns", pad_ns_, "Rows added beyond each pole");
    p.add("pad-ew", pad_ew_, "Columns added on each side");
    p.add("mode", mode_, "Polar padding: rotate_reflect or reflect_only");
    p.flag("inverse", inverse_, "Strip the padding recorded in a padded container");
    p.add("dtype", dtype_, "Output element type: f32 or f64");
  }
  std::vector<fs::path> run() override {
    require(input_, "input");
    require(output_, "output");
    const DType dtype = parse_dtype(dtype_);
    const ContainerReader reader(input_);
    ContainerHeader h = reader.header();
    const std::size_t nt = h.time_axis.size(), nv = h.variables.size();
    PadSpec spec;
    if (inverse_) {
      if (!h.padding) throw DataError(input_ + " is not padded");
      spec = PadSpec{h.padding->pad_ns, h.padding->pad_ew, pad_mode_from_string(h.padding->mode)};
      h.padding.reset();
    } else {
      if (h.padding) throw DataError(input_ + " is already padded");
      spec = PadSpec{pad_ns_, pad_ew_, parse_choice("mode", [&] { return pad_mode_from_string(mode_); })};
      spec.validate(h.grid->n_lat(), h.grid->n_lon());
      h.padding = PaddingInfo{spec.pad_ns, spec.pad_ew, std::string(to_string(spec.mode))};
    }
    h.dtype = dtype;
    ContainerWriter writer(h, output_);
    for (std::size_t t = 0; t < nt; ++t) {
      for (std::size_t v = 0; v < nv; ++v) {
        const GridArrayd chunk = reader.read_chunk(t, v);
        writer.append(inverse_ ? unpad(chunk, spec) : pad(chunk, spec));
      }
    }
    writer.finish();
    return {output_};
  }

 private:
  std::string input_, output_, mode_ = "rotate_reflect", dtype_ = "f64";
  Index pad_ns_ = 1, pad_ew_ = 1;
  bool inverse_ = false;
};

// Shared filter parameters of `filter` and `rollout`.
struct FilterParams {
  double nu_dt = 0.0;
  int diffusion_steps = 1;
  double start_lat = 60.0;
  std::optional<double> reference_lat;
  double clamp_floor = 1e-8;
  std::vector<std::string> clamp_variables{"Q", "Q500"};

  void bind(Params& p) {
    p.add("nu-dt", nu_dt, "Diffusion coefficient nu*dt/a^2 per step");
    p.add("diffusion-steps", diffusion_steps, "Explicit diffusion steps per application");
    p.add("start-lat", start_lat, "Pole filter: rows poleward of this latitude are filtered");
    p.optional("reference-lat", reference_lat, "Pole filter: latitude where the cutoff is the Nyquist wavenumber");
    p.add("clamp-floor", clamp_floor, "Lower bound applied by clamp_nonnegative");
    p.add("clamp-variables", clamp_variables, "Variable names clamped by clamp_nonnegative; empty means all");
  }

  Postprocess make(const std::vector<std::string>& steps, const std::string& flag) const {
    Postprocess pp;
    for (const auto& s : steps) pp.pipeline.push_back(parse_choice(flag, [&] { return post_op_from_string(s); }));
    pp.clamp = ClampSpec{clamp_floor, clamp_variables};
    pp.diffusion = DiffusionSpec{nu_dt, diffusion_steps};
    pp.pole = PoleFilterSpec{start_lat, reference_lat};
    for (const PostOp op : pp.pipeline) {
      if (op == PostOp::pole_filter) pp.pole.validate();
    }
    return pp;
  }
};

class FilterCommand : public Command {
 public:
  std::string name() const override { return "filter"; }
  std::string summary() const override { return "Apply clamp, diffusion and pole filter steps to every field"; }
  void bind(Params& p) override {
    p.path("input", input_, "Input container");
    p.path("output", output_, "Output container");
    p.add("steps", steps_, "Ordered steps: clamp_nonnegative, laplacian_diffuse, pole_filter");
    filter_.bind(p);
    p.add("dtype", dtype_, "Output element type: f32 or f64");
  }
  std::vector<fs::path> run() override {
    require(input_, "input");
    require(output_, "output");
    if (steps_.empty()) throw UsageError("missing --steps (or config key \"steps\")");
    const DType dtype = parse_dtype(dtype_);
    const Postprocess pp = filter_.make(steps_, "steps");
    const Dataset data = read_container(input_);
    std::vector<std::optional<Field>> out(data.fields().size());
    parallel_for(out.size(), [&](std::size_t i) { out[i] = apply_postprocessing(data.fields()[i], pp); });
    std::vector<Field> fields;
    for (auto& f : out) fields.push_back(std::move(*f));
    Dataset result(data.grid_ptr(), data.variables(), data.times(), std::move(fields), data.init_times());
    result.attributes() = data.attributes();
    write_container(result, output_, dtype);
    return {output_};
  }

 private:
  std::string input_, output_, dtype_ = "f64";
  std::vector<std::string> steps_;
  FilterParams filter_;
};

class SpectrumCommand : public Command {
 public:
  std::string name() const override { return "spectrum"; }
  std::string summary() const override { return "Zonal wavenumber power spectra averaged per lead"; }
  void bind(Params& p) override {
    p.path("input", input_, "Input container on a Gaussian grid");
    p.path("output", output_, "CSV with columns variable,lead_hours,m,power");
    p.add("kind", kind_, "zonal (per variable), kinetic (from --u/--v) or theta (from --temperature)");
    p.add("variables", variables_, "Variables for zonal spectra; all when empty");
    p.add("u", u_, "Zonal wind variable for kinetic spectra, e.g. U@p500");
    p.add("v", v_, "Meridional wind variable for kinetic spectra");
    p.add("temperature", temperature_, "Temperature variable on a pressure level for theta spectra");
    p.add("l-max", l_max_, "Truncation degree; the largest the grid allows when negative");
  }
  std::vector<fs::path> run() override {
    require(input_, "input");
    require(output_, "output");
    if (kind_ != "zonal" && kind_ != "kinetic" && kind_ != "theta") {
      throw UsageError("--kind must be zonal, kinetic or theta, got '" + kind_ + "'");
    }
    const Dataset data = read_container(input_);
    const int l_max = l_max_ < 0 ? max_degree(data.grid()) : l_max_;
    auto index_of = [&](const std::string& label, const std::string& flag) {
      require(label, flag);
      const auto key = parse_choice(flag, [&] { return parse_variable_key(label); });
      const auto idx = data.variable_index(key);
      if (!idx) throw DataError(input_ + " has no variable " + key.label());
      return *idx;
    };
    std::vector<std::size_t> zonal_vars;
    std::size_t iu = 0, iv = 0, it = 0;
    double p_hpa = 0.0;
    if (kind_ == "zonal") {
      if (variables_.empty()) {
        for (std::size_t v = 0; v < data.n_vars(); ++v) zonal_vars.push_back(v);
      } else {
        for (const auto& l : variables_) zonal_vars.push_back(index_of(l, "variables"));
      }
    } else if (kind_ == "kinetic") {
      iu = index_of(u_, "u");
      iv = index_of(v_, "v");
    } else {
      it = index_of(temperature_, "temperature");
      const auto p = pressure_hpa(data.variables()[it].key.level);
      if (!p) throw UsageError("--temperature must be on a pressure level, got " + data.variables()[it].key.label());
      p_hpa = *p;
    }

    std::vector<std::vector<SpectrumResult>> per_time(data.n_times());
    parallel_for(data.n_times(), [&](std::size_t t) {
      std::optional<long> lead;
      if (!data.init_times().empty()) lead = (data.times()[t] - data.init_times()[t]).count() / 3600;
      auto& rows = per_time[t];
      if (kind_ == "zonal") {
        for (const std::size_t v : zonal_vars) rows.push_back(zonal_power_spectrum(data.field(t, v), l_max));
      } else if (kind_ == "kinetic") {
        rows.push_back(kinetic_energy_spectrum(data.field(t, iu), data.field(t, iv), l_max));
      } else {
        rows.push_back(potential_temperature_energy_spectrum(data.field(t, it), p_hpa, l_max));
      }
      for (auto& r : rows) r.lead_hours = lead;
    });

    // Mean spectrum per (variable, lead); time order fixes the summation order.
    std::map<std::pair<std::string, std::optional<long>>, std::pair<Eigen::ArrayXd, int>> groups;
    for (const auto& rows : per_time) {
      for (const auto& r : rows) {
        auto [pos, fresh] = groups.try_emplace({r.variable, r.lead_hours}, r.power, 1);
        if (!fresh) {
          pos->second.first += r.power;
          ++pos->second.second;
        }
      }
    }
    std::ofstream out(output_, std::ios::trunc);
    if (!out) throw DataError("cannot write " + output_);
    out << "variable,lead_hours,m,power\n";
    for (const auto& [key, acc] : groups) {
      const std::string lead = key.second ? std::to_string(*key.second) : "";
      for (Index m = 0; m < acc.first.size(); ++m) {
        out << key.first << ',' << lead << ',' << m << ',' << sig17(acc.first[m] / acc.second) << '\n';
      }
    }
    if (!out) throw DataError("write failed for " + output_);
    return {output_};
  }

 private:
  std::string input_, output_, kind_ = "zonal", u_, v_, temperature_;
  std::vector<std::string> variables_;
  int l_max_ = -1;
};

class VerifyCommand : public Command {
 public:
  std::string name() const override { return "verify"; }
  std::string summary() const override { return "Latitude-weighted RMSE and ACC with bootstrap intervals"; }
  void bind(Params& p) override {
    p.path("forecasts", forecasts_, "Forecast container with init_times");
    p.path("targets", targets_, "Verifying analysis container");
    p.path("climatology", climatology_, "Climatology container; enables ACC");
    p.path("output", output_, "Score file to write");
    p.add("format", format_, "csv or jsonl; inferred from the output extension when empty");
    p.add("resamples", options_.bootstrap.resamples, "Bootstrap resamples");
    p.add("seed", options_.bootstrap.seed, "Bootstrap seed");
    p.add("ci-low", options_.bootstrap.lower_percentile, "Lower confidence percentile");
    p.add("ci-high", options_.bootstrap.upper_percentile, "Upper confidence percentile");
    p.flag("skill-relation", options_.skill_relation, "Also report skill relation residuals (needs --climatology)");
    p.add("variables", variables_, "Variables to score, e.g. Z500@sfc; all when empty");
    p.add("leads", options_.leads, "Lead times in hours to score; all when empty");
  }
  std::vector<fs::path> run() override {
    require(forecasts_, "forecasts");
    require(targets_, "targets");
    require(output_, "output");
    std::string fmt = format_;
    if (fmt.empty()) fmt = fs::path(output_).extension() == ".jsonl" ? "jsonl" : "csv";
    const ScoreFormat format = parse_choice("format", [&] { return score_format_from_string(fmt); });
    options_.variables = parse_keys(variables_, "variables");
    std::optional<Climatology> clim;
    if (!climatology_.empty()) clim = Climatology::from_dataset(read_container(climatology_));
    write_scores(verify_files(forecasts_, targets_, clim ? &*clim : nullptr, options_), output_, format);
    return {output_};
  }

 private:
  std::string forecasts_, targets_, climatology_, output_, format_;
  std::vector<std::string> variables_;
  VerifyOptions options_;
};

class CorrelateCommand : public Command {
 public:
  std::string name() const override { return "correlate"; }
  std::string summary() const override { return "Time-mean cross-variable spatial correlation matrices"; }
  void bind(Params& p) override {
    p.path("input", input_, "Input container");
    p.path("output", output_, "Square CSV matrix to write");
    p.add("variables", variables_, "Variables to correlate; all when empty");
    p.flag("weighted", weighted_, "Use latitude weights");
    p.path("reference", reference_, "Reference container for a difference matrix");
    p.path("difference", difference_, "CSV for input minus reference (needs --reference)");
  }
  std::vector<fs::path> run() override {
    require(input_, "input");
    require(output_, "output");
    if (!reference_.empty()) require(difference_, "difference");
    if (reference_.empty() && !difference_.empty()) throw UsageError("--difference needs --reference");
    const auto keys = parse_keys(variables_, "variables");
    const auto mean = mean_matrix(input_, keys);
    mean.write_csv(output_);
    if (reference_.empty()) return {output_};
    correlation_difference(mean, mean_matrix(reference_, keys)).write_csv(difference_);
    return {output_, difference_};
  }

 private:
  CorrelationMatrix mean_matrix(const std::string& path, const std::vector<VariableKey>& keys) const {
    const Dataset data = read_container(path);
    std::vector<std::size_t> vars;
    if (keys.empty()) {
      for (std::size_t v = 0; v < data.n_vars(); ++v) vars.push_back(v);
    } else {
      for (const auto& k : keys) {
        const auto idx = data.variable_index(k);
        if (!idx) throw DataError(path + " has no variable " + k.label());
        vars.push_back(*idx);
      }
    }
    if (data.n_times() == 0) throw DataError(path + " holds no times");
    std::vector<CorrelationMatrix> per_time(data.n_times());
    parallel_for(data.n_times(), [&](std::size_t t) {
      std::vector<Field> fields;
      for (const std::size_t v : vars) fields.push_back(data.field(t, v));
      per_time[t] = spatial_correlation(fields, weighted_);
    });
    return average(per_time);
  }

  std::string input_, output_, reference_, difference_;
  std::vector<std::string> variables_;
  bool weighted_ = false;
};

class RolloutCommand : public Command {
 public:
  std::string name() const override { return "rollout"; }
  std::string summary() const override { return "Baseline or external autoregressive forecasts"; }
  void bind(Params& p) override {
    p.path("initial", initial_, "Container with the initial states");
    p.path("output", output_, "Forecast container to write");
    p.add("forecaster", forecaster_, "persistence, climatology or external");
    p.add("command", command_, "External forecaster command; called as <command> --in F --out F --step-hours N");
    p.path("climatology", climatology_, "Climatology container for the climatology forecaster");
    p.add("init-times", init_times_, "Initialization times (ISO-8601 UTC)");
    p.add("init-start", init_start_, "First initialization when --init-times is empty");
    p.add("init-end", init_end_, "Last initialization when --init-times is empty");
    p.add("init-interval-hours", init_interval_, "Spacing of generated initializations");
    p.add("step-hours", plan_.step_hours, "Model step: 1 or 6");
    p.add("max-lead-hours", plan_.max_lead_hours, "Longest lead; a multiple of the step");
    p.add("postprocess", postprocess_, "Steps applied to external outputs: clamp_nonnegative, laplacian_diffuse, pole_filter");
    filter_.bind(p);
    p.flag("solar-forcing", solar_forcing_, "Pass I_s@sfc accumulated over each step to the external forecaster");
    p.path("gsc-table", gsc_table_, "CSV of year,value solar constants for --solar-forcing");
    p.path("work-dir", work_dir_, "Directory for state files; a temporary directory when empty");
    p.flag("keep-files", keep_files_, "Keep state files in --work-dir");
    p.add("dtype", dtype_, "Output element type: f32 or f64");
  }
  std::vector<fs::path> run() override {
    require(initial_, "initial");
    require(output_, "output");
    const DType dtype = parse_dtype(dtype_);
    plan_.forecaster = parse_choice("forecaster", [&] { return forecaster_from_string(forecaster_); });
    plan_.command = command_;
    if (init_interval_ < 1) throw UsageError("--init-interval-hours must be positive");
    const Dataset initial = read_container(initial_);
    plan_.init_times = init_times(initial);
    RolloutOptions options;
    options.postprocess = filter_.make(postprocess_, "postprocess");
    if (solar_forcing_) {
      SolarConfig cfg;
      if (!gsc_table_.empty()) cfg.gsc_table = read_gsc_table(gsc_table_);
      cfg.validate();
      options.forcing = cfg;
    }
    options.work_dir = work_dir_;
    options.keep_files = keep_files_;
    std::optional<Climatology> clim;
    if (!climatology_.empty()) clim = Climatology::from_dataset(read_container(climatology_));
    run_rollout_to_file(plan_, initial, clim ? &*clim : nullptr, options, output_, dtype);
    return {output_};
  }

 private:
  // Explicit list, else a start/end range, else every initial time whose
  // hour of day is a multiple of the interval.
  std::vector<TimePoint> init_times(const Dataset& initial) const {
    std::vector<TimePoint> out;
    const std::chrono::hours interval{init_interval_};
    if (!init_times_.empty()) {
      for (const auto& s : init_times_) out.push_back(parse_time(s, "init-times"));
    } else if (!init_start_.empty() || !init_end_.empty()) {
      if (init_start_.empty() || init_end_.empty()) throw UsageError("--init-start and --init-end must be given together");
      const TimePoint end = parse_time(init_end_, "init-end");
      for (TimePoint t = parse_time(init_start_, "init-start"); t <= end; t += interval) out.push_back(t);
    } else {
      for (const TimePoint t : initial.times()) {
        const auto sod = (t - std::chrono::floor<std::chrono::days>(t)).count();
        if (sod % (3600L * init_interval_) == 0) out.push_back(t);
      }
    }
    if (out.empty()) throw UsageError("no initialization times selected");
    return out;
  }

  std::string initial_, output_, forecaster_ = "persistence", command_, climatology_, init_start_, init_end_,
      gsc_table_, work_dir_, dtype_ = "f64";
  std::vector<std::string> init_times_, postprocess_;
  int init_interval_ = 12;
  RolloutPlan plan_;
  FilterParams filter_;
  bool solar_forcing_ = false, keep_files_ = false;
};

// ---------------------------------------------------------------------------

std::vector<std::unique_ptr<Command>> make_commands() {
  std::vector<std::unique_ptr<Command>> c;
  c.push_back(std::make_unique<StatsCommand>());
  c.push_back(std::make_unique<NormalizeCommand>(false));
  c.push_back(std::make_unique<NormalizeCommand>(true));
  c.push_back(std::make_unique<ClimatologyCommand>());
  c.push_back(std::make_unique<SolarCommand>());
  c.push_back(std::make_unique<PadCommand>());
  c.push_back(std::make_unique<FilterCommand>());
  c.push_back(std::make_unique<SpectrumCommand>());
  c.push_back(std::make_unique<VerifyCommand>());
  c.push_back(std::make_unique<CorrelateCommand>());
  c.push_back(std::make_unique<RolloutCommand>());
  return c;
}

ojson load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  try {
    return ojson::parse(in);
  } catch (const ojson::parse_error& e) {
    throw UsageError(path + ": invalid JSON: " + e.what());
  }
}

void write_manifest(const Command& cmd, const Params& params, const std::vector<fs::path>& outputs) {
  ojson m = ojson::object();
  m["tool"] = "nwpkit";
  m["version"] = kVersion;
  m["subcommand"] = cmd.name();
  m["config"] = params.effective();
  ojson files = ojson::array();
  for (const auto& p : outputs) files.push_back(p.string());
  m["outputs"] = files;
  const fs::path path = outputs.front().string() + ".manifest.json";
  std::ofstream out(path, std::ios::trunc);
  out << m.dump(2) << '\n';
  if (!out) throw DataError("cannot write " + path.string());
}

struct Bound {
  Command* cmd;
  CLI::App* app;
  std::unique_ptr<Params> params;
  std::string config;
  int threads = 0;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gridded weather data preprocessing, forcing, filtering, spectra, rollout and verification"};
  app.name("nwpkit");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1, 1);

  auto commands = make_commands();
  std::vector<Bound> bound;
  for (auto& c : commands) {
    Bound b{c.get(), app.add_subcommand(c->name(), c->summary()), nullptr, {}, 0};
    b.params = std::make_unique<Params>(b.app);
    bound.push_back(std::move(b));
  }
  for (auto& b : bound) {
    b.app->add_option("--config", b.config,
                      "JSON object of option values; keys are flag names with '_' for '-'; flags take precedence");
    b.params->add("threads", b.threads, "Worker threads; 0 uses every logical core");
    b.cmd->bind(*b.params);
  }

  std::vector<std::string> argv_store{"nwpkit"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    if (app.get_subcommands().empty()) err << app.help();
    return kExitUsage;
  }

  Bound& b = *std::find_if(bound.begin(), bound.end(), [](const Bound& x) { return x.app->parsed(); });
  const std::string prefix = "nwpkit " + b.cmd->name() + ": error: ";
  try {
    if (!b.config.empty()) b.params->apply(load_config(b.config), b.config);
    if (b.threads < 0) throw UsageError("--threads must be non-negative");
    WorkerPool::set_global_threads(static_cast<std::size_t>(b.threads));
    const auto outputs = b.cmd->run();
    write_manifest(*b.cmd, *b.params, outputs);
    return kExitOk;
  } catch (const UsageError& e) {
    err << prefix << e.what() << "\nRun with --help for more information.\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << prefix << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << prefix << e.what() << '\n';
    return kExitNumeric;
  } catch (const ArgumentError& e) {
    err << prefix << e.what() << '\n';
    return kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    err << prefix << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << prefix << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace nwpkit
