#include "nwpkit/rollout.hpp"

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>

#include "nwpkit/errors.hpp"
#include "nwpkit/parallel.hpp"

extern char** environ;

namespace nwpkit {

namespace fs = std::filesystem;
using std::chrono::hours;

std::string to_string(ForecasterKind kind) {
  switch (kind) {
    case ForecasterKind::persistence: return "persistence";
    case ForecasterKind::climatology: return "climatology";
    case ForecasterKind::external: return "external";
  }
  return "?";
}

ForecasterKind forecaster_from_string(std::string_view text) {
  if (text == "persistence") return ForecasterKind::persistence;
  if (text == "climatology") return ForecasterKind::climatology;
  if (text == "external") return ForecasterKind::external;
  throw ArgumentError("unknown forecaster '" + std::string(text) + "' (expected persistence, climatology or external)");
}

std::string to_string(PostOp op) {
  switch (op) {
    case PostOp::clamp_nonnegative: return "clamp_nonnegative";
    case PostOp::laplacian_diffuse: return "laplacian_diffuse";
    case PostOp::pole_filter: return "pole_filter";
  }
  return "?";
}

PostOp post_op_from_string(std::string_view text) {
  if (text == "clamp_nonnegative" || text == "clamp") return PostOp::clamp_nonnegative;
  if (text == "laplacian_diffuse" || text == "diffuse") return PostOp::laplacian_diffuse;
  if (text == "pole_filter") return PostOp::pole_filter;
  throw ArgumentError("unknown postprocessing step '" + std::string(text) +
                      "' (expected clamp_nonnegative, laplacian_diffuse or pole_filter)");
}

void RolloutPlan::validate() const {
  if (step_hours != 1 && step_hours != 6) {
    throw ArgumentError("rollout step_hours must be 1 or 6, got " + std::to_string(step_hours));
  }
  if (max_lead_hours < 0 || max_lead_hours % step_hours != 0) {
    throw ArgumentError("rollout max_lead_hours " + std::to_string(max_lead_hours) +
                        " is not a non-negative multiple of step_hours " + std::to_string(step_hours));
  }
  if (init_times.empty()) throw ArgumentError("rollout has no init_times");
  if (forecaster == ForecasterKind::external && command.empty()) {
    throw ArgumentError("external forecaster needs a command");
  }
}

Field apply_postprocessing(const Field& field, const Postprocess& pp) {
  Field f = field;
  for (const PostOp op : pp.pipeline) {
    switch (op) {
      case PostOp::clamp_nonnegative: f = clamp_nonnegative(f, pp.clamp); break;
      case PostOp::laplacian_diffuse: f = laplacian_diffuse(f, pp.diffusion); break;
      case PostOp::pole_filter: f = pole_filter(f, pp.pole); break;
    }
  }
  return f;
}

Dataset apply_postprocessing(const Dataset& state, const Postprocess& pp) {
  if (state.n_times() != 1) throw ArgumentError("postprocessing expects a single-time state");
  if (pp.pipeline.empty()) return state;
  std::vector<Field> fields;
  fields.reserve(state.n_vars());
  for (const auto& f : state.fields()) fields.push_back(apply_postprocessing(f, pp));
  Dataset out(state.grid_ptr(), state.variables(), state.times(), std::move(fields), state.init_times());
  out.attributes() = state.attributes();
  return out;
}

std::string shell_quote(std::string_view text) {
  std::string out = "'";
  for (char c : text) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += '\'';
  return out;
}

int run_shell(const std::string& command) {
  std::string sh = "sh", dash_c = "-c", cmd = command;
  char* argv[] = {sh.data(), dash_c.data(), cmd.data(), nullptr};
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, "/bin/sh", nullptr, nullptr, argv, environ);
  if (rc != 0) throw DataError("cannot start /bin/sh for '" + command + "': " + std::strerror(rc));
  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw DataError("waitpid failed for '" + command + "': " + std::strerror(errno));
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

namespace {

// Fields of one rollout, lead-major: values[lead * n_vars + v].
using Rollout = std::vector<GridArrayd>;

class ScratchDir {
 public:
  ScratchDir(const fs::path& requested, bool keep) : keep_(keep) {
    if (requested.empty()) {
      static std::atomic<unsigned> counter{0};
      path_ = fs::temp_directory_path() /
              ("nwpkit-rollout-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
      owned_ = true;
    } else {
      path_ = requested;
    }
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    if (owned_ && !keep_) {
      std::error_code ec;
      fs::remove_all(path_, ec);
    }
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  bool keep_;
  bool owned_ = false;
};

class Runner {
 public:
  Runner(const RolloutPlan& plan, const Dataset& initial, const Climatology* clim, const RolloutOptions& options,
         const fs::path& scratch)
      : plan_(plan), initial_(initial), clim_(clim), options_(options), scratch_(scratch) {
    plan_.validate();
    if (plan_.forecaster == ForecasterKind::climatology) {
      if (!clim_) throw ArgumentError("the climatology forecaster needs a climatology");
      if (!(clim_->grid() == initial_.grid())) throw DataError("climatology grid differs from the initial states");
      for (const auto& v : initial_.variables()) {
        if (!clim_->variable_index(v.key)) throw DataError("climatology has no variable " + v.key.label());
      }
    }
    if (options_.forcing) {
      const VariableKey is{"I_s", "sfc"};
      if (initial_.variable_index(is)) {
        throw ArgumentError("initial states already contain " + is.label() + "; cannot add solar forcing");
      }
    }
    for (const TimePoint t : plan_.init_times) {
      if (!initial_.time_index(t)) throw DataError("no initial state at " + format_iso(t));
    }
  }

  std::vector<TimePoint> valid_times(TimePoint init) const {
    std::vector<TimePoint> out;
    for (std::size_t k = 0; k < plan_.n_leads(); ++k) out.push_back(init + hours{plan_.step_hours * static_cast<long>(k)});
    return out;
  }

  Rollout run(std::size_t init_index) const {
    const TimePoint init = plan_.init_times[init_index];
    const std::size_t t0 = *initial_.time_index(init);
    const std::size_t nv = initial_.n_vars();
    Rollout out;
    out.reserve(plan_.n_leads() * nv);
    switch (plan_.forecaster) {
      case ForecasterKind::persistence:
        for (std::size_t k = 0; k < plan_.n_leads(); ++k) {
          for (std::size_t v = 0; v < nv; ++v) out.push_back(initial_.field(t0, v).values());
        }
        break;
      case ForecasterKind::climatology:
        for (const TimePoint t : valid_times(init)) {
          for (const auto& var : initial_.variables()) out.push_back(clim_->at(var.key, t));
        }
        break;
      case ForecasterKind::external:
        run_external(init_index, t0, out);
        break;
    }
    return out;
  }

 private:
  void run_external(std::size_t init_index, std::size_t t0, Rollout& out) const {
    const std::size_t nv = initial_.n_vars();
    const auto grid = initial_.grid_ptr();
    std::vector<Field> state;
    for (std::size_t v = 0; v < nv; ++v) {
      state.push_back(initial_.field(t0, v));
      out.push_back(state.back().values());
    }
    TimePoint t = plan_.init_times[init_index];
    const fs::path dir = scratch_ / ("init-" + std::to_string(init_index));
    fs::create_directories(dir);
    const hours step{plan_.step_hours};
    for (std::size_t k = 1; k < plan_.n_leads(); ++k) {
      const fs::path in = dir / ("step-" + std::to_string(k) + "-in.gvf");
      const fs::path next = dir / ("step-" + std::to_string(k) + "-out.gvf");
      write_state(state, t, in);
      std::error_code ec;
      fs::remove(next, ec);
      const std::string cmd = plan_.command + " --in " + shell_quote(in.string()) + " --out " +
                              shell_quote(next.string()) + " --step-hours " + std::to_string(plan_.step_hours);
      const int status = run_shell(cmd);
      if (status != 0) {
        throw DataError("external forecaster exited with status " + std::to_string(status) + " at step " +
                        std::to_string(k) + " of init " + format_iso(plan_.init_times[init_index]) + ": " + cmd);
      }
      t += step;
      Dataset returned = read_step(next, *grid, t);
      if (!options_.postprocess.pipeline.empty()) returned = apply_postprocessing(returned, options_.postprocess);
      for (std::size_t v = 0; v < nv; ++v) {
        state[v] = returned.field(0, v);
        out.push_back(state[v].values());
      }
      if (!options_.keep_files) {
        fs::remove(in, ec);
        fs::remove(next, ec);
      }
    }
    if (!options_.keep_files) {
      std::error_code ec;
      fs::remove(dir, ec);
    }
  }

  void write_state(const std::vector<Field>& state, TimePoint t, const fs::path& path) const {
    ContainerHeader h;
    h.grid = initial_.grid_ptr();
    h.variables = initial_.variables();
    h.time_axis = {t};
    h.dtype = DType::f64;
    h.attributes = {{"step_hours", plan_.step_hours}};
    std::vector<GridArrayd> chunks;
    for (const auto& f : state) chunks.push_back(f.values());
    if (options_.forcing) {
      const TimePoint end = t + hours{plan_.step_hours};
      h.variables.push_back({{"I_s", "sfc"}, "J m-2"});
      h.attributes["forcing_window_end"] = format_iso(end);
      chunks.push_back(accumulated_irradiance(t, hours{plan_.step_hours}, h.grid, *options_.forcing).values());
    }
    write_container(h, chunks, path);
  }

  // The returned container must be on the input grid, hold one time and
  // every state variable; its time label is replaced by `valid`.
  Dataset read_step(const fs::path& path, const GridSpec& grid, TimePoint valid) const {
    if (!fs::exists(path)) throw DataError("external forecaster wrote no output " + path.string());
    const ContainerReader reader(path);
    const auto& h = reader.header();
    if (!(*h.grid == grid) || h.padding) {
      throw DataError("external forecaster output " + path.string() + " is not on the input grid");
    }
    if (h.time_axis.size() != 1) {
      throw DataError("external forecaster output " + path.string() + " holds " + std::to_string(h.time_axis.size()) +
                      " times, expected 1");
    }
    std::vector<Field> fields;
    for (const auto& var : initial_.variables()) {
      std::optional<std::size_t> idx;
      for (std::size_t i = 0; i < h.variables.size(); ++i) {
        if (h.variables[i].key == var.key) idx = i;
      }
      if (!idx) throw DataError("external forecaster output " + path.string() + " lacks " + var.key.label());
      fields.emplace_back(initial_.grid_ptr(), reader.read_chunk(0, *idx), var.key, valid);
    }
    return Dataset(initial_.grid_ptr(), initial_.variables(), {valid}, std::move(fields));
  }

  const RolloutPlan& plan_;
  const Dataset& initial_;
  const Climatology* clim_;
  const RolloutOptions& options_;
  fs::path scratch_;
};

}  // namespace

Dataset run_rollout(const RolloutPlan& plan, const Dataset& initial_states, const Climatology* clim,
                    const RolloutOptions& options) {
  const ScratchDir scratch(options.work_dir, options.keep_files);
  const Runner runner(plan, initial_states, clim, options, scratch.path());
  std::vector<Rollout> results(plan.init_times.size());
  parallel_for(results.size(), [&](std::size_t i) { results[i] = runner.run(i); });

  std::vector<TimePoint> times, inits;
  std::vector<Field> fields;
  const std::size_t nv = initial_states.n_vars();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto valid = runner.valid_times(plan.init_times[i]);
    for (std::size_t k = 0; k < valid.size(); ++k) {
      times.push_back(valid[k]);
      inits.push_back(plan.init_times[i]);
      for (std::size_t v = 0; v < nv; ++v) {
        fields.emplace_back(initial_states.grid_ptr(), std::move(results[i][k * nv + v]),
                            initial_states.variables()[v].key, valid[k]);
      }
    }
  }
  Dataset out(initial_states.grid_ptr(), initial_states.variables(), std::move(times), std::move(fields),
              std::move(inits));
  out.attributes()["forecaster"] = to_string(plan.forecaster);
  out.attributes()["step_hours"] = plan.step_hours;
  return out;
}

void run_rollout_to_file(const RolloutPlan& plan, const Dataset& initial_states, const Climatology* clim,
                         const RolloutOptions& options, const fs::path& out, DType dtype) {
  const ScratchDir scratch(options.work_dir, options.keep_files);
  const Runner runner(plan, initial_states, clim, options, scratch.path());
  ContainerHeader h;
  h.grid = initial_states.grid_ptr();
  h.variables = initial_states.variables();
  h.dtype = dtype;
  h.attributes = {{"forecaster", to_string(plan.forecaster)}, {"step_hours", plan.step_hours}};
  for (const TimePoint init : plan.init_times) {
    for (const TimePoint t : runner.valid_times(init)) {
      h.time_axis.push_back(t);
      h.init_times.push_back(init);
    }
  }
  ContainerWriter writer(h, out);
  const std::size_t batch = 2 * std::max<std::size_t>(WorkerPool::global().size(), 1);
  for (std::size_t first = 0; first < plan.init_times.size(); first += batch) {
    const std::size_t n = std::min(batch, plan.init_times.size() - first);
    std::vector<Rollout> results(n);
    parallel_for(n, [&](std::size_t i) { results[i] = runner.run(first + i); });
    for (const auto& r : results) {
      for (const auto& chunk : r) writer.append(chunk);
    }
  }
  writer.finish();
}

}  // namespace nwpkit
