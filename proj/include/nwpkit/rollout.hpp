#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nwpkit/filters.hpp"
#include "nwpkit/io.hpp"
#include "nwpkit/preprocess.hpp"
#include "nwpkit/solar.hpp"

namespace nwpkit {

enum class ForecasterKind { persistence, climatology, external };

std::string to_string(ForecasterKind kind);
ForecasterKind forecaster_from_string(std::string_view text);

struct RolloutPlan {
  std::vector<TimePoint> init_times;
  int step_hours = 6;
  int max_lead_hours = 240;
  ForecasterKind forecaster = ForecasterKind::persistence;
  /// Shell command for the external forecaster. It is run through /bin/sh as
  /// `<command> --in '<state>' --out '<next>' --step-hours <N>`.
  std::string command;

  /// Throws ArgumentError on a step other than 1 or 6 h, a lead that is not
  /// a multiple of the step, an empty init list or a missing command.
  void validate() const;
  std::size_t n_leads() const { return static_cast<std::size_t>(max_lead_hours / step_hours) + 1; }
};

enum class PostOp { clamp_nonnegative, laplacian_diffuse, pole_filter };

std::string to_string(PostOp op);
PostOp post_op_from_string(std::string_view text);

struct Postprocess {
  /// Applied in this order to every state an external forecaster returns.
  std::vector<PostOp> pipeline;
  ClampSpec clamp;
  DiffusionSpec diffusion;
  PoleFilterSpec pole;
};

Field apply_postprocessing(const Field& field, const Postprocess& pp);
/// One model state: a dataset holding exactly one time.
Dataset apply_postprocessing(const Dataset& state, const Postprocess& pp);

struct RolloutOptions {
  Postprocess postprocess;
  /// When set, each state handed to an external forecaster also carries the
  /// I_s@sfc accumulation over the step, labelled by the window end.
  std::optional<SolarConfig> forcing;
  /// Scratch directory for state files; a fresh temporary directory when empty.
  std::filesystem::path work_dir;
  bool keep_files = false;
};

/// Forecast fields for every (init, lead) with leads 0, step, ..., max_lead,
/// ordered init-major. `initial_states` must contain every init time and
/// supplies the variables and units; `clim` is required for the climatology
/// forecaster. Initializations run in parallel, steps sequentially.
Dataset run_rollout(const RolloutPlan& plan, const Dataset& initial_states, const Climatology* clim,
                    const RolloutOptions& options = {});

/// Same, streaming into a container so that only a few rollouts are held in
/// memory at once.
void run_rollout_to_file(const RolloutPlan& plan, const Dataset& initial_states, const Climatology* clim,
                         const RolloutOptions& options, const std::filesystem::path& out, DType dtype);

/// Runs `command` through /bin/sh -c and returns its exit status (128 + n
/// when killed by signal n).
int run_shell(const std::string& command);

/// POSIX single-quoted form of `text`.
std::string shell_quote(std::string_view text);

}  // namespace nwpkit
