#include "nwpkit/padding.hpp"

#include <string>

namespace nwpkit {

std::string_view to_string(PadMode mode) {
  return mode == PadMode::rotate_reflect ? "rotate_reflect" : "reflect_only";
}

PadMode pad_mode_from_string(std::string_view text) {
  if (text == "rotate_reflect") return PadMode::rotate_reflect;
  if (text == "reflect_only") return PadMode::reflect_only;
  throw ArgumentError("unknown pad mode '" + std::string(text) + "' (rotate_reflect or reflect_only)");
}

void PadSpec::validate(Index n_lat, Index n_lon) const {
  if (pad_ns < 0 || pad_ns > n_lat) {
    throw ArgumentError("pad_ns=" + std::to_string(pad_ns) + " outside [0, " + std::to_string(n_lat) + "]");
  }
  if (pad_ew < 0 || pad_ew > n_lon / 2) {
    throw ArgumentError("pad_ew=" + std::to_string(pad_ew) + " outside [0, " + std::to_string(n_lon / 2) +
                        "]");
  }
  if (mode == PadMode::rotate_reflect && n_lon % 2 != 0) {
    throw ArgumentError("rotate_reflect padding needs an even n_lon, got " + std::to_string(n_lon) +
                        "; use reflect_only");
  }
}

Field unpad(const GridArrayd& padded, const PadSpec& spec, std::shared_ptr<const GridSpec> grid,
            VariableKey key, TimePoint valid_time) {
  GridArrayd interior = unpad(padded, spec);
  if (!grid || interior.rows() != grid->n_lat() || interior.cols() != grid->n_lon()) {
    throw ArgumentError("padded array interior does not match the grid");
  }
  return Field(std::move(grid), std::move(interior), std::move(key), valid_time);
}

}  // namespace nwpkit
