#pragma once

#include <string_view>

#include "nwpkit/errors.hpp"
#include "nwpkit/grid.hpp"

namespace nwpkit {

enum class PadMode {
  /// polar rows rolled by n_lon / 2 and reflected (continuation over the pole)
  rotate_reflect,
  /// polar rows reflected without the roll
  reflect_only,
};

std::string_view to_string(PadMode mode);
PadMode pad_mode_from_string(std::string_view text);

struct PadSpec {
  Index pad_ns = 0;
  Index pad_ew = 0;
  PadMode mode = PadMode::rotate_reflect;

  /// Requires 0 <= pad_ns <= n_lat, 0 <= pad_ew <= n_lon / 2 and, for
  /// rotate_reflect, an even n_lon.
  void validate(Index n_lat, Index n_lon) const;
};

/// Spherical boundary padding of a (n_lat x n_lon) array to
/// (n_lat + 2 pad_ns) x (n_lon + 2 pad_ew).
///
/// Polar rows first: padded row k above the grid (k = 0 outermost) is
/// interior row pad_ns - 1 - k rolled by n_lon / 2, so the rows nearest the
/// pole are adjacent to it; the south side mirrors this. The east-west wrap
/// is then applied to the pole-extended array, which fills the corners.
/// Every output value is a copy of an input value.
template <typename Derived>
GridArray<typename Derived::Scalar> pad(const Eigen::DenseBase<Derived>& field, const PadSpec& spec) {
  const auto& x = field.derived();
  const Index n_lat = x.rows(), n_lon = x.cols();
  spec.validate(n_lat, n_lon);
  const Index p = spec.pad_ns, e = spec.pad_ew;
  const Index shift = spec.mode == PadMode::rotate_reflect ? n_lon / 2 : 0;

  GridArray<typename Derived::Scalar> out(n_lat + 2 * p, n_lon + 2 * e);
  out.block(p, e, n_lat, n_lon) = x;
  auto copy_rolled = [&](Index dst_row, Index src_row) {
    // out[dst, e + j] = x[src, (j + shift) mod n_lon]
    const Index tail = n_lon - shift;
    out.block(dst_row, e, 1, tail) = x.block(src_row, shift, 1, tail);
    if (shift > 0) out.block(dst_row, e + tail, 1, shift) = x.block(src_row, 0, 1, shift);
  };
  for (Index k = 0; k < p; ++k) {
    copy_rolled(k, p - 1 - k);
    copy_rolled(p + n_lat + k, n_lat - 1 - k);
  }
  if (e > 0) {
    out.leftCols(e) = out.middleCols(n_lon, e);
    out.rightCols(e) = out.middleCols(e, e);
  }
  return out;
}

/// Interior of a padded array; throws ArgumentError when the padded shape
/// cannot hold a grid with this spec.
template <typename Derived>
GridArray<typename Derived::Scalar> unpad(const Eigen::DenseBase<Derived>& padded, const PadSpec& spec) {
  const auto& x = padded.derived();
  const Index n_lat = x.rows() - 2 * spec.pad_ns, n_lon = x.cols() - 2 * spec.pad_ew;
  if (spec.pad_ns < 0 || spec.pad_ew < 0 || n_lat < 1 || n_lon < 1) {
    throw ArgumentError("padded array of shape " + std::to_string(x.rows()) + "x" +
                        std::to_string(x.cols()) + " does not match pad_ns=" +
                        std::to_string(spec.pad_ns) + " pad_ew=" + std::to_string(spec.pad_ew));
  }
  return x.block(spec.pad_ns, spec.pad_ew, n_lat, n_lon);
}

Field unpad(const GridArrayd& padded, const PadSpec& spec, std::shared_ptr<const GridSpec> grid,
            VariableKey key, TimePoint valid_time);

}  // namespace nwpkit
