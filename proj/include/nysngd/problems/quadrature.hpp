#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace nysngd {

enum class BlockKind { kInterior, kBoundary, kInitial };

std::string to_string(BlockKind kind);

/// Points (one per column) and positive weights of one integration region.
struct QuadratureBlock {
  BlockKind kind = BlockKind::kInterior;
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;

  Eigen::Index size() const { return points.cols(); }
};

/// Fixed quadrature for all integration regions of a problem; blocks keep
/// the order interior, boundary, initial.
struct QuadratureSet {
  std::vector<QuadratureBlock> blocks;

  Eigen::Index total_points() const;
  bool has(BlockKind kind) const;
  const QuadratureBlock& block(BlockKind kind) const;
  /// All points, blocks concatenated in order.
  Eigen::MatrixXd all_points() const;
};

struct QuadratureCounts {
  Eigen::Index interior = 0;
  Eigen::Index boundary = 0;
  /// Initial-time points for evolution problems; 0 means "same as boundary".
  Eigen::Index initial = 0;
};

}  // namespace nysngd
