#pragma once

#include <cstdint>

#include "splitac/grid.hpp"
#include "splitac/philox.hpp"

namespace splitac {

/// How the values of an IncrementBlock are to be read.
enum class IncrementKind {
  /// Nodal Wiener increments W((n+1)h) - W(nh) on grid nodes, variance h/dx each.
  nodal,
  /// Orthonormal sine-mode coefficients of the stochastic convolution
  /// int e^{((n+1)h - s) A_h} dW(s) over one step.
  convolution_modes,
};

/// Noise over one time step of length `span` at dyadic `level` (0 = finest).
struct IncrementBlock {
  IncrementKind kind = IncrementKind::nodal;
  unsigned level = 0;
  std::uint64_t step_index = 0;
  double span = 0.0;
  GridFunction values;
};

/// Seeded, level-indexed source of space-time white-noise increments.
///
/// Every increment is a pure function of (master_seed, replica_id, stream,
/// step, node); the plan holds no mutable state. Coarser levels are formed by
/// exact pairwise summation of finer ones.
class NoisePlan {
 public:
  NoisePlan(std::uint64_t master_seed, std::uint32_t replica_id, Mesh mesh, double dt_fine,
            unsigned n_levels, std::uint32_t stream = 0);

  [[nodiscard]] std::uint64_t master_seed() const noexcept { return master_seed_; }
  [[nodiscard]] std::uint32_t replica_id() const noexcept { return replica_id_; }
  [[nodiscard]] std::uint32_t stream() const noexcept { return stream_; }
  [[nodiscard]] const Mesh& mesh() const noexcept { return mesh_; }
  [[nodiscard]] double dt_fine() const noexcept { return dt_fine_; }
  [[nodiscard]] unsigned n_levels() const noexcept { return n_levels_; }

  /// Step size at `level`: dt_fine * 2^level.
  [[nodiscard]] double dt_at(unsigned level) const;
  /// Level whose step equals `dt` (up to 1e-12 relative); throws otherwise.
  [[nodiscard]] unsigned level_for(double dt) const;

  /// Level-0 nodal increment for step n: i.i.d. Normal(0, dt_fine/dx).
  [[nodiscard]] IncrementBlock fine_increment(std::uint64_t n) const;
  /// Writes the level-0 increment for step n into `out` (n_interior values).
  void fill_fine(std::uint64_t n, std::span<double> out) const;

  /// Nodal increment at `level`, step n, built by pairwise coarsening of the
  /// 2^level underlying fine increments.
  [[nodiscard]] IncrementBlock increment(unsigned level, std::uint64_t n) const;

  /// Level-0 stochastic-convolution increment in mode space:
  /// c_k ~ Normal(0, (1 - e^{-2 dt_fine lambda_k}) / (2 lambda_k)), independent.
  [[nodiscard]] IncrementBlock fine_convolution(const DiscreteOperator& op, std::uint64_t n) const;
  [[nodiscard]] IncrementBlock convolution(const DiscreteOperator& op, unsigned level,
                                           std::uint64_t n) const;

 private:
  friend NoisePlan replica_stream(const NoisePlan& plan, std::uint32_t new_replica);

  void fill_normals(const Philox4x32& gen, std::uint64_t n, std::span<double> out) const;

  std::uint64_t master_seed_;
  std::uint32_t replica_id_;
  Mesh mesh_;
  double dt_fine_;
  unsigned n_levels_;
  std::uint32_t stream_;
  Philox4x32 nodal_gen_;
  Philox4x32 modes_gen_;
};

/// Sum of two consecutive nodal blocks at the same level (steps 2n and 2n+1),
/// giving the block at level+1, step n.
IncrementBlock coarsen(const IncrementBlock& fine_a, const IncrementBlock& fine_b);

/// Coarsening for convolution-mode blocks: e^{-h lambda_k} a_k + b_k.
IncrementBlock coarsen(const DiscreteOperator& op, const IncrementBlock& fine_a,
                       const IncrementBlock& fine_b);

/// Same plan with a different replica id.
NoisePlan replica_stream(const NoisePlan& plan, std::uint32_t new_replica);

}  // namespace splitac
