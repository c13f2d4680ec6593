#include "splitac/noise.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace splitac {

namespace {

constexpr std::uint32_t kTagNodal = 0x4e4f4441u;  // "NODA"
constexpr std::uint32_t kTagModes = 0x4d4f4445u;  // "MODE"

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Tag and stream are folded into the key so that nodal and modal draws, and
// distinct streams, never share counters.
Philox4x32::Key make_key(std::uint64_t seed, std::uint32_t tag, std::uint32_t stream) noexcept {
  const std::uint64_t k = splitmix64(seed ^ splitmix64((static_cast<std::uint64_t>(tag) << 32) | stream));
  return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

}  // namespace

NoisePlan::NoisePlan(std::uint64_t master_seed, std::uint32_t replica_id, Mesh mesh,
                     double dt_fine, unsigned n_levels, std::uint32_t stream)
    : master_seed_(master_seed),
      replica_id_(replica_id),
      mesh_(mesh),
      dt_fine_(dt_fine),
      n_levels_(n_levels),
      stream_(stream),
      nodal_gen_(make_key(master_seed, kTagNodal, stream)),
      modes_gen_(make_key(master_seed, kTagModes, stream)) {
  if (!(dt_fine > 0.0)) throw std::invalid_argument("NoisePlan: dt_fine must be > 0");
  if (n_levels < 1 || n_levels > 40) throw std::invalid_argument("NoisePlan: n_levels must be in [1, 40]");
}

double NoisePlan::dt_at(unsigned level) const {
  if (level >= n_levels_) {
    throw std::invalid_argument("NoisePlan: level " + std::to_string(level) + " not supported (n_levels=" +
                                std::to_string(n_levels_) + ")");
  }
  return std::ldexp(dt_fine_, static_cast<int>(level));
}

unsigned NoisePlan::level_for(double dt) const {
  for (unsigned level = 0; level < n_levels_; ++level) {
    const double h = std::ldexp(dt_fine_, static_cast<int>(level));
    if (std::abs(h - dt) <= 1e-12 * h) return level;
  }
  throw std::invalid_argument("NoisePlan: dt=" + std::to_string(dt) + " is not a supported dyadic level");
}

void NoisePlan::fill_normals(const Philox4x32& gen, std::uint64_t n, std::span<double> out) const {
  // counter = {node pair, step lo, step hi, replica}
  const auto lo = static_cast<std::uint32_t>(n);
  const auto hi = static_cast<std::uint32_t>(n >> 32);
  const std::size_t size = out.size();
  for (std::size_t pair = 0; 2 * pair < size; ++pair) {
    const auto z = normal_pair(gen({static_cast<std::uint32_t>(pair), lo, hi, replica_id_}));
    out[2 * pair] = z[0];
    if (2 * pair + 1 < size) out[2 * pair + 1] = z[1];
  }
}

void NoisePlan::fill_fine(std::uint64_t n, std::span<double> out) const {
  if (out.size() != mesh_.n_interior()) throw std::invalid_argument("NoisePlan::fill_fine: size mismatch");
  fill_normals(nodal_gen_, n, out);
  const double sd = std::sqrt(dt_fine_ / mesh_.dx());
  for (double& v : out) v *= sd;
}

IncrementBlock NoisePlan::fine_increment(std::uint64_t n) const {
  IncrementBlock block{IncrementKind::nodal, 0, n, dt_fine_, GridFunction(mesh_)};
  fill_fine(n, block.values.values());
  return block;
}

IncrementBlock NoisePlan::increment(unsigned level, std::uint64_t n) const {
  (void)dt_at(level);
  if (level == 0) return fine_increment(n);
  return coarsen(increment(level - 1, 2 * n), increment(level - 1, 2 * n + 1));
}

IncrementBlock NoisePlan::fine_convolution(const DiscreteOperator& op, std::uint64_t n) const {
  if (!(op.mesh() == mesh_)) throw std::invalid_argument("NoisePlan::fine_convolution: mesh mismatch");
  IncrementBlock block{IncrementKind::convolution_modes, 0, n, dt_fine_, GridFunction(mesh_)};
  auto out = block.values.values();
  fill_normals(modes_gen_, n, out);
  const auto lambda = op.eigenvalues();
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double var = -std::expm1(-2.0 * dt_fine_ * lambda[k]) / (2.0 * lambda[k]);
    out[k] *= std::sqrt(var);
  }
  return block;
}

IncrementBlock NoisePlan::convolution(const DiscreteOperator& op, unsigned level, std::uint64_t n) const {
  (void)dt_at(level);
  if (level == 0) return fine_convolution(op, n);
  return coarsen(op, convolution(op, level - 1, 2 * n), convolution(op, level - 1, 2 * n + 1));
}

namespace {

void check_pair(const IncrementBlock& a, const IncrementBlock& b, IncrementKind kind) {
  if (a.kind != kind || b.kind != kind) throw std::invalid_argument("coarsen: wrong increment kind");
  if (a.level != b.level) throw std::invalid_argument("coarsen: level mismatch");
  if (a.step_index % 2 != 0 || b.step_index != a.step_index + 1) {
    throw std::invalid_argument("coarsen: expected steps 2n and 2n+1, got " + std::to_string(a.step_index) +
                                " and " + std::to_string(b.step_index));
  }
  if (!(a.values.mesh() == b.values.mesh())) throw std::invalid_argument("coarsen: mesh mismatch");
}

}  // namespace

IncrementBlock coarsen(const IncrementBlock& fine_a, const IncrementBlock& fine_b) {
  check_pair(fine_a, fine_b, IncrementKind::nodal);
  return {IncrementKind::nodal, fine_a.level + 1, fine_a.step_index / 2, fine_a.span + fine_b.span,
          fine_a.values + fine_b.values};
}

IncrementBlock coarsen(const DiscreteOperator& op, const IncrementBlock& fine_a, const IncrementBlock& fine_b) {
  check_pair(fine_a, fine_b, IncrementKind::convolution_modes);
  IncrementBlock out{IncrementKind::convolution_modes, fine_a.level + 1, fine_a.step_index / 2,
                     fine_a.span + fine_b.span, fine_b.values};
  const auto lambda = op.eigenvalues();
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    out.values[k] += std::exp(-fine_b.span * lambda[k]) * fine_a.values[k];
  }
  return out;
}

NoisePlan replica_stream(const NoisePlan& plan, std::uint32_t new_replica) {
  NoisePlan copy = plan;
  copy.replica_id_ = new_replica;
  return copy;
}

}  // namespace splitac
