#include "splitac/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace splitac {

namespace {

void require_same_mesh(const Mesh& a, const Mesh& b, const char* what) {
  if (!(a == b)) {
    throw std::invalid_argument(std::string(what) + ": mesh mismatch (" +
                                std::to_string(a.n_interior()) + " vs " +
                                std::to_string(b.n_interior()) + " interior nodes)");
  }
}

// FFTW's planner is not reentrant; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

Mesh::Mesh(std::size_t n_interior)
    : n_interior_(n_interior), dx_(1.0 / static_cast<double>(n_interior + 1)) {
  if (n_interior == 0) {
    throw std::invalid_argument("Mesh: n_interior must be >= 1");
  }
}

GridFunction::GridFunction(Mesh mesh) : mesh_(mesh), values_(mesh.n_interior(), 0.0) {}

GridFunction::GridFunction(Mesh mesh, std::vector<double> values)
    : mesh_(mesh), values_(std::move(values)) {
  if (values_.size() != mesh_.n_interior()) {
    throw std::invalid_argument("GridFunction: expected " + std::to_string(mesh_.n_interior()) +
                                " values, got " + std::to_string(values_.size()));
  }
}

bool GridFunction::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
  require_same_mesh(mesh_, other.mesh_, "GridFunction::operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
  require_same_mesh(mesh_, other.mesh_, "GridFunction::operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

GridFunction& GridFunction::operator*=(double s) noexcept {
  for (double& v : values_) v *= s;
  return *this;
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(double s, GridFunction a) { return a *= s; }

GridFunction discrete_eigenvector(const Mesh& mesh, std::size_t k) {
  if (k == 0 || k > mesh.n_interior()) {
    throw std::invalid_argument("discrete_eigenvector: k out of range");
  }
  GridFunction v(mesh);
  const double kpi = static_cast<double>(k) * std::numbers::pi;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(kpi * mesh.node(i + 1));
  return v;
}

namespace detail {

struct DstPlan {
  explicit DstPlan(std::size_t n) : n(n) {
    std::vector<double> a(n), b(n);
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_r2r_1d(static_cast<int>(n), a.data(), b.data(), FFTW_RODFT00,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("DstPlan: FFTW planning failed");
  }
  ~DstPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  DstPlan(const DstPlan&) = delete;
  DstPlan& operator=(const DstPlan&) = delete;

  // out_k = 2 sum_j in_j sin(pi (j+1)(k+1) / (n+1))
  void execute(std::span<const double> in, std::span<double> out) const {
    fftw_execute_r2r(plan, const_cast<double*>(in.data()), out.data());
  }

  std::size_t n;
  fftw_plan plan = nullptr;
};

}  // namespace detail

DiscreteOperator::DiscreteOperator(Mesh mesh)
    : mesh_(mesh),
      eigenvalues_(mesh.n_interior()),
      plan_(std::make_shared<const detail::DstPlan>(mesh.n_interior())) {
  const double dx = mesh_.dx();
  const double scale = 4.0 / (dx * dx);
  for (std::size_t k = 1; k <= eigenvalues_.size(); ++k) {
    const double s = std::sin(static_cast<double>(k) * std::numbers::pi * dx / 2.0);
    eigenvalues_[k - 1] = scale * s * s;
  }
}

void DiscreteOperator::forward(std::span<const double> in, std::span<double> out) const {
  if (in.size() != plan_->n || out.size() != plan_->n) {
    throw std::invalid_argument("DiscreteOperator::forward: size mismatch");
  }
  plan_->execute(in, out);
  const double s = mesh_.dx() / std::numbers::sqrt2;
  for (double& v : out) v *= s;
}

void DiscreteOperator::inverse(std::span<const double> in, std::span<double> out) const {
  if (in.size() != plan_->n || out.size() != plan_->n) {
    throw std::invalid_argument("DiscreteOperator::inverse: size mismatch");
  }
  plan_->execute(in, out);
  const double s = 1.0 / std::numbers::sqrt2;
  for (double& v : out) v *= s;
}

GridFunction apply_laplacian(const DiscreteOperator& op, const GridFunction& x) {
  require_same_mesh(op.mesh(), x.mesh(), "apply_laplacian");
  const std::size_t n = x.size();
  const double inv_dx2 = 1.0 / (op.mesh().dx() * op.mesh().dx());
  GridFunction y(x.mesh());
  for (std::size_t j = 0; j < n; ++j) {
    const double left = j > 0 ? x[j - 1] : 0.0;
    const double right = j + 1 < n ? x[j + 1] : 0.0;
    y[j] = (left - 2.0 * x[j] + right) * inv_dx2;
  }
  return y;
}

ResolventSolver::ResolventSolver(const Mesh& mesh, double dt)
    : mesh_(mesh), dt_(dt), inv_pivot_(mesh.n_interior()), upper_(mesh.n_interior()) {
  if (!(dt > 0.0)) throw std::invalid_argument("ResolventSolver: dt must be > 0");
  const double r = dt / (mesh.dx() * mesh.dx());
  const double diag = 1.0 + 2.0 * r;
  off_ = -r;
  double pivot = diag;
  for (std::size_t i = 0; i < inv_pivot_.size(); ++i) {
    if (i > 0) pivot = diag - off_ * upper_[i - 1];
    inv_pivot_[i] = 1.0 / pivot;
    upper_[i] = off_ * inv_pivot_[i];
  }
}

void ResolventSolver::solve_in_place(std::span<double> y) const {
  const std::size_t n = y.size();
  if (n != inv_pivot_.size()) throw std::invalid_argument("ResolventSolver: size mismatch");
  y[0] *= inv_pivot_[0];
  for (std::size_t i = 1; i < n; ++i) y[i] = (y[i] - off_ * y[i - 1]) * inv_pivot_[i];
  for (std::size_t i = n - 1; i-- > 0;) y[i] -= upper_[i] * y[i + 1];
}

GridFunction ResolventSolver::solve(const GridFunction& rhs) const {
  require_same_mesh(mesh_, rhs.mesh(), "ResolventSolver::solve");
  GridFunction y = rhs;
  solve_in_place(y.values());
  return y;
}

GridFunction solve_resolvent(const DiscreteOperator& op, double dt, const GridFunction& rhs) {
  require_same_mesh(op.mesh(), rhs.mesh(), "solve_resolvent");
  return ResolventSolver(op.mesh(), dt).solve(rhs);
}

SemigroupFactors::SemigroupFactors(const DiscreteOperator& op, double dt)
    : dt_(dt), damping_(op.eigenvalues().size()) {
  if (!(dt >= 0.0)) throw std::invalid_argument("SemigroupFactors: dt must be >= 0");
  const auto lambda = op.eigenvalues();
  for (std::size_t k = 0; k < damping_.size(); ++k) damping_[k] = std::exp(-dt * lambda[k]);
}

void SemigroupFactors::apply_in_place(const DiscreteOperator& op, std::span<double> x,
                                      std::span<double> scratch) const {
  op.forward(x, scratch);
  for (std::size_t k = 0; k < damping_.size(); ++k) scratch[k] *= damping_[k];
  op.inverse(scratch, x);
}

GridFunction apply_semigroup(const DiscreteOperator& op, double dt, const GridFunction& x) {
  require_same_mesh(op.mesh(), x.mesh(), "apply_semigroup");
  if (dt == 0.0) return x;
  GridFunction y = x;
  std::vector<double> scratch(x.size());
  SemigroupFactors(op, dt).apply_in_place(op, y.values(), scratch);
  return y;
}

double norm_h(std::span<const double> x, double dx) noexcept {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(dx * s);
}

double norm_e(std::span<const double> x) noexcept {
  double m = 0.0;
  for (double v : x) {
    const double a = std::abs(v);
    // NaN propagates so that blow-up detection sees it
    if (std::isnan(a)) return a;
    if (a > m) m = a;
  }
  return m;
}

double norm_h(const GridFunction& x) noexcept { return norm_h(x.values(), x.mesh().dx()); }
double norm_e(const GridFunction& x) noexcept { return norm_e(x.values()); }

}  // namespace splitac
