#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace splitac {

/// Uniform mesh of (0,1) with `n_interior` unknowns and zero Dirichlet values at
/// both end points.
class Mesh {
 public:
  explicit Mesh(std::size_t n_interior);

  [[nodiscard]] std::size_t n_interior() const noexcept { return n_interior_; }
  [[nodiscard]] double dx() const noexcept { return dx_; }

  /// Interior node coordinate j*dx, j = 1..n_interior.
  [[nodiscard]] double node(std::size_t j) const noexcept {
    return static_cast<double>(j) * dx_;
  }

  friend bool operator==(const Mesh& a, const Mesh& b) noexcept {
    return a.n_interior_ == b.n_interior_;
  }

 private:
  std::size_t n_interior_;
  double dx_;
};

/// Field values on the interior nodes of a Mesh. Entry i holds the value at
/// node (i+1)*dx.
class GridFunction {
 public:
  explicit GridFunction(Mesh mesh);
  GridFunction(Mesh mesh, std::vector<double> values);

  [[nodiscard]] const Mesh& mesh() const noexcept { return mesh_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

  [[nodiscard]] std::span<double> values() noexcept { return values_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  [[nodiscard]] bool all_finite() const noexcept;

  GridFunction& operator+=(const GridFunction& other);
  GridFunction& operator-=(const GridFunction& other);
  GridFunction& operator*=(double s) noexcept;

 private:
  Mesh mesh_;
  std::vector<double> values_;
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(double s, GridFunction a);

/// Discrete eigenvector v_k with (v_k)_j = sin(k*pi*j*dx), k = 1..n_interior.
GridFunction discrete_eigenvector(const Mesh& mesh, std::size_t k);

namespace detail {
struct DstPlan;
}

/// Finite-difference Dirichlet Laplacian A_h on a uniform mesh together with
/// its sine-transform diagonalization.
///
/// The transform pair maps grid values to coefficients in the basis
/// sqrt(2) sin(k pi x), which is orthonormal for the dx-weighted inner product:
///   c_k = dx * sum_j x_j sqrt(2) sin(k pi j dx),   x_j = sum_k c_k sqrt(2) sin(k pi j dx).
/// Immutable after construction; copies share the transform plan and may be
/// used concurrently.
class DiscreteOperator {
 public:
  explicit DiscreteOperator(Mesh mesh);

  [[nodiscard]] const Mesh& mesh() const noexcept { return mesh_; }

  /// Eigenvalues of -A_h, (4/dx^2) sin^2(k pi dx / 2), strictly increasing in k.
  [[nodiscard]] std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }

  /// Grid values -> orthonormal mode coefficients. `in` and `out` must have
  /// n_interior entries and may not alias.
  void forward(std::span<const double> in, std::span<double> out) const;
  /// Mode coefficients -> grid values.
  void inverse(std::span<const double> in, std::span<double> out) const;

 private:
  Mesh mesh_;
  std::vector<double> eigenvalues_;
  std::shared_ptr<const detail::DstPlan> plan_;
};

/// (A_h x)_j = (x_{j-1} - 2 x_j + x_{j+1}) / dx^2 with zero boundary values.
GridFunction apply_laplacian(const DiscreteOperator& op, const GridFunction& x);

/// Cached Thomas factorization of I - dt*A_h.
class ResolventSolver {
 public:
  ResolventSolver(const Mesh& mesh, double dt);

  [[nodiscard]] double dt() const noexcept { return dt_; }
  [[nodiscard]] const Mesh& mesh() const noexcept { return mesh_; }

  /// Solves (I - dt A_h) y = rhs in place.
  void solve_in_place(std::span<double> rhs) const;
  [[nodiscard]] GridFunction solve(const GridFunction& rhs) const;

 private:
  Mesh mesh_;
  double dt_;
  double off_;                   // -dt/dx^2
  std::vector<double> inv_pivot_;  // 1 / modified diagonal
  std::vector<double> upper_;      // modified super-diagonal
};

/// Returns y with (I - dt A_h) y = rhs. Requires dt > 0.
GridFunction solve_resolvent(const DiscreteOperator& op, double dt, const GridFunction& rhs);

/// Mode-wise damping factors exp(-dt * lambda_k) of the discrete semigroup.
class SemigroupFactors {
 public:
  SemigroupFactors(const DiscreteOperator& op, double dt);

  [[nodiscard]] double dt() const noexcept { return dt_; }
  [[nodiscard]] std::span<const double> damping() const noexcept { return damping_; }

  /// x <- e^{dt A_h} x. `scratch` needs n_interior entries.
  void apply_in_place(const DiscreteOperator& op, std::span<double> x,
                      std::span<double> scratch) const;

 private:
  double dt_;
  std::vector<double> damping_;
};

/// e^{dt A_h} x through the sine transform. Requires dt >= 0.
GridFunction apply_semigroup(const DiscreteOperator& op, double dt, const GridFunction& x);

/// Discrete L^2(0,1) norm sqrt(dx * sum x_j^2).
double norm_h(const GridFunction& x) noexcept;
/// Discrete sup norm max_j |x_j|.
double norm_e(const GridFunction& x) noexcept;

double norm_h(std::span<const double> x, double dx) noexcept;
double norm_e(std::span<const double> x) noexcept;

}  // namespace splitac
