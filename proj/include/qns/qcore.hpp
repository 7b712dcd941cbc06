#pragma once

// Dense complex operator algebra for small open quantum systems.
//
// Superoperators act on column-stacked density matrices: vec(A rho B) =
// (B^T kron A) vec(rho). A Lindblad dissipator D[J] therefore vectorizes to
//   conj(J) kron J - 1/2 I kron (J^dag J) - 1/2 (J^dag J)^T kron I.
//
// Qubit basis ordering: index 0 is the +1 eigenstate of sigma_z, labelled
// |1> (excited), and index 1 the -1 eigenstate |0> (ground). Multi-partite
// operators are ordered with the first subsystem as the most significant factor of kron().

#include <Eigen/Dense>

#include <complex>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qns {

using Complex = std::complex<double>;
using Index = Eigen::Index;
using Operator = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace ops {

Operator identity(Index dim);
Operator sigma_x();
Operator sigma_y();
Operator sigma_z();
/// |1><0|: raises the sigma_z eigenvalue from -1 to +1.
Operator sigma_plus();
Operator sigma_minus();

Operator annihilation(Index fock_dim);
Operator creation(Index fock_dim);
Operator number(Index fock_dim);

/// Places `op` on subsystem `position` of a tensor product with local dims `dims`.
Operator embed(const Operator& op, std::size_t position, std::span<const Index> dims);

}  // namespace ops

Operator kron(const Operator& a, const Operator& b);
Operator kron(std::initializer_list<Operator> factors);

bool is_hermitian(const Operator& op, double tol = 1e-12);

class DensityMatrix {
 public:
  static constexpr double kHermitianTol = 1e-12;
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kEigenTol = -1e-9;

  /// Validates hermiticity, unit trace and positivity; throws qns::Error otherwise.
  explicit DensityMatrix(Operator rho);

  static DensityMatrix pure(const StateVector& psi);
  static DensityMatrix maximally_mixed(Index dim);

  Index dim() const { return rho_.rows(); }
  const Operator& matrix() const { return rho_; }
  Complex operator()(Index i, Index j) const { return rho_(i, j); }

  double purity() const;
  Eigen::VectorXcd vectorized() const;

 private:
  Operator rho_;
};

/// Generator acting on column-stacked density matrices, units 1/s.
class Liouvillian {
 public:
  Liouvillian(Eigen::MatrixXcd generator, std::vector<Index> subsystem_dims,
              int boson_subsystem = -1);

  static Liouvillian zero(Index hilbert_dim);

  const Eigen::MatrixXcd& matrix() const { return generator_; }
  Index hilbert_dim() const { return hilbert_dim_; }
  const std::vector<Index>& subsystem_dims() const { return subsystem_dims_; }
  /// Index of the truncated bosonic factor, or -1 if there is none.
  int boson_subsystem() const { return boson_subsystem_; }

  /// max |vec(I)^dag L| / max|L|; vanishes for trace-preserving generators.
  double trace_defect() const;

  Liouvillian& operator+=(const Liouvillian& other);

 private:
  Eigen::MatrixXcd generator_;
  std::vector<Index> subsystem_dims_;
  Index hilbert_dim_;
  int boson_subsystem_;
};

struct Dissipator {
  double rate;
  Operator jump;
};

/// -i[H, .] as a superoperator.
Eigen::MatrixXcd hamiltonian_superoperator(const Operator& h);
/// D[J] as a superoperator.
Eigen::MatrixXcd dissipator_superoperator(const Operator& jump);
/// A rho B^dag - 1/2 {B^dag A, rho}; the off-diagonal terms of a correlated dissipator.
Eigen::MatrixXcd cross_dissipator_superoperator(const Operator& a, const Operator& b);

/// L vec(rho) = vec(-i[H,rho] + sum_k rate_k D[J_k] rho).
Liouvillian lindbladian(const Operator& h, std::span<const Dissipator> dissipators,
                        std::vector<Index> subsystem_dims = {}, int boson_subsystem = -1);

/// exp(L t) applied to vectorized states. Diagonalizes L once; when the
/// eigenvector matrix is ill-conditioned (cond > 1e8) it switches to
/// scaling-and-squaring Pade exponentials evaluated per time.
class Propagator {
 public:
  static constexpr double kMaxEigenvectorCondition = 1e8;

  explicit Propagator(const Liouvillian& generator);

  Eigen::VectorXcd evolve(const Eigen::VectorXcd& initial, double t) const;
  std::vector<Eigen::VectorXcd> evolve(const Eigen::VectorXcd& initial,
                                       std::span<const double> times) const;

  bool diagonalized() const { return diagonalized_; }
  double eigenvector_condition() const { return condition_; }
  const Eigen::VectorXcd& eigenvalues() const { return eigenvalues_; }
  Index hilbert_dim() const { return hilbert_dim_; }

 private:
  Eigen::MatrixXcd generator_;
  Index hilbert_dim_;
  bool diagonalized_ = false;
  double condition_ = 0.0;
  Eigen::VectorXcd eigenvalues_;
  Eigen::MatrixXcd eigenvectors_;
  Eigen::MatrixXcd inverse_eigenvectors_;
};

/// Drift beyond which propagated states are rejected instead of renormalized.
inline constexpr double kMaxTraceDrift = 1e-6;

/// Unvectorizes, hermitizes and renormalizes a propagated state. Throws when
/// the trace drifted by more than kMaxTraceDrift.
DensityMatrix to_density_matrix(const Eigen::VectorXcd& vec, Index dim);

/// Hermiticity defect max|rho - rho^dag| of a vectorized state before any cleanup.
double hermiticity_defect(const Eigen::VectorXcd& vec, Index dim);

std::vector<DensityMatrix> propagate(const Liouvillian& generator, const DensityMatrix& rho0,
                                     std::span<const double> times);

/// Re Tr[O rho]. Warns on stderr when |Im Tr[O rho]| exceeds 1e-9.
double expect(const Operator& observable, const DensityMatrix& rho);
double expect(const Operator& observable, const Operator& rho);

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const Index> dims,
                            std::span<const std::size_t> keep);
Operator partial_trace(const Operator& rho, std::span<const Index> dims,
                       std::span<const std::size_t> keep);

/// Unique stationary state of L, normalized to unit trace. Throws when the
/// null space is degenerate.
DensityMatrix steady_state(const Liouvillian& generator);

}  // namespace qns
