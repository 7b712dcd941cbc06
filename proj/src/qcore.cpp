#include "qns/qcore.hpp"

#include "qns/log.hpp"

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numeric>

namespace qns {

// ----------------------------------------------------------------------------
// warnings

namespace {
thread_local bool warnings_silenced = false;
std::mutex& warn_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

void warn(std::string_view message) {
  if (warnings_silenced) return;
  std::lock_guard lock(warn_mutex());
  std::cerr << "warning: " << message << '\n';
}

ScopedWarningSilencer::ScopedWarningSilencer() : previous_(warnings_silenced) {
  warnings_silenced = true;
}
ScopedWarningSilencer::~ScopedWarningSilencer() { warnings_silenced = previous_; }

// ----------------------------------------------------------------------------
// elementary operators

namespace ops {

Operator identity(Index dim) { return Operator::Identity(dim, dim); }

Operator sigma_x() {
  Operator m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Operator sigma_y() {
  const Complex i(0, 1);
  Operator m(2, 2);
  m << 0, -i, i, 0;
  return m;
}

Operator sigma_z() {
  Operator m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Operator sigma_plus() {
  Operator m(2, 2);
  m << 0, 1, 0, 0;
  return m;
}

Operator sigma_minus() {
  Operator m(2, 2);
  m << 0, 0, 1, 0;
  return m;
}

Operator annihilation(Index fock_dim) {
  if (fock_dim < 1) throw Error("fock dimension must be positive");
  Operator a = Operator::Zero(fock_dim, fock_dim);
  for (Index n = 1; n < fock_dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

Operator creation(Index fock_dim) { return annihilation(fock_dim).adjoint(); }

Operator number(Index fock_dim) {
  Operator n = Operator::Zero(fock_dim, fock_dim);
  for (Index k = 0; k < fock_dim; ++k) n(k, k) = static_cast<double>(k);
  return n;
}

Operator embed(const Operator& op, std::size_t position, std::span<const Index> dims) {
  if (position >= dims.size()) throw Error("embed: subsystem index out of range");
  if (op.rows() != dims[position] || op.cols() != dims[position])
    throw Error("embed: operator does not match subsystem dimension");
  Operator result = Operator::Identity(1, 1);
  for (std::size_t k = 0; k < dims.size(); ++k)
    result = kron(result, k == position ? op : identity(dims[k]));
  return result;
}

}  // namespace ops

Operator kron(const Operator& a, const Operator& b) {
  Operator result(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      result.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return result;
}

Operator kron(std::initializer_list<Operator> factors) {
  Operator result = Operator::Identity(1, 1);
  for (const auto& f : factors) result = kron(result, f);
  return result;
}

bool is_hermitian(const Operator& op, double tol) {
  if (op.rows() != op.cols()) return false;
  return (op - op.adjoint()).cwiseAbs().maxCoeff() < tol;
}

// ----------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(Operator rho) : rho_(std::move(rho)) {
  if (rho_.rows() == 0 || rho_.rows() != rho_.cols())
    throw Error("density matrix must be square and non-empty");
  const double herm = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
  if (herm >= kHermitianTol)
    throw Error(fmt::format("density matrix not Hermitian (defect {:.3e})", herm));
  const double tr = rho_.trace().real();
  if (std::abs(tr - 1.0) > kTraceTol)
    throw Error(fmt::format("density matrix trace {:.12f} differs from 1", tr));
  Eigen::SelfAdjointEigenSolver<Operator> es(rho_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < kEigenTol)
    throw Error(fmt::format("density matrix has negative eigenvalue {:.3e}",
                            es.eigenvalues().minCoeff()));
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
  const double norm = psi.norm();
  if (norm == 0.0) throw Error("cannot build a density matrix from a zero vector");
  const StateVector unit = psi / norm;
  Operator rho = unit * unit.adjoint();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(std::move(rho));
}

DensityMatrix DensityMatrix::maximally_mixed(Index dim) {
  return DensityMatrix(Operator::Identity(dim, dim) / static_cast<double>(dim));
}

double DensityMatrix::purity() const { return (rho_ * rho_).trace().real(); }

Eigen::VectorXcd DensityMatrix::vectorized() const {
  return Eigen::Map<const Eigen::VectorXcd>(rho_.data(), rho_.size());
}

// ----------------------------------------------------------------------------
// Liouvillian

Liouvillian::Liouvillian(Eigen::MatrixXcd generator, std::vector<Index> subsystem_dims,
                         int boson_subsystem)
    : generator_(std::move(generator)),
      subsystem_dims_(std::move(subsystem_dims)),
      boson_subsystem_(boson_subsystem) {
  if (generator_.rows() != generator_.cols()) throw Error("Liouvillian must be square");
  const auto d = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(generator_.rows()))));
  if (d * d != generator_.rows()) throw Error("Liouvillian size is not a perfect square");
  hilbert_dim_ = d;
  if (subsystem_dims_.empty()) subsystem_dims_ = {d};
  const Index prod = std::accumulate(subsystem_dims_.begin(), subsystem_dims_.end(), Index{1},
                                     std::multiplies<>());
  if (prod != d) throw Error("subsystem dimensions do not match the Liouvillian");
  if (boson_subsystem_ >= static_cast<int>(subsystem_dims_.size()))
    throw Error("boson subsystem index out of range");
}

Liouvillian Liouvillian::zero(Index hilbert_dim) {
  return Liouvillian(Eigen::MatrixXcd::Zero(hilbert_dim * hilbert_dim, hilbert_dim * hilbert_dim),
                     {hilbert_dim});
}

double Liouvillian::trace_defect() const {
  const Index d = hilbert_dim_;
  Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(generator_.cols());
  for (Index i = 0; i < d; ++i) row += generator_.row(i + i * d);
  const double scale = generator_.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return row.cwiseAbs().maxCoeff() / scale;
}

Liouvillian& Liouvillian::operator+=(const Liouvillian& other) {
  if (other.generator_.rows() != generator_.rows())
    throw Error("cannot add Liouvillians of different dimension");
  generator_ += other.generator_;
  return *this;
}

Eigen::MatrixXcd hamiltonian_superoperator(const Operator& h) {
  const Index d = h.rows();
  const Operator id = ops::identity(d);
  const Complex i(0, 1);
  return -i * (kron(id, h) - kron(h.transpose(), id));
}

Eigen::MatrixXcd dissipator_superoperator(const Operator& jump) {
  return cross_dissipator_superoperator(jump, jump);
}

Eigen::MatrixXcd cross_dissipator_superoperator(const Operator& a, const Operator& b) {
  const Index d = a.rows();
  const Operator id = ops::identity(d);
  const Operator bda = b.adjoint() * a;
  // A rho B^dag -> (B^dag)^T kron A = conj(B) kron A
  return kron(b.conjugate(), a) - 0.5 * kron(id, bda) - 0.5 * kron(bda.transpose(), id);
}

Liouvillian lindbladian(const Operator& h, std::span<const Dissipator> dissipators,
                        std::vector<Index> subsystem_dims, int boson_subsystem) {
  if (h.rows() != h.cols()) throw Error("Hamiltonian must be square");
  const double hscale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (!is_hermitian(h, 1e-12 * hscale)) throw Error("Hamiltonian is not Hermitian");
  Eigen::MatrixXcd gen = hamiltonian_superoperator(h);
  for (const auto& dsp : dissipators) {
    if (dsp.rate < 0.0 || !std::isfinite(dsp.rate)) throw Error("non-physical dissipator rate");
    if (dsp.jump.rows() != h.rows() || dsp.jump.cols() != h.cols())
      throw Error("jump operator dimension does not match the Hamiltonian");
    if (dsp.rate == 0.0) continue;
    gen += dsp.rate * dissipator_superoperator(dsp.jump);
  }
  return Liouvillian(std::move(gen), std::move(subsystem_dims), boson_subsystem);
}

// ----------------------------------------------------------------------------
// Propagator

Propagator::Propagator(const Liouvillian& generator)
    : generator_(generator.matrix()), hilbert_dim_(generator.hilbert_dim()) {
  const Index n = generator_.rows();
  Eigen::MatrixXcd work = generator_;
  eigenvalues_.resize(n);
  eigenvectors_.resize(n, n);
  const lapack_int info = LAPACKE_zgeev(
      LAPACK_COL_MAJOR, 'N', 'V', static_cast<lapack_int>(n), work.data(),
      static_cast<lapack_int>(n), eigenvalues_.data(), nullptr, static_cast<lapack_int>(n),
      eigenvectors_.data(), static_cast<lapack_int>(n));
  if (info != 0) {
    warn(fmt::format("zgeev failed (info={}); falling back to Pade exponentials", info));
    condition_ = std::numeric_limits<double>::infinity();
    return;
  }
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(eigenvectors_);
  const double rcond = lu.rcond();
  condition_ = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(condition_ <= kMaxEigenvectorCondition)) return;
  inverse_eigenvectors_ = lu.inverse();
  diagonalized_ = true;
}

Eigen::VectorXcd Propagator::evolve(const Eigen::VectorXcd& initial, double t) const {
  if (initial.size() != generator_.rows()) throw Error("state dimension does not match generator");
  if (!std::isfinite(t)) throw Error("non-finite propagation time");
  if (diagonalized_) {
    const Eigen::VectorXcd coeffs = inverse_eigenvectors_ * initial;
    const Eigen::VectorXcd phases = (eigenvalues_ * t).array().exp().matrix();
    return eigenvectors_ * phases.cwiseProduct(coeffs);
  }
  const Eigen::MatrixXcd step = (generator_ * t).exp();
  if (!step.allFinite())
    throw Error(fmt::format("matrix exponential failed at t={:.3e} s (eigenvector condition {:.3e})",
                            t, condition_));
  return step * initial;
}

std::vector<Eigen::VectorXcd> Propagator::evolve(const Eigen::VectorXcd& initial,
                                                 std::span<const double> times) const {
  if (initial.size() != generator_.rows()) throw Error("state dimension does not match generator");
  std::vector<Eigen::VectorXcd> out;
  out.reserve(times.size());
  if (!diagonalized_) {
    for (double t : times) out.push_back(evolve(initial, t));
    return out;
  }
  const Eigen::VectorXcd coeffs = inverse_eigenvectors_ * initial;
  for (double t : times) {
    if (!std::isfinite(t)) throw Error("non-finite propagation time");
    const Eigen::VectorXcd weighted =
        (eigenvalues_ * t).array().exp().matrix().cwiseProduct(coeffs);
    out.push_back(eigenvectors_ * weighted);
  }
  return out;
}

double hermiticity_defect(const Eigen::VectorXcd& vec, Index dim) {
  const Eigen::Map<const Operator> rho(vec.data(), dim, dim);
  return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

DensityMatrix to_density_matrix(const Eigen::VectorXcd& vec, Index dim) {
  if (vec.size() != dim * dim) throw Error("vectorized state has the wrong size");
  const Eigen::Map<const Operator> raw(vec.data(), dim, dim);
  Operator rho = 0.5 * (raw + raw.adjoint());
  const double tr = rho.trace().real();
  if (!std::isfinite(tr) || std::abs(tr - 1.0) > kMaxTraceDrift)
    throw Error(fmt::format("propagated state lost normalization (trace {:.9f})", tr));
  rho /= tr;
  return DensityMatrix(std::move(rho));
}

std::vector<DensityMatrix> propagate(const Liouvillian& generator, const DensityMatrix& rho0,
                                     std::span<const double> times) {
  if (rho0.dim() != generator.hilbert_dim())
    throw Error("initial state dimension does not match generator");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < 0.0) throw Error("propagation times must be non-negative");
    if (k > 0 && times[k] < times[k - 1]) throw Error("propagation times must be sorted");
  }
  const Propagator prop(generator);
  const auto vecs = prop.evolve(rho0.vectorized(), times);
  std::vector<DensityMatrix> out;
  out.reserve(vecs.size());
  for (const auto& v : vecs) out.push_back(to_density_matrix(v, rho0.dim()));
  return out;
}

// ----------------------------------------------------------------------------
// expectation values and partial traces

double expect(const Operator& observable, const Operator& rho) {
  if (observable.rows() != rho.rows() || observable.cols() != rho.cols())
    throw Error(fmt::format("dimension mismatch: observable {}x{}, state {}x{}",
                            observable.rows(), observable.cols(), rho.rows(), rho.cols()));
  // Tr[O rho] = sum_ij O_ij rho_ji
  const Complex value = observable.cwiseProduct(rho.transpose()).sum();
  if (std::abs(value.imag()) > 1e-9)
    warn(fmt::format("expectation value has imaginary part {:.3e}", value.imag()));
  return value.real();
}

double expect(const Operator& observable, const DensityMatrix& rho) {
  return expect(observable, rho.matrix());
}

Operator partial_trace(const Operator& rho, std::span<const Index> dims,
                       std::span<const std::size_t> keep) {
  const Index total = std::accumulate(dims.begin(), dims.end(), Index{1}, std::multiplies<>());
  if (dims.empty() || total != rho.rows() || rho.rows() != rho.cols())
    throw Error("partial_trace: subsystem dimensions inconsistent with state");
  std::vector<bool> kept(dims.size(), false);
  for (std::size_t k : keep) {
    if (k >= dims.size()) throw Error("partial_trace: kept subsystem out of range");
    if (kept[k]) throw Error("partial_trace: duplicate kept subsystem");
    kept[k] = true;
  }
  // kept/traced sub-indices of a full index (first subsystem most significant)
  const std::size_t n = dims.size();
  auto split = [&](Index full, Index& kept_index, Index& traced_index) {
    std::vector<Index> digits(n);
    for (std::size_t k = n; k-- > 0;) {
      digits[k] = full % dims[k];
      full /= dims[k];
    }
    kept_index = 0;
    traced_index = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (kept[k])
        kept_index = kept_index * dims[k] + digits[k];
      else
        traced_index = traced_index * dims[k] + digits[k];
    }
  };
  Index kept_dim = 1;
  for (std::size_t k = 0; k < n; ++k)
    if (kept[k]) kept_dim *= dims[k];

  std::vector<Index> kept_of(total), traced_of(total);
  for (Index i = 0; i < total; ++i) split(i, kept_of[i], traced_of[i]);

  Operator out = Operator::Zero(kept_dim, kept_dim);
  for (Index j = 0; j < total; ++j)
    for (Index i = 0; i < total; ++i)
      if (traced_of[i] == traced_of[j]) out(kept_of[i], kept_of[j]) += rho(i, j);
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const Index> dims,
                            std::span<const std::size_t> keep) {
  Operator reduced = partial_trace(rho.matrix(), dims, keep);
  reduced = 0.5 * (reduced + reduced.adjoint()).eval();
  return DensityMatrix(std::move(reduced));
}

DensityMatrix steady_state(const Liouvillian& generator) {
  const Index d = generator.hilbert_dim();
  const Index n = d * d;
  Eigen::MatrixXcd system = generator.matrix();
  const double scale = std::max(1.0, system.cwiseAbs().maxCoeff());
  // vec(I)^dag L = 0, so the (0,0) population row is redundant: swap it for
  // the normalization constraint Tr rho = 1.
  system.row(0).setZero();
  for (Index i = 0; i < d; ++i) system(0, i + i * d) = scale;
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
  rhs(0) = scale;
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(system);
  const double rcond = lu.rcond();
  if (!lu.isInvertible() || !(rcond > 1e-12))
    throw Error(fmt::format("steady state is not unique (reciprocal condition {:.3e})", rcond));
  const Eigen::VectorXcd x = lu.solve(rhs);
  const Eigen::Map<const Operator> raw(x.data(), d, d);
  Operator rho = 0.5 * (raw + raw.adjoint());
  rho /= rho.trace().real();
  return DensityMatrix(std::move(rho));
}

}  // namespace qns
