#include "stablerepr/weighted.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stablerepr {

WeightedSpace::WeightedSpace(Vector xi) : xi_(std::move(xi)) {
  if (xi_.empty()) throw std::invalid_argument("WeightedSpace: empty weight vector");
  double sum = 0.0;
  for (double x : xi_) {
    if (!(x > 0.0)) throw std::invalid_argument("WeightedSpace: weights must be positive");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-10)
    throw std::invalid_argument("WeightedSpace: weights must sum to 1 (got " +
                                std::to_string(sum) + ")");
  sqrt_.resize(xi_.size());
  inv_sqrt_.resize(xi_.size());
  for (std::size_t i = 0; i < xi_.size(); ++i) {
    sqrt_[i] = std::sqrt(xi_[i]);
    inv_sqrt_[i] = 1.0 / sqrt_[i];
  }
}

WeightedSpace WeightedSpace::uniform(std::size_t n) {
  return WeightedSpace(Vector(n, 1.0 / static_cast<double>(n)));
}

Matrix WeightedSpace::whiten(const Matrix& a) const {
  Matrix b = a;
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) b(i, j) *= sqrt_[i] * inv_sqrt_[j];
  return b;
}

Matrix WeightedSpace::unwhiten(const Matrix& b) const {
  Matrix a = b;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) *= inv_sqrt_[i] * sqrt_[j];
  return a;
}

Matrix WeightedSpace::whiten_basis(const Matrix& phi) const {
  Matrix q = phi;
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t j = 0; j < q.cols(); ++j) q(i, j) *= sqrt_[i];
  return q;
}

Matrix WeightedSpace::unwhiten_basis(const Matrix& q) const {
  Matrix phi = q;
  for (std::size_t i = 0; i < phi.rows(); ++i)
    for (std::size_t j = 0; j < phi.cols(); ++j) phi(i, j) *= inv_sqrt_[i];
  return phi;
}

Vector WeightedSpace::whiten_vector(const Vector& v) const {
  Vector w = v;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= sqrt_[i];
  return w;
}

double weighted_inner(const Vector& v, const Vector& w, const WeightedSpace& space) {
  if (v.size() != space.dim() || w.size() != space.dim())
    throw std::invalid_argument("weighted_inner: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * space.xi(i) * w[i];
  return s;
}

double weighted_norm(const Vector& v, const WeightedSpace& space) {
  return std::sqrt(std::max(0.0, weighted_inner(v, v, space)));
}

double Spectrum::spectral_radius() const {
  double r = 0.0;
  for (const auto& z : eigenvalues) r = std::max(r, std::abs(z));
  return r;
}

double Spectrum::min_real_part() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& z : eigenvalues) m = std::min(m, z.real());
  return m;
}

double Spectrum::max_real_part() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& z : eigenvalues) m = std::max(m, z.real());
  return m;
}

Spectrum general_eigenvalues(const Matrix& a) {
  Spectrum s;
  s.eigenvalues = dense_eigenvalues(a);
  std::stable_sort(s.eigenvalues.begin(), s.eigenvalues.end(),
                   [](const Complex& x, const Complex& y) {
                     const double mx = std::abs(x), my = std::abs(y);
                     const double tol = 1e-12 * std::max({1.0, mx, my});
                     if (mx > my + tol) return true;
                     if (my > mx + tol) return false;
                     if (x.real() > y.real() + tol) return true;
                     if (y.real() > x.real() + tol) return false;
                     return x.imag() > y.imag();  // conjugates adjacent, +i first
                   });
  return s;
}

Matrix euclidean_orthonormalize(const Matrix& columns, std::size_t* rank, double rel_tol,
                                bool stop_at_dependence) {
  const std::size_t n = columns.rows(), d = columns.cols();
  Matrix q(n, d);
  std::size_t r = 0;
  double scale = 0.0;  // largest column norm seen, the rank reference
  for (std::size_t j = 0; j < d; ++j) {
    Vector v = columns.col(j);
    scale = std::max(scale, norm2(v));
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < r; ++k) {
        const Vector qk = q.col(k);
        const double c = dot(qk, v);
        for (std::size_t i = 0; i < n; ++i) v[i] -= c * qk[i];
      }
    }
    const double rem = norm2(v);
    if (rem <= rel_tol * std::max(scale, 1e-300)) {
      if (!rank)
        throw std::invalid_argument("orthogonalize: rank-deficient at column " +
                                    std::to_string(j));
      if (stop_at_dependence) break;
      continue;  // skip this column, keep scanning
    }
    for (std::size_t i = 0; i < n; ++i) q(i, r) = v[i] / rem;
    ++r;
  }
  if (rank) *rank = r;
  if (r == d) return q;
  Matrix out(n, r);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < r; ++k) out(i, k) = q(i, k);
  return out;
}

OrthogonalBasis orthogonalize(const Matrix& columns, const WeightedSpace& space) {
  if (columns.rows() != space.dim())
    throw std::invalid_argument("orthogonalize: dimension mismatch");
  const Matrix w = space.whiten_basis(columns);
  const Matrix q = euclidean_orthonormalize(w, nullptr);
  return OrthogonalBasis{space.unwhiten_basis(q), space.xi()};
}

Matrix projection_operator(const Matrix& basis, const WeightedSpace& space) {
  const Matrix q = space.whiten_basis(orthogonalize(basis, space).columns);
  Matrix proj = q * q.transpose();  // whitened projector
  return space.unwhiten(proj);
}

Matrix project_columns(const Matrix& basis, const WeightedSpace& space, const Matrix& m) {
  const Matrix phi = orthogonalize(basis, space).columns;
  // Pi M = Phi (Phiᵀ Xi M) for a Xi-orthonormal Phi.
  Matrix xim = m;
  for (std::size_t i = 0; i < xim.rows(); ++i)
    for (std::size_t j = 0; j < xim.cols(); ++j) xim(i, j) *= space.xi(i);
  return phi * (phi.transpose() * xim);
}

SelfAdjointEig self_adjoint_eig(const Matrix& a, const WeightedSpace& space, bool symmetrize) {
  if (a.rows() != space.dim() || a.cols() != space.dim())
    throw std::invalid_argument("self_adjoint_eig: dimension mismatch");
  if (!symmetrize) {
    double asym = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) {
        const double diff = space.xi(i) * a(i, j) - a(j, i) * space.xi(j);
        asym += diff * diff;
      }
    if (std::sqrt(asym) >= 1e-8)
      throw std::invalid_argument(
          "self_adjoint_eig: matrix is not Xi-self-adjoint (pass symmetrize to force)");
  }
  const Matrix b = space.whiten(a);
  const SymmetricEig se = symmetric_eigen(b);  // symmetrizes internally
  return SelfAdjointEig{se.eigenvalues, space.unwhiten_basis(se.vectors)};
}

WeightedSvd weighted_svd(const Matrix& a, const WeightedSpace& space, std::size_t d) {
  const std::size_t n = space.dim();
  if (a.rows() != n || a.cols() != n)
    throw std::invalid_argument("weighted_svd: dimension mismatch");
  if (d > n) throw std::invalid_argument("weighted_svd: d exceeds dimension");
  const SvdResult s = singular_value_decompose(space.whiten(a));
  WeightedSvd out;
  out.all_sigma = s.sigma;
  out.sigma.assign(s.sigma.begin(), s.sigma.begin() + d);
  out.u = space.unwhiten_basis(s.u.cols_range(0, d));
  out.v = space.unwhiten_basis(s.v.cols_range(0, d));
  return out;
}

bool WeightedSchur::is_block_aligned(std::size_t k) const {
  if (k == quasi_triangular.rows()) return true;
  return std::binary_search(block_starts.begin(), block_starts.end(), k);
}

std::size_t WeightedSchur::aligned_size(std::size_t k) const {
  if (k >= quasi_triangular.rows()) return quasi_triangular.rows();
  return is_block_aligned(k) ? k : k + 1;
}

WeightedSchur real_schur(const Matrix& a, const WeightedSpace& space) {
  if (a.rows() != space.dim() || a.cols() != space.dim())
    throw std::invalid_argument("real_schur: dimension mismatch");
  const RealSchurResult r = real_schur_decompose(space.whiten(a), true);
  WeightedSchur out;
  out.basis = space.unwhiten_basis(r.u);
  out.quasi_triangular = r.t;
  out.eigenvalues = r.eigenvalues;
  out.block_starts = r.block_starts;
  return out;
}

double weighted_condition_number(const Matrix& a, const WeightedSpace& space) {
  const SvdResult s = singular_value_decompose(space.whiten(a));
  const double smin = s.sigma.back();
  if (smin <= s.sigma.front() * 1e-15 || smin == 0.0)
    throw NumericalError("weighted_condition_number: singular input");
  return s.sigma.front() / smin;
}

double relative_rank_gap(const Matrix& columns, const WeightedSpace& space) {
  const SvdResult s = singular_value_decompose(space.whiten_basis(columns));
  if (s.sigma.front() == 0.0) return 0.0;
  return s.sigma.back() / s.sigma.front();
}

double subspace_distance(const Matrix& phi_a, const Matrix& phi_b, const WeightedSpace& space) {
  if (phi_a.rows() != space.dim() || phi_b.rows() != space.dim())
    throw std::invalid_argument("subspace_distance: dimension mismatch");
  std::size_t ra = 0, rb = 0;
  const Matrix qa = euclidean_orthonormalize(space.whiten_basis(phi_a), &ra);
  const Matrix qb = euclidean_orthonormalize(space.whiten_basis(phi_b), &rb);
  if (ra != phi_a.cols() || rb != phi_b.cols())
    throw std::invalid_argument("subspace_distance: rank-deficient basis");
  // Form the whitened projector difference directly; the factored
  // rank_a + rank_b − 2‖QaᵀQb‖² route cancels catastrophically for
  // near-identical spans.
  Matrix diff = qa * qa.transpose() - qb * qb.transpose();
  return diff.frobenius_norm();
}

}  // namespace stablerepr
