#include "stablerepr/eigen_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace stablerepr {

namespace {

constexpr double kMachEps = 2.220446049250313e-16;

// Parlett-Reinsch balancing (scaling pass only, radix 2). Similarity by a
// diagonal matrix, so eigenvalues are untouched.
void balance_in_place(Matrix& a) {
  const std::size_t n = a.rows();
  bool done = false;
  while (!done) {
    done = true;
    for (std::size_t i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      const double s = c + r;
      double g = r / 2.0;
      double f = 1.0;
      while (c < g) { f *= 2.0; c *= 4.0; }
      g = r * 2.0;
      while (c >= g) { f /= 2.0; c /= 4.0; }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        const double ginv = 1.0 / f;
        for (std::size_t j = 0; j < n; ++j) a(i, j) *= ginv;
        for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
      }
    }
  }
}

// Householder reduction to upper Hessenberg form. When v is non-null it
// receives the accumulated orthogonal transform (A = V H Vᵀ).
void hessenberg_in_place(Matrix& h, Matrix* v) {
  const std::size_t n = h.rows();
  if (v) *v = Matrix::identity(n);
  if (n < 3) return;
  const std::size_t low = 0, high = n - 1;
  Vector ort(n, 0.0);

  for (std::size_t m = low + 1; m <= high - 1; ++m) {
    double scale = 0.0;
    for (std::size_t i = m; i <= high; ++i) scale += std::abs(h(i, m - 1));
    if (scale == 0.0) continue;

    double hsum = 0.0;
    for (std::size_t i = high + 1; i-- > m;) {
      ort[i] = h(i, m - 1) / scale;
      hsum += ort[i] * ort[i];
    }
    double g = std::sqrt(hsum);
    if (ort[m] > 0) g = -g;
    hsum -= ort[m] * g;
    ort[m] -= g;

    // Apply Householder similarity (I - uuᵀ/h) A (I - uuᵀ/h).
    for (std::size_t j = m; j < n; ++j) {
      double f = 0.0;
      for (std::size_t i = high + 1; i-- > m;) f += ort[i] * h(i, j);
      f /= hsum;
      for (std::size_t i = m; i <= high; ++i) h(i, j) -= f * ort[i];
    }
    for (std::size_t i = 0; i <= high; ++i) {
      double f = 0.0;
      for (std::size_t j = high + 1; j-- > m;) f += ort[j] * h(i, j);
      f /= hsum;
      for (std::size_t j = m; j <= high; ++j) h(i, j) -= f * ort[j];
    }
    ort[m] *= scale;
    h(m, m - 1) = scale * g;
  }

  if (v) {
    for (std::size_t m = high - 1; m >= low + 1; --m) {
      if (h(m, m - 1) != 0.0) {
        for (std::size_t i = m + 1; i <= high; ++i) ort[i] = h(i, m - 1);
        for (std::size_t j = m; j <= high; ++j) {
          double g = 0.0;
          for (std::size_t i = m; i <= high; ++i) g += ort[i] * (*v)(i, j);
          // Double division avoids possible underflow.
          g = (g / ort[m]) / h(m, m - 1);
          for (std::size_t i = m; i <= high; ++i) (*v)(i, j) += g * ort[i];
        }
      }
      if (m == low + 1) break;
    }
  }

  // Zero the sub-Hessenberg part left by the reflectors.
  for (std::size_t i = 2; i < n; ++i)
    for (std::size_t j = 0; j + 2 <= i; ++j) h(i, j) = 0.0;
}

// Implicitly shifted (Francis double-shift) QR iteration on an upper
// Hessenberg matrix, after Wilkinson / the classic EISPACK hqr2 scheme.
// On return h is quasi upper triangular; v (when given) accumulates the
// orthogonal transform; re/im receive eigenvalues in diagonal order.
void hqr_in_place(Matrix& h, Matrix* v, Vector& re, Vector& im) {
  const int nn = static_cast<int>(h.rows());
  re.assign(nn, 0.0);
  im.assign(nn, 0.0);
  int n = nn - 1;
  const int low = 0, high = nn - 1;
  const double eps = kMachEps;
  double exshift = 0.0;
  double p = 0, q = 0, r = 0, s = 0, z = 0, w, x, y;

  double norm = 0.0;
  for (int i = 0; i < nn; ++i)
    for (int j = std::max(i - 1, 0); j < nn; ++j) norm += std::abs(h(i, j));
  if (norm == 0.0) return;  // zero matrix

  long total_sweeps = 0;
  const long sweep_cap = 100L * std::max(nn, 4);

  int iter = 0;
  while (n >= low) {
    // Look for a single small subdiagonal element.
    int l = n;
    while (l > low) {
      s = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
      if (s == 0.0) s = norm;
      if (std::abs(h(l, l - 1)) < eps * s) break;
      --l;
    }

    if (l == n) {
      // One root found.
      if (n > 0) h(n, n - 1) = 0.0;
      h(n, n) += exshift;
      re[n] = h(n, n);
      im[n] = 0.0;
      --n;
      iter = 0;
    } else if (l == n - 1) {
      // Two roots found.
      w = h(n, n - 1) * h(n - 1, n);
      p = (h(n - 1, n - 1) - h(n, n)) / 2.0;
      q = p * p + w;
      z = std::sqrt(std::abs(q));
      h(n, n) += exshift;
      h(n - 1, n - 1) += exshift;
      x = h(n, n);
      if (n - 1 > 0) h(n - 1, n - 2) = 0.0;

      if (q >= 0) {
        // Real pair: split the block with a rotation.
        z = (p >= 0) ? p + z : p - z;
        re[n - 1] = x + z;
        re[n] = (z != 0.0) ? x - w / z : re[n - 1];
        im[n - 1] = im[n] = 0.0;
        x = h(n, n - 1);
        s = std::abs(x) + std::abs(z);
        p = x / s;
        q = z / s;
        r = std::sqrt(p * p + q * q);
        p /= r;
        q /= r;
        for (int j = n - 1; j < nn; ++j) {
          z = h(n - 1, j);
          h(n - 1, j) = q * z + p * h(n, j);
          h(n, j) = q * h(n, j) - p * z;
        }
        for (int i = 0; i <= n; ++i) {
          z = h(i, n - 1);
          h(i, n - 1) = q * z + p * h(i, n);
          h(i, n) = q * h(i, n) - p * z;
        }
        if (v) {
          for (int i = low; i <= high; ++i) {
            z = (*v)(i, n - 1);
            (*v)(i, n - 1) = q * z + p * (*v)(i, n);
            (*v)(i, n) = q * (*v)(i, n) - p * z;
          }
        }
        h(n, n - 1) = 0.0;
      } else {
        // Complex pair stays as a 2x2 block.
        re[n - 1] = re[n] = x + p;
        im[n - 1] = z;
        im[n] = -z;
      }
      n -= 2;
      iter = 0;
    } else {
      // No convergence yet: perform a double QR sweep.
      x = h(n, n);
      y = 0.0;
      w = 0.0;
      if (l < n) {
        y = h(n - 1, n - 1);
        w = h(n, n - 1) * h(n - 1, n);
      }

      if (iter == 10) {
        // Wilkinson's ad hoc exceptional shift.
        exshift += x;
        for (int i = low; i <= n; ++i) h(i, i) -= x;
        s = std::abs(h(n, n - 1)) + std::abs(h(n - 1, n - 2));
        x = y = 0.75 * s;
        w = -0.4375 * s * s;
      }
      if (iter == 20) {
        s = (y - x) / 2.0;
        s = s * s + w;
        if (s > 0) {
          s = std::sqrt(s);
          if (y < x) s = -s;
          s = x - w / ((y - x) / 2.0 + s);
          for (int i = low; i <= n; ++i) h(i, i) -= s;
          exshift += s;
          x = y = w = 0.964;
        }
      }

      ++iter;
      if (++total_sweeps > sweep_cap) {
        throw NumericalError("QR iteration exceeded sweep cap with " +
                             std::to_string(nn - 1 - n) + " of " + std::to_string(nn) +
                             " eigenvalues deflated");
      }

      // Look for two consecutive small subdiagonal elements.
      int m = n - 2;
      while (m >= l) {
        z = h(m, m);
        r = x - z;
        s = y - z;
        p = (r * s - w) / h(m + 1, m) + h(m, m + 1);
        q = h(m + 1, m + 1) - z - r - s;
        r = h(m + 2, m + 1);
        s = std::abs(p) + std::abs(q) + std::abs(r);
        p /= s;
        q /= s;
        r /= s;
        if (m == l) break;
        if (std::abs(h(m, m - 1)) * (std::abs(q) + std::abs(r)) <
            eps * (std::abs(p) *
                   (std::abs(h(m - 1, m - 1)) + std::abs(z) + std::abs(h(m + 1, m + 1)))))
          break;
        --m;
      }

      for (int i = m + 2; i <= n; ++i) {
        h(i, i - 2) = 0.0;
        if (i > m + 2) h(i, i - 3) = 0.0;
      }

      // Double QR step on rows l..n and columns m..n. The sweep keeps the
      // matrix Hessenberg apart from the 3x3 bulge being chased; the bulge
      // cells are zeroed as the reflector passes them.
      for (int k = m; k <= n - 1; ++k) {
        const bool notlast = (k != n - 1);
        if (k != m) {
          p = h(k, k - 1);
          q = h(k + 1, k - 1);
          r = notlast ? h(k + 2, k - 1) : 0.0;
          x = std::abs(p) + std::abs(q) + std::abs(r);
          if (x == 0.0) continue;
          p /= x;
          q /= x;
          r /= x;
        }
        s = std::sqrt(p * p + q * q + r * r);
        if (p < 0) s = -s;
        if (s != 0) {
          if (k != m) {
            // The reflector annihilates the bulge below this entry exactly.
            h(k, k - 1) = -s * x;
            h(k + 1, k - 1) = 0.0;
            if (notlast) h(k + 2, k - 1) = 0.0;
          } else if (l != m) {
            h(k, k - 1) = -h(k, k - 1);
          }
          p += s;
          x = p / s;
          y = q / s;
          z = r / s;
          q /= p;
          r /= p;

          for (int j = k; j < nn; ++j) {
            p = h(k, j) + q * h(k + 1, j);
            if (notlast) p += r * h(k + 2, j);
            h(k, j) -= p * x;
            h(k + 1, j) -= p * y;
            if (notlast) h(k + 2, j) -= p * z;
          }
          for (int i = 0; i <= std::min(n, k + 3); ++i) {
            p = x * h(i, k) + y * h(i, k + 1);
            if (notlast) p += z * h(i, k + 2);
            h(i, k) -= p;
            h(i, k + 1) -= p * q;
            if (notlast) h(i, k + 2) -= p * r;
          }
          if (v) {
            for (int i = low; i <= high; ++i) {
              p = x * (*v)(i, k) + y * (*v)(i, k + 1);
              if (notlast) p += z * (*v)(i, k + 2);
              (*v)(i, k) -= p;
              (*v)(i, k + 1) -= p * q;
              if (notlast) (*v)(i, k + 2) -= p * r;
            }
          }
        }
      }
    }
  }

  // Everything below the first subdiagonal is structurally zero by now.
  for (int i = 2; i < nn; ++i)
    for (int j = 0; j + 1 < i; ++j) h(i, j) = 0.0;
}

struct Block {
  std::size_t start;
  std::size_t size;  // 1 or 2
};

std::vector<Block> diagonal_blocks(const Matrix& t) {
  std::vector<Block> blocks;
  const std::size_t n = t.rows();
  std::size_t i = 0;
  while (i < n) {
    if (i + 1 < n && t(i + 1, i) != 0.0) {
      blocks.push_back({i, 2});
      i += 2;
    } else {
      blocks.push_back({i, 1});
      ++i;
    }
  }
  return blocks;
}

Complex block_eigenvalue(const Matrix& t, const Block& b) {
  if (b.size == 1) return Complex(t(b.start, b.start), 0.0);
  const double a = t(b.start, b.start), bb = t(b.start, b.start + 1);
  const double c = t(b.start + 1, b.start), d = t(b.start + 1, b.start + 1);
  const double pr = (a + d) / 2.0;
  const double disc = (a - d) * (a - d) / 4.0 + bb * c;
  if (disc >= 0) return Complex(pr + std::sqrt(disc), 0.0);  // should not occur
  return Complex(pr, std::sqrt(-disc));
}

// Splits a 2x2 diagonal block with real eigenvalues into two 1x1 blocks via
// a plane rotation (same construction as the two-root branch of hqr).
void split_real_block(Matrix& t, Matrix* u, std::size_t k) {
  const std::size_t nn = t.rows();
  const double a = t(k, k), b = t(k, k + 1), c = t(k + 1, k), d = t(k + 1, k + 1);
  if (c == 0.0) return;
  const double w = c * b;
  const double p0 = (a - d) / 2.0;
  const double qd = p0 * p0 + w;
  if (qd < 0) return;  // complex pair, leave alone
  double z = std::sqrt(qd);
  z = (p0 >= 0) ? p0 + z : p0 - z;
  double x = c;
  double s = std::abs(x) + std::abs(z);
  if (s == 0.0) return;
  double p = x / s, q = z / s;
  const double r = std::sqrt(p * p + q * q);
  p /= r;
  q /= r;
  for (std::size_t j = k; j < nn; ++j) {
    const double zz = t(k, j);
    t(k, j) = q * zz + p * t(k + 1, j);
    t(k + 1, j) = q * t(k + 1, j) - p * zz;
  }
  for (std::size_t i = 0; i <= k + 1; ++i) {
    const double zz = t(i, k);
    t(i, k) = q * zz + p * t(i, k + 1);
    t(i, k + 1) = q * t(i, k + 1) - p * zz;
  }
  if (u) {
    for (std::size_t i = 0; i < nn; ++i) {
      const double zz = (*u)(i, k);
      (*u)(i, k) = q * zz + p * (*u)(i, k + 1);
      (*u)(i, k + 1) = q * (*u)(i, k + 1) - p * zz;
    }
  }
  t(k + 1, k) = 0.0;
}

// Swaps adjacent diagonal blocks T11 (p x p at `start`) and T22 (q x q) by
// the direct method: solve the small Sylvester equation for the invariant
// subspace of T22, orthonormalize, and apply the resulting similarity.
// Returns false when the Sylvester system is numerically singular (the
// blocks share an eigenvalue and the swap is meaningless).
bool swap_adjacent_blocks(Matrix& t, Matrix& u, std::size_t start, std::size_t p, std::size_t q) {
  const std::size_t m = p + q;
  const std::size_t n = t.rows();

  Matrix t11(p, p), t12(p, q), t22(q, q);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) t11(i, j) = t(start + i, start + j);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < q; ++j) t12(i, j) = t(start + i, start + p + j);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = 0; j < q; ++j) t22(i, j) = t(start + p + i, start + p + j);

  // Solve T11 X - X T22 = -T12 through the Kronecker form.
  const std::size_t pq = p * q;
  Matrix sys(pq, pq);
  Vector rhs(pq);
  for (std::size_t rI = 0; rI < p; ++rI)
    for (std::size_t cI = 0; cI < q; ++cI) {
      const std::size_t row = rI + cI * p;
      rhs[row] = -t12(rI, cI);
      for (std::size_t rJ = 0; rJ < p; ++rJ)
        for (std::size_t cJ = 0; cJ < q; ++cJ) {
          const std::size_t col = rJ + cJ * p;
          double val = 0.0;
          if (cI == cJ) val += t11(rI, rJ);
          if (rI == rJ) val -= t22(cJ, cI);
          sys(row, col) = val;
        }
    }
  Vector xvec;
  try {
    LuFactorization lu(sys);
    if (lu.nearly_singular(1e-12)) return false;
    xvec = lu.solve(rhs);
  } catch (const NumericalError&) {
    return false;
  }

  // Z = [X; I_q], QR-factorized to get the full orthogonal G (m x m).
  Matrix zmat(m, q);
  for (std::size_t rI = 0; rI < p; ++rI)
    for (std::size_t cI = 0; cI < q; ++cI) zmat(rI, cI) = xvec[rI + cI * p];
  for (std::size_t cI = 0; cI < q; ++cI) zmat(p + cI, cI) = 1.0;

  Matrix g = Matrix::identity(m);
  for (std::size_t k = 0; k < q; ++k) {
    Vector vk(m, 0.0);
    double nrm = 0.0;
    for (std::size_t i = k; i < m; ++i) {
      vk[i] = zmat(i, k);
      nrm += vk[i] * vk[i];
    }
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) return false;
    if (vk[k] < 0) nrm = -nrm;
    vk[k] += nrm;
    double beta = 0.0;
    for (std::size_t i = k; i < m; ++i) beta += vk[i] * vk[i];
    if (beta == 0.0) continue;
    beta = 2.0 / beta;
    // Apply reflector to zmat and accumulate into g (right multiplication).
    for (std::size_t j = 0; j < q; ++j) {
      double f = 0.0;
      for (std::size_t i = k; i < m; ++i) f += vk[i] * zmat(i, j);
      f *= beta;
      for (std::size_t i = k; i < m; ++i) zmat(i, j) -= f * vk[i];
    }
    for (std::size_t i = 0; i < m; ++i) {
      double f = 0.0;
      for (std::size_t j = k; j < m; ++j) f += g(i, j) * vk[j];
      f *= beta;
      for (std::size_t j = k; j < m; ++j) g(i, j) -= f * vk[j];
    }
  }

  // T <- Ĝᵀ T Ĝ, U <- U Ĝ with Ĝ acting on the window [start, start+m).
  for (std::size_t j = start; j < n; ++j) {
    Vector tmp(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < m; ++k) tmp[i] += g(k, i) * t(start + k, j);
    for (std::size_t i = 0; i < m; ++i) t(start + i, j) = tmp[i];
  }
  for (std::size_t i = 0; i < std::min(n, start + m); ++i) {
    Vector tmp(m, 0.0);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k) tmp[j] += t(i, start + k) * g(k, j);
    for (std::size_t j = 0; j < m; ++j) t(i, start + j) = tmp[j];
  }
  for (std::size_t i = 0; i < n; ++i) {
    Vector tmp(m, 0.0);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k) tmp[j] += u(i, start + k) * g(k, j);
    for (std::size_t j = 0; j < m; ++j) u(i, start + j) = tmp[j];
  }

  // The swapped leading block is q x q, trailing is p x p; the rectangle
  // between them is zero up to roundoff. Zero it exactly.
  for (std::size_t i = q; i < m; ++i)
    for (std::size_t j = 0; j < q; ++j) t(start + i, start + j) = 0.0;

  // A swapped 2x2 block should still hold a complex pair; if roundoff made
  // its discriminant cross zero, split it.
  if (q == 2) {
    const double a = t(start, start), b = t(start, start + 1);
    const double c = t(start + 1, start), d = t(start + 1, start + 1);
    if ((a - d) * (a - d) / 4.0 + b * c >= 0) split_real_block(t, &u, start);
  }
  if (p == 2) {
    const std::size_t s2 = start + q;
    const double a = t(s2, s2), b = t(s2, s2 + 1);
    const double c = t(s2 + 1, s2), d = t(s2 + 1, s2 + 1);
    if ((a - d) * (a - d) / 4.0 + b * c >= 0) split_real_block(t, &u, s2);
  }
  return true;
}

// Descending magnitude, ties by descending real part.
bool should_precede(const Complex& a, const Complex& b) {
  const double ma = std::abs(a), mb = std::abs(b);
  const double tol = 1e-12 * std::max({1.0, ma, mb});
  if (ma > mb + tol) return true;
  if (mb > ma + tol) return false;
  return a.real() > b.real() + tol;
}

void order_blocks(Matrix& t, Matrix& u) {
  bool changed = true;
  while (changed) {
    changed = false;
    auto blocks = diagonal_blocks(t);
    for (std::size_t k = 0; k + 1 < blocks.size(); ++k) {
      const Complex cur = block_eigenvalue(t, blocks[k]);
      const Complex nxt = block_eigenvalue(t, blocks[k + 1]);
      if (should_precede(nxt, cur)) {
        if (swap_adjacent_blocks(t, u, blocks[k].start, blocks[k].size, blocks[k + 1].size)) {
          changed = true;
          blocks = diagonal_blocks(t);  // sizes may have shifted position
        }
      }
    }
  }
}

}  // namespace

bool RealSchurResult::is_block_aligned(std::size_t k) const {
  if (k == t.rows()) return true;
  return std::binary_search(block_starts.begin(), block_starts.end(), k);
}

std::size_t RealSchurResult::aligned_size(std::size_t k) const {
  if (k >= t.rows()) return t.rows();
  return is_block_aligned(k) ? k : k + 1;
}

std::vector<Complex> dense_eigenvalues(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("eigenvalues: square matrix required");
  if (!a.all_finite()) throw std::invalid_argument("eigenvalues: non-finite entries");
  const std::size_t n = a.rows();
  if (n == 0) return {};
  if (n == 1) return {Complex(a(0, 0), 0.0)};
  Matrix h = a;
  balance_in_place(h);
  hessenberg_in_place(h, nullptr);
  Vector re, im;
  hqr_in_place(h, nullptr, re, im);
  std::vector<Complex> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = Complex(re[i], im[i]);
  return out;
}

RealSchurResult real_schur_decompose(const Matrix& a, bool order) {
  if (a.rows() != a.cols()) throw std::invalid_argument("schur: square matrix required");
  if (!a.all_finite()) throw std::invalid_argument("schur: non-finite entries");
  RealSchurResult res;
  const std::size_t n = a.rows();
  res.t = a;
  res.u = Matrix::identity(n);
  if (n > 1) {
    hessenberg_in_place(res.t, &res.u);
    Vector re, im;
    hqr_in_place(res.t, &res.u, re, im);
    if (order) order_blocks(res.t, res.u);
  }
  for (const auto& b : diagonal_blocks(res.t)) {
    res.block_starts.push_back(b.start);
    const Complex ev = block_eigenvalue(res.t, b);
    if (b.size == 1) {
      res.eigenvalues.push_back(ev);
    } else {
      res.eigenvalues.push_back(ev);
      res.eigenvalues.push_back(std::conj(ev));
    }
  }
  return res;
}

std::vector<std::vector<Complex>> eigenvectors_from_schur(const RealSchurResult& schur) {
  const Matrix& t = schur.t;
  const Matrix& u = schur.u;
  const std::size_t n = t.rows();
  const double tnorm = std::max(t.frobenius_norm(), 1e-300);
  const double guard = kMachEps * tnorm;

  auto blocks = diagonal_blocks(t);
  std::vector<std::vector<Complex>> vectors(n, std::vector<Complex>(n, Complex(0, 0)));

  auto solve_for = [&](std::size_t bstart, std::size_t bsize, Complex lambda) {
    std::vector<Complex> y(n, Complex(0, 0));
    const std::size_t bend = bstart + bsize - 1;
    if (bsize == 1) {
      y[bstart] = Complex(1, 0);
    } else {
      // Null vector of the 2x2 block minus lambda.
      const Complex a11(t(bstart, bstart), 0), a12(t(bstart, bstart + 1), 0);
      const Complex a21(t(bstart + 1, bstart), 0), a22(t(bstart + 1, bstart + 1), 0);
      Complex v1 = a12, v2 = lambda - a11;
      if (std::abs(v1) + std::abs(v2) < guard) {
        v1 = lambda - a22;
        v2 = a21;
      }
      y[bstart] = v1;
      y[bstart + 1] = v2;
    }

    // Back substitution over the blocks above.
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
      if (it->start >= bstart) continue;
      const std::size_t i = it->start;
      if (it->size == 1) {
        Complex rhs(0, 0);
        for (std::size_t mcol = i + 1; mcol <= bend; ++mcol) rhs -= t(i, mcol) * y[mcol];
        Complex denom = Complex(t(i, i), 0) - lambda;
        if (std::abs(denom) < guard) denom = Complex(guard, 0);
        y[i] = rhs / denom;
      } else {
        Complex rhs0(0, 0), rhs1(0, 0);
        for (std::size_t mcol = i + 2; mcol <= bend; ++mcol) {
          rhs0 -= t(i, mcol) * y[mcol];
          rhs1 -= t(i + 1, mcol) * y[mcol];
        }
        const Complex m00 = Complex(t(i, i), 0) - lambda;
        const Complex m01(t(i, i + 1), 0);
        const Complex m10(t(i + 1, i), 0);
        const Complex m11 = Complex(t(i + 1, i + 1), 0) - lambda;
        Complex det = m00 * m11 - m01 * m10;
        if (std::abs(det) < guard * guard) det = Complex(guard * guard, 0);
        y[i] = (rhs0 * m11 - m01 * rhs1) / det;
        y[i + 1] = (m00 * rhs1 - rhs0 * m10) / det;
      }
    }

    // Map back through U and normalize.
    std::vector<Complex> x(n, Complex(0, 0));
    for (std::size_t i = 0; i < n; ++i) {
      Complex s(0, 0);
      for (std::size_t j = 0; j <= bend; ++j) s += u(i, j) * y[j];
      x[i] = s;
    }
    double nrm = 0.0;
    for (const auto& c : x) nrm += std::norm(c);
    nrm = std::sqrt(nrm);
    if (nrm > 0)
      for (auto& c : x) c /= nrm;
    return x;
  };

  for (const auto& b : blocks) {
    if (b.size == 1) {
      auto x = solve_for(b.start, 1, schur.eigenvalues[b.start]);
      for (std::size_t i = 0; i < n; ++i) vectors[i][b.start] = x[i];
    } else {
      auto x = solve_for(b.start, 2, schur.eigenvalues[b.start]);
      for (std::size_t i = 0; i < n; ++i) {
        vectors[i][b.start] = x[i];
        vectors[i][b.start + 1] = std::conj(x[i]);
      }
    }
  }
  return vectors;
}

SymmetricEig symmetric_eigen(const Matrix& a_in) {
  if (a_in.rows() != a_in.cols()) throw std::invalid_argument("symmetric_eigen: square required");
  const std::size_t n = a_in.rows();
  Matrix a = a_in;
  // Symmetrize defensively; callers are expected to pass symmetric input.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double m = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = a(j, i) = m;
    }
  Matrix v = Matrix::identity(n);
  const double fro = std::max(a.frobenius_norm(), 1e-300);

  const int max_sweeps = 60;
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
    if (std::sqrt(off) <= 1e-14 * fro) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double tsign = (theta >= 0) ? 1.0 : -1.0;
        const double tt = tsign / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(tt * tt + 1.0);
        const double s = tt * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (sweep == max_sweeps) throw NumericalError("Jacobi eigensolver did not converge");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SymmetricEig out;
  out.eigenvalues.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.eigenvalues[j] = a(idx[j], idx[j]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, idx[j]);
  }
  return out;
}

SvdResult singular_value_decompose(const Matrix& a) {
  if (!a.all_finite()) throw std::invalid_argument("svd: non-finite entries");
  if (a.rows() < a.cols()) {
    SvdResult t = singular_value_decompose(a.transpose());
    std::swap(t.u, t.v);
    return t;
  }
  const std::size_t m = a.rows(), n = a.cols();
  Matrix g = a;
  Matrix v = Matrix::identity(n);

  // Columns below this are numerically zero; rotating against them never
  // settles because the relative test scales down with the column.
  const double zero_floor = g.frobenius_norm() * kMachEps;
  const double zero_floor2 = zero_floor * zero_floor;

  const int max_sweeps = 60;
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += g(i, p) * g(i, p);
          beta += g(i, q) * g(i, q);
          gamma += g(i, p) * g(i, q);
        }
        if (alpha <= zero_floor2 || beta <= zero_floor2) continue;
        if (std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double zsign = (zeta >= 0) ? 1.0 : -1.0;
        const double t = zsign / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double gp = g(i, p), gq = g(i, q);
          g(i, p) = c * gp - s * gq;
          g(i, q) = s * gp + c * gq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }
  if (sweep == max_sweeps) throw NumericalError("one-sided Jacobi SVD did not converge");

  Vector sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += g(i, j) * g(i, j);
    sigma[j] = std::sqrt(s);
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

  SvdResult out;
  out.sigma.resize(n);
  out.u = Matrix(m, n);
  out.v = Matrix(n, n);
  const double smax = sigma.empty() ? 0.0 : sigma[idx[0]];
  for (std::size_t j = 0; j < n; ++j) {
    out.sigma[j] = sigma[idx[j]];
    for (std::size_t i = 0; i < n; ++i) out.v(i, j) = v(i, idx[j]);
    if (out.sigma[j] > smax * 1e-300 && out.sigma[j] > 0.0) {
      for (std::size_t i = 0; i < m; ++i) out.u(i, j) = g(i, idx[j]) / out.sigma[j];
    }
  }
  // Complete U columns for exactly-zero singular values so U stays orthonormal.
  for (std::size_t j = 0; j < n; ++j) {
    double cn = 0.0;
    for (std::size_t i = 0; i < m; ++i) cn += out.u(i, j) * out.u(i, j);
    if (cn > 0.5) continue;
    for (std::size_t cand = 0; cand < m; ++cand) {
      Vector e(m, 0.0);
      e[cand] = 1.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == j) continue;
        double d = 0.0;
        for (std::size_t i = 0; i < m; ++i) d += out.u(i, k) * e[i];
        for (std::size_t i = 0; i < m; ++i) e[i] -= d * out.u(i, k);
      }
      const double en = norm2(e);
      if (en > 1e-3) {
        for (std::size_t i = 0; i < m; ++i) out.u(i, j) = e[i] / en;
        break;
      }
    }
  }
  return out;
}

double complex_condition_number(const Matrix& re, const Matrix& im) {
  const std::size_t n = re.rows();
  if (im.rows() != n || re.cols() != n || im.cols() != n)
    throw std::invalid_argument("complex_condition_number: square blocks required");
  Matrix z(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      z(i, j) = re(i, j);
      z(i, j + n) = -im(i, j);
      z(i + n, j) = im(i, j);
      z(i + n, j + n) = re(i, j);
    }
  const SvdResult s = singular_value_decompose(z);
  const double smin = s.sigma.back();
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return s.sigma.front() / smin;
}

bool spectra_match_as_multisets(std::vector<Complex> a, std::vector<Complex> b, double tol) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (const auto& x : a) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = b.size();
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(x - b[j]);
      if (d < best) {
        best = d;
        bi = j;
      }
    }
    if (bi == b.size() || best > tol) return false;
    used[bi] = true;
  }
  return true;
}

}  // namespace stablerepr
