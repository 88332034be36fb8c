#pragma once
// Berezin-Toeplitz quantization of the 2-sphere at spin level k.
//
// The Hilbert space has dimension d = k + 1 with orthonormal basis
//   Psi_m(x) = psi_m(u) e^{i m phi},  psi_m(u) = sqrt((k+1) C(k,m) t^m (1-t)^(k-m)),
// u = cos(theta), t = (1 + u) / 2, orthonormal for the normalized measure
// du/2 * dphi/(2 pi). The Bergman density sum_m psi_m^2 equals d everywhere
// and |K(x,y)|^2 = d^2 ((1 + x.y)/2)^k.
//
// Toeplitz matrices are assembled ring by ring: on a ring of constant u the
// symbol enters only through its azimuthal Fourier coefficients
//   G[n] = (1/2 pi) int f(u, phi) e^{i n phi} dphi,   n = 0..k,
// and T[i][j] = sum_rings w psi_i psi_j G[j - i].

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qtopo/error.hpp"
#include "qtopo/region.hpp"
#include "qtopo/sphere_geometry.hpp"

namespace qtopo {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline const GaussRule& gauss_legendre(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return *it->second;
  if (n == 0) throw ValidationError("gauss_legendre: need at least one node");
  auto rule = std::make_unique<GaussRule>();
  const auto zeros = boost::math::legendre_p_zeros<double>(static_cast<int>(n));
  for (double x : zeros) {
    const double dp = boost::math::legendre_p_prime(static_cast<int>(n), x);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule->nodes.push_back(x);
    rule->weights.push_back(w);
    if (x != 0.0) {
      rule->nodes.push_back(-x);
      rule->weights.push_back(w);
    }
  }
  std::vector<std::size_t> order(rule->nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return rule->nodes[i] < rule->nodes[j]; });
  GaussRule sorted;
  for (std::size_t i : order) {
    sorted.nodes.push_back(rule->nodes[i]);
    sorted.weights.push_back(rule->weights[i]);
  }
  *rule = std::move(sorted);
  auto& ref = *rule;
  cache.emplace(n, std::move(rule));
  return ref;
}

/// Dense Hermitian matrix. Construction checks conjugate symmetry within
/// 1e-12 * max|entry| and then symmetrizes exactly.
class HermitianOperator {
 public:
  HermitianOperator() = default;

  explicit HermitianOperator(ComplexMatrix m) {
    if (m.rows() != m.cols()) throw ValidationError("HermitianOperator: matrix is not square");
    const double scale = m.cwiseAbs().maxCoeff();
    const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (!std::isfinite(scale)) throw NumericalError("HermitianOperator: non-finite entries");
    if (asym > 1e-12 * std::max(scale, 1e-300) && asym > 0.0) {
      std::ostringstream msg;
      msg << "HermitianOperator: asymmetry " << asym << " exceeds tolerance (max entry " << scale << ")";
      throw ValidationError(msg.str());
    }
    m_ = 0.5 * (m + m.adjoint());
  }

  static HermitianOperator identity(int d) { return HermitianOperator(ComplexMatrix::Identity(d, d)); }
  static HermitianOperator zero(int d) { return HermitianOperator(ComplexMatrix::Zero(d, d)); }
  static HermitianOperator diagonal(const Eigen::VectorXd& diag) {
    return HermitianOperator(ComplexMatrix(diag.cast<Complex>().asDiagonal()));
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const ComplexMatrix& matrix() const { return m_; }

  Eigen::VectorXd eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

  double trace() const { return m_.trace().real(); }

  HermitianOperator operator+(const HermitianOperator& o) const { return HermitianOperator(ComplexMatrix(m_ + o.m_)); }
  HermitianOperator operator-(const HermitianOperator& o) const { return HermitianOperator(ComplexMatrix(m_ - o.m_)); }
  HermitianOperator operator*(double s) const { return HermitianOperator(ComplexMatrix(m_ * s)); }

 private:
  ComplexMatrix m_;
};

/// Largest absolute eigenvalue.
inline double operator_norm(const HermitianOperator& op) {
  return op.dim() == 0 ? 0.0 : op.eigenvalues().cwiseAbs().maxCoeff();
}

/// Largest singular value of a general matrix.
inline double operator_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues()(0);
}

/// Spin-k quantization with its product quadrature: Gauss-Legendre in u
/// (n_theta nodes), uniform in phi (n_phi nodes).
class QuantizationContext {
 public:
  QuantizationContext(int k, int n_theta, int n_phi) : k_(k), n_theta_(n_theta), n_phi_(n_phi) {
    log_norm_.resize(dim());
    for (int m = 0; m <= k; ++m) {
      log_norm_[m] = 0.5 * (std::log(static_cast<double>(k) + 1.0) + std::lgamma(k + 1.0) - std::lgamma(m + 1.0) -
                            std::lgamma(k - m + 1.0));
    }
    const auto& rule = gauss_legendre(static_cast<std::size_t>(n_theta));
    u_ = rule.nodes;
    w_.resize(rule.weights.size());
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] = 0.5 * rule.weights[i];
    amplitudes_.resize(n_theta, dim());
    for (int r = 0; r < n_theta; ++r) amplitudes_.row(r) = amplitudes_at(u_[r]).transpose();
    cos_phi_.resize(n_phi);
    sin_phi_.resize(n_phi);
    for (int p = 0; p < n_phi; ++p) {
      cos_phi_[p] = std::cos(phi(p));
      sin_phi_[p] = std::sin(phi(p));
    }
  }

  int k() const { return k_; }
  int dim() const { return k_ + 1; }
  double hbar() const { return 1.0 / static_cast<double>(k_); }
  int n_theta() const { return n_theta_; }
  int n_phi() const { return n_phi_; }
  std::size_t node_count() const { return static_cast<std::size_t>(n_theta_) * static_cast<std::size_t>(n_phi_); }

  const std::vector<double>& ring_u() const { return u_; }
  /// Ring weights in u; they sum to 1.
  const std::vector<double>& ring_weights() const { return w_; }
  double phi(int p) const { return 2.0 * kPi * static_cast<double>(p) / static_cast<double>(n_phi_); }
  double node_weight(int r) const { return w_[r] / static_cast<double>(n_phi_); }

  SpherePoint node(int r, int p) const {
    const double s = std::sqrt(std::max(0.0, 1.0 - u_[r] * u_[r]));
    return SpherePoint::normalized(Eigen::Vector3d(s * cos_phi_[p], s * sin_phi_[p], u_[r]));
  }
  Eigen::Vector3d node_vector(int r, int p) const {
    const double s = std::sqrt(std::max(0.0, 1.0 - u_[r] * u_[r]));
    return {s * cos_phi_[p], s * sin_phi_[p], u_[r]};
  }

  /// psi_m at the Gauss rings, n_theta x d.
  const Eigen::MatrixXd& ring_amplitudes() const { return amplitudes_; }

  /// psi_m(u) for m = 0..k.
  Eigen::VectorXd amplitudes_at(double u) const {
    const double t = std::clamp(0.5 * (1.0 + u), 0.0, 1.0);
    const double lt = std::log(t);
    const double l1t = std::log1p(-t);
    Eigen::VectorXd a(dim());
    for (int m = 0; m <= k_; ++m) {
      double l = log_norm_[m];
      if (m > 0) l += 0.5 * m * lt;
      if (k_ - m > 0) l += 0.5 * (k_ - m) * l1t;
      a[m] = std::isfinite(l) ? std::exp(l) : 0.0;
    }
    return a;
  }

  /// Psi_m(x), m = 0..k.
  Eigen::VectorXcd basis_at(const SpherePoint& x) const {
    const Eigen::VectorXd a = amplitudes_at(x.z());
    const double phi = x.azimuth();
    Eigen::VectorXcd out(dim());
    for (int m = 0; m <= k_; ++m) out[m] = a[m] * std::polar(1.0, m * phi);
    return out;
  }

 private:
  int k_;
  int n_theta_;
  int n_phi_;
  std::vector<double> u_;
  std::vector<double> w_;
  std::vector<double> cos_phi_;
  std::vector<double> sin_phi_;
  std::vector<double> log_norm_;
  Eigen::MatrixXd amplitudes_;
};

/// Context with explicit quadrature. Polynomial symbols of degree <= 2k are
/// integrated exactly against the basis densities when n_theta >= k + 2 and
/// n_phi >= 2k + 2.
inline QuantizationContext make_context(int k, int n_theta, int n_phi) {
  if (k < 1) throw ValidationError("make_context: k must be at least 1");
  if (n_theta < k + 2 || n_phi < 2 * k + 2) {
    std::ostringstream msg;
    msg << "make_context: quadrature too coarse for k = " << k << " (exactness needs n_theta >= k+2 = " << k + 2
        << " and n_phi >= 2k+2 = " << 2 * k + 2 << "; got " << n_theta << ", " << n_phi << ")";
    throw ValidationError(msg.str());
  }
  return QuantizationContext(k, n_theta, n_phi);
}

/// Context with the quadrature oversampled by `oversample` over the exactness minimum.
inline QuantizationContext make_context(int k, double oversample = 2.0) {
  const int n_theta = static_cast<int>(std::ceil(oversample * (k + 2)));
  const int n_phi = static_cast<int>(std::ceil(oversample * (2 * k + 2)));
  return make_context(k, std::max(n_theta, k + 2), std::max(n_phi, 2 * k + 2));
}

/// Function on the sphere plus the structure the assembly can exploit.
class Symbol {
 public:
  enum class Kind { kSmooth, kZonal, kPiecewise };
  using Fn = std::function<double(const SpherePoint&)>;

  /// Smooth symbol sampled on the context grid. An optional support cap lets
  /// the assembly skip nodes where f vanishes.
  static Symbol smooth(Fn f, std::optional<Cap> support = std::nullopt) {
    Symbol s;
    s.kind_ = Kind::kSmooth;
    s.fn_ = std::move(f);
    s.support_ = support;
    return s;
  }

  static Symbol constant(double c) {
    return zonal([c](double) { return c; });
  }

  /// f(x) = profile(cos theta); breakpoints are the u values where the profile
  /// is not smooth.
  static Symbol zonal(std::function<double(double)> profile, std::vector<double> u_breaks = {}) {
    Symbol s;
    s.kind_ = Kind::kZonal;
    s.profile_ = profile;
    s.fn_ = [profile](const SpherePoint& x) { return profile(x.z()); };
    std::sort(u_breaks.begin(), u_breaks.end());
    s.u_breaks_ = std::move(u_breaks);
    return s;
  }

  /// Function constant on each cell of the arrangement of `caps`.
  static Symbol piecewise(std::vector<Cap> caps, Fn f) {
    Symbol s;
    s.kind_ = Kind::kPiecewise;
    s.caps_ = std::move(caps);
    s.fn_ = std::move(f);
    return s;
  }

  static Symbol indicator(const Region& region) {
    return piecewise(region.caps(), [region](const SpherePoint& x) { return region.contains(x) ? 1.0 : 0.0; });
  }

  /// sum_i c_i chi_{A_i}.
  static Symbol simple(std::vector<std::pair<double, Region>> terms) {
    std::vector<Cap> caps;
    for (const auto& [c, r] : terms) {
      auto rc = r.caps();
      caps.insert(caps.end(), rc.begin(), rc.end());
    }
    return piecewise(std::move(caps), [terms](const SpherePoint& x) {
      double v = 0.0;
      for (const auto& [c, r] : terms) {
        if (r.contains(x)) v += c;
      }
      return v;
    });
  }

  Kind kind() const { return kind_; }
  double operator()(const SpherePoint& x) const {
    const double v = fn_(x);
    if (!std::isfinite(v)) throw NumericalError("symbol returned a non-finite value");
    return v;
  }
  const Fn& function() const { return fn_; }
  const std::function<double(double)>& profile() const { return profile_; }
  const std::vector<double>& u_breaks() const { return u_breaks_; }
  const std::vector<Cap>& caps() const { return caps_; }
  const std::optional<Cap>& support() const { return support_; }

 private:
  Kind kind_ = Kind::kSmooth;
  Fn fn_;
  std::function<double(double)> profile_;
  std::vector<double> u_breaks_;
  std::vector<Cap> caps_;
  std::optional<Cap> support_;
};

/// Azimuthal Fourier data of a symbol on one ring.
struct RingFourier {
  double u = 0.0;
  double weight = 0.0;              ///< normalized u-measure of the ring
  std::vector<Complex> coeff;       ///< G[n], n = 0..k
};

/// T[i][j] = sum_r w_r psi_i(u_r) psi_j(u_r) G_r[j - i] (upper triangle,
/// completed by conjugate symmetry).
inline HermitianOperator assemble_toeplitz(const QuantizationContext& ctx, const std::vector<RingFourier>& rings) {
  const int d = ctx.dim();
  ComplexMatrix m = ComplexMatrix::Zero(d, d);
  for (const auto& ring : rings) {
    const Eigen::VectorXd a = ctx.amplitudes_at(ring.u);
    for (int n = 0; n < d && n < static_cast<int>(ring.coeff.size()); ++n) {
      const Complex c = ring.weight * ring.coeff[n];
      if (c == Complex(0.0, 0.0)) continue;
      for (int i = 0; i + n < d; ++i) m(i, i + n) += c * (a[i] * a[i + n]);
    }
  }
  for (int i = 0; i < d; ++i) {
    m(i, i) = Complex(m(i, i).real(), 0.0);
    for (int j = i + 1; j < d; ++j) m(j, i) = std::conj(m(i, j));
  }
  return HermitianOperator(std::move(m));
}

/// Samples f on a subset of grid nodes: (ring, azimuth index, value).
struct GridSample {
  int ring = 0;
  int azimuth = 0;
  double value = 0.0;
};

/// Fourier data from point samples on the context grid (uniform azimuthal
/// rule); samples must be grouped by ring.
inline std::vector<RingFourier> rings_from_samples(const QuantizationContext& ctx, const std::vector<GridSample>& samples) {
  std::vector<RingFourier> rings;
  const int k = ctx.k();
  std::size_t i = 0;
  while (i < samples.size()) {
    const int r = samples[i].ring;
    RingFourier rf;
    rf.u = ctx.ring_u()[r];
    rf.weight = ctx.ring_weights()[r];
    rf.coeff.assign(k + 1, Complex(0.0, 0.0));
    for (; i < samples.size() && samples[i].ring == r; ++i) {
      const double v = samples[i].value / static_cast<double>(ctx.n_phi());
      if (v == 0.0) continue;
      const Complex step = std::polar(1.0, ctx.phi(samples[i].azimuth));
      Complex e(1.0, 0.0);
      for (int n = 0; n <= k; ++n) {
        rf.coeff[n] += v * e;
        e *= step;
      }
    }
    rings.push_back(std::move(rf));
  }
  return rings;
}

/// Samples a smooth symbol on the grid, skipping nodes outside its support cap.
inline std::vector<GridSample> sample_symbol(const QuantizationContext& ctx, const Symbol& f) {
  std::vector<GridSample> out;
  const auto& support = f.support();
  const double cos_r = support ? std::cos(support->radius) : -2.0;
  for (int r = 0; r < ctx.n_theta(); ++r) {
    if (support) {
      const double theta = std::acos(ctx.ring_u()[r]);
      if (std::abs(theta - support->center.polar()) >= support->radius) continue;
    }
    for (int p = 0; p < ctx.n_phi(); ++p) {
      const Eigen::Vector3d x = ctx.node_vector(r, p);
      if (support && support->center.vec().dot(x) <= cos_r) continue;
      const double v = f(SpherePoint::normalized(x));
      if (v != 0.0) out.push_back({r, p, v});
    }
  }
  return out;
}

/// Panel quadrature on [-1, 1] in u with breaks at the given polar angles.
/// Each panel [u0, u1] is mapped by u = c - h cos(t), t in [0, pi], which
/// removes square-root endpoint singularities (tangent rings, poles).
struct PanelNode {
  double u = 0.0;
  double weight = 0.0;  ///< normalized: total 1 over [-1, 1]
};

inline std::vector<PanelNode> panel_nodes(std::vector<double> polar_breaks, int k, double oversample = 2.0) {
  std::vector<double> thetas = {0.0};
  for (double t : polar_breaks) thetas.push_back(t);
  thetas.push_back(kPi);
  std::sort(thetas.begin(), thetas.end());
  // The arc endpoints are analytic inside a panel but singular at the poles;
  // panels are graded geometrically so that each piece is no longer than its
  // distance to the nearest pole.
  std::vector<double> graded = thetas;
  for (std::size_t i = 0; i + 1 < thetas.size(); ++i) {
    const double t0 = thetas[i];
    const double t1 = thetas[i + 1];
    for (double step = t0; step > 0.0 && t0 + step < t1; step *= 2.0) graded.push_back(t0 + step);
    for (double step = kPi - t1; step > 0.0 && t1 - step > t0; step *= 2.0) graded.push_back(t1 - step);
  }
  std::sort(graded.begin(), graded.end());
  thetas = std::move(graded);
  std::vector<PanelNode> out;
  for (std::size_t i = 0; i + 1 < thetas.size(); ++i) {
    const double t0 = thetas[i];
    const double t1 = thetas[i + 1];
    if (t1 - t0 < 1e-15) continue;
    const double u_hi = std::cos(t0);
    const double u_lo = std::cos(t1);
    const double c = 0.5 * (u_hi + u_lo);
    const double h = 0.5 * (u_hi - u_lo);
    const int n = std::max(24, static_cast<int>(std::ceil(oversample * 1.6 * (k + 2) * (t1 - t0) / kPi)) + 24);
    const auto& rule = gauss_legendre(static_cast<std::size_t>(n));
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double t = 0.5 * kPi * (rule.nodes[j] + 1.0);
      const double wt = 0.5 * kPi * rule.weights[j];
      out.push_back({c - h * std::cos(t), 0.5 * h * std::sin(t) * wt});
    }
  }
  return out;
}

/// Exact azimuthal Fourier data of a piecewise-constant symbol on panel rings.
inline std::vector<RingFourier> rings_from_piecewise(const Symbol& f, int k, double oversample = 2.0) {
  const auto nodes = panel_nodes(polar_breakpoints(f.caps()), k, oversample);
  std::vector<RingFourier> rings;
  rings.reserve(nodes.size());
  for (const auto& node : nodes) {
    RingFourier rf;
    rf.u = node.u;
    rf.weight = node.weight;
    rf.coeff.assign(k + 1, Complex(0.0, 0.0));
    for (const auto& arc : ring_arcs(f.caps(), node.u, f.function())) {
      if (arc.value == 0.0) continue;
      rf.coeff[0] += arc.value * (arc.end - arc.begin) / (2.0 * kPi);
      const Complex sa = std::polar(1.0, arc.begin);
      const Complex sb = std::polar(1.0, arc.end);
      Complex ea = sa;
      Complex eb = sb;
      for (int n = 1; n <= k; ++n) {
        rf.coeff[n] += arc.value * (eb - ea) / (Complex(0.0, 2.0 * kPi * n));
        ea *= sa;
        eb *= sb;
      }
    }
    rings.push_back(std::move(rf));
  }
  return rings;
}

/// Diagonal entries int profile(u) psi_m(u)^2 du/2 by Gauss-Legendre panels in u
/// split at the profile breakpoints.
inline Eigen::VectorXd zonal_diagonal(const QuantizationContext& ctx, const std::function<double(double)>& profile,
                                      const std::vector<double>& u_breaks) {
  std::vector<double> cuts = {-1.0};
  for (double b : u_breaks) {
    if (b > -1.0 && b < 1.0) cuts.push_back(b);
  }
  cuts.push_back(1.0);
  std::sort(cuts.begin(), cuts.end());
  const auto& rule = gauss_legendre(static_cast<std::size_t>(ctx.k() + 48));
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(ctx.dim());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double c = 0.5 * (cuts[i] + cuts[i + 1]);
    const double h = 0.5 * (cuts[i + 1] - cuts[i]);
    if (h <= 0.0) continue;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double u = c + h * rule.nodes[j];
      const double v = profile(u);
      if (!std::isfinite(v)) throw NumericalError("zonal profile returned a non-finite value");
      const Eigen::VectorXd a = ctx.amplitudes_at(u);
      diag += (0.5 * h * rule.weights[j] * v) * a.cwiseProduct(a);
    }
  }
  return diag;
}

/// Toeplitz operator T(f): <T(f) Psi_j, Psi_i> = int f (Psi_j, Psi_i) dmu.
inline HermitianOperator toeplitz(const QuantizationContext& ctx, const Symbol& f) {
  switch (f.kind()) {
    case Symbol::Kind::kZonal:
      return HermitianOperator::diagonal(zonal_diagonal(ctx, f.profile(), f.u_breaks()));
    case Symbol::Kind::kPiecewise:
      return assemble_toeplitz(ctx, rings_from_piecewise(f, ctx.k()));
    case Symbol::Kind::kSmooth:
      break;
  }
  return assemble_toeplitz(ctx, rings_from_samples(ctx, sample_symbol(ctx, f)));
}

/// Same as toeplitz, but a smooth-kind symbol is sampled on the grid even if
/// it is zonal; used to cross-check the grid path.
inline HermitianOperator toeplitz_on_grid(const QuantizationContext& ctx, const Symbol::Fn& f) {
  return toeplitz(ctx, Symbol::smooth(f));
}

/// Normalized integral int f dmu (total mass 1) by the same quadrature the
/// assembly uses for the symbol's kind.
inline double integrate(const QuantizationContext& ctx, const Symbol& f) {
  switch (f.kind()) {
    case Symbol::Kind::kZonal: {
      std::vector<double> cuts = {-1.0};
      for (double b : f.u_breaks()) {
        if (b > -1.0 && b < 1.0) cuts.push_back(b);
      }
      cuts.push_back(1.0);
      const auto& rule = gauss_legendre(static_cast<std::size_t>(ctx.k() + 48));
      double total = 0.0;
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double c = 0.5 * (cuts[i] + cuts[i + 1]);
        const double h = 0.5 * (cuts[i + 1] - cuts[i]);
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) total += 0.5 * h * rule.weights[j] * f.profile()(c + h * rule.nodes[j]);
      }
      return total;
    }
    case Symbol::Kind::kPiecewise: {
      double total = 0.0;
      for (const auto& ring : rings_from_piecewise(f, ctx.k())) total += ring.weight * ring.coeff[0].real();
      return total;
    }
    case Symbol::Kind::kSmooth:
      break;
  }
  double total = 0.0;
  for (const auto& s : sample_symbol(ctx, f)) total += ctx.node_weight(s.ring) * s.value;
  return total;
}

/// Profile given piecewise by polynomials in u = cos(theta).
struct PolynomialPiece {
  double u_lo = -1.0;
  double u_hi = 1.0;
  std::vector<double> coeffs;  ///< ascending powers of u
};

/// Diagonal Toeplitz operator of a zonal piecewise-polynomial profile from
/// closed-form incomplete Beta integrals.
inline HermitianOperator toeplitz_zonal_exact(const QuantizationContext& ctx, const std::vector<PolynomialPiece>& pieces) {
  const int k = ctx.k();
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(k + 1);
  for (const auto& piece : pieces) {
    if (!(piece.u_lo < piece.u_hi) || piece.u_lo < -1.0 || piece.u_hi > 1.0) {
      throw ValidationError("toeplitz_zonal_exact: piece bounds must satisfy -1 <= lo < hi <= 1");
    }
    // p(u) with u = 2t - 1 rewritten as sum_j q_j t^j.
    const std::size_t deg = piece.coeffs.size();
    std::vector<double> q(deg, 0.0);
    for (std::size_t p = 0; p < deg; ++p) {
      // (2t - 1)^p = sum_j C(p, j) 2^j t^j (-1)^(p - j)
      double binom = 1.0;
      for (std::size_t j = 0; j <= p; ++j) {
        if (j > 0) binom = binom * static_cast<double>(p - j + 1) / static_cast<double>(j);
        const double sign = ((p - j) % 2 == 0) ? 1.0 : -1.0;
        q[j] += piece.coeffs[p] * binom * std::ldexp(1.0, static_cast<int>(j)) * sign;
      }
    }
    const double t_lo = 0.5 * (1.0 + piece.u_lo);
    const double t_hi = 0.5 * (1.0 + piece.u_hi);
    for (int m = 0; m <= k; ++m) {
      double entry = 0.0;
      for (std::size_t j = 0; j < deg; ++j) {
        if (q[j] == 0.0) continue;
        const double a = m + static_cast<double>(j) + 1.0;
        const double b = k - m + 1.0;
        // (k+1) C(k,m) B(a, b) = prod_{i=1..j} (m + i) / (k + 1 + i)
        double scale = 1.0;
        for (std::size_t i = 1; i <= j; ++i) {
          scale *= (m + static_cast<double>(i)) / (k + 1.0 + static_cast<double>(i));
        }
        double mass = 0.0;
        if (t_lo >= 0.5) {
          const double c_lo = t_lo >= 1.0 ? 0.0 : boost::math::ibetac(a, b, t_lo);
          const double c_hi = t_hi >= 1.0 ? 0.0 : boost::math::ibetac(a, b, t_hi);
          mass = c_lo - c_hi;
        } else {
          const double i_lo = t_lo <= 0.0 ? 0.0 : boost::math::ibeta(a, b, t_lo);
          const double i_hi = t_hi >= 1.0 ? 1.0 : boost::math::ibeta(a, b, t_hi);
          mass = i_hi - i_lo;
        }
        entry += q[j] * scale * mass;
      }
      diag[m] += entry;
    }
  }
  return HermitianOperator::diagonal(diag);
}

/// Indicator of the polar cap {theta < theta0} as a one-piece profile.
inline std::vector<PolynomialPiece> polar_cap_profile(double theta0) {
  if (theta0 <= 0.0) return {};
  if (theta0 >= kPi) return {PolynomialPiece{-1.0, 1.0, {1.0}}};
  return {PolynomialPiece{std::cos(theta0), 1.0, {1.0}}};
}

/// |K(x,y)|^2 from the basis: |sum_m Psi_m(x) conj(Psi_m(y))|^2.
inline double kernel_intensity(const QuantizationContext& ctx, const SpherePoint& x, const SpherePoint& y) {
  const Complex kxy = ctx.basis_at(x).dot(ctx.basis_at(y));  // conj(first) * second
  return std::norm(kxy);
}

/// Coherent-state form d^2 ((1 + x.y)/2)^k of the same quantity.
inline double kernel_intensity_closed(int k, const Eigen::Vector3d& x, const Eigen::Vector3d& y) {
  const double c = std::clamp(0.5 * (1.0 + x.dot(y)), 0.0, 1.0);
  const double d = k + 1.0;
  return d * d * std::pow(c, k);
}

/// tr(op) / d.
inline double normalized_trace(const HermitianOperator& op) {
  if (op.dim() == 0) throw ValidationError("normalized_trace: empty operator");
  return op.trace() / op.dim();
}

inline double normalized_trace(const ComplexMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw ValidationError("normalized_trace: need a nonempty square matrix");
  return m.trace().real() / static_cast<double>(m.rows());
}

/// Area/(2 pi hbar) for the sphere of symplectic area 2 pi: the leading term
/// of dim H; the exact dimension is this plus 1 - genus = k + 1.
inline double semiclassical_dimension(const QuantizationContext& ctx) { return static_cast<double>(ctx.k()); }

// ---------------------------------------------------------------------------
// Operator cache file: "BTOP", u32 version, u32 k, u32 d, then d*d entries
// row-major, each (re, im) as little-endian IEEE-754 doubles.

inline constexpr std::uint32_t kOperatorFormatVersion = 1;

namespace detail {
template <typename T>
T to_little_endian(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto* p = reinterpret_cast<unsigned char*>(&v);
    std::reverse(p, p + sizeof(T));
  }
  return v;
}
template <typename T>
void write_le(std::ostream& out, T v) {
  v = to_little_endian(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
bool read_le(std::istream& in, T& v) {
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) return false;
  v = to_little_endian(v);
  return true;
}
}  // namespace detail

inline void save_operator(const std::string& path, const HermitianOperator& op, int k) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("save_operator: cannot open " + path);
  out.write("BTOP", 4);
  detail::write_le<std::uint32_t>(out, kOperatorFormatVersion);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(k));
  const auto d = static_cast<std::uint32_t>(op.dim());
  detail::write_le<std::uint32_t>(out, d);
  const auto& m = op.matrix();
  for (std::uint32_t i = 0; i < d; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) {
      detail::write_le<double>(out, m(i, j).real());
      detail::write_le<double>(out, m(i, j).imag());
    }
  }
  if (!out) throw IoError("save_operator: write failed for " + path);
}

struct LoadedOperator {
  int k = 0;
  HermitianOperator op;
};

inline LoadedOperator load_operator(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_operator: cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "BTOP") throw IoError("load_operator: bad magic in " + path);
  std::uint32_t version = 0, k = 0, d = 0;
  if (!detail::read_le(in, version) || !detail::read_le(in, k) || !detail::read_le(in, d)) {
    throw IoError("load_operator: truncated header in " + path);
  }
  if (version != kOperatorFormatVersion) {
    throw IoError("load_operator: unsupported version " + std::to_string(version) + " in " + path);
  }
  if (d == 0 || d > 100000) throw IoError("load_operator: implausible dimension in " + path);
  ComplexMatrix m(d, d);
  for (std::uint32_t i = 0; i < d; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) {
      double re = 0.0, im = 0.0;
      if (!detail::read_le(in, re) || !detail::read_le(in, im)) {
        throw IoError("load_operator: truncated payload in " + path);
      }
      m(i, j) = Complex(re, im);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("load_operator: trailing bytes in " + path);
  return {static_cast<int>(k), HermitianOperator(std::move(m))};
}

}  // namespace qtopo
