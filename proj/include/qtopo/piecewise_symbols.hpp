#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qtopo/error.hpp"
#include "qtopo/linalg.hpp"
#include "qtopo/quantization.hpp"
#include "qtopo/region.hpp"

namespace qtopo {

/// Normalized Schatten norm (tr|T|^p / d)^{1/p}.
inline double schatten_norm(const ComplexMatrix& m, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw ValidationError("schatten_norm: p must lie in [1, inf)");
  if (m.rows() == 0) return 0.0;
  Eigen::VectorXd s;
  if (m.isApprox(m.adjoint(), 1e-14)) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
    s = es.eigenvalues().cwiseAbs();
  } else {
    s = Eigen::JacobiSVD<ComplexMatrix>(m).singularValues();
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) total += std::pow(s[i], p);
  return std::pow(total / static_cast<double>(m.rows()), 1.0 / p);
}

inline double schatten_norm(const HermitianOperator& op, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw ValidationError("schatten_norm: p must lie in [1, inf)");
  if (op.dim() == 0) return 0.0;
  const Eigen::VectorXd s = op.eigenvalues().cwiseAbs();
  double total = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) total += std::pow(s[i], p);
  return std::pow(total / static_cast<double>(op.dim()), 1.0 / p);
}

/// Finite real combination sum_i c_i chi_{A_i} of region indicators.
class SimpleFunction {
 public:
  SimpleFunction() = default;
  explicit SimpleFunction(std::vector<std::pair<double, Region>> terms) : terms_(std::move(terms)) {}

  static SimpleFunction indicator(const Region& r, double c = 1.0) { return SimpleFunction({{c, r}}); }

  const std::vector<std::pair<double, Region>>& terms() const { return terms_; }

  double operator()(const SpherePoint& x) const {
    double v = 0.0;
    for (const auto& [c, r] : terms_) {
      if (r.contains(x)) v += c;
    }
    return v;
  }

  std::vector<Cap> caps() const {
    std::vector<Cap> out;
    for (const auto& [c, r] : terms_) {
      auto rc = r.caps();
      out.insert(out.end(), rc.begin(), rc.end());
    }
    return out;
  }

  Symbol symbol() const { return Symbol::simple(terms_); }

  /// Pointwise square root; the result is again constant on every cell.
  Symbol sqrt_symbol() const {
    const SimpleFunction self = *this;
    return Symbol::piecewise(caps(), [self](const SpherePoint& x) {
      const double v = self(x);
      if (v < 0.0) throw ValidationError("sqrt of a simple function: negative value");
      return std::sqrt(v);
    });
  }

  friend SimpleFunction operator*(const SimpleFunction& f, const SimpleFunction& g) {
    std::vector<std::pair<double, Region>> t;
    for (const auto& [a, ra] : f.terms_) {
      for (const auto& [b, rb] : g.terms_) t.emplace_back(a * b, ra & rb);
    }
    return SimpleFunction(std::move(t));
  }

 private:
  std::vector<std::pair<double, Region>> terms_;
};

inline Symbol product_symbol(const std::vector<SimpleFunction>& fs) {
  std::vector<Cap> caps;
  for (const auto& f : fs) {
    auto c = f.caps();
    caps.insert(caps.end(), c.begin(), c.end());
  }
  return Symbol::piecewise(std::move(caps), [fs](const SpherePoint& x) {
    double v = 1.0;
    for (const auto& f : fs) v *= f(x);
    return v;
  });
}

inline constexpr double kSpectrumSlack = 1e-10;

/// T(chi_A), verified to satisfy 0 <= T_A <= 1 up to kSpectrumSlack.
inline HermitianOperator region_operator(const QuantizationContext& ctx, const Region& a) {
  auto t = toeplitz(ctx, Symbol::indicator(a));
  const Eigen::VectorXd ev = t.eigenvalues();
  if (ev.size() > 0 && (ev.minCoeff() < -kSpectrumSlack || ev.maxCoeff() > 1.0 + kSpectrumSlack)) {
    std::ostringstream msg;
    msg << "region_operator: spectrum [" << ev.minCoeff() << ", " << ev.maxCoeff()
        << "] leaves [0, 1]; the quadrature is not resolving the region at k = " << ctx.k();
    throw NumericalError(msg.str());
  }
  return t;
}

/// ||T_A^2 - T_A||_1 = tr(T_A - T_A^2) / d.
inline double good_set_defect(const QuantizationContext& ctx, const Region& a) {
  const auto t = region_operator(ctx, a);
  return (t.trace() - trace_product(t, t)) / ctx.dim();
}

/// Quadrature nodes of a region: Gauss panels across rings and Gauss nodes
/// along each arc of the ring inside the region. Weights are normalized.
struct WeightedPoint {
  Eigen::Vector3d x;
  double weight;
};

inline std::vector<WeightedPoint> region_nodes(const Region& a, int k, double oversample = 2.0) {
  std::vector<WeightedPoint> out;
  const auto caps = a.caps();
  const auto indicator = [a](const SpherePoint& x) { return a.contains(x) ? 1.0 : 0.0; };
  for (const auto& node : panel_nodes(polar_breakpoints(caps), k, oversample)) {
    const double s = std::sqrt(std::max(0.0, 1.0 - node.u * node.u));
    for (const auto& arc : ring_arcs(caps, node.u, indicator)) {
      if (arc.value == 0.0) continue;
      const double len = arc.end - arc.begin;
      const int n = static_cast<int>(std::ceil(0.6 * (k + 2) * len)) + 24;
      const auto& rule = gauss_legendre(static_cast<std::size_t>(n));
      for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const double phi = arc.begin + 0.5 * len * (rule.nodes[j] + 1.0);
        out.push_back({Eigen::Vector3d(s * std::cos(phi), s * std::sin(phi), node.u),
                       node.weight * 0.5 * len * rule.weights[j] / (2.0 * kPi)});
      }
    }
  }
  return out;
}

/// int_{A x A^c} |K(x,y)|^2 dmu(x) dmu(y) with the closed-form kernel
/// |K|^2 = d^2 ((1 + x.y)/2)^k. Zonal regions integrate the azimuths
/// analytically by an exact trapezoid rule; other regions use a product rule.
inline double good_set_integral(const QuantizationContext& ctx, const Region& a) {
  const int k = ctx.k();
  const double d = ctx.dim();
  if (a.zonal()) {
    const auto caps = a.caps();
    const auto nodes = panel_nodes(polar_breakpoints(caps), k, 2.0);
    std::vector<double> in_w, out_w, in_u, out_u;
    for (const auto& n : nodes) {
      const bool inside = a.contains(SpherePoint::from_angles(std::acos(std::clamp(n.u, -1.0, 1.0)), 0.0));
      (inside ? in_u : out_u).push_back(n.u);
      (inside ? in_w : out_w).push_back(n.weight);
    }
    const int m = 2 * k + 2;
    std::vector<double> cosines(static_cast<std::size_t>(m));
    for (int p = 0; p < m; ++p) cosines[static_cast<std::size_t>(p)] = std::cos(2.0 * kPi * p / m);
    double total = 0.0;
    for (std::size_t i = 0; i < in_u.size(); ++i) {
      const double u1 = in_u[i], s1 = std::sqrt(std::max(0.0, 1.0 - u1 * u1));
      for (std::size_t j = 0; j < out_u.size(); ++j) {
        const double u2 = out_u[j], s2 = std::sqrt(std::max(0.0, 1.0 - u2 * u2));
        double avg = 0.0;
        for (double c : cosines) avg += std::pow(0.5 * (1.0 + u1 * u2 + s1 * s2 * c), k);
        total += in_w[i] * out_w[j] * avg / m;
      }
    }
    return d * d * total;
  }
  const auto in = region_nodes(a, k);
  const auto out = region_nodes(a.complement(), k);
  double total = 0.0;
  for (const auto& x : in) {
    double row = 0.0;
    for (const auto& y : out) row += y.weight * std::pow(0.5 * (1.0 + x.x.dot(y.x)), k);
    total += x.weight * row;
  }
  return d * d * total;
}

/// ||T(f) T(g) - T(fg)||_2.
inline double product_defect(const QuantizationContext& ctx, const SimpleFunction& f, const SimpleFunction& g) {
  const auto tf = toeplitz(ctx, f.symbol());
  const auto tg = toeplitz(ctx, g.symbol());
  const auto tfg = toeplitz(ctx, (f * g).symbol());
  return schatten_norm(ComplexMatrix(tf.matrix() * tg.matrix() - tfg.matrix()), 2.0);
}

/// ||T(f)^{1/2} - T(f^{1/2})||_4.
inline double sqrt_defect(const QuantizationContext& ctx, const SimpleFunction& f) {
  const auto root = hermitian_sqrt(toeplitz(ctx, f.symbol()));
  const auto of_root = toeplitz(ctx, f.sqrt_symbol());
  return schatten_norm(root - of_root, 4.0);
}

struct MultiTimeResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
};

/// lhs = tr(P* P)/d with P = T(f_1)^{1/2} ... T(f_m)^{1/2}; rhs = int f_1...f_m.
inline MultiTimeResult multi_time_check(const QuantizationContext& ctx, const std::vector<SimpleFunction>& fs) {
  if (fs.empty()) throw ValidationError("multi_time_check: no functions");
  const int d = ctx.dim();
  ComplexMatrix p = ComplexMatrix::Identity(d, d);
  for (const auto& f : fs) p = p * hermitian_sqrt(toeplitz(ctx, f.symbol())).matrix();
  MultiTimeResult r;
  r.lhs = (p.adjoint() * p).trace().real() / d;
  r.rhs = integrate(ctx, product_symbol(fs));
  r.gap = std::abs(r.lhs - r.rhs);
  return r;
}

struct CapSpectrum {
  std::vector<double> eigenvalues;  ///< ascending
  double min_gap_to_half = 0.0;     ///< min |lambda - 1/2|
  double idempotency_defect = 0.0;  ///< ||T_A^2 - T_A||_op
};

/// Spectrum of T(chi_{theta < theta0}) from the exact diagonal.
inline CapSpectrum cap_spectrum(const QuantizationContext& ctx, double theta0) {
  const auto t = toeplitz_zonal_exact(ctx, polar_cap_profile(theta0));
  CapSpectrum out;
  const Eigen::VectorXd ev = t.eigenvalues();
  out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
  out.min_gap_to_half = 1.0;
  for (double l : out.eigenvalues) {
    out.min_gap_to_half = std::min(out.min_gap_to_half, std::abs(l - 0.5));
    out.idempotency_defect = std::max(out.idempotency_defect, std::abs(l * l - l));
  }
  return out;
}

struct SchattenReport {
  std::string quantity;
  std::vector<std::pair<int, double>> samples;  ///< (k, value)
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  ///< root-mean-square residual of the log-log fit
  double target = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::vector<std::string> notes;
};

/// Least-squares slope of log(value) against log(hbar). Non-positive values
/// are dropped with a note; at least four usable samples are required.
inline SchattenReport fit_scaling_exponent(const std::vector<std::pair<double, double>>& hbar_value,
                                           std::string quantity = "", double target = 0.0, double threshold = 0.0) {
  SchattenReport r;
  r.quantity = std::move(quantity);
  r.target = target;
  r.threshold = threshold;
  std::vector<double> x, y;
  for (const auto& [h, v] : hbar_value) {
    if (!(h > 0.0)) throw ValidationError("fit_scaling_exponent: hbar must be positive");
    r.samples.emplace_back(static_cast<int>(std::lround(1.0 / h)), v);
    if (!(v > 0.0)) {
      r.notes.push_back("dropped non-positive value at hbar = " + std::to_string(h));
      continue;
    }
    x.push_back(std::log(h));
    y.push_back(std::log(v));
  }
  if (x.size() < 4) {
    throw ValidationError("fit_scaling_exponent: need at least 4 positive samples, got " + std::to_string(x.size()));
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (r.intercept + r.slope * x[i]);
    ss += e * e;
  }
  r.residual = std::sqrt(ss / n);
  r.pass = r.slope >= threshold;
  return r;
}

/// Evaluates `value(ctx)` for each k and fits the exponent.
inline SchattenReport scaling_scan(const std::vector<int>& ks,
                                   const std::function<double(const QuantizationContext&)>& value,
                                   std::string quantity, double target, double threshold) {
  std::vector<std::pair<double, double>> data;
  for (int k : ks) {
    const auto ctx = make_context(k);
    data.emplace_back(ctx.hbar(), value(ctx));
  }
  return fit_scaling_exponent(data, std::move(quantity), target, threshold);
}

inline nlohmann::json to_json(const SchattenReport& r) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& [k, v] : r.samples) samples.push_back(nlohmann::json::array({k, v}));
  return {{"quantity", r.quantity}, {"samples", samples},     {"slope", r.slope},
          {"intercept", r.intercept}, {"residual", r.residual}, {"target", r.target},
          {"threshold", r.threshold}, {"pass", r.pass},         {"notes", r.notes}};
}

inline SchattenReport schatten_report_from_json(const nlohmann::json& j) {
  SchattenReport r;
  r.quantity = j.at("quantity").get<std::string>();
  for (const auto& s : j.at("samples")) r.samples.emplace_back(s.at(0).get<int>(), s.at(1).get<double>());
  r.slope = j.at("slope").get<double>();
  r.intercept = j.at("intercept").get<double>();
  r.residual = j.at("residual").get<double>();
  r.target = j.at("target").get<double>();
  r.threshold = j.at("threshold").get<double>();
  r.pass = j.at("pass").get<bool>();
  r.notes = j.at("notes").get<std::vector<std::string>>();
  return r;
}

}  // namespace qtopo
