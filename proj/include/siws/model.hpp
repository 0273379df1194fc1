#pragma once

// Locally self-similar covariance models
//
//   R(t, s) = sum_j Q_j(sqrt(ts)) C_j(t/s) l_{a_j,b_j}(t, s)
//
// with the example family Q(t) = t^{2H - (1/2) ln t}, C(tau) = tau^{-(c/8) ln tau}
// and the chirp modulation l_{a,b}(t, s) = (t/s)^{i a (ln sqrt(ts) - b)}.
// Everything is evaluated in log coordinates x = ln t, y = ln s.

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "siws/error.hpp"

namespace siws {

using Complex = std::complex<double>;

struct LsspParams {
  double H = 0.5;
  double c = 1.0;

  void validate() const {
    if (!(H > 0.0 && H < 1.0)) throw InvalidModel("H must lie in (0, 1), got " + std::to_string(H));
    if (!(c >= 1.0) || !std::isfinite(c)) throw InvalidModel("c must be >= 1, got " + std::to_string(c));
  }

  bool operator==(const LsspParams&) const = default;
};

struct ChirpParams {
  double a = 0.0;
  double b = 0.0;

  bool is_trivial() const noexcept { return a == 0.0; }
  bool operator==(const ChirpParams&) const = default;
};

/// Q and C of one component as functions of the log argument. When unset the
/// closed forms of the example family are used.
struct ShapeFunctions {
  std::function<double(double)> log_q;        ///< u = ln t  -> Q(t) >= 0
  std::function<Complex(double)> log_c;       ///< v = ln tau -> C(tau), C(1) = 1
  std::string label = "custom";
};

struct Component {
  LsspParams lssp;
  ChirpParams chirp;
  std::optional<ShapeFunctions> shape;

  bool is_example_family() const noexcept { return !shape.has_value(); }

  double q_log(double u) const {
    if (shape) return shape->log_q(u);
    return std::exp(2.0 * lssp.H * u - 0.5 * u * u);
  }

  Complex c_log(double v) const {
    if (shape) return shape->log_c(v);
    return {std::exp(-0.125 * lssp.c * v * v), 0.0};
  }

  /// l_{a,b} for ln(sqrt(ts)) = mid and ln(t/s) = diff.
  Complex chirp_log(double mid, double diff) const {
    if (chirp.a == 0.0) return {1.0, 0.0};
    return std::polar(1.0, chirp.a * (mid - chirp.b) * diff);
  }
};

enum class ModelKind { lssp, lsscp, mlssp, mlsscp };

inline std::string to_string(ModelKind k) {
  switch (k) {
  case ModelKind::lssp: return "LSSP";
  case ModelKind::lsscp: return "LSSCP";
  case ModelKind::mlssp: return "MLSSP";
  case ModelKind::mlsscp: return "MLSSCP";
  }
  return "?";
}

/// Immutable list of covariance components.
class ModelSpec {
public:
  explicit ModelSpec(std::vector<Component> components) : components_(std::move(components)) {
    if (components_.empty()) throw InvalidModel("model needs at least one component");
    for (const auto& c : components_) {
      if (c.shape) {
        if (!c.shape->log_q || !c.shape->log_c) throw InvalidModel("custom component needs both Q and C");
      } else {
        c.lssp.validate();
      }
      if (!std::isfinite(c.chirp.a) || !std::isfinite(c.chirp.b)) throw InvalidModel("chirp must be finite");
    }
  }

  static ModelSpec lssp(double H, double c) { return ModelSpec({Component{{H, c}, {}, {}}}); }
  static ModelSpec lsscp(double H, double c, double a, double b) {
    return ModelSpec({Component{{H, c}, {a, b}, {}}});
  }

  const std::vector<Component>& components() const noexcept { return components_; }

  ModelKind kind() const noexcept {
    bool chirped = false;
    for (const auto& c : components_) chirped = chirped || !c.chirp.is_trivial();
    if (components_.size() == 1) return chirped ? ModelKind::lsscp : ModelKind::lssp;
    return chirped ? ModelKind::mlsscp : ModelKind::mlssp;
  }

  bool is_example_family() const noexcept {
    for (const auto& c : components_)
      if (!c.is_example_family()) return false;
    return true;
  }

  bool is_real() const noexcept {
    for (const auto& c : components_)
      if (!c.chirp.is_trivial()) return false;
    return true;
  }

  /// R(e^x, e^y).
  Complex covariance_log(double x, double y) const {
    const double mid = 0.5 * (x + y);
    const double diff = x - y;
    Complex sum{0.0, 0.0};
    for (const auto& c : components_) sum += c.q_log(mid) * c.c_log(diff) * c.chirp_log(mid, diff);
    return sum;
  }

private:
  std::vector<Component> components_;
};

namespace detail {
inline double checked_log(double t, const char* what) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError(std::string(what) + ": argument must be positive");
  return std::log(t);
}
} // namespace detail

/// Q(t) = t^{2H - (1/2) ln t}.
inline double eval_Q(const LsspParams& p, double t) {
  const double u = detail::checked_log(t, "eval_Q");
  return std::exp(2.0 * p.H * u - 0.5 * u * u);
}

/// C(tau) = exp(-(c/8) (ln tau)^2).
inline double eval_C(const LsspParams& p, double tau) {
  const double v = detail::checked_log(tau, "eval_C");
  return std::exp(-0.125 * p.c * v * v);
}

inline Complex eval_chirp(const ChirpParams& ch, double t, double s) {
  const double x = detail::checked_log(t, "eval_chirp");
  const double y = detail::checked_log(s, "eval_chirp");
  if (ch.a == 0.0) return {1.0, 0.0};
  return std::polar(1.0, ch.a * (0.5 * (x + y) - ch.b) * (x - y));
}

inline Complex eval_covariance(const ModelSpec& m, double t, double s) {
  return m.covariance_log(detail::checked_log(t, "eval_covariance"),
                          detail::checked_log(s, "eval_covariance"));
}

/// R(t sqrt(tau), t / sqrt(tau)).
inline Complex eval_local_slice(const ModelSpec& m, double t, double tau) {
  const double u = detail::checked_log(t, "eval_local_slice");
  const double v = detail::checked_log(tau, "eval_local_slice");
  return m.covariance_log(u + 0.5 * v, u - 0.5 * v);
}

// JSON: {"components":[{"H":0.5,"c":1.1,"a":0,"b":0}, ...]}

inline nlohmann::json to_json(const ModelSpec& m) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : m.components()) {
    if (c.shape) throw InvalidModel("custom components cannot be serialised");
    comps.push_back({{"H", c.lssp.H}, {"c", c.lssp.c}, {"a", c.chirp.a}, {"b", c.chirp.b}});
  }
  return {{"components", comps}};
}

inline ModelSpec model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("components") || !j["components"].is_array())
    throw InvalidModel("model JSON needs a \"components\" array");
  std::vector<Component> comps;
  for (const auto& e : j["components"]) {
    if (!e.is_object() || !e.contains("H") || !e.contains("c"))
      throw InvalidModel("each component needs \"H\" and \"c\"");
    Component c;
    c.lssp = {e.at("H").get<double>(), e.at("c").get<double>()};
    c.chirp = {e.value("a", 0.0), e.value("b", 0.0)};
    comps.push_back(std::move(c));
  }
  return ModelSpec(std::move(comps));
}

} // namespace siws
