#pragma once

// Truncated multivariate Taylor arithmetic ("jets").
//
// A Jet over a JetContext(m, d) stores every Taylor coefficient of total
// degree <= d in m variables, i.e. partial derivatives divided by the
// multi-index factorial. Multi-indices are kept in graded-lexicographic order,
// so the coefficients of a lower-order context form a prefix of those of a
// higher-order one and truncation is a resize.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "finsler/error.hpp"

namespace finsler {

inline constexpr int kMaxJetOrder = 4;
inline constexpr int kMaxJetVars = 16;
inline constexpr double kDefaultDivisionFloor = 1e-14;

using MultiIndex = std::vector<int>;

class JetContext {
public:
  struct Product {
    int lhs;
    int rhs;
    int out;
  };
  struct DerivativeTerm {
    int source;
    double factor;
  };

  /// Shared, immutable context for `num_vars` variables truncated at total
  /// degree `order`. Order 0 carries function values only.
  static std::shared_ptr<const JetContext> make(int num_vars, int order) {
    if (num_vars < 1 || num_vars > kMaxJetVars)
      throw IndexError("jet context: variable count " + std::to_string(num_vars) +
                       " outside 1.." + std::to_string(kMaxJetVars));
    if (order < 0 || order > kMaxJetOrder)
      throw IndexError("jet context: order " + std::to_string(order) + " outside 0.." +
                       std::to_string(kMaxJetOrder));
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const JetContext>> registry;
    std::lock_guard lock(mutex);
    auto& slot = registry[{num_vars, order}];
    if (!slot) {
      std::shared_ptr<const JetContext> lower;
      if (order > 0) {
        auto& lower_slot = registry[{num_vars, order - 1}];
        if (!lower_slot) lower_slot = build_chain(num_vars, order - 1, registry);
        lower = lower_slot;
      }
      slot = std::shared_ptr<const JetContext>(new JetContext(num_vars, order, std::move(lower)));
    }
    return slot;
  }

  int num_vars() const noexcept { return num_vars_; }
  int order() const noexcept { return order_; }
  std::size_t size() const noexcept { return indices_.size(); }

  const MultiIndex& multi_index(std::size_t k) const { return indices_.at(k); }
  int degree(std::size_t k) const { return degrees_.at(k); }

  /// Number of coefficients of total degree <= `order`.
  std::size_t prefix_size(int order) const { return degree_end_.at(static_cast<std::size_t>(order)); }

  /// Position of a multi-index, or -1 when its degree exceeds the order.
  int index_of(std::span<const int> alpha) const {
    if (static_cast<int>(alpha.size()) != num_vars_)
      throw IndexError("multi-index length does not match variable count");
    int total = 0;
    for (int a : alpha) {
      if (a < 0) throw IndexError("negative multi-index entry");
      total += a;
    }
    if (total > order_) return -1;
    auto it = lookup_.find(encode(alpha));
    return it == lookup_.end() ? -1 : it->second;
  }

  /// Position of the first-order coefficient of variable `v`.
  int variable_slot(int v) const { return 1 + v; }

  const std::vector<Product>& products() const noexcept { return products_; }

  /// For each coefficient of the lower-order context, where it comes from in
  /// this context when differentiating with respect to `var`.
  const std::vector<DerivativeTerm>& derivative_table(int var) const {
    return derivative_tables_.at(static_cast<std::size_t>(var));
  }

  const std::shared_ptr<const JetContext>& lower() const noexcept { return lower_; }

  double multi_factorial(std::size_t k) const { return factorials_.at(k); }

private:
  using Registry = std::map<std::pair<int, int>, std::shared_ptr<const JetContext>>;

  static std::shared_ptr<const JetContext> build_chain(int m, int d, Registry& registry) {
    std::shared_ptr<const JetContext> lower;
    if (d > 0) {
      auto& lower_slot = registry[{m, d - 1}];
      if (!lower_slot) lower_slot = build_chain(m, d - 1, registry);
      lower = lower_slot;
    }
    return std::shared_ptr<const JetContext>(new JetContext(m, d, std::move(lower)));
  }

  JetContext(int m, int d, std::shared_ptr<const JetContext> lower)
      : num_vars_(m), order_(d), lower_(std::move(lower)) {
    MultiIndex current(static_cast<std::size_t>(m), 0);
    for (int deg = 0; deg <= d; ++deg) {
      enumerate(current, 0, deg);
      degree_end_.push_back(indices_.size());
    }
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      lookup_.emplace(encode(indices_[k]), static_cast<int>(k));
      double f = 1.0;
      for (int a : indices_[k])
        for (int t = 2; t <= a; ++t) f *= t;
      factorials_.push_back(f);
    }

    MultiIndex sum(static_cast<std::size_t>(m));
    for (std::size_t i = 0; i < indices_.size(); ++i) {
      for (std::size_t j = 0; j < indices_.size(); ++j) {
        // j runs in graded order, so the rest of the row is over-degree too.
        if (degrees_[i] + degrees_[j] > d) break;
        for (int v = 0; v < m; ++v) sum[v] = indices_[i][v] + indices_[j][v];
        products_.push_back({static_cast<int>(i), static_cast<int>(j), lookup_.at(encode(sum))});
      }
    }

    if (d > 0) {
      const std::size_t lower_count = degree_end_[static_cast<std::size_t>(d - 1)];
      derivative_tables_.resize(static_cast<std::size_t>(m));
      for (int v = 0; v < m; ++v) {
        auto& table = derivative_tables_[static_cast<std::size_t>(v)];
        table.reserve(lower_count);
        for (std::size_t k = 0; k < lower_count; ++k) {
          MultiIndex shifted = indices_[k];
          shifted[v] += 1;
          table.push_back({lookup_.at(encode(shifted)), static_cast<double>(shifted[v])});
        }
      }
    }
  }

  void enumerate(MultiIndex& current, int position, int remaining) {
    if (position == num_vars_ - 1) {
      current[position] = remaining;
      int total = std::accumulate(current.begin(), current.end(), 0);
      indices_.push_back(current);
      degrees_.push_back(total);
      return;
    }
    for (int a = remaining; a >= 0; --a) {
      current[position] = a;
      enumerate(current, position + 1, remaining - a);
    }
    current[position] = 0;
  }

  std::int64_t encode(std::span<const int> alpha) const {
    std::int64_t key = 0;
    for (int a : alpha) key = key * (order_ + 1) + a;
    return key;
  }

  int num_vars_;
  int order_;
  std::shared_ptr<const JetContext> lower_;
  std::vector<MultiIndex> indices_;
  std::vector<int> degrees_;
  std::vector<std::size_t> degree_end_;
  std::vector<double> factorials_;
  std::unordered_map<std::int64_t, int> lookup_;
  std::vector<Product> products_;
  std::vector<std::vector<DerivativeTerm>> derivative_tables_;
};

using JetContextPtr = std::shared_ptr<const JetContext>;

class Jet {
public:
  Jet() = default;
  explicit Jet(JetContextPtr ctx) : ctx_(std::move(ctx)), c_(ctx_->size(), 0.0) {}

  static Jet constant(const JetContextPtr& ctx, double value) {
    Jet r(ctx);
    r.c_[0] = value;
    return r;
  }

  /// Coordinate jet: value `value`, unit first derivative in `index`.
  static Jet variable(const JetContextPtr& ctx, int index, double value) {
    if (index < 0 || index >= ctx->num_vars())
      throw IndexError("variable index " + std::to_string(index) + " out of range for " +
                       std::to_string(ctx->num_vars()) + " variables");
    Jet r = constant(ctx, value);
    if (ctx->order() >= 1) r.c_[static_cast<std::size_t>(ctx->variable_slot(index))] = 1.0;
    return r;
  }

  const JetContextPtr& context() const noexcept { return ctx_; }
  int order() const { return ctx_->order(); }
  double value() const { return c_.at(0); }
  std::span<const double> coefficients() const noexcept { return c_; }
  std::span<double> coefficients() noexcept { return c_; }

  /// Raw partial derivative for the given multi-index.
  double partial(std::span<const int> alpha) const {
    int k = ctx_->index_of(alpha);
    if (k < 0)
      throw IndexError("partial derivative order exceeds jet order " + std::to_string(order()));
    return c_[static_cast<std::size_t>(k)] * ctx_->multi_factorial(static_cast<std::size_t>(k));
  }
  double partial(std::initializer_list<int> alpha) const {
    return partial(std::span<const int>(alpha.begin(), alpha.size()));
  }

  /// First derivative in first-order slot `var` (cheap accessor).
  double gradient(int var) const {
    return ctx_->order() >= 1 ? c_[static_cast<std::size_t>(ctx_->variable_slot(var))] : 0.0;
  }

  /// d/dz_var, returned over the context of one lower order.
  Jet derivative(int var) const {
    if (ctx_->order() == 0) throw IndexError("cannot differentiate an order-0 jet");
    if (var < 0 || var >= ctx_->num_vars()) throw IndexError("derivative variable out of range");
    Jet r(ctx_->lower());
    const auto& table = ctx_->derivative_table(var);
    for (std::size_t k = 0; k < table.size(); ++k)
      r.c_[k] = c_[static_cast<std::size_t>(table[k].source)] * table[k].factor;
    return r;
  }

  /// Drop every coefficient above total degree `new_order`.
  Jet truncate(int new_order) const {
    if (new_order > order()) throw IndexError("cannot truncate to a higher order");
    JetContextPtr target = ctx_;
    while (target->order() > new_order) target = target->lower();
    Jet r(target);
    std::copy_n(c_.begin(), r.c_.size(), r.c_.begin());
    return r;
  }

  Jet operator-() const {
    Jet r = *this;
    for (double& v : r.c_) v = -v;
    return r;
  }

  Jet& operator+=(const Jet& b) {
    check_same(b);
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += b.c_[k];
    return *this;
  }
  Jet& operator-=(const Jet& b) {
    check_same(b);
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= b.c_[k];
    return *this;
  }
  Jet& operator*=(const Jet& b) { return *this = *this * b; }
  Jet& operator/=(const Jet& b) { return *this = *this / b; }
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    c_[0] -= s;
    return *this;
  }
  Jet& operator*=(double s) {
    for (double& v : c_) v *= s;
    return *this;
  }
  Jet& operator/=(double s) { return *this *= 1.0 / s; }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) { return (-a) += s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    a.check_same(b);
    Jet r(a.ctx_);
    const double* pa = a.c_.data();
    const double* pb = b.c_.data();
    double* pr = r.c_.data();
    for (const auto& t : a.ctx_->products()) pr[t.out] += pa[t.lhs] * pb[t.rhs];
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) { return divide(a, b, kDefaultDivisionFloor); }
  friend Jet operator/(double s, const Jet& b) { return reciprocal(b, kDefaultDivisionFloor) * s; }

  friend Jet reciprocal(const Jet& b, double floor) {
    const double v = b.value();
    if (!(std::abs(v) >= floor))
      throw DegenerateValue("division by a jet with value " + std::to_string(v));
    std::array<double, kMaxJetOrder + 1> d{};
    double inv = 1.0 / v;
    double term = inv;
    for (int k = 0; k <= b.order(); ++k) {
      d[static_cast<std::size_t>(k)] = term;  // k-th derivative of 1/t: (-1)^k k! / t^(k+1)
      term *= -(k + 1) * inv;
    }
    return compose(b, d);
  }

  friend Jet divide(const Jet& a, const Jet& b, double floor) {
    a.check_same(b);
    return a * reciprocal(b, floor);
  }

  /// f(a) given the derivatives f^(k)(a.value()) for k = 0..order.
  friend Jet compose(const Jet& a, std::span<const double> derivs) {
    const int d = a.order();
    Jet r = constant(a.ctx_, derivs[0]);
    if (d == 0) return r;
    Jet h = a;
    h.c_[0] = 0.0;
    Jet power = h;
    double factorial = 1.0;
    for (int k = 1; k <= d; ++k) {
      factorial *= k;
      const double w = derivs[static_cast<std::size_t>(k)] / factorial;
      if (w != 0.0)
        for (std::size_t i = 0; i < r.c_.size(); ++i) r.c_[i] += w * power.c_[i];
      if (k < d) power = power * h;
    }
    return r;
  }

  friend bool same_context(const Jet& a, const Jet& b) noexcept { return a.ctx_ == b.ctx_; }

private:
  void check_same(const Jet& b) const {
    if (ctx_ != b.ctx_) throw ContextMismatch("jet operands belong to different contexts");
  }

  JetContextPtr ctx_;
  std::vector<double> c_;
};

inline Jet sqrt(const Jet& a) {
  const double v = a.value();
  if (!(v > 0.0)) throw DomainError("sqrt of nonpositive value " + std::to_string(v));
  std::array<double, kMaxJetOrder + 1> d{};
  double coef = 1.0;
  double e = 0.5;
  for (int k = 0; k <= a.order(); ++k) {
    d[static_cast<std::size_t>(k)] = coef * std::pow(v, e);
    coef *= e;
    e -= 1.0;
  }
  return compose(a, d);
}

inline Jet exp(const Jet& a) {
  std::array<double, kMaxJetOrder + 1> d{};
  d.fill(std::exp(a.value()));
  return compose(a, d);
}

inline Jet log(const Jet& a) {
  const double v = a.value();
  if (!(v > 0.0)) throw DomainError("ln of nonpositive value " + std::to_string(v));
  std::array<double, kMaxJetOrder + 1> d{};
  d[0] = std::log(v);
  double term = 1.0 / v;
  for (int k = 1; k <= a.order(); ++k) {
    d[static_cast<std::size_t>(k)] = term;
    term *= -k / v;
  }
  return compose(a, d);
}

inline Jet sin(const Jet& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  const std::array<double, kMaxJetOrder + 1> d{s, c, -s, -c, s};
  return compose(a, d);
}

inline Jet cos(const Jet& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  const std::array<double, kMaxJetOrder + 1> d{c, -s, -c, s, c};
  return compose(a, d);
}

/// Integer power by repeated multiplication; negative exponents divide.
inline Jet pow(const Jet& a, int n) {
  if (n < 0) return 1.0 / pow(a, -n);
  Jet result = Jet::constant(a.context(), 1.0);
  Jet base = a;
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

/// a^r for real r. Integer-valued r routes to exact integer powers; any other
/// r requires a strictly positive base.
inline Jet pow(const Jet& a, double r) {
  if (r == std::trunc(r) && std::abs(r) <= 64.0) return pow(a, static_cast<int>(r));
  const double v = a.value();
  if (!(v > 0.0))
    throw DomainError("fractional power " + std::to_string(r) + " of nonpositive value " +
                      std::to_string(v));
  std::array<double, kMaxJetOrder + 1> d{};
  double coef = 1.0;
  double e = r;
  for (int k = 0; k <= a.order(); ++k) {
    d[static_cast<std::size_t>(k)] = coef * std::pow(v, e);
    coef *= e;
    e -= 1.0;
  }
  return compose(a, d);
}

/// a^b for a jet exponent: exp(b ln a).
inline Jet pow(const Jet& a, const Jet& b) { return exp(b * log(a)); }

}  // namespace finsler
