#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sigk/expr.hpp"
#include "sigk/types.hpp"

namespace sigk {

struct ScalarJet {
  double value = 0.0;
  Vec dx;
  double dz = 0.0;
  Vec dxi;
};

/// Scalar function of (x, z, xi) with first derivatives and the xi-Hessian.
class ScalarModel {
 public:
  explicit ScalarModel(int n) : n_(n) {}
  virtual ~ScalarModel() = default;

  [[nodiscard]] int dim() const { return n_; }
  [[nodiscard]] virtual double value(const Vec& x, double z, const Vec& xi) const = 0;
  /// Default: central differences with step 1e-5 * max(1, |argument|).
  [[nodiscard]] virtual ScalarJet jet(const Vec& x, double z, const Vec& xi) const;
  /// Default: central differences of jet().dxi.
  [[nodiscard]] virtual Mat xi_hessian(const Vec& x, double z, const Vec& xi) const;
  [[nodiscard]] virtual nlohmann::json to_json() const = 0;

 private:
  int n_;
};

using ScalarModelPtr = std::shared_ptr<const ScalarModel>;

/// Model given by an Expr; derivatives are symbolic.
class ExprModel : public ScalarModel {
 public:
  ExprModel(const Expr& e, int n);
  static ScalarModelPtr parse(const std::string& text, int n);
  static ScalarModelPtr constant(double c, int n);

  [[nodiscard]] double value(const Vec& x, double z, const Vec& xi) const override;
  [[nodiscard]] ScalarJet jet(const Vec& x, double z, const Vec& xi) const override;
  [[nodiscard]] Mat xi_hessian(const Vec& x, double z, const Vec& xi) const override;
  [[nodiscard]] nlohmann::json to_json() const override;
  [[nodiscard]] const Expr& expr() const { return e_; }

 private:
  Expr e_;
  std::vector<Expr> dx_;
  Expr dz_;
  std::vector<Expr> dxi_;
  std::vector<Expr> dxixi_;  // row-major n x n
};

/// Model given by closures; jet falls back to finite differences when `jet_fn` is empty.
class FunctionModel : public ScalarModel {
 public:
  using ValueFn = std::function<double(const Vec&, double, const Vec&)>;
  using JetFn = std::function<ScalarJet(const Vec&, double, const Vec&)>;

  FunctionModel(int n, std::string label, ValueFn value_fn, JetFn jet_fn = {});

  [[nodiscard]] double value(const Vec& x, double z, const Vec& xi) const override;
  [[nodiscard]] ScalarJet jet(const Vec& x, double z, const Vec& xi) const override;
  [[nodiscard]] nlohmann::json to_json() const override;

 private:
  std::string label_;
  ValueFn value_fn_;
  JetFn jet_fn_;
};

/// g(x, z, xi) = f(x, -z, -xi).
class ReflectedModel : public ScalarModel {
 public:
  explicit ReflectedModel(ScalarModelPtr inner);

  [[nodiscard]] double value(const Vec& x, double z, const Vec& xi) const override;
  [[nodiscard]] ScalarJet jet(const Vec& x, double z, const Vec& xi) const override;
  [[nodiscard]] Mat xi_hessian(const Vec& x, double z, const Vec& xi) const override;
  [[nodiscard]] nlohmann::json to_json() const override;
  [[nodiscard]] const ScalarModelPtr& inner() const { return inner_; }

 private:
  ScalarModelPtr inner_;
};

enum class HVariant {
  kZero,
  kPositiveYamabe,   // |xi|^2/(2z) I for z >= floor
  kNegativeYamabe,   // |xi|^2/(2z) I for z <= -floor
  kScalarQuadratic,  // H1(x,z) |xi|^2 I
  kScalarGeneral,    // H2(x,z,xi) I
  kGeneralMatrix,
};

[[nodiscard]] std::string to_string(HVariant v);

struct HJet {
  Mat value;
  Mat dz;
  std::vector<Mat> dx;
  std::vector<Mat> dxi;
};

/// Lower-order tensor H(x, z, xi).
class HModel {
 public:
  using MatrixFn = std::function<Mat(const Vec&, double, const Vec&)>;
  using JetFn = std::function<HJet(const Vec&, double, const Vec&)>;

  static HModel zero(int n);
  static HModel positive_yamabe(int n, double floor);
  static HModel negative_yamabe(int n, double floor);
  /// H1 may depend on x and z only.
  static HModel scalar_quadratic(int n, ScalarModelPtr h1);
  static HModel scalar_general(int n, ScalarModelPtr h2);
  /// Derivatives by central differences unless `jet` is supplied.
  static HModel general_matrix(int n, MatrixFn h, JetFn jet = {}, nlohmann::json description = {});
  /// Entry (i, j) for i <= j given by expressions; the lower triangle mirrors it.
  static HModel general_matrix(int n, const std::vector<std::vector<Expr>>& upper,
                               nlohmann::json description = {});

  [[nodiscard]] HVariant variant() const { return variant_; }
  [[nodiscard]] int dim() const { return n_; }
  [[nodiscard]] double floor() const { return floor_; }
  /// H = s(x,z,xi) I for every variant except GeneralMatrix.
  [[nodiscard]] bool is_scalar() const { return variant_ != HVariant::kGeneralMatrix; }
  /// Jet of s for scalar variants.
  [[nodiscard]] ScalarJet scalar_jet(const Vec& x, double z, const Vec& xi) const;
  /// H1(x, z) for Zero, Yamabe and ScalarQuadratic; throws otherwise.
  [[nodiscard]] double h1(const Vec& x, double z) const;
  [[nodiscard]] bool has_h1() const;
  [[nodiscard]] const ScalarModelPtr& scalar_part() const { return scalar_; }

  /// Throws DomainError outside the model's z-range.
  [[nodiscard]] Mat value(const Vec& x, double z, const Vec& xi) const;
  [[nodiscard]] HJet jet(const Vec& x, double z, const Vec& xi) const;
  /// n^2 x n^2 matrix K[(i,a),(j,b)] = d^2 H_ij / dxi_a dxi_b. Its smallest eigenvalue lower-bounds
  /// the xi-curvature of e^T H e over unit e.
  [[nodiscard]] Eigen::MatrixXd xi_curvature(const Vec& x, double z, const Vec& xi) const;
  /// Whether z lies in the set where the model is defined.
  [[nodiscard]] bool z_admissible(double z) const;

  [[nodiscard]] nlohmann::json to_json() const;

 private:
  HModel(HVariant v, int n) : variant_(v), n_(n) {}
  void check_z(double z) const;

  HVariant variant_;
  int n_;
  double floor_ = 0.0;
  ScalarModelPtr scalar_;
  MatrixFn matrix_fn_;
  JetFn jet_fn_;
  nlohmann::json description_;
  std::shared_ptr<const std::vector<std::vector<ScalarModelPtr>>> entries_;
};

}  // namespace sigk
