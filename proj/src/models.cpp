#include "sigk/models.hpp"

#include <algorithm>
#include <cmath>

#include "sigk/errors.hpp"

namespace sigk {

namespace {

double fd_step(double v) { return 1e-5 * std::max(1.0, std::abs(v)); }

}  // namespace

ScalarJet ScalarModel::jet(const Vec& x, double z, const Vec& xi) const {
  ScalarJet j;
  j.value = value(x, z, xi);
  j.dx = Vec::Zero(n_);
  j.dxi = Vec::Zero(n_);
  for (int a = 0; a < n_; ++a) {
    const double e = fd_step(x(a));
    Vec xp = x, xm = x;
    xp(a) += e;
    xm(a) -= e;
    j.dx(a) = (value(xp, z, xi) - value(xm, z, xi)) / (2 * e);
    const double s = fd_step(xi(a));
    Vec qp = xi, qm = xi;
    qp(a) += s;
    qm(a) -= s;
    j.dxi(a) = (value(x, z, qp) - value(x, z, qm)) / (2 * s);
  }
  const double e = fd_step(z);
  j.dz = (value(x, z + e, xi) - value(x, z - e, xi)) / (2 * e);
  return j;
}

Mat ScalarModel::xi_hessian(const Vec& x, double z, const Vec& xi) const {
  Mat h(n_, n_);
  for (int b = 0; b < n_; ++b) {
    const double s = fd_step(xi(b));
    Vec qp = xi, qm = xi;
    qp(b) += s;
    qm(b) -= s;
    const Vec d = (jet(x, z, qp).dxi - jet(x, z, qm).dxi) / (2 * s);
    h.col(b) = d;
  }
  return 0.5 * (h + h.transpose());
}

ExprModel::ExprModel(const Expr& e, int n) : ScalarModel(n), e_(e) {
  for (int a = 0; a < n; ++a) {
    dx_.push_back(e.diff({ExprVar::Kind::kX, a}));
    dxi_.push_back(e.diff({ExprVar::Kind::kXi, a}));
  }
  dz_ = e.diff({ExprVar::Kind::kZ, 0});
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) dxixi_.push_back(dxi_[a].diff({ExprVar::Kind::kXi, b}));
  }
}

ScalarModelPtr ExprModel::parse(const std::string& text, int n) {
  return std::make_shared<ExprModel>(Expr::parse(text, n), n);
}

ScalarModelPtr ExprModel::constant(double c, int n) {
  return std::make_shared<ExprModel>(Expr::constant(c), n);
}

double ExprModel::value(const Vec& x, double z, const Vec& xi) const { return e_.eval(x, z, xi); }

ScalarJet ExprModel::jet(const Vec& x, double z, const Vec& xi) const {
  const int n = dim();
  ScalarJet j;
  j.value = e_.eval(x, z, xi);
  j.dx.resize(n);
  j.dxi.resize(n);
  for (int a = 0; a < n; ++a) {
    j.dx(a) = dx_[a].eval(x, z, xi);
    j.dxi(a) = dxi_[a].eval(x, z, xi);
  }
  j.dz = dz_.eval(x, z, xi);
  return j;
}

Mat ExprModel::xi_hessian(const Vec& x, double z, const Vec& xi) const {
  const int n = dim();
  Mat h(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) h(a, b) = dxixi_[a * n + b].eval(x, z, xi);
  }
  return 0.5 * (h + h.transpose());
}

nlohmann::json ExprModel::to_json() const { return {{"expression", e_.str()}}; }

FunctionModel::FunctionModel(int n, std::string label, ValueFn value_fn, JetFn jet_fn)
    : ScalarModel(n), label_(std::move(label)), value_fn_(std::move(value_fn)), jet_fn_(std::move(jet_fn)) {}

double FunctionModel::value(const Vec& x, double z, const Vec& xi) const { return value_fn_(x, z, xi); }

ScalarJet FunctionModel::jet(const Vec& x, double z, const Vec& xi) const {
  if (jet_fn_) return jet_fn_(x, z, xi);
  return ScalarModel::jet(x, z, xi);
}

nlohmann::json FunctionModel::to_json() const { return {{"builtin", label_}}; }

ReflectedModel::ReflectedModel(ScalarModelPtr inner) : ScalarModel(inner->dim()), inner_(std::move(inner)) {}

double ReflectedModel::value(const Vec& x, double z, const Vec& xi) const {
  return inner_->value(x, -z, (-xi).eval());
}

ScalarJet ReflectedModel::jet(const Vec& x, double z, const Vec& xi) const {
  ScalarJet j = inner_->jet(x, -z, (-xi).eval());
  j.dz = -j.dz;
  j.dxi = -j.dxi;
  return j;
}

Mat ReflectedModel::xi_hessian(const Vec& x, double z, const Vec& xi) const {
  return inner_->xi_hessian(x, -z, (-xi).eval());
}

nlohmann::json ReflectedModel::to_json() const { return {{"reflected", inner_->to_json()}}; }

std::string to_string(HVariant v) {
  switch (v) {
    case HVariant::kZero: return "Zero";
    case HVariant::kPositiveYamabe: return "PositiveYamabe";
    case HVariant::kNegativeYamabe: return "NegativeYamabe";
    case HVariant::kScalarQuadratic: return "ScalarQuadratic";
    case HVariant::kScalarGeneral: return "ScalarGeneral";
    case HVariant::kGeneralMatrix: return "GeneralMatrix";
  }
  return "?";
}

HModel HModel::zero(int n) { return HModel(HVariant::kZero, n); }

HModel HModel::positive_yamabe(int n, double floor) {
  if (!(floor > 0.0)) throw DomainError("Yamabe positivity floor must be positive");
  HModel m(HVariant::kPositiveYamabe, n);
  m.floor_ = floor;
  return m;
}

HModel HModel::negative_yamabe(int n, double floor) {
  if (!(floor > 0.0)) throw DomainError("Yamabe positivity floor must be positive");
  HModel m(HVariant::kNegativeYamabe, n);
  m.floor_ = floor;
  return m;
}

HModel HModel::scalar_quadratic(int n, ScalarModelPtr h1) {
  if (!h1 || h1->dim() != n) throw DimensionError("H1 model dimension mismatch");
  if (auto* e = dynamic_cast<const ExprModel*>(h1.get())) {
    for (int a = 0; a < n; ++a) {
      if (e->expr().depends_on({ExprVar::Kind::kXi, a})) {
        throw ConfigError("ScalarQuadratic H1 must not depend on xi");
      }
    }
  }
  HModel m(HVariant::kScalarQuadratic, n);
  m.scalar_ = std::move(h1);
  return m;
}

HModel HModel::scalar_general(int n, ScalarModelPtr h2) {
  if (!h2 || h2->dim() != n) throw DimensionError("H2 model dimension mismatch");
  HModel m(HVariant::kScalarGeneral, n);
  m.scalar_ = std::move(h2);
  return m;
}

HModel HModel::general_matrix(int n, MatrixFn h, JetFn jet, nlohmann::json description) {
  HModel m(HVariant::kGeneralMatrix, n);
  m.matrix_fn_ = std::move(h);
  m.jet_fn_ = std::move(jet);
  m.description_ = std::move(description);
  return m;
}

HModel HModel::general_matrix(int n, const std::vector<std::vector<Expr>>& upper, nlohmann::json description) {
  if (static_cast<int>(upper.size()) != n) throw DimensionError("GeneralMatrix needs n rows");
  auto entries = std::make_shared<std::vector<std::vector<ScalarModelPtr>>>(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(upper[i].size()) != n - i) {
      throw DimensionError("GeneralMatrix row " + std::to_string(i + 1) + " must hold the upper triangle");
    }
    for (int j = i; j < n; ++j) (*entries)[i].push_back(std::make_shared<ExprModel>(upper[i][j - i], n));
  }
  HModel m(HVariant::kGeneralMatrix, n);
  m.entries_ = entries;
  m.matrix_fn_ = [entries, n](const Vec& x, double z, const Vec& xi) {
    Mat h(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        h(i, j) = (*entries)[i][j - i]->value(x, z, xi);
        h(j, i) = h(i, j);
      }
    }
    return h;
  };
  m.jet_fn_ = [entries, n](const Vec& x, double z, const Vec& xi) {
    HJet jt;
    jt.value = Mat::Zero(n, n);
    jt.dz = Mat::Zero(n, n);
    jt.dx.assign(n, Mat::Zero(n, n));
    jt.dxi.assign(n, Mat::Zero(n, n));
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const ScalarJet s = (*entries)[i][j - i]->jet(x, z, xi);
        auto put = [&](Mat& m, double v) {
          m(i, j) = v;
          m(j, i) = v;
        };
        put(jt.value, s.value);
        put(jt.dz, s.dz);
        for (int a = 0; a < n; ++a) {
          put(jt.dx[a], s.dx(a));
          put(jt.dxi[a], s.dxi(a));
        }
      }
    }
    return jt;
  };
  if (description.is_null()) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < n; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int j = i; j < n; ++j) row.push_back(upper[i][j - i].str());
      rows.push_back(row);
    }
    description = {{"upper", rows}};
  }
  m.description_ = std::move(description);
  return m;
}

bool HModel::z_admissible(double z) const {
  switch (variant_) {
    case HVariant::kPositiveYamabe: return z >= floor_;
    case HVariant::kNegativeYamabe: return z <= -floor_;
    default: return std::isfinite(z);
  }
}

void HModel::check_z(double z) const {
  if (!z_admissible(z)) {
    throw DomainError(to_string(variant_) + " evaluated at z = " + std::to_string(z) +
                      " outside its domain (floor " + std::to_string(floor_) + ")");
  }
}

ScalarJet HModel::scalar_jet(const Vec& x, double z, const Vec& xi) const {
  check_z(z);
  ScalarJet s;
  s.dx = Vec::Zero(n_);
  s.dxi = Vec::Zero(n_);
  switch (variant_) {
    case HVariant::kZero:
      break;
    case HVariant::kPositiveYamabe:
    case HVariant::kNegativeYamabe: {
      const double q = xi.squaredNorm();
      s.value = q / (2.0 * z);
      s.dz = -q / (2.0 * z * z);
      s.dxi = xi / z;
      break;
    }
    case HVariant::kScalarQuadratic: {
      const double q = xi.squaredNorm();
      const ScalarJet h = scalar_->jet(x, z, xi);
      s.value = h.value * q;
      s.dx = h.dx * q;
      s.dz = h.dz * q;
      s.dxi = 2.0 * h.value * xi;
      break;
    }
    case HVariant::kScalarGeneral:
      s = scalar_->jet(x, z, xi);
      break;
    case HVariant::kGeneralMatrix:
      throw DomainError("GeneralMatrix H has no scalar multiplier");
  }
  return s;
}

bool HModel::has_h1() const {
  return variant_ == HVariant::kZero || variant_ == HVariant::kPositiveYamabe ||
         variant_ == HVariant::kNegativeYamabe || variant_ == HVariant::kScalarQuadratic;
}

double HModel::h1(const Vec& x, double z) const {
  check_z(z);
  switch (variant_) {
    case HVariant::kZero: return 0.0;
    case HVariant::kPositiveYamabe:
    case HVariant::kNegativeYamabe: return 1.0 / (2.0 * z);
    case HVariant::kScalarQuadratic: return scalar_->value(x, z, Vec::Zero(n_));
    default: throw DomainError(to_string(variant_) + " is not of the form H1 |xi|^2 I");
  }
}

Mat HModel::value(const Vec& x, double z, const Vec& xi) const {
  check_z(z);
  if (variant_ == HVariant::kGeneralMatrix) {
    const Mat h = matrix_fn_(x, z, xi);
    if (h.rows() != n_ || h.cols() != n_) throw DimensionError("GeneralMatrix callback returned wrong shape");
    return 0.5 * (h + h.transpose());
  }
  if (variant_ == HVariant::kZero) return Mat::Zero(n_, n_);
  return scalar_jet(x, z, xi).value * Mat::Identity(n_, n_);
}

HJet HModel::jet(const Vec& x, double z, const Vec& xi) const {
  check_z(z);
  HJet j;
  if (variant_ != HVariant::kGeneralMatrix) {
    const ScalarJet s = scalar_jet(x, z, xi);
    const Mat id = Mat::Identity(n_, n_);
    j.value = s.value * id;
    j.dz = s.dz * id;
    for (int a = 0; a < n_; ++a) {
      j.dx.push_back(s.dx(a) * id);
      j.dxi.push_back(s.dxi(a) * id);
    }
    return j;
  }
  if (jet_fn_) return jet_fn_(x, z, xi);
  j.value = value(x, z, xi);
  for (int a = 0; a < n_; ++a) {
    const double e = fd_step(x(a));
    Vec xp = x, xm = x;
    xp(a) += e;
    xm(a) -= e;
    j.dx.push_back((value(xp, z, xi) - value(xm, z, xi)) / (2 * e));
  }
  for (int a = 0; a < n_; ++a) {
    const double e = fd_step(xi(a));
    Vec qp = xi, qm = xi;
    qp(a) += e;
    qm(a) -= e;
    j.dxi.push_back((value(x, z, qp) - value(x, z, qm)) / (2 * e));
  }
  const double e = fd_step(z);
  j.dz = (value(x, z + e, xi) - value(x, z - e, xi)) / (2 * e);
  return j;
}

Eigen::MatrixXd HModel::xi_curvature(const Vec& x, double z, const Vec& xi) const {
  check_z(z);
  const int n = n_;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n * n, n * n);
  auto put_scalar = [&](const Mat& hess) {
    for (int i = 0; i < n; ++i) k.block(i * n, i * n, n, n) = hess;
  };
  switch (variant_) {
    case HVariant::kZero:
      return k;
    case HVariant::kPositiveYamabe:
    case HVariant::kNegativeYamabe:
      put_scalar(Mat::Identity(n, n) / z);
      return k;
    case HVariant::kScalarQuadratic:
      put_scalar(2.0 * scalar_->value(x, z, xi) * Mat::Identity(n, n));
      return k;
    case HVariant::kScalarGeneral:
      put_scalar(scalar_->xi_hessian(x, z, xi));
      return k;
    case HVariant::kGeneralMatrix:
      break;
  }
  if (entries_) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const Mat hess = (*entries_)[i][j - i]->xi_hessian(x, z, xi);
        for (int a = 0; a < n; ++a) {
          for (int b = 0; b < n; ++b) {
            k(i * n + a, j * n + b) = hess(a, b);
            k(j * n + a, i * n + b) = hess(a, b);
          }
        }
      }
    }
    return k;
  }
  for (int b = 0; b < n; ++b) {
    const double e = fd_step(xi(b));
    Vec qp = xi, qm = xi;
    qp(b) += e;
    qm(b) -= e;
    const HJet jp = jet(x, z, qp);
    const HJet jm = jet(x, z, qm);
    for (int a = 0; a < n; ++a) {
      const Mat d = (jp.dxi[a] - jm.dxi[a]) / (2 * e);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) k(i * n + a, j * n + b) = d(i, j);
      }
    }
  }
  return 0.5 * (k + k.transpose());
}

nlohmann::json HModel::to_json() const {
  nlohmann::json j;
  j["variant"] = to_string(variant_);
  nlohmann::json params = nlohmann::json::object();
  switch (variant_) {
    case HVariant::kPositiveYamabe:
    case HVariant::kNegativeYamabe: params["floor"] = floor_; break;
    case HVariant::kScalarQuadratic: params["H1"] = scalar_->to_json(); break;
    case HVariant::kScalarGeneral: params["H2"] = scalar_->to_json(); break;
    case HVariant::kGeneralMatrix: params = description_.is_null() ? nlohmann::json::object() : description_; break;
    default: break;
  }
  j["params"] = params;
  return j;
}

}  // namespace sigk
