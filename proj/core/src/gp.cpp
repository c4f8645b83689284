// SPDX-License-Identifier: Apache-2.0
#include "setupkit/gp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

#include "lbfgs.hpp"
#include "setupkit/csv.hpp"
#include "setupkit/errors.hpp"
#include "setupkit/random.hpp"

namespace setupkit {

namespace {

constexpr double kJitterLevels[] = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};

// Pairwise squared distances of the rows of a.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a) {
  const Eigen::VectorXd sq = a.rowwise().squaredNorm();
  Eigen::MatrixXd d = -2.0 * a * a.transpose();
  d.colwise() += sq;
  d.rowwise() += sq.transpose();
  return d.cwiseMax(0.0);
}

Eigen::MatrixXd scaled_by_lengthscales(const Eigen::MatrixXd& x, const std::vector<double>& ls) {
  Eigen::MatrixXd out = x;
  for (Eigen::Index c = 0; c < x.cols(); ++c) out.col(c) /= ls[static_cast<std::size_t>(c)];
  return out;
}

// Below this exponent the kernel entry is set to zero. Products of such
// entries go subnormal, which is very slow and changes nothing.
constexpr double kMinExponent = -230.0;

Eigen::ArrayXXd kernel_exp(const Eigen::ArrayXXd& arg) {
  return (arg < kMinExponent).select(0.0, arg.exp());
}

Eigen::MatrixXd signal_kernel(const Eigen::MatrixXd& xs, double signal_variance) {
  return signal_variance * kernel_exp(-0.5 * squared_distances(xs).array()).matrix();
}

bool good_factor(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const auto diag = llt.matrixLLT().diagonal();
  return diag.allFinite() && (diag.array() > 0.0).all();
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Box for the optimizer in log space; z is mapped through a sigmoid.
struct Box {
  Eigen::VectorXd lo, hi;

  Eigen::VectorXd to_theta(const Eigen::VectorXd& z) const {
    Eigen::VectorXd t(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) t[i] = lo[i] + (hi[i] - lo[i]) * sigmoid(z[i]);
    return t;
  }
  Eigen::VectorXd to_z(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd z(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double u = std::clamp((theta[i] - lo[i]) / (hi[i] - lo[i]), 1e-6, 1.0 - 1e-6);
      z[i] = std::log(u / (1.0 - u));
    }
    return z;
  }
  Eigen::VectorXd dtheta_dz(const Eigen::VectorXd& z) const {
    Eigen::VectorXd d(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double s = sigmoid(z[i]);
      d[i] = (hi[i] - lo[i]) * s * (1.0 - s);
    }
    return d;
  }
};

GpHyperparams from_log(const Eigen::VectorXd& theta, int dim) {
  GpHyperparams h;
  h.lengthscales.resize(static_cast<std::size_t>(dim));
  for (int d = 0; d < dim; ++d) h.lengthscales[static_cast<std::size_t>(d)] = std::exp(theta[d]);
  h.signal_variance = std::exp(theta[dim]);
  h.noise_variance = std::exp(theta[dim + 1]);
  return h;
}

GpHyperparams optimize(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpFitOptions& options) {
  const int dim = static_cast<int>(x.cols());
  const double var_y = std::max(y.squaredNorm() / static_cast<double>(y.size()), 1e-12);

  Box box{Eigen::VectorXd(dim + 2), Eigen::VectorXd(dim + 2)};
  box.lo.head(dim).setConstant(std::log(1e-2));
  box.hi.head(dim).setConstant(std::log(1e3));
  box.lo[dim] = std::log(var_y * 1e-4);
  box.hi[dim] = std::log(var_y * 1e2);
  box.lo[dim + 1] = std::log(kNoiseFloor);
  box.hi[dim + 1] = std::log(std::max(var_y, 1e-9));

  const double base_ls = std::log(std::max(1.0, std::sqrt(static_cast<double>(dim))));
  SplitMix64 rng(mix_seed(options.seed, 0x6770));

  detail::Objective objective = [&](const Eigen::VectorXd& z, Eigen::VectorXd& grad) {
    const Eigen::VectorXd theta = box.to_theta(z);
    Eigen::VectorXd g;
    const double lml = detail::gp_log_marginal_likelihood(x, y, from_log(theta, dim), &g);
    if (!std::isfinite(lml)) return std::numeric_limits<double>::infinity();
    grad = -(g.array() * box.dtheta_dz(z).array()).matrix();
    return -lml;
  };

  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta;
  const bool warm = options.warm_start && static_cast<int>(options.warm_start->lengthscales.size()) == dim;
  const int starts = std::max(1, options.starts) + (warm ? 1 : 0);
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXd theta(dim + 2);
    if (warm && s == starts - 1) {
      for (int d = 0; d < dim; ++d) theta[d] = std::log(options.warm_start->lengthscales[static_cast<std::size_t>(d)]);
      theta[dim] = std::log(options.warm_start->signal_variance);
      theta[dim + 1] = std::log(std::max(options.warm_start->noise_variance, kNoiseFloor));
    } else if (s == 0) {
      theta.head(dim).setConstant(base_ls);
      theta[dim] = std::log(var_y);
      theta[dim + 1] = std::log(var_y * 1e-3);
    } else {
      for (int d = 0; d < dim; ++d) theta[d] = base_ls + rng.uniform(-1.5, 1.5);
      theta[dim] = std::log(var_y) + rng.uniform(-1.0, 1.0);
      theta[dim + 1] = std::log(var_y) + rng.uniform(-6.0, -1.0) * std::numbers::ln10;
    }
    detail::LbfgsOptions lo;
    lo.max_iterations = options.max_iterations;
    const auto r = detail::minimize_lbfgs(objective, box.to_z(theta), lo);
    if (r.value < best) {
      best = r.value;
      best_theta = box.to_theta(r.x);
    }
  }
  if (!std::isfinite(best)) throw SingularKernel("no hyperparameter start gave a factorizable kernel");
  return from_log(best_theta, dim);
}

void write_vector(std::ostream& out, const char* key, const Eigen::VectorXd& v) {
  out << key;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << format_number(v[i]);
  out << '\n';
}

Eigen::VectorXd read_vector(std::istream& in, const char* key, Eigen::Index n) {
  std::string k;
  if (!(in >> k) || k != key) throw ParseError(std::string("gp dump: expected '") + key + "'");
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::string tok;
    if (!(in >> tok)) throw ParseError(std::string("gp dump: short '") + key + "' row");
    v[i] = parse_number(tok, key);
  }
  return v;
}

double read_scalar(std::istream& in, const char* key) { return read_vector(in, key, 1)[0]; }

}  // namespace

void GpHyperparams::validate() const {
  if (lengthscales.empty()) throw std::invalid_argument("gp: no lengthscales");
  for (double l : lengthscales) {
    if (!std::isfinite(l) || !(l > 0.0)) throw std::invalid_argument("gp: lengthscales must be positive and finite");
  }
  if (!std::isfinite(signal_variance) || !(signal_variance > 0.0)) {
    throw std::invalid_argument("gp: signal variance must be positive and finite");
  }
  if (!std::isfinite(noise_variance) || noise_variance < 0.0) {
    throw std::invalid_argument("gp: noise variance must be non-negative and finite");
  }
}

namespace detail {

double gp_log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpHyperparams& hyper,
                                  Eigen::VectorXd* grad) {
  const Eigen::Index n = x.rows();
  const Eigen::Index dim = x.cols();
  const Eigen::MatrixXd kf = signal_kernel(scaled_by_lengthscales(x, hyper.lengthscales), hyper.signal_variance);
  Eigen::MatrixXd k = kf;
  k.diagonal().array() += hyper.noise_variance;

  const Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (!good_factor(llt)) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd alpha = llt.solve(y);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double lml =
      -0.5 * y.dot(alpha) - 0.5 * log_det - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  if (grad) {
    // dLML/dtheta = 0.5 tr(W dK/dtheta), W = alpha alpha^T - K^-1.
    Eigen::MatrixXd w = alpha * alpha.transpose() - llt.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd m = w.cwiseProduct(kf);
    const Eigen::VectorXd row_sum = m.rowwise().sum();
    const Eigen::MatrixXd mx = m * x;
    grad->resize(dim + 2);
    for (Eigen::Index d = 0; d < dim; ++d) {
      // sum_ij M_ij (x_id - x_jd)^2 for symmetric M.
      const double s = 2.0 * x.col(d).cwiseAbs2().dot(row_sum) - 2.0 * x.col(d).dot(mx.col(d));
      const double l = hyper.lengthscales[static_cast<std::size_t>(d)];
      (*grad)[d] = 0.5 * s / (l * l);
    }
    (*grad)[dim] = 0.5 * m.sum();
    (*grad)[dim + 1] = 0.5 * hyper.noise_variance * w.trace();
  }
  return lml;
}

}  // namespace detail

GpModel GpModel::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpFitOptions& options) {
  if (x.rows() != y.size()) throw DimensionMismatch("gp fit: input rows and target count differ");
  if (x.rows() < 2) throw std::invalid_argument("gp fit: need at least two training rows");
  if (x.cols() < 1) throw DimensionMismatch("gp fit: inputs have no columns");
  if (!x.allFinite() || !y.allFinite()) throw std::invalid_argument("gp fit: non-finite training data");

  GpModel m;
  m.x_raw_ = x;
  m.y_raw_ = y;
  m.standardize_ = options.standardize;
  const Eigen::Index dim = x.cols();
  m.mean_ = Eigen::VectorXd::Zero(dim);
  m.scale_ = Eigen::VectorXd::Ones(dim);
  if (options.standardize) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      const double mu = x.col(c).mean();
      const double sd = std::sqrt((x.col(c).array() - mu).square().mean());
      if (sd > 1e-12 * std::max(1.0, std::fabs(mu))) {
        m.mean_[c] = mu;
        m.scale_[c] = sd;
      }
    }
  }
  m.y_mean_ = y.mean();

  if (options.fixed) {
    if (static_cast<Eigen::Index>(options.fixed->lengthscales.size()) != dim) {
      throw DimensionMismatch("gp fit: fixed lengthscales do not match input dimension");
    }
    options.fixed->validate();
    m.hyper_ = *options.fixed;
  } else {
    Eigen::MatrixXd xt(x.rows(), dim);
    for (Eigen::Index r = 0; r < x.rows(); ++r) xt.row(r) = m.transform(x.row(r).transpose()).transpose();
    const Eigen::VectorXd yc = y.array() - m.y_mean_;
    m.hyper_ = optimize(xt, yc, options);
  }
  m.factorize();
  return m;
}

Eigen::VectorXd GpModel::transform(const Eigen::VectorXd& x) const {
  return ((x - mean_).array() / scale_.array()).matrix();
}

void GpModel::factorize() {
  const Eigen::Index n = x_raw_.rows();
  Eigen::MatrixXd xt(n, x_raw_.cols());
  for (Eigen::Index r = 0; r < n; ++r) xt.row(r) = transform(x_raw_.row(r).transpose()).transpose();
  xs_ = scaled_by_lengthscales(xt, hyper_.lengthscales);
  const Eigen::MatrixXd kf = signal_kernel(xs_, hyper_.signal_variance);

  // Jitter levels are relative to the signal variance.
  for (double level : kJitterLevels) {
    Eigen::MatrixXd k = kf;
    const double jitter = level * hyper_.signal_variance;
    k.diagonal().array() += hyper_.noise_variance + jitter;
    llt_.compute(k);
    if (!good_factor(llt_)) continue;
    const Eigen::MatrixXd& l = llt_.matrixLLT();
    const Eigen::MatrixXd lower = l.triangularView<Eigen::Lower>();
    factor_error_ = (lower * lower.transpose() - k).norm() / k.norm();
    if (factor_error_ > 1e-8) continue;
    jitter_ = jitter;
    const Eigen::VectorXd yc = y_raw_.array() - y_mean_;
    alpha_ = llt_.solve(yc);
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    lml_ = -0.5 * yc.dot(alpha_) - 0.5 * log_det - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    return;
  }
  throw SingularKernel("gp: Gram matrix not positive definite after jitter escalation to 1e-6");
}

Prediction GpModel::predict_one(const Eigen::VectorXd& x) const {
  if (x.size() != x_raw_.cols()) {
    throw DimensionMismatch("gp predict: expected " + std::to_string(x_raw_.cols()) + " features, got " +
                            std::to_string(x.size()));
  }
  Eigen::VectorXd q = transform(x);
  for (Eigen::Index c = 0; c < q.size(); ++c) q[c] /= hyper_.lengthscales[static_cast<std::size_t>(c)];
  const Eigen::VectorXd d2 = (xs_.rowwise() - q.transpose()).rowwise().squaredNorm();
  const Eigen::VectorXd ks = hyper_.signal_variance * kernel_exp(-0.5 * d2.array()).matrix();
  Prediction p;
  p.mu = y_mean_ + ks.dot(alpha_);
  const Eigen::VectorXd w = llt_.matrixL().solve(ks);
  const double var = hyper_.signal_variance + hyper_.noise_variance - w.squaredNorm();
  p.v = std::sqrt(std::max(var, 0.0));
  return p;
}

std::vector<Prediction> GpModel::predict(const Eigen::MatrixXd& x) const {
  if (x.cols() != x_raw_.cols()) {
    throw DimensionMismatch("gp predict: expected " + std::to_string(x_raw_.cols()) + " features, got " +
                            std::to_string(x.cols()));
  }
  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) out.push_back(predict_one(x.row(r).transpose()));
  return out;
}

void GpModel::save(std::ostream& out) const {
  const Eigen::Index n = x_raw_.rows();
  const Eigen::Index dim = x_raw_.cols();
  out << "setupkit-gp 1\n";
  out << "dimension " << dim << "\nsize " << n << "\nstandardize " << (standardize_ ? 1 : 0) << '\n';
  write_vector(out, "feature_mean", mean_);
  write_vector(out, "feature_scale", scale_);
  out << "signal_variance " << format_number(hyper_.signal_variance) << '\n';
  out << "noise_variance " << format_number(hyper_.noise_variance) << '\n';
  write_vector(out, "lengthscales",
               Eigen::Map<const Eigen::VectorXd>(hyper_.lengthscales.data(), static_cast<Eigen::Index>(dim)));
  for (Eigen::Index r = 0; r < n; ++r) {
    out << "row " << format_number(y_raw_[r]);
    for (Eigen::Index c = 0; c < dim; ++c) out << ' ' << format_number(x_raw_(r, c));
    out << '\n';
  }
}

GpModel GpModel::load(std::istream& in) {
  std::string magic, version;
  if (!(in >> magic >> version) || magic != "setupkit-gp" || version != "1") {
    throw ParseError("gp dump: bad header");
  }
  const auto dim = static_cast<Eigen::Index>(read_scalar(in, "dimension"));
  const auto n = static_cast<Eigen::Index>(read_scalar(in, "size"));
  if (dim < 1 || n < 2) throw ParseError("gp dump: bad dimension or size");
  GpModel m;
  m.standardize_ = read_scalar(in, "standardize") != 0.0;
  m.mean_ = read_vector(in, "feature_mean", dim);
  m.scale_ = read_vector(in, "feature_scale", dim);
  m.hyper_.signal_variance = read_scalar(in, "signal_variance");
  m.hyper_.noise_variance = read_scalar(in, "noise_variance");
  const Eigen::VectorXd ls = read_vector(in, "lengthscales", dim);
  m.hyper_.lengthscales.assign(ls.data(), ls.data() + dim);
  try {
    m.hyper_.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("gp dump: ") + e.what());
  }
  m.x_raw_.resize(n, dim);
  m.y_raw_.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::VectorXd row = read_vector(in, "row", dim + 1);
    m.y_raw_[r] = row[0];
    m.x_raw_.row(r) = row.tail(dim).transpose();
  }
  m.y_mean_ = m.y_raw_.mean();
  m.factorize();
  return m;
}

}  // namespace setupkit
