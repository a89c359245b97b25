#include "gel/model.hpp"

#include <cmath>

#include "gel/errors.hpp"

namespace gel {

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix fd_jacobian(const MomentModel& model, const Vector& x,
                   const Vector& theta) {
  Matrix jac(model.r, model.p);
  Vector th = theta;
  for (int j = 0; j < model.p; ++j) {
    double h = 1e-6 * std::max(1.0, std::fabs(theta[j]));
    th[j] = theta[j] + h;
    Vector gp = model.evaluate(x, th);
    th[j] = theta[j] - h;
    Vector gm = model.evaluate(x, th);
    th[j] = theta[j];
    jac.col(j) = (gp - gm) / (2.0 * h);
  }
  return jac;
}

Matrix MomentModel::jacobian_at(const Vector& x, const Vector& theta) const {
  if (jacobian) return jacobian(x, theta);
  return fd_jacobian(*this, x, theta);
}

MomentModel model_mean(int d) {
  if (d < 1) throw ConfigError("model_mean: d must be positive");
  MomentModel m;
  m.r = d;
  m.p = d;
  m.name = "mean";
  m.evaluate = [](const Vector& x, const Vector& theta) -> Vector {
    return x - theta;
  };
  m.jacobian = [d](const Vector&, const Vector&) -> Matrix {
    return -Matrix::Identity(d, d);
  };
  m.default_init = [](const Dataset& data) -> Vector {
    return data.values().colwise().mean().transpose();
  };
  return m;
}

MomentModel model_logistic(int p) {
  if (p < 1) throw ConfigError("model_logistic: p must be positive");
  MomentModel m;
  m.r = 2 * p;
  m.p = p;
  m.name = "logistic";
  m.evaluate = [p](const Vector& x, const Vector& theta) -> Vector {
    if (x.size() != p + 1) {
      throw ConfigError("model_logistic: row has dimension " +
                        std::to_string(x.size()) + ", expected " +
                        std::to_string(p + 1));
    }
    const double y = x[0];
    const auto z = x.tail(p);
    const double u = y - sigmoid(1.0 + z.dot(theta));
    Vector g(2 * p);
    g.head(p) = z * u;
    g.tail(p) = z.array().square().matrix() * u;
    return g;
  };
  m.jacobian = [p](const Vector& x, const Vector& theta) -> Matrix {
    const auto z = x.tail(p);
    const double s = sigmoid(1.0 + z.dot(theta));
    const double du = -s * (1.0 - s);  // d u / d(z'theta)
    Vector inst(2 * p);
    inst.head(p) = z;
    inst.tail(p) = z.array().square().matrix();
    return du * inst * z.transpose();
  };
  return m;
}

MomentModel model_var_residual(int s, int m_lags) {
  if (s < 1 || m_lags < 1) {
    throw ConfigError("model_var_residual: s and m must be positive");
  }
  MomentModel m;
  const int d = s * (m_lags + 1);
  const int rp = s * s * m_lags;
  m.r = rp;
  m.p = rp;
  m.name = "var";
  // theta indexes (A_i)_{a,b} at (i-1)*s^2 + (b-1)*s + (a-1), i.e. each A_i
  // vectorized column-major.
  m.evaluate = [s, m_lags, d](const Vector& x, const Vector& theta) -> Vector {
    if (x.size() != d) {
      throw ConfigError("model_var_residual: row has dimension " +
                        std::to_string(x.size()) + ", expected s(m+1) = " +
                        std::to_string(d));
    }
    Vector resid = x.head(s);
    for (int i = 0; i < m_lags; ++i) {
      const auto lag = x.segment(s * (i + 1), s);
      Eigen::Map<const Matrix> A(theta.data() + i * s * s, s, s);
      resid -= A * lag;
    }
    const auto lags = x.tail(s * m_lags);
    Vector g(resid.size() * lags.size());
    for (int a = 0; a < resid.size(); ++a) {
      g.segment(a * lags.size(), lags.size()) = resid[a] * lags;
    }
    return g;
  };
  m.jacobian = [s, m_lags](const Vector& x, const Vector&) -> Matrix {
    const auto lags = x.tail(s * m_lags);
    const int nl = s * m_lags;
    Matrix jac = Matrix::Zero(s * nl, s * s * m_lags);
    // d resid_a / d (A_i)_{a,b} = -lag_i[b]; g_{(a)(j)} = resid_a * lags_j.
    for (int i = 0; i < m_lags; ++i) {
      const auto lag_i = x.segment(s * (i + 1), s);
      for (int b = 0; b < s; ++b) {
        for (int a = 0; a < s; ++a) {
          const int col = i * s * s + b * s + a;
          for (int j = 0; j < nl; ++j) {
            jac(a * nl + j, col) = -lag_i[b] * lags[j];
          }
        }
      }
    }
    return jac;
  };
  m.default_init = [s, m_lags, d, rp](const Dataset& data) -> Vector {
    // Least squares of the first s columns on the lag columns, row by row.
    if (data.d() != d) {
      throw ConfigError("model_var_residual: dataset width " +
                        std::to_string(data.d()) + " != s(m+1) = " +
                        std::to_string(d));
    }
    const Matrix& v = data.values();
    const Matrix Y = v.leftCols(s);
    const Matrix X = v.rightCols(s * m_lags);
    // Y = X * B with B = (s*m_lags) x s, A_i = B-rows transposed.
    Matrix B = (X.transpose() * X)
                   .ldlt()
                   .solve(X.transpose() * Y);  // coefficients
    Vector theta(rp);
    for (int i = 0; i < m_lags; ++i) {
      for (int b = 0; b < s; ++b) {
        for (int a = 0; a < s; ++a) {
          theta[i * s * s + b * s + a] = B(i * s + b, a);
        }
      }
    }
    return theta;
  };
  return m;
}

}  // namespace gel
