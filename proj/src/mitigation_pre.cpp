#include "faircompose/mitigation_pre.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "faircompose/kernels.hpp"

namespace faircompose {

ReweighResult reweigh(const TabularDataset& ds) {
  long long cell[2][2] = {};  // [group][label]
  for (std::size_t i = 0; i < ds.n(); ++i) ++cell[ds.groups[i]][ds.labels[i]];
  for (int g = 0; g < 2; ++g)
    for (int y = 0; y < 2; ++y)
      if (cell[g][y] == 0)
        fail(ErrorKind::Mitigation, "reweigh requires all four (group,label) cells nonempty");

  const double n = static_cast<double>(ds.n());
  const double n_grp[2] = {static_cast<double>(cell[0][0] + cell[0][1]),
                           static_cast<double>(cell[1][0] + cell[1][1])};
  const double n_lbl[2] = {static_cast<double>(cell[0][0] + cell[1][0]),
                           static_cast<double>(cell[0][1] + cell[1][1])};

  double w[2][2];
  for (int g = 0; g < 2; ++g)
    for (int y = 0; y < 2; ++y)
      w[g][y] = (n_grp[g] * n_lbl[y]) / (n * static_cast<double>(cell[g][y]));

  ReweighResult res;
  res.w_unpriv_unfav = w[0][0];
  res.w_unpriv_fav = w[0][1];
  res.w_priv_unfav = w[1][0];
  res.w_priv_fav = w[1][1];
  res.dataset = ds;
  for (std::size_t i = 0; i < ds.n(); ++i)
    res.dataset.weights[i] = w[ds.groups[i]][ds.labels[i]];
  return res;
}

namespace lfr_detail {

Matrix memberships(const Matrix& x, const Matrix& prototypes, double temperature) {
  const std::size_t n = x.rows(), k = prototypes.rows();
  Matrix m(n, k);
  std::vector<double> z(k);
  for (std::size_t i = 0; i < n; ++i) {
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      z[j] = -kernels::sq_dist(x.row_span(i), prototypes.row_span(j)) / temperature;
      zmax = std::max(zmax, z[j]);
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      m(i, j) = std::exp(z[j] - zmax);
      denom += m(i, j);
    }
    for (std::size_t j = 0; j < k; ++j) m(i, j) /= denom;
  }
  return m;
}

Eval evaluate(const Matrix& x, std::span<const int> labels, std::span<const int> groups,
              const LfrParams& p, std::span<const double> theta,
              std::vector<double>* grad) {
  const std::size_t n = x.rows(), d = x.cols(), k = p.k;
  Matrix protos(k, d);
  std::copy_n(theta.data(), k * d, protos.data().data());
  std::vector<double> u(k);
  for (std::size_t j = 0; j < k; ++j) u[j] = 1.0 / (1.0 + std::exp(-theta[k * d + j]));

  const Matrix m = memberships(x, protos, p.temperature);

  double n_unpriv = 0.0, n_priv = 0.0;
  for (int g : groups) (g == 0 ? n_unpriv : n_priv) += 1.0;

  // Group membership gap per prototype and the three loss terms.
  std::vector<double> gap(k, 0.0);
  std::vector<double> yhat(n);
  std::vector<double> recon(d);
  Eval ev;
  constexpr double kProbClamp = 1e-12;
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(recon.begin(), recon.end(), 0.0);
    for (std::size_t j = 0; j < k; ++j)
      kernels::axpy(m(i, j), protos.row_span(j), recon);
    ev.lx += kernels::sq_dist(recon, x.row_span(i));
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += m(i, j) * u[j];
    yhat[i] = std::clamp(s, kProbClamp, 1.0 - kProbClamp);
    ev.ly -= labels[i] == 1 ? std::log(yhat[i]) : std::log(1.0 - yhat[i]);
    const double gscale = groups[i] == 0 ? 1.0 / n_unpriv : -1.0 / n_priv;
    for (std::size_t j = 0; j < k; ++j) gap[j] += gscale * m(i, j);
  }
  ev.lx /= static_cast<double>(n);
  ev.ly /= static_cast<double>(n);
  for (std::size_t j = 0; j < k; ++j) ev.lz += std::fabs(gap[j]);
  ev.lz /= static_cast<double>(k);
  ev.loss = p.ax * ev.lx + p.ay * ev.ly + p.az * ev.lz;

  if (!grad) return ev;
  grad->assign(k * d + k, 0.0);
  std::span<double> gv(grad->data(), k * d);
  std::span<double> ga(grad->data() + k * d, k);

  std::vector<double> dm(k), dz(k);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(recon.begin(), recon.end(), 0.0);
    for (std::size_t j = 0; j < k; ++j)
      kernels::axpy(m(i, j), protos.row_span(j), recon);
    // residual of the reconstruction
    kernels::axpy(-1.0, x.row_span(i), recon);
    const double ce = (yhat[i] - labels[i]) / (yhat[i] * (1.0 - yhat[i]));
    const double gscale = groups[i] == 0 ? 1.0 / n_unpriv : -1.0 / n_priv;

    for (std::size_t j = 0; j < k; ++j) {
      double v = p.ax * 2.0 * inv_n * kernels::dot(recon, protos.row_span(j));
      v += p.ay * inv_n * ce * u[j];
      const double sign = gap[j] > 0.0 ? 1.0 : (gap[j] < 0.0 ? -1.0 : 0.0);
      v += p.az * (1.0 / static_cast<double>(p.k)) * sign * gscale;
      dm[j] = v;
      // direct reconstruction dependence on the prototype
      kernels::axpy(p.ax * 2.0 * inv_n * m(i, j), recon,
                    std::span<double>(gv.data() + j * d, d));
      ga[j] += p.ay * inv_n * ce * m(i, j) * u[j] * (1.0 - u[j]);
    }
    double dot_dm_m = 0.0;
    for (std::size_t j = 0; j < k; ++j) dot_dm_m += dm[j] * m(i, j);
    for (std::size_t j = 0; j < k; ++j) dz[j] = m(i, j) * (dm[j] - dot_dm_m);
    // z_ij = -||x_i - v_j||^2 / T so dz/dv_j = 2 (x_i - v_j) / T.
    for (std::size_t j = 0; j < k; ++j) {
      const double c = dz[j] * 2.0 / p.temperature;
      std::span<double> gvj(gv.data() + j * d, d);
      kernels::axpy(c, x.row_span(i), gvj);
      kernels::axpy(-c, protos.row_span(j), gvj);
    }
  }
  return ev;
}

}  // namespace lfr_detail

LfrModel lfr_fit(const TabularDataset& ds, const LfrParams& params) {
  if (params.k < 2) fail(ErrorKind::Parameter, "LFR requires at least 2 prototypes");
  if (ds.n() == 0) fail(ErrorKind::Mitigation, "LFR cannot fit on an empty dataset");
  if (params.temperature <= 0.0) fail(ErrorKind::Parameter, "temperature must be positive");
  const std::size_t n = ds.n(), d = ds.dim(), k = params.k;

  Rng rng(params.seed);
  // Prototypes start at jittered data rows, drawn without replacement while
  // rows remain so no prototype pair collapses onto the same point.
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  std::vector<double> theta(k * d + k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t row;
    if (j < n) {
      const std::size_t pick = j + rng.bounded(n - j);
      std::swap(pool[j], pool[pick]);
      row = pool[j];
    } else {
      row = rng.bounded(n);
    }
    for (std::size_t c = 0; c < d; ++c)
      theta[j * d + c] = ds.features(row, c) + 0.01 * rng.gaussian();
  }

  std::vector<double> grad, trial(theta.size());
  lfr_detail::Eval ev =
      lfr_detail::evaluate(ds.features, ds.labels, ds.groups, params, theta, &grad);
  if (!std::isfinite(ev.loss))
    fail(ErrorKind::Mitigation,
         "LFR objective is non-finite; standardize the data or use a smaller step size");

  LfrModel model;
  model.loss_trace.push_back(ev.loss);
  double step = 1.0;
  std::size_t iter = 0;
  for (; iter < params.max_iters; ++iter) {
    const double gmax = kernels::max_abs(grad);
    if (gmax < 1e-6) break;
    const double gnorm2 = kernels::dot(grad, grad);
    step = std::min(step * 2.0, 1e6);
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      for (std::size_t j = 0; j < theta.size(); ++j) trial[j] = theta[j] - step * grad[j];
      const lfr_detail::Eval tev =
          lfr_detail::evaluate(ds.features, ds.labels, ds.groups, params, trial, nullptr);
      if (std::isfinite(tev.loss) && tev.loss <= ev.loss - 1e-4 * step * gnorm2) {
        theta.swap(trial);
        ev = tev;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    model.loss_trace.push_back(ev.loss);
    ev = lfr_detail::evaluate(ds.features, ds.labels, ds.groups, params, theta, &grad);
  }

  model.prototypes = Matrix(k, d);
  std::copy_n(theta.data(), k * d, model.prototypes.data().data());
  model.label_logits.assign(theta.begin() + k * d, theta.end());
  model.params = params;
  model.iterations = iter;
  model.loss = ev.loss;
  model.loss_x = ev.lx;
  model.loss_y = ev.ly;
  model.loss_z = ev.lz;
  return model;
}

TabularDataset lfr_apply(const LfrModel& model, const TabularDataset& ds, bool relabel) {
  if (model.prototypes.rows() == 0) fail(ErrorKind::Mitigation, "LFR model is not fitted");
  if (ds.dim() != model.prototypes.cols())
    fail(ErrorKind::Mitigation, "LFR model dimensionality does not match the dataset");

  TabularDataset out = ds;
  // Reconstructions are dense reals even where the input was one-hot.
  std::fill(out.column_kinds.begin(), out.column_kinds.end(), ColumnKind::Continuous);
  std::fill(out.onehot_group.begin(), out.onehot_group.end(), -1);
  if (ds.n() == 0) return out;

  const Matrix m =
      lfr_detail::memberships(ds.features, model.prototypes, model.params.temperature);
  const std::size_t k = model.prototypes.rows();
  std::vector<double> u(k);
  for (std::size_t j = 0; j < k; ++j)
    u[j] = 1.0 / (1.0 + std::exp(-model.label_logits[j]));

  for (std::size_t i = 0; i < ds.n(); ++i) {
    std::span<double> row = out.features.row_span(i);
    std::fill(row.begin(), row.end(), 0.0);
    double yscore = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      kernels::axpy(m(i, j), model.prototypes.row_span(j), row);
      yscore += m(i, j) * u[j];
    }
    if (relabel) out.labels[i] = yscore >= 0.5 ? 1 : 0;
  }
  return out;
}

}  // namespace faircompose
