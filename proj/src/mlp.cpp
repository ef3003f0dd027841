#include "vimp/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "vimp/stats.hpp"

namespace vimp {

namespace {

struct Activations {
  std::vector<Eigen::MatrixXd> a;  // a[0] = input (d x m), a[l] post-ReLU
  Eigen::RowVectorXd out;          // network output per column
};

double relu(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace

struct MlpTrainer {
  MlpModel& model;
  const MlpConfig& cfg;

  explicit MlpTrainer(MlpModel& m) : model(m), cfg(m.config_) {}

  std::vector<Eigen::MatrixXd>& W() { return model.weights_; }
  std::vector<Eigen::VectorXd>& b() { return model.biases_; }

  void init_params(int d, RngStream& rng) {
    std::vector<int> dims;
    dims.push_back(d);
    for (int w : cfg.widths) dims.push_back(w);
    dims.push_back(1);
    const std::size_t n_layers = dims.size() - 1;
    W().resize(n_layers);
    b().resize(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
      const int fan_in = dims[l];
      const int fan_out = dims[l + 1];
      // He scaling for the ReLU layers, smaller for the linear output
      const double scale =
          (l + 1 < n_layers) ? std::sqrt(2.0 / fan_in) : std::sqrt(1.0 / fan_in);
      W()[l].resize(fan_out, fan_in);
      for (Eigen::Index i = 0; i < W()[l].size(); ++i) W()[l].data()[i] = scale * rng.normal();
      b()[l] = Eigen::VectorXd::Zero(fan_out);
    }
  }

  // Forward with cached activations. Batch columns are samples.
  Activations forward_cached(const Eigen::MatrixXd& Xs_cols) const {
    Activations act;
    act.a.push_back(Xs_cols);
    const std::size_t n_layers = model.weights_.size();
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
      Eigen::MatrixXd z =
          (model.weights_[l] * act.a.back()).colwise() + model.biases_[l];
      act.a.push_back(z.unaryExpr([](double v) { return relu(v); }));
    }
    Eigen::MatrixXd z_out =
        (model.weights_.back() * act.a.back()).colwise() + model.biases_.back();
    act.out = z_out.row(0);
    return act;
  }

  double data_loss(const Eigen::RowVectorXd& out, const Eigen::VectorXd& ys) const {
    const double m = static_cast<double>(out.size());
    double loss = 0.0;
    if (model.task_ == Task::regression) {
      for (Eigen::Index i = 0; i < out.size(); ++i) {
        const double r = out[i] - ys[i];
        loss += r * r;
      }
    } else {
      for (Eigen::Index i = 0; i < out.size(); ++i)
        loss += softplus(out[i]) - ys[i] * out[i];
    }
    return loss / m;
  }

  double penalty() const {
    double l1 = 0.0, l2 = 0.0;
    for (const auto& w : model.weights_) {
      l1 += w.cwiseAbs().sum();
      l2 += w.squaredNorm();
    }
    return cfg.l1 * l1 + cfg.l2 * l2;
  }

  // Backprop; returns full objective on the batch. Gradients include the
  // penalty terms (applied to weights only).
  double backward(const Eigen::MatrixXd& Xs_cols, const Eigen::VectorXd& ys,
                  std::vector<Eigen::MatrixXd>& gW, std::vector<Eigen::VectorXd>& gb) const {
    const Activations act = forward_cached(Xs_cols);
    const double m = static_cast<double>(ys.size());
    const std::size_t n_layers = model.weights_.size();

    Eigen::RowVectorXd dout(act.out.size());
    if (model.task_ == Task::regression) {
      for (Eigen::Index i = 0; i < dout.size(); ++i)
        dout[i] = 2.0 * (act.out[i] - ys[i]) / m;
    } else {
      for (Eigen::Index i = 0; i < dout.size(); ++i)
        dout[i] = (sigmoid(act.out[i]) - ys[i]) / m;
    }

    gW.assign(n_layers, Eigen::MatrixXd());
    gb.assign(n_layers, Eigen::VectorXd());

    Eigen::MatrixXd delta = dout;  // 1 x m
    for (std::size_t l = n_layers; l-- > 0;) {
      gW[l] = delta * act.a[l].transpose();
      gb[l] = delta.rowwise().sum();
      if (l > 0) {
        Eigen::MatrixXd da = model.weights_[l].transpose() * delta;
        // ReLU gate: a[l] > 0 iff pre-activation > 0
        delta = da.cwiseProduct(
            act.a[l].unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
      }
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
      gW[l] += cfg.l1 * model.weights_[l].unaryExpr([](double v) {
        return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
      });
      gW[l] += 2.0 * cfg.l2 * model.weights_[l];
    }
    return data_loss(act.out, ys) + penalty();
  }
};

Eigen::MatrixXd MlpModel::standardize(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd out = X;
  out.rowwise() -= x_mean_.transpose();
  out.array().rowwise() /= x_scale_.transpose().array();
  return out;
}

Eigen::VectorXd MlpModel::forward(const Eigen::MatrixXd& Xs) const {
  MlpTrainer t(const_cast<MlpModel&>(*this));
  return t.forward_cached(Xs.transpose()).out.transpose();
}

Eigen::VectorXd MlpModel::predict_raw(const Eigen::MatrixXd& X) const {
  if (X.cols() != n_features()) throw std::invalid_argument("mlp: feature count mismatch");
  Eigen::VectorXd out = forward(standardize(X));
  if (task_ == Task::regression) out = (out.array() * y_scale_ + y_mean_).matrix();
  return out;
}

double MlpModel::loss_at(const Dataset& data) const {
  MlpTrainer t(const_cast<MlpModel&>(*this));
  Eigen::MatrixXd Xs = standardize(data.X);
  Eigen::VectorXd ys = data.y;
  if (task_ == Task::regression)
    ys = ((ys.array() - y_mean_) / y_scale_).matrix();
  return t.data_loss(t.forward_cached(Xs.transpose()).out, ys) + t.penalty();
}

Eigen::VectorXd MlpModel::gradient_at(const Dataset& data) const {
  MlpTrainer t(const_cast<MlpModel&>(*this));
  Eigen::MatrixXd Xs = standardize(data.X);
  Eigen::VectorXd ys = data.y;
  if (task_ == Task::regression)
    ys = ((ys.array() - y_mean_) / y_scale_).matrix();
  std::vector<Eigen::MatrixXd> gW;
  std::vector<Eigen::VectorXd> gb;
  t.backward(Xs.transpose(), ys, gW, gb);

  Eigen::Index total = 0;
  for (std::size_t l = 0; l < gW.size(); ++l) total += gW[l].size() + gb[l].size();
  Eigen::VectorXd flat(total);
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < gW.size(); ++l) {
    std::copy(gW[l].data(), gW[l].data() + gW[l].size(), flat.data() + at);
    at += gW[l].size();
    std::copy(gb[l].data(), gb[l].data() + gb[l].size(), flat.data() + at);
    at += gb[l].size();
  }
  return flat;
}

Eigen::VectorXd MlpModel::flatten_params() const {
  Eigen::Index total = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l)
    total += weights_[l].size() + biases_[l].size();
  Eigen::VectorXd flat(total);
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    std::copy(weights_[l].data(), weights_[l].data() + weights_[l].size(), flat.data() + at);
    at += weights_[l].size();
    std::copy(biases_[l].data(), biases_[l].data() + biases_[l].size(), flat.data() + at);
    at += biases_[l].size();
  }
  return flat;
}

void MlpModel::set_params(const Eigen::VectorXd& theta) {
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    std::copy(theta.data() + at, theta.data() + at + weights_[l].size(), weights_[l].data());
    at += weights_[l].size();
    std::copy(theta.data() + at, theta.data() + at + biases_[l].size(), biases_[l].data());
    at += biases_[l].size();
  }
  if (at != theta.size()) throw std::invalid_argument("set_params: size mismatch");
}

MlpModel MlpModel::fit(const Dataset& data, const MlpConfig& config, RngStream& rng) {
  data.validate();
  for (int w : config.widths)
    if (w <= 0) throw std::invalid_argument("mlp: hidden widths must be positive");
  if (config.batch < 1) throw std::invalid_argument("mlp: batch >= 1");
  if (data.n() < config.batch)
    throw std::invalid_argument("mlp: need n >= batch samples");
  if (config.epochs < 0) throw std::invalid_argument("mlp: epochs >= 0");

  MlpModel model;
  model.task_ = data.task;
  model.config_ = config;

  const Eigen::Index n = data.n();
  const Eigen::Index d = data.p();

  model.x_mean_ = data.X.colwise().mean();
  model.x_scale_.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var =
        (data.X.col(j).array() - model.x_mean_[j]).square().sum() / static_cast<double>(n);
    model.x_scale_[j] = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
  if (data.task == Task::regression) {
    model.y_mean_ = data.y.mean();
    const double var =
        (data.y.array() - model.y_mean_).square().sum() / static_cast<double>(n);
    model.y_scale_ = var > 1e-12 ? std::sqrt(var) : 1.0;
  }

  Eigen::MatrixXd Xs = model.standardize(data.X);
  Eigen::VectorXd ys = data.y;
  if (data.task == Task::regression)
    ys = ((ys.array() - model.y_mean_) / model.y_scale_).matrix();

  MlpTrainer trainer(model);
  trainer.init_params(static_cast<int>(d), rng);

  // Held-out validation split for early stopping.
  const bool early_stop = config.patience > 0 && config.val_fraction > 0.0 && n >= 5;
  std::vector<std::size_t> order = rng.permutation(static_cast<std::size_t>(n));
  Eigen::Index n_val = 0;
  if (early_stop)
    n_val = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(std::floor(config.val_fraction * static_cast<double>(n))));
  const Eigen::Index n_train = n - n_val;

  Eigen::MatrixXd Xtr(d, n_train), Xval(d, n_val);
  Eigen::VectorXd ytr(n_train), yval(n_val);
  for (Eigen::Index k = 0; k < n_train; ++k) {
    Xtr.col(k) = Xs.row(static_cast<Eigen::Index>(order[static_cast<std::size_t>(k)])).transpose();
    ytr[k] = ys[static_cast<Eigen::Index>(order[static_cast<std::size_t>(k)])];
  }
  for (Eigen::Index k = 0; k < n_val; ++k) {
    const auto src = static_cast<Eigen::Index>(order[static_cast<std::size_t>(n_train + k)]);
    Xval.col(k) = Xs.row(src).transpose();
    yval[k] = ys[src];
  }

  const int batch = static_cast<int>(std::min<Eigen::Index>(config.batch, n_train));

  // Adam state
  std::vector<Eigen::MatrixXd> mW, vW;
  std::vector<Eigen::VectorXd> mb, vb;
  const std::size_t n_layers = model.weights_.size();
  mW.resize(n_layers);
  vW.resize(n_layers);
  mb.resize(n_layers);
  vb.resize(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    mW[l] = Eigen::MatrixXd::Zero(model.weights_[l].rows(), model.weights_[l].cols());
    vW[l] = mW[l];
    mb[l] = Eigen::VectorXd::Zero(model.biases_[l].size());
    vb[l] = mb[l];
  }
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  long step = 0;

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<Eigen::MatrixXd> best_W = model.weights_;
  std::vector<Eigen::VectorXd> best_b = model.biases_;
  int stale_epochs = 0;

  std::vector<Eigen::Index> batch_order(static_cast<std::size_t>(n_train));
  std::iota(batch_order.begin(), batch_order.end(), 0);

  std::vector<Eigen::MatrixXd> gW;
  std::vector<Eigen::VectorXd> gb;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(batch_order);
    for (Eigen::Index start = 0; start < n_train; start += batch) {
      const Eigen::Index m = std::min<Eigen::Index>(batch, n_train - start);
      Eigen::MatrixXd Xb(d, m);
      Eigen::VectorXd yb(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        Xb.col(k) = Xtr.col(batch_order[static_cast<std::size_t>(start + k)]);
        yb[k] = ytr[batch_order[static_cast<std::size_t>(start + k)]];
      }
      const double batch_loss = trainer.backward(Xb, yb, gW, gb);
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "mlp: non-finite training loss (epoch " << epoch << ", loss " << batch_loss
            << ", lr " << config.learning_rate << ")";
        throw std::runtime_error(msg.str());
      }
      ++step;
      if (config.optimizer == Optimizer::adam) {
        const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        for (std::size_t l = 0; l < n_layers; ++l) {
          mW[l] = beta1 * mW[l] + (1.0 - beta1) * gW[l];
          vW[l] = beta2 * vW[l] + (1.0 - beta2) * gW[l].cwiseProduct(gW[l]);
          mb[l] = beta1 * mb[l] + (1.0 - beta1) * gb[l];
          vb[l] = beta2 * vb[l] + (1.0 - beta2) * gb[l].cwiseProduct(gb[l]);
          model.weights_[l] -=
              (config.learning_rate * (mW[l] / corr1).array() /
               ((vW[l] / corr2).array().sqrt() + adam_eps))
                  .matrix();
          model.biases_[l] -= (config.learning_rate * (mb[l] / corr1).array() /
                               ((vb[l] / corr2).array().sqrt() + adam_eps))
                                  .matrix();
        }
      } else {
        for (std::size_t l = 0; l < n_layers; ++l) {
          model.weights_[l] -= config.learning_rate * gW[l];
          model.biases_[l] -= config.learning_rate * gb[l];
        }
      }
    }

    const Activations train_act = trainer.forward_cached(Xtr);
    model.loss_history_.push_back(trainer.data_loss(train_act.out, ytr) + trainer.penalty());

    if (early_stop) {
      const double val_loss = trainer.data_loss(trainer.forward_cached(Xval).out, yval);
      if (val_loss < best_val) {
        best_val = val_loss;
        best_W = model.weights_;
        best_b = model.biases_;
        stale_epochs = 0;
      } else if (++stale_epochs >= config.patience) {
        break;
      }
    }
  }

  if (early_stop && std::isfinite(best_val)) {
    model.weights_ = best_W;
    model.biases_ = best_b;
  }
  for (const auto& w : model.weights_)
    if (!w.allFinite()) throw std::runtime_error("mlp: non-finite parameters after training");
  for (const auto& bv : model.biases_)
    if (!bv.allFinite()) throw std::runtime_error("mlp: non-finite parameters after training");
  return model;
}

}  // namespace vimp
