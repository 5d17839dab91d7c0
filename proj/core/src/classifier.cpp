#include "oeem/classifier.hpp"

#include <cmath>
#include <sstream>

#include "oeem/errors.hpp"
#include "oeem/ops.hpp"
#include "oeem/optim.hpp"

namespace oeem {

ClassifierNet make_classifier(std::size_t classes, std::size_t in_channels, Rng& rng) {
  ClassifierNet net;
  net.classes = classes;
  net.encoder = Encoder(net.params, "cls.features", in_channels, ClassifierNet::kWidths, rng);
  net.cls_weight = net.params.add("cls.classifier.weight", {classes, net.fused_channels()});
  net.cls_bias = net.params.add("cls.classifier.bias", {classes});
  const double std_dev = 1.0 / std::sqrt(static_cast<double>(net.fused_channels()));
  for (double& w : net.params.value(net.cls_weight).values()) w = std_dev * rng.normal();
  net.normalizer = Normalizer::identity(in_channels);
  return net;
}

Tensor ClassifierNet::fused_features(const Tensor& image, Trace* trace) const {
  require_rank(image, 3, "classifier input");
  Encoder::Trace enc = encoder.forward(params, normalizer.apply(image));
  Tensor fused = Encoder::fuse(enc);
  if (trace) {
    trace->encoder = std::move(enc);
    trace->fused = fused;
  }
  return fused;
}

std::vector<double> ClassifierNet::scores(const Tensor& image) const {
  const Tensor fused = fused_features(image);
  const std::size_t k_n = fused.channels();
  const std::size_t hw = fused.height() * fused.width();
  const Tensor& w = params.value(cls_weight);
  const Tensor& b = params.value(cls_bias);
  std::vector<double> pooled(k_n, 0.0);
  for (std::size_t k = 0; k < k_n; ++k) {
    double s = 0.0;
    for (double v : fused.plane(k)) s += v;
    pooled[k] = s / static_cast<double>(hw);
  }
  std::vector<double> z(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    double s = b[c];
    for (std::size_t k = 0; k < k_n; ++k) s += w[c * k_n + k] * pooled[k];
    z[c] = s;
  }
  return z;
}

double classifier_loss_and_grad(ClassifierNet& net, const Tensor& patch, const PatchLabel& label,
                                double grad_scale) {
  ClassifierNet::Trace trace;
  const Tensor fused = net.fused_features(patch, &trace);
  const std::size_t k_n = fused.channels();
  const std::size_t hw = fused.height() * fused.width();
  const std::size_t c_n = net.classes;
  const Tensor& w = net.params.value(net.cls_weight);
  const Tensor& b = net.params.value(net.cls_bias);

  std::vector<double> pooled(k_n, 0.0);
  for (std::size_t k = 0; k < k_n; ++k) {
    double s = 0.0;
    for (double v : fused.plane(k)) s += v;
    pooled[k] = s / static_cast<double>(hw);
  }

  double loss = 0.0;
  std::vector<double> dz(c_n);
  for (std::size_t c = 0; c < c_n; ++c) {
    double z = b[c];
    for (std::size_t k = 0; k < k_n; ++k) z += w[c * k_n + k] * pooled[k];
    const double y = label.has(c) ? 1.0 : 0.0;
    loss -= y * log_sigmoid(z) + (1.0 - y) * log_sigmoid(-z);
    dz[c] = (sigmoid(z) - y) / static_cast<double>(c_n);
  }
  loss /= static_cast<double>(c_n);

  Tensor& gw = net.params.grad(net.cls_weight);
  Tensor& gb = net.params.grad(net.cls_bias);
  std::vector<double> dpooled(k_n, 0.0);
  for (std::size_t c = 0; c < c_n; ++c) {
    const double g = dz[c] * grad_scale;
    gb[c] += g;
    for (std::size_t k = 0; k < k_n; ++k) {
      gw[c * k_n + k] += g * pooled[k];
      dpooled[k] += w[c * k_n + k] * g;
    }
  }
  Tensor dfused(fused.shape());
  for (std::size_t k = 0; k < k_n; ++k) {
    const double v = dpooled[k] / static_cast<double>(hw);
    for (double& d : dfused.plane(k)) d = v;
  }
  net.encoder.backward(net.params, trace.encoder, Encoder::fuse_backward(trace.encoder, dfused));
  return loss;
}

ClassifierTraining train_classifier(std::span<const Tensor> patches,
                                    std::span<const PatchLabel> labels, const ClassifierHp& hp) {
  if (patches.size() != labels.size()) throw Error("train_classifier: patches/labels mismatch");
  if (patches.empty()) throw Error("train_classifier: no patches");
  if (!(hp.lr > 0.0) || hp.batch == 0) throw ConfigError("classifier lr and batch must be > 0");
  Rng root(hp.seed);
  Rng init_rng = root.split("init");
  Rng data_rng = root.split("data");

  ClassifierTraining out{make_classifier(2, patches.front().channels(), init_rng), {}};
  ClassifierNet& net = out.net;
  if (hp.epochs == 0) return out;

  std::vector<const Tensor*> ptrs;
  for (const Tensor& p : patches) ptrs.push_back(&p);
  net.normalizer = Normalizer::fit(ptrs);

  const std::size_t n = patches.size();
  const std::size_t per_epoch = (n + hp.batch - 1) / hp.batch;
  const std::size_t total = hp.epochs * per_epoch;
  Sgd sgd(net.params, hp.momentum);
  std::size_t iter = 0;
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    const auto order = data_rng.permutation(n);
    double epoch_sum = 0.0;
    for (std::size_t start = 0; start < n; start += hp.batch) {
      const std::size_t end = std::min(n, start + hp.batch);
      const double scale = 1.0 / static_cast<double>(end - start);
      const double lr = poly_lr(hp.lr, iter, total, hp.poly_power);
      net.params.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        Tensor x = patches[order[i]];
        if (data_rng.bernoulli(0.5)) x = flip_horizontal(x);
        if (data_rng.bernoulli(0.5)) x = flip_vertical(x);
        batch_loss += classifier_loss_and_grad(net, x, labels[order[i]], scale);
      }
      if (!std::isfinite(batch_loss)) {
        std::ostringstream os;
        os << "classifier loss is not finite at iteration " << iter << " (lr " << lr
           << ", loss " << batch_loss << ")";
        throw NumericError(os.str());
      }
      epoch_sum += batch_loss;
      sgd.step(net.params, lr);
      ++iter;
    }
    out.epoch_loss.push_back(epoch_sum / static_cast<double>(n));
  }
  if (!net.params.values_finite()) throw NumericError("classifier parameters diverged");
  return out;
}

double multilabel_accuracy(const ClassifierNet& net, std::span<const Tensor> patches,
                           std::span<const PatchLabel> labels) {
  if (patches.empty()) return 1.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const auto z = net.scores(patches[i]);
    for (std::size_t c = 0; c < net.classes; ++c) {
      if ((z[c] > 0.0) == labels[i].has(c)) ++hit;
    }
  }
  return static_cast<double>(hit) / static_cast<double>(patches.size() * net.classes);
}

}  // namespace oeem
