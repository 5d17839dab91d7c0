#ifndef OEEM_CLASSIFIER_HPP_
#define OEEM_CLASSIFIER_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "oeem/encoder.hpp"
#include "oeem/params.hpp"
#include "oeem/rng.hpp"
#include "oeem/synth.hpp"
#include "oeem/tensor.hpp"

namespace oeem {

// Multi-label patch classifier. Stage-2 and stage-3 encoder features are
// bilinearly upsampled to stage-1 resolution and concatenated ("fused");
// class scores are the classifier weights applied to the spatial mean of
// the fused map, plus a bias. The same classifier weights, applied per
// pixel without the mean and bias, give the CAM.
struct ClassifierNet {
  static constexpr std::array<std::size_t, 3> kWidths = {8, 16, 32};

  std::size_t classes = 2;
  ParamStore params;
  Encoder encoder;
  std::size_t cls_weight = 0;  // classes x fused_channels
  std::size_t cls_bias = 0;    // classes
  Normalizer normalizer;

  std::size_t fused_channels() const { return kWidths[0] + kWidths[1] + kWidths[2]; }

  struct Trace {
    Encoder::Trace encoder;
    Tensor fused;
  };
  // Fused feature map at stage-1 resolution (input extent / 2).
  Tensor fused_features(const Tensor& image, Trace* trace = nullptr) const;
  std::vector<double> scores(const Tensor& image) const;
};

ClassifierNet make_classifier(std::size_t classes, std::size_t in_channels, Rng& rng);

// Mean over classes of the sigmoid binary cross-entropy against the label
// bits. Adds d(loss)/d(params) * grad_scale into net.params' gradients.
double classifier_loss_and_grad(ClassifierNet& net, const Tensor& patch, const PatchLabel& label,
                                double grad_scale = 1.0);

struct ClassifierHp {
  double lr = 0.01;
  std::size_t epochs = 20;
  std::size_t batch = 16;
  double poly_power = 0.9;
  double momentum = 0.9;
  std::uint64_t seed = 1;
};

struct ClassifierTraining {
  ClassifierNet net;
  std::vector<double> epoch_loss;
};

// SGD with poly decay over epochs * ceil(N / batch) iterations; random
// horizontal/vertical flips. Throws NumericError (iteration, lr, loss) on a
// non-finite loss.
ClassifierTraining train_classifier(std::span<const Tensor> patches,
                                    std::span<const PatchLabel> labels, const ClassifierHp& hp);

// Fraction of (patch, class) decisions where sigmoid(score) > 0.5 matches the bit.
double multilabel_accuracy(const ClassifierNet& net, std::span<const Tensor> patches,
                           std::span<const PatchLabel> labels);

}  // namespace oeem

#endif  // OEEM_CLASSIFIER_HPP_
