#ifndef OEEM_CAM_HPP_
#define OEEM_CAM_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "oeem/classifier.hpp"
#include "oeem/synth.hpp"
#include "oeem/tensor.hpp"

namespace oeem {

// Raw class evidence M (classes x H x W) at image resolution: classifier
// weights times fused features per pixel, no pooling, no bias, no softmax.
Tensor compute_cam(const ClassifierNet& net, const Tensor& image);

// Per scale: resize the image, compute_cam, resize back. The per-pixel mean
// over scales is min-max normalized to [0, 1] per channel; a channel with
// zero range becomes all zeros. Scales whose resized extent falls below the
// encoder minimum are skipped (reported in `skipped` when given); if every
// scale is skipped, throws ShapeError.
Tensor multiscale_cam(const ClassifierNet& net, const Tensor& image, std::span<const double> scales,
                      std::vector<double>* skipped = nullptr);

// Per-pixel argmax over the classes present in `label`; absent classes are
// excluded as if their channel were -inf. Ties go to the lowest class index.
PseudoMask make_pseudomask(const Tensor& cam, const PatchLabel& label);

// Patch-level refinement of a normalized CAM: absent-class channels are set
// to 0 and, for a single-class patch, the present channel is set to 1.
void refine_patch_cam(Tensor& cam, const PatchLabel& label);

struct PseudoOptions {
  std::vector<double> scales = {1.0, 1.25, 1.5, 1.75, 2.0};
};

struct ImagePseudo {
  Tensor cam;         // stitched, refined, classes x H x W
  PatchLabel label;   // union of the image's patch labels
  PseudoMask mask;
  PseudoMask cam_mask;  // argmax of the unrefined stitched CAM, all classes
};

// CAM per patch record (multiscale, refined with that patch's label), merged
// to full resolution by averaging, then make_pseudomask with the image label.
ImagePseudo image_pseudomask(const ClassifierNet& net, const Tensor& image,
                             std::span<const PatchRecord> records, const PseudoOptions& opts);

}  // namespace oeem

#endif  // OEEM_CAM_HPP_
