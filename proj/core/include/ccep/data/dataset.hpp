// dataset.hpp - in-memory instance collections.

#pragma once

#include <string>
#include <vector>

#include "ccep/tensor.hpp"

namespace ccep::data {

/// One training/test image. Pixels are HWC in [0,1]. The true label is kept
/// for evaluation only; training sees weak labels from bags.
struct ImageInstance {
  Tensor pixels;  // shape (H, W, C)
  int true_label = -1;
  std::string id;
};

struct Dataset {
  std::vector<ImageInstance> instances;
  int height = 0;
  int width = 0;
  int channels = 0;
  int num_classes = 0;

  std::size_t size() const { return instances.size(); }
};

/// Loads the four standard MNIST IDX files from `dir`
/// (train-images-idx3-ubyte etc.; the .gz-less names). Pixels are scaled
/// to [0,1] by /255. Returns {train, test}.
std::pair<Dataset, Dataset> load_mnist(const std::string& dir);

/// IDX pair -> Dataset with ids "<prefix><index>".
Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path,
                         const std::string& id_prefix, int num_classes = 10);

/// Stacks instances[indices] into an NHWC batch tensor.
Tensor stack_batch(const Dataset& ds, const std::vector<std::size_t>& indices);

}  // namespace ccep::data
