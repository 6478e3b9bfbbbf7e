#include "ccep/data/dataset.hpp"

#include <filesystem>

#include "ccep/data/idx.hpp"

namespace ccep::data {

Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path,
                         const std::string& id_prefix, int num_classes) {
  IdxImages imgs = read_idx_images(images_path);
  std::vector<std::uint8_t> labels = read_idx_labels(labels_path);
  if (static_cast<std::size_t>(imgs.count) != labels.size()) {
    throw IdxError(images_path + ": image count " + std::to_string(imgs.count) +
                   " does not match label count " + std::to_string(labels.size()));
  }
  Dataset ds;
  ds.height = imgs.rows;
  ds.width = imgs.cols;
  ds.channels = 1;
  ds.num_classes = num_classes;
  ds.instances.reserve(labels.size());
  const std::size_t plane = std::size_t(imgs.rows) * imgs.cols;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ImageInstance inst;
    inst.pixels = Tensor({imgs.rows, imgs.cols, 1});
    for (std::size_t p = 0; p < plane; ++p) {
      inst.pixels.v[p] = imgs.pixels[i * plane + p] / 255.0;
    }
    inst.true_label = labels[i];
    inst.id = id_prefix + std::to_string(i);
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

std::pair<Dataset, Dataset> load_mnist(const std::string& dir) {
  namespace fs = std::filesystem;
  auto pick = [&dir](const char* a, const char* b) {
    fs::path pa = fs::path(dir) / a;
    if (fs::exists(pa)) return pa.string();
    return (fs::path(dir) / b).string();
  };
  // Both the historical dotted names and the plain-dash names are in the wild.
  Dataset train = load_idx_dataset(pick("train-images-idx3-ubyte", "train-images.idx3-ubyte"),
                                   pick("train-labels-idx1-ubyte", "train-labels.idx1-ubyte"),
                                   "tr");
  Dataset test = load_idx_dataset(pick("t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"),
                                  pick("t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"),
                                  "te");
  return {std::move(train), std::move(test)};
}

Tensor stack_batch(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Tensor batch({static_cast<int>(indices.size()), ds.height, ds.width, ds.channels});
  const std::size_t plane = std::size_t(ds.height) * ds.width * ds.channels;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Tensor& px = ds.instances[indices[i]].pixels;
    std::copy(px.v.begin(), px.v.end(), batch.v.begin() + static_cast<std::ptrdiff_t>(i * plane));
  }
  return batch;
}

}  // namespace ccep::data
