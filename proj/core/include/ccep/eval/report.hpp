#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccep/data/dataset.hpp"
#include "ccep/eval/metrics.hpp"
#include "ccep/models/cnn.hpp"

namespace ccep::eval {

struct EvalReport {
  std::uint64_t config_hash = 0;
  std::size_t count = 0;
  int num_classes = 0;
  double accuracy = 0.0;
  std::vector<std::vector<std::int64_t>> confusion;  // [truth][prediction]
  std::vector<double> per_class_auc;  // one-vs-rest; NaN when a class is absent
  double macro_auc = 0.0;             // mean over defined per-class AUCs
  std::vector<RocResult> per_class_roc;
};

// Full-test-set forward pass in eval mode, argmax predictions, one-vs-rest
// ROC/AUC per class from the softmax columns.
EvalReport evaluate_model(const models::CnnModel& model, const data::Dataset& test_set,
                          std::uint64_t config_hash, int batch_size = 256);

// Plain-text report: fingerprint, counts, accuracy, AUCs, confusion matrix.
void write_report(const std::string& path, const EvalReport& report);

// CSV rows "class,threshold,fpr,tpr" across all classes with a defined curve.
void write_roc_csv(const std::string& path, const EvalReport& report);

}  // namespace ccep::eval
