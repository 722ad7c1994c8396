#pragma once

#include <memory>

#include "plcguard/dataset.hpp"
#include "plcguard/models.hpp"

namespace bench {

/// Small corpus and models trained on it, built once per process.
struct Fixture {
  plcguard::dataset::LabeledDataset train;
  std::shared_ptr<const plcguard::DetectionModels> models;
};

const Fixture& fixture();

}  // namespace bench
