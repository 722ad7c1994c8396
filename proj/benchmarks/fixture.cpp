#include "fixture.hpp"

#include <spdlog/spdlog.h>

#include "plcguard/simlab/corpus.hpp"
#include "plcguard/training.hpp"

namespace bench {

const Fixture& fixture() {
  static const Fixture f = [] {
    spdlog::set_level(spdlog::level::warn);
    plcguard::simlab::CorpusConfig cc;
    cc.scale = 0.02;
    cc.seed = 11;
    auto corpus = plcguard::simlab::build_corpus(cc);
    plcguard::TrainConfig tc;
    tc.seed = 11;
    tc.n_trees = 100;
    tc.tune.repeats = 1;
    auto result = plcguard::train_models(corpus.baseline, corpus.train, corpus.external, corpus.baselines, tc);
    return Fixture{std::move(corpus.train), std::make_shared<const plcguard::DetectionModels>(std::move(result.models))};
  }();
  return f;
}

}  // namespace bench
