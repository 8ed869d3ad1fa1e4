#pragma once

#include <vector>

#include "dialogctl/corpus.hpp"
#include "dialogctl/model.hpp"
#include "dialogctl/phone/phone_domain.hpp"
#include "dialogctl/rng.hpp"

namespace testing {

inline const dialogctl::phone::PhoneDomain& phone_domain() {
  static const dialogctl::phone::PhoneDomain d(
      dialogctl::phone::AddressBook::load(DIALOGCTL_DATA_DIR "/addressbook.json"));
  return d;
}

inline const dialogctl::Corpus& phone_corpus() {
  static const auto c = dialogctl::load_corpus(DIALOGCTL_DATA_DIR "/phone_corpus.dlg");
  return c;
}

inline const std::vector<dialogctl::TrainingSequence>& phone_data() {
  static const auto d = dialogctl::featurize(phone_corpus(), phone_domain());
  return d;
}

// Model with every weight (biases included) drawn from [-scale, scale].
inline dialogctl::ModelParams random_model(dialogctl::ModelKind kind, std::size_t D,
                                           std::size_t H, std::size_t A, std::uint64_t seed,
                                           double scale = 0.5) {
  auto p = dialogctl::init_model(kind, D, H, A, seed);
  dialogctl::Rng rng(seed ^ 0xabcdefull);
  for (auto& t : p.tensors)
    for (auto& v : t.values) v = rng.uniform(-scale, scale);
  return p;
}

inline std::vector<std::vector<double>> random_inputs(std::size_t T, std::size_t D,
                                                      dialogctl::Rng& rng) {
  std::vector<std::vector<double>> xs(T, std::vector<double>(D));
  for (auto& x : xs)
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  return xs;
}

}  // namespace testing
