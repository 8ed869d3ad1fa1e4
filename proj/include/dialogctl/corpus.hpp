#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dialogctl/actions.hpp"
#include "dialogctl/domain.hpp"

namespace dialogctl {

// Dialog corpus text format, version 1 (UTF-8, LF line endings):
//
//   %dialog-corpus 1
//
//   dialog <id>
//   S: <template name>
//   U: <user text with <type>surface</type> markup>
//   S: <template name>
//   end
//
// Dialogs are separated by one blank line. A dialog opens with system lines
// (the policy acts once before the user speaks); every following user line
// is answered by one or more system lines. A turn is one line.
inline constexpr std::string_view kCorpusHeader = "%dialog-corpus 1";

enum class Speaker { System, User };

struct CorpusLine {
  Speaker speaker = Speaker::System;
  std::string text;

  bool operator==(const CorpusLine&) const = default;
};

struct CorpusDialog {
  std::string id;
  std::vector<CorpusLine> lines;

  std::size_t turn_count() const { return lines.size(); }
  std::size_t system_turns() const;
  bool operator==(const CorpusDialog&) const = default;
};

using Corpus = std::vector<CorpusDialog>;

class CorpusParseError : public std::runtime_error {
 public:
  CorpusParseError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

Corpus parse_corpus(std::string_view text);
std::string serialize_corpus(const Corpus& corpus);
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

struct CorpusStats {
  std::size_t dialogs = 0;
  double mean_turns = 0.0;
  std::size_t min_turns = 0;
  std::size_t max_turns = 0;
  std::size_t system_turns = 0;
  std::size_t distinct_actions = 0;
};

CorpusStats corpus_stats(const Corpus& corpus);

// A corpus dialog replayed through the domain: what the policy saw at each
// decision and what it should have done.
struct TrainingStep {
  std::vector<double> features;
  ActionMask mask;
  std::size_t target = 0;
};

struct TrainingSequence {
  std::string dialog_id;
  std::vector<TrainingStep> steps;
};

/// Raised when a corpus action is not permitted by the mask at its position.
class MaskedCorpusAction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

TrainingSequence featurize(const CorpusDialog& dialog, const DomainHooks& hooks);
std::vector<TrainingSequence> featurize(const Corpus& corpus, const DomainHooks& hooks);

/// Pairs of decisions whose feature vectors are identical but whose target
/// actions differ: only recurrent history can tell them apart.
struct AliasingPair {
  std::size_t seq_a, step_a;
  std::size_t seq_b, step_b;
};

std::vector<AliasingPair> find_aliasing_pairs(const std::vector<TrainingSequence>& data);

}  // namespace dialogctl
