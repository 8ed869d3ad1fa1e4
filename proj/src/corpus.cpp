#include "dialogctl/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dialogctl/engine.hpp"

namespace dialogctl {

CorpusParseError::CorpusParseError(std::size_t line, const std::string& message)
    : std::runtime_error("corpus line " + std::to_string(line) + ": " + message),
      line_(line) {}

std::size_t CorpusDialog::system_turns() const {
  return static_cast<std::size_t>(std::count_if(
      lines.begin(), lines.end(),
      [](const CorpusLine& l) { return l.speaker == Speaker::System; }));
}

Corpus parse_corpus(std::string_view text) {
  Corpus corpus;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  bool in_dialog = false;
  std::set<std::string> ids;

  auto next_line = [&](std::string_view& out) {
    if (pos >= text.size()) return false;
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    out = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    return true;
  };

  std::string_view line;
  while (next_line(line)) {
    if (!line.empty() && line.back() == '\r')
      throw CorpusParseError(lineno, "CR line endings are not allowed");
    if (!header_seen) {
      if (line != kCorpusHeader)
        throw CorpusParseError(lineno, "expected header '" + std::string(kCorpusHeader) + "'");
      header_seen = true;
      continue;
    }
    if (line.empty()) {
      if (in_dialog) throw CorpusParseError(lineno, "blank line inside dialog");
      continue;
    }
    if (!in_dialog) {
      if (line.substr(0, 7) != "dialog ")
        throw CorpusParseError(lineno, "expected 'dialog <id>'");
      std::string id(line.substr(7));
      if (id.empty() || id.find(' ') != std::string::npos)
        throw CorpusParseError(lineno, "dialog id must be one non-empty word");
      if (!ids.insert(id).second) throw CorpusParseError(lineno, "duplicate dialog id " + id);
      corpus.push_back(CorpusDialog{std::move(id), {}});
      in_dialog = true;
      continue;
    }
    auto& dialog = corpus.back();
    if (line == "end") {
      if (dialog.lines.empty() || dialog.lines.back().speaker != Speaker::System)
        throw CorpusParseError(lineno, "dialog must end with a system line");
      in_dialog = false;
      continue;
    }
    if (line.size() >= 2 && (line.substr(0, 2) == "S:" || line.substr(0, 2) == "U:")) {
      const Speaker speaker = line[0] == 'S' ? Speaker::System : Speaker::User;
      std::string body;
      if (line.size() > 2) {
        if (line[2] != ' ') throw CorpusParseError(lineno, "expected a space after the colon");
        body = std::string(line.substr(3));
      }
      if (speaker == Speaker::System && body.empty())
        throw CorpusParseError(lineno, "system line names no action");
      if (dialog.lines.empty() && speaker == Speaker::User)
        throw CorpusParseError(lineno, "dialog must open with a system line");
      if (speaker == Speaker::User && dialog.lines.back().speaker == Speaker::User)
        throw CorpusParseError(lineno, "two consecutive user lines");
      if (speaker == Speaker::User) {
        try {
          parse_markup(body);
        } catch (const std::invalid_argument& e) {
          throw CorpusParseError(lineno, e.what());
        }
      }
      dialog.lines.push_back(CorpusLine{speaker, std::move(body)});
      continue;
    }
    throw CorpusParseError(lineno, "unrecognized line");
  }
  if (!header_seen) throw CorpusParseError(1, "empty corpus file");
  if (in_dialog) throw CorpusParseError(lineno, "missing 'end' for dialog " + corpus.back().id);
  return corpus;
}

std::string serialize_corpus(const Corpus& corpus) {
  std::ostringstream out;
  out << kCorpusHeader << '\n';
  for (const auto& dialog : corpus) {
    out << '\n' << "dialog " << dialog.id << '\n';
    for (const auto& l : dialog.lines) {
      out << (l.speaker == Speaker::System ? "S:" : "U:");
      if (!l.text.empty()) out << ' ' << l.text;
      out << '\n';
    }
    out << "end\n";
  }
  return out.str();
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write corpus " + path.string());
  out << serialize_corpus(corpus);
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats s;
  s.dialogs = corpus.size();
  if (corpus.empty()) return s;
  std::size_t total = 0;
  s.min_turns = corpus.front().turn_count();
  std::set<std::string> actions;
  for (const auto& d : corpus) {
    total += d.turn_count();
    s.min_turns = std::min(s.min_turns, d.turn_count());
    s.max_turns = std::max(s.max_turns, d.turn_count());
    s.system_turns += d.system_turns();
    for (const auto& l : d.lines)
      if (l.speaker == Speaker::System) actions.insert(l.text);
  }
  s.mean_turns = static_cast<double>(total) / static_cast<double>(corpus.size());
  s.distinct_actions = actions.size();
  return s;
}

TrainingSequence featurize(const CorpusDialog& dialog, const DomainHooks& hooks) {
  TrainingSequence seq;
  seq.dialog_id = dialog.id;
  DialogTracker tracker(hooks);
  bool need_turn = true;  // the opening decision follows an empty user input
  std::vector<EntityMention> pending;

  for (std::size_t i = 0; i < dialog.lines.size(); ++i) {
    const auto& line = dialog.lines[i];
    if (line.speaker == Speaker::User) {
      auto annotated = parse_markup(line.text);
      pending = std::move(annotated.mentions);
      need_turn = true;
      continue;
    }
    if (need_turn) {
      tracker.begin_turn(pending);
      pending.clear();
      need_turn = false;
    }
    if (tracker.closed())
      throw MaskedCorpusAction("dialog " + dialog.id + ": action " + line.text +
                               " follows a terminal action");
    const auto& t = hooks.find_template(line.text);
    TrainingStep step;
    step.features = tracker.features();
    step.mask = tracker.mask();
    step.target = t.id;
    if (!step.mask.allowed(t.id))
      throw MaskedCorpusAction("dialog " + dialog.id + ", line " + std::to_string(i + 1) +
                               ": action " + t.name + " is masked at its position");
    seq.steps.push_back(std::move(step));
    tracker.apply(t.id);
  }
  return seq;
}

std::vector<TrainingSequence> featurize(const Corpus& corpus, const DomainHooks& hooks) {
  std::vector<TrainingSequence> out;
  out.reserve(corpus.size());
  for (const auto& d : corpus) out.push_back(featurize(d, hooks));
  return out;
}

std::vector<AliasingPair> find_aliasing_pairs(const std::vector<TrainingSequence>& data) {
  struct Where {
    std::size_t seq, step, target;
  };
  std::map<std::vector<double>, std::vector<Where>> by_features;
  for (std::size_t s = 0; s < data.size(); ++s)
    for (std::size_t t = 0; t < data[s].steps.size(); ++t)
      by_features[data[s].steps[t].features].push_back({s, t, data[s].steps[t].target});

  std::vector<AliasingPair> pairs;
  for (const auto& [features, sites] : by_features)
    for (std::size_t i = 0; i < sites.size(); ++i)
      for (std::size_t j = i + 1; j < sites.size(); ++j)
        if (sites[i].target != sites[j].target)
          pairs.push_back({sites[i].seq, sites[i].step, sites[j].seq, sites[j].step});
  return pairs;
}

}  // namespace dialogctl
