#include "dialogctl/entities.hpp"

#include <cctype>
#include <stdexcept>

namespace dialogctl {

namespace {

struct Token {
  std::size_t begin;
  std::size_t end;
};

bool is_word_char(unsigned char ch) {
  return std::isalnum(ch) || ch == '\'' || ch >= 0x80;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_char(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_char(static_cast<unsigned char>(text[j]))) ++j;
    tokens.push_back({i, j});
    i = j;
  }
  return tokens;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

}  // namespace

std::string normalize_surface(std::string_view text) {
  std::string out;
  for (const auto& tok : tokenize(text)) {
    if (!out.empty()) out += ' ';
    out += lower(text.substr(tok.begin, tok.end - tok.begin));
  }
  return out;
}

void Gazetteer::add(std::string_view surface, std::string entity_type,
                    std::string canonical) {
  const std::string key = normalize_surface(surface);
  if (key.empty()) throw std::invalid_argument("empty gazetteer surface");
  const std::size_t words = tokenize(key).size();
  if (words > max_words_) max_words_ = words;
  entries_[key] = GazetteerEntry{std::move(entity_type), std::move(canonical)};
}

const GazetteerEntry* Gazetteer::find(std::string_view surface) const {
  const auto it = entries_.find(normalize_surface(surface));
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<EntityMention> extract_entities(std::string_view text,
                                            const Gazetteer& gazetteer) {
  const auto tokens = tokenize(text);
  std::vector<EntityMention> mentions;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    const std::size_t longest = std::min(gazetteer.max_words(), tokens.size() - i);
    for (std::size_t n = longest; n >= 1; --n) {
      std::string key;
      for (std::size_t k = i; k < i + n; ++k) {
        if (!key.empty()) key += ' ';
        key += lower(text.substr(tokens[k].begin, tokens[k].end - tokens[k].begin));
      }
      if (const auto* entry = gazetteer.find(key)) {
        const std::size_t begin = tokens[i].begin;
        const std::size_t end = tokens[i + n - 1].end;
        mentions.push_back(EntityMention{entry->entity_type,
                                         std::string(text.substr(begin, end - begin)),
                                         entry->canonical, begin});
        i += n;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return mentions;
}

AnnotatedText parse_markup(std::string_view marked) {
  AnnotatedText out;
  std::size_t i = 0;
  while (i < marked.size()) {
    if (marked[i] != '<') {
      out.plain += marked[i++];
      continue;
    }
    const auto close = marked.find('>', i);
    if (close == std::string_view::npos)
      throw std::invalid_argument("unterminated entity tag in: " + std::string(marked));
    const std::string type(marked.substr(i + 1, close - i - 1));
    if (type.empty() || type[0] == '/')
      throw std::invalid_argument("unexpected closing tag in: " + std::string(marked));
    const std::string end_tag = "</" + type + ">";
    const auto end = marked.find(end_tag, close + 1);
    if (end == std::string_view::npos)
      throw std::invalid_argument("missing " + end_tag + " in: " + std::string(marked));
    const std::string surface(marked.substr(close + 1, end - close - 1));
    if (surface.find('<') != std::string::npos)
      throw std::invalid_argument("nested entity tags in: " + std::string(marked));
    out.mentions.push_back(EntityMention{type, surface, std::nullopt, out.plain.size()});
    out.plain += surface;
    i = end + end_tag.size();
  }
  return out;
}

std::string to_markup(std::string_view plain, const std::vector<EntityMention>& mentions) {
  std::string out;
  std::size_t pos = 0;
  for (const auto& m : mentions) {
    if (m.offset < pos || m.offset + m.surface.size() > plain.size())
      throw std::invalid_argument("mention outside utterance");
    out.append(plain.substr(pos, m.offset - pos));
    out += "<" + m.entity_type + ">" + m.surface + "</" + m.entity_type + ">";
    pos = m.offset + m.surface.size();
  }
  out.append(plain.substr(pos));
  return out;
}

void resolve_mentions(std::vector<EntityMention>& mentions, const Gazetteer& gazetteer) {
  for (auto& m : mentions)
    if (const auto* entry = gazetteer.find(m.surface)) m.resolved = entry->canonical;
}

}  // namespace dialogctl
