#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dialogctl {

struct EntityMention {
  std::string entity_type;
  std::string surface;
  std::optional<std::string> resolved;
  std::size_t offset = 0;  // byte offset of `surface` in the plain utterance

  bool operator==(const EntityMention&) const = default;
};

struct GazetteerEntry {
  std::string entity_type;
  std::string canonical;
};

// Surface-form dictionary for deterministic entity extraction. Surfaces may
// span several words; lookup is case-insensitive on whole words.
class Gazetteer {
 public:
  void add(std::string_view surface, std::string entity_type, std::string canonical);

  const GazetteerEntry* find(std::string_view surface) const;
  std::size_t max_words() const { return max_words_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, GazetteerEntry, std::less<>> entries_;
  std::size_t max_words_ = 0;
};

/// Longest-match, left-to-right, case-insensitive, non-overlapping.
std::vector<EntityMention> extract_entities(std::string_view text,
                                            const Gazetteer& gazetteer);

/// Lowercases ASCII and collapses runs of whitespace.
std::string normalize_surface(std::string_view text);

// Inline markup: "Call <name>Jason</name> on his <phonetype>cell</phonetype>".
struct AnnotatedText {
  std::string plain;
  std::vector<EntityMention> mentions;
};

AnnotatedText parse_markup(std::string_view marked);
std::string to_markup(std::string_view plain, const std::vector<EntityMention>& mentions);

/// Fills `resolved` from the gazetteer where the surface is known.
void resolve_mentions(std::vector<EntityMention>& mentions, const Gazetteer& gazetteer);

}  // namespace dialogctl
