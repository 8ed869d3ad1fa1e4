#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dialogctl::phone {

/// Canonical phone types, in the order they are listed to the user.
inline const std::vector<std::string> kPhoneTypes = {"mobile", "work", "home"};

/// Maps a phone-type surface ("cell", "office", ...) to its canonical type,
/// or returns an empty string when unknown.
std::string normalize_phonetype(std::string_view surface);

/// Surfaces recognized for each canonical phone type.
const std::map<std::string, std::vector<std::string>>& phonetype_synonyms();

/// Maps "yes"/"no" surfaces to "yes" or "no"; empty string when unknown.
std::string normalize_yesno(std::string_view surface);
const std::map<std::string, std::vector<std::string>>& yesno_synonyms();

struct AddressBookEntry {
  std::string canonical_name;
  std::set<std::string> nicknames;             // lowercase
  std::map<std::string, std::string> phones;   // canonical type -> number

  /// Phone types in presentation order.
  std::vector<std::string> phonetypes() const;
  bool has(std::string_view phonetype) const { return phones.count(std::string(phonetype)) > 0; }
};

// Address book file (JSON):
//   {
//     "contacts": [
//       {"name": "Jason Williams", "nicknames": ["jason"],
//        "phones": {"mobile": "+1 425 555 0101", "work": "+1 425 555 0102"}}
//     ],
//     "extra_names": ["Michel", "Priya"]
//   }
// "extra_names" are names the extractor recognizes that belong to nobody in
// the book; they let the system say it does not know a name.
class AddressBook {
 public:
  AddressBook() = default;
  AddressBook(std::vector<AddressBookEntry> entries, std::vector<std::string> extra_names);

  static AddressBook from_json(std::string_view json_text);
  static AddressBook load(const std::filesystem::path& path);

  const std::vector<AddressBookEntry>& entries() const { return entries_; }
  const std::vector<std::string>& extra_names() const { return extra_names_; }

  /// Indices of entries whose canonical name or a nickname equals `name`
  /// (case-insensitive).
  std::vector<std::size_t> lookup(std::string_view name) const;

 private:
  std::vector<AddressBookEntry> entries_;
  std::vector<std::string> extra_names_;
};

}  // namespace dialogctl::phone
