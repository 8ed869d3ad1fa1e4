#include "dialogctl/phone/addressbook.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dialogctl/entities.hpp"

namespace dialogctl::phone {

const std::map<std::string, std::vector<std::string>>& phonetype_synonyms() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"mobile", {"mobile", "cell", "cellphone", "cell phone", "mobile phone"}},
      {"work", {"work", "office", "business", "work phone"}},
      {"home", {"home", "house", "landline"}},
  };
  return table;
}

const std::map<std::string, std::vector<std::string>>& yesno_synonyms() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"yes", {"yes", "yeah", "yep", "sure", "ok", "okay"}},
      {"no", {"no", "nope", "nah"}},
  };
  return table;
}

namespace {

std::string lookup_synonym(const std::map<std::string, std::vector<std::string>>& table,
                           std::string_view surface) {
  const std::string key = normalize_surface(surface);
  for (const auto& [canonical, surfaces] : table)
    if (std::find(surfaces.begin(), surfaces.end(), key) != surfaces.end()) return canonical;
  return {};
}

}  // namespace

std::string normalize_phonetype(std::string_view surface) {
  return lookup_synonym(phonetype_synonyms(), surface);
}

std::string normalize_yesno(std::string_view surface) {
  return lookup_synonym(yesno_synonyms(), surface);
}

std::vector<std::string> AddressBookEntry::phonetypes() const {
  std::vector<std::string> out;
  for (const auto& t : kPhoneTypes)
    if (has(t)) out.push_back(t);
  return out;
}

AddressBook::AddressBook(std::vector<AddressBookEntry> entries,
                         std::vector<std::string> extra_names)
    : entries_(std::move(entries)), extra_names_(std::move(extra_names)) {
  for (const auto& e : entries_) {
    if (e.phones.empty())
      throw std::invalid_argument("contact " + e.canonical_name + " has no phone");
    for (const auto& [type, number] : e.phones)
      if (std::find(kPhoneTypes.begin(), kPhoneTypes.end(), type) == kPhoneTypes.end())
        throw std::invalid_argument("contact " + e.canonical_name +
                                    " has unknown phone type " + type);
  }
  for (const auto& name : extra_names_)
    if (!lookup(name).empty())
      throw std::invalid_argument("extra name " + name + " matches a contact");
}

AddressBook AddressBook::from_json(std::string_view json_text) {
  const auto doc = nlohmann::json::parse(json_text);
  std::vector<AddressBookEntry> entries;
  for (const auto& c : doc.at("contacts")) {
    AddressBookEntry e;
    e.canonical_name = c.at("name").get<std::string>();
    for (const auto& n : c.value("nicknames", nlohmann::json::array()))
      e.nicknames.insert(normalize_surface(n.get<std::string>()));
    for (const auto& [type, number] : c.at("phones").items())
      e.phones[type] = number.get<std::string>();
    entries.push_back(std::move(e));
  }
  std::vector<std::string> extra;
  for (const auto& n : doc.value("extra_names", nlohmann::json::array()))
    extra.push_back(n.get<std::string>());
  return AddressBook(std::move(entries), std::move(extra));
}

AddressBook AddressBook::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open address book " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::vector<std::size_t> AddressBook::lookup(std::string_view name) const {
  const std::string key = normalize_surface(name);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (normalize_surface(e.canonical_name) == key || e.nicknames.count(key) > 0)
      out.push_back(i);
  }
  return out;
}

}  // namespace dialogctl::phone
