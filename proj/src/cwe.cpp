#include "realvul/cwe.hpp"

#include <array>
#include <cctype>
#include <initializer_list>

namespace realvul::cwe {

namespace {

struct Family {
  std::initializer_list<int> members;
  std::initializer_list<std::string_view> keywords;
};

const std::array<Family, 4> kFamilies = {{
    {{119, 120, 121, 122, 123, 124, 125, 126, 127, 131, 787, 788, 805, 806},
     {"out-of-bounds", "out of bounds", "overflow", "overrun", "bounds check", "buffer", "beyond", "memcpy",
      "strcpy"}},
    {{128, 190, 191, 680, 681},
     {"integer overflow", "wraparound", "wrap around", "wraps", "overflow", "underflow", "truncat"}},
    {{476, 690}, {"null", "dereference"}},
    {{415, 416, 825}, {"use after free", "use-after-free", "freed", "dangling", "double free"}},
}};

int number_of(std::string_view id) {
  if (id.size() <= 4 || id.substr(0, 4) != "CWE-") return -1;
  int n = 0;
  for (char c : id.substr(4)) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return -1;
    n = n * 10 + (c - '0');
    if (n > 1000000) return -1;
  }
  return n;
}

const Family* family_of(std::string_view id) {
  int n = number_of(id);
  for (const auto& f : kFamilies) {
    for (int m : f.members) {
      if (m == n) return &f;
    }
  }
  return nullptr;
}

}  // namespace

std::string name_of(std::string_view cwe_id) {
  switch (number_of(cwe_id)) {
    case 787: return "Out-of-bounds Write";
    case 125: return "Out-of-bounds Read";
    case 119: return "Improper Restriction of Operations within the Bounds of a Memory Buffer";
    case 121: return "Stack-based Buffer Overflow";
    case 122: return "Heap-based Buffer Overflow";
    case 416: return "Use After Free";
    case 415: return "Double Free";
    case 476: return "NULL Pointer Dereference";
    case 190: return "Integer Overflow or Wraparound";
    case 191: return "Integer Underflow";
    case 20: return "Improper Input Validation";
    default: return "the weakness catalogued as " + std::string(cwe_id);
  }
}

bool same_family(std::string_view a, std::string_view b) {
  if (number_of(a) < 0 || number_of(b) < 0) return false;
  if (number_of(a) == number_of(b)) return true;
  const Family* fa = family_of(a);
  return fa != nullptr && fa == family_of(b);
}

std::vector<std::string_view> mechanism_keywords(std::string_view cwe_id) {
  if (const Family* f = family_of(cwe_id)) return {f->keywords.begin(), f->keywords.end()};
  return {};
}

std::string find_cwe_id(std::string_view original) {
  std::string text(original);
  for (char& c : text) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (std::size_t pos = text.find("CWE-"); pos != std::string_view::npos; pos = text.find("CWE-", pos + 1)) {
    std::size_t end = pos + 4;
    while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
    if (end > pos + 4) return text.substr(pos, end - pos);
  }
  return {};
}

}  // namespace realvul::cwe
