#include "lvse/types.hpp"

#include <bit>

#include "lvse/error.hpp"

namespace lvse {

char to_char(Phase p) {
  switch (p) {
    case Phase::a: return 'a';
    case Phase::b: return 'b';
    case Phase::c: return 'c';
    case Phase::n: return 'n';
  }
  return '?';
}

Phase phase_from_char(char c) {
  switch (c) {
    case 'a': case 'A': return Phase::a;
    case 'b': case 'B': return Phase::b;
    case 'c': case 'C': return Phase::c;
    case 'n': case 'N': return Phase::n;
    default: break;
  }
  throw DomainError(std::string("unknown phase '") + c + "'");
}

PhaseSet PhaseSet::parse(std::string_view letters) {
  PhaseSet s;
  for (char c : letters) {
    Phase p = phase_from_char(c);
    if (s.contains(p)) throw DomainError("duplicate phase in '" + std::string(letters) + "'");
    s.insert(p);
  }
  return s;
}

std::size_t PhaseSet::size() const { return static_cast<std::size_t>(std::popcount(bits_)); }

std::size_t PhaseSet::power_phase_count() const { return without_neutral().size(); }

std::vector<Phase> PhaseSet::members() const {
  std::vector<Phase> out;
  for (Phase p : kAllPhases)
    if (contains(p)) out.push_back(p);
  return out;
}

std::string PhaseSet::str() const {
  std::string s;
  for (Phase p : members()) s.push_back(to_char(p));
  return s;
}

std::string_view to_string(WiringMode m) { return m == WiringMode::threewire ? "threewire" : "fourwire"; }

}  // namespace lvse
