#pragma once

// Classic anomaly histories shared by several test binaries.

#include <string>
#include <vector>

#include "isolde/bounds.hpp"

namespace fixtures {

using isolde::History;
using isolde::Scope;

struct Fixture {
  std::string name;
  History history;
  Scope scope;
  /// Expected verdict per built-in level, catalog order:
  /// SER_A PC_A CC_A RA_A SER_B SI_B PC_B CC_B.
  std::vector<bool> allowed;
};

// Write skew.
inline History write_skew() {
  History h;
  h.writes = {{0, 0, 0}, {0, 1, 0}, {1, 1, 1}, {2, 0, 1}};
  h.reads = {{1, 0, 0}, {2, 1, 0}};
  return h;
}

// Long fork.
inline History long_fork() {
  History h;
  h.writes = {{0, 0, 0}, {0, 1, 0}, {1, 0, 1}, {2, 1, 1}};
  h.reads = {{3, 0, 1}, {3, 1, 0}, {4, 1, 1}, {4, 0, 0}};
  return h;
}

// Causality violation.
inline History causality_violation() {
  History h;
  h.writes = {{0, 0, 0}, {0, 1, 0}, {1, 0, 1}, {2, 1, 1}};
  h.reads = {{2, 0, 1}, {3, 1, 1}, {3, 0, 0}};
  h.so = {{0, 1}};
  return h;
}

// Fractured read.
inline History fractured_read() {
  History h;
  h.writes = {{0, 0, 0}, {0, 1, 0}, {1, 0, 1}, {1, 1, 1}};
  h.reads = {{2, 0, 1}, {2, 1, 0}};
  return h;
}

inline std::vector<Fixture> all() {
  return {
      {"WS", write_skew(), {3, 2, 2}, {false, true, true, true, false, true, true, true}},
      {"LF", long_fork(), {5, 2, 2}, {false, false, true, true, false, false, false, true}},
      {"CV", causality_violation(), {4, 2, 2}, {false, false, false, true, false, false, false, false}},
      {"FR", fractured_read(), {3, 2, 2}, {false, false, false, false, false, false, false, false}},
  };
}

}  // namespace fixtures
