#pragma once

// Shared by the module tests: error-code checks and small generators.

#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "larag/error.hpp"

#define CHECK_ERROR_CODE(expr, expected)                                  \
  do {                                                                    \
    bool larag_thrown_ = false;                                           \
    try {                                                                 \
      (void)(expr);                                                       \
    } catch (const ::larag::Error& e) {                                   \
      larag_thrown_ = true;                                               \
      CHECK_MESSAGE(e.code() == (expected), "got ", ::larag::to_string(e.code()), ": ", e.what()); \
    }                                                                     \
    CHECK_MESSAGE(larag_thrown_, #expr " did not throw");                 \
  } while (0)

namespace testgen {

inline std::vector<std::uint8_t> random_binary(std::mt19937_64& rng, std::size_t n, double p_one = 0.5) {
  std::bernoulli_distribution bit(p_one);
  std::vector<std::uint8_t> out(n);
  for (auto& b : out) b = bit(rng) ? 1 : 0;
  return out;
}

inline std::vector<double> random_scores(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& s : out) s = u(rng);
  return out;
}

/// Scores that switch between high and low plateaus, with noise, so runs and
/// short glitches both show up after thresholding.
inline std::vector<double> plateau_scores(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(n);
  bool high = u(rng) < 0.5;
  for (auto& s : out) {
    if (u(rng) < 0.08) high = !high;
    const double base = high ? 0.85 : 0.3;
    s = std::clamp(base + (u(rng) - 0.5) * 0.5, 0.0, 1.0);
  }
  return out;
}

inline std::string random_word(std::mt19937_64& rng, std::size_t min_len = 3, std::size_t max_len = 9) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<int> ch('a', 'z');
  std::string w(len(rng), 'a');
  for (auto& c : w) c = static_cast<char>(ch(rng));
  return w;
}

/// A statement that is not a lone SELECT: write, DDL, pragma, or a SELECT
/// smuggling a second statement, with random casing, spacing and comments.
inline std::string mutated_non_select(std::mt19937_64& rng) {
  static const std::vector<std::string> kBases = {
      "INSERT INTO events(audio_id, tag, start_s, end_s, confidence) VALUES ('a', 'x', 1, 2, 0.5)",
      "UPDATE events SET tag = 'x' WHERE id = 1",
      "DELETE FROM events",
      "DROP TABLE events",
      "CREATE TABLE t(x)",
      "ALTER TABLE events ADD COLUMN y TEXT",
      "ATTACH DATABASE 'x.db' AS x",
      "DETACH DATABASE main",
      "PRAGMA writable_schema = 1",
      "REPLACE INTO events(id) VALUES (1)",
      "VACUUM",
      "REINDEX events",
      "BEGIN TRANSACTION",
      "COMMIT",
      "SAVEPOINT s1",
      "WITH c AS (SELECT 1) DELETE FROM events",
      "WITH c AS (SELECT 1) INSERT INTO events(id) SELECT * FROM c",
      "SELECT * FROM events; DROP TABLE events",
      "SELECT 1; DELETE FROM events",
      "SELECT * INTO backup FROM events",
      "CREATE TEMP VIEW v AS SELECT * FROM events",
      "ANALYZE events",
  };
  std::uniform_int_distribution<std::size_t> pick(0, kBases.size() - 1);
  std::uniform_int_distribution<int> coin(0, 3);
  std::string sql = kBases[pick(rng)];
  for (auto& c : sql) {  // random casing
    if (coin(rng) == 0) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    else if (coin(rng) == 1) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  switch (coin(rng)) {
    case 0: sql = "  \n\t" + sql; break;
    case 1: sql = "/* note */ " + sql; break;
    case 2: sql = sql + ";"; break;
    default: sql = "-- lead\n" + sql; break;
  }
  if (coin(rng) == 0) sql = "```sql\n" + sql + "\n```";
  return sql;
}

}  // namespace testgen
