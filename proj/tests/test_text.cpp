#include <doctest.h>

#include "acm/text.hpp"

using namespace acm;

TEST_CASE("scalar counting over ascii and multibyte text") {
  CHECK(cp_count("") == 0);
  CHECK(cp_count("hello") == 5);
  CHECK(cp_count("héllo") == 5);        // é is 2 bytes
  CHECK(cp_count("中文abc") == 5);       // 3-byte scalars
  CHECK(cp_count("a🦉b") == 3);          // 4-byte scalar
  CHECK(std::string("héllo").size() == 6);
}

TEST_CASE("offset conversions round-trip") {
  const std::string text = "aé中🦉z";
  CHECK(cp_count(text) == 5);
  CHECK(cp_to_byte(text, 0) == 0);
  CHECK(cp_to_byte(text, 1) == 1);
  CHECK(cp_to_byte(text, 2) == 3);
  CHECK(cp_to_byte(text, 3) == 6);
  CHECK(cp_to_byte(text, 4) == 10);
  CHECK(cp_to_byte(text, 5) == 11);
  CHECK(cp_to_byte(text, 99) == 11);  // clamped
  for (std::size_t i = 0; i <= 5; ++i) {
    CHECK(byte_to_cp(text, cp_to_byte(text, i)) == i);
  }
}

TEST_CASE("cp_substr slices by scalar positions") {
  const std::string text = "aé中🦉z";
  CHECK(cp_substr(text, 0, 2) == "aé");
  CHECK(cp_substr(text, 2, 2) == "中🦉");
  CHECK(cp_substr(text, 4) == "z");
  CHECK(cp_substr(text, 5) == "");
  CHECK(cp_substr(text, 0, 100) == text);
}

TEST_CASE("cp_find reports scalar offsets") {
  CHECK(cp_find("AAA needle BBB", "needle") == 4);
  CHECK(cp_find("AAA needle BBB", "absent") == text_npos);
  CHECK(cp_find("aaa", "aa") == 0);
  CHECK(cp_find("aaa", "aa", 1) == 1);  // overlapping occurrence
  CHECK(cp_find("中文 中文", "中文", 1) == 3);
  CHECK(cp_find("abc", "") == text_npos);

  // A byte-level match inside a multibyte scalar must not count. The needle
  // "\xa9" is the second byte of é.
  const std::string tricky = "é\xa9";
  CHECK(cp_find(tricky, "\xa9") == 1);  // the stray byte, not inside é
}

TEST_CASE("token heuristic is chars/4 rounded up") {
  CHECK(heuristic_token_count("") == 0);
  CHECK(heuristic_token_count("a") == 1);
  CHECK(heuristic_token_count("abcd") == 1);
  CHECK(heuristic_token_count("abcde") == 2);
  CHECK(heuristic_token_count("中文中文") == 1);  // 4 scalars
}
