// Copyright 2026 The cdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <array>
#include <cctype>
#include <map>
#include <set>
#include <string>

#include "cdp/error.hpp"
#include "cdp/perception.hpp"

namespace cdp {
namespace {

enum class TokenClass { kOperator, kOperand };

struct Token {
  TokenClass cls;
  std::string text;
};

const std::set<std::string, std::less<>> kKeywords = {
    "and",   "as",     "assert", "async", "await",    "break",  "class", "continue",
    "def",   "del",    "elif",   "else",  "except",   "finally", "for",  "from",
    "global", "if",    "import", "in",    "is",       "lambda", "nonlocal", "not",
    "or",    "pass",   "raise",  "return", "try",     "while",  "with",  "yield",
    "match", "case"};

const std::set<std::string, std::less<>> kOperandKeywords = {"True", "False", "None"};

const std::set<std::string, std::less<>> kBranchTokens = {"if",  "elif", "for",    "while",
                                                          "and", "or",   "except", "case"};

// Longest first.
constexpr std::array<std::string_view, 44> kSymbols = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "==", "!=", "<=", ">=", "<<", ">>",
    "+=",  "-=",  "*=",  "/=",  "%=",  "&=", "|=", "^=", "@=", "+",  "-",  "*",  "/",  "%",  "@",
    "&",   "|",   "^",   "~",   "<",   ">",  "=",  ".",  "(",  "[",  "{",  ",",  ":",  ";"};

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

std::size_t skip_string(std::string_view src, std::size_t i) {
  char quote = src[i];
  bool triple = src.substr(i, 3) == std::string(3, quote);
  i += triple ? 3 : 1;
  while (i < src.size()) {
    if (src[i] == '\\') {
      i += 2;
      continue;
    }
    if (triple) {
      if (src.substr(i, 3) == std::string(3, quote)) return i + 3;
    } else {
      if (src[i] == quote) return i + 1;
      if (src[i] == '\n') return i;  // unterminated single-line string
    }
    ++i;
  }
  return src.size();
}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < src.size()) {
    const auto c = static_cast<unsigned char>(src[i]);
    if (std::isspace(c) || c == '\\') {
      ++i;
    } else if (c == '#') {
      while (i < src.size() && src[i] != '\n') ++i;
    } else if (c == '"' || c == '\'') {
      std::size_t end = skip_string(src, i);
      tokens.push_back({TokenClass::kOperand, std::string(src.substr(i, end - i))});
      i = end;
    } else if (ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && ident_char(static_cast<unsigned char>(src[j]))) ++j;
      // String prefixes such as r"", b'', f"""...""".
      if (j < src.size() && (src[j] == '"' || src[j] == '\'') && j - i <= 2) {
        std::string prefix(src.substr(i, j - i));
        bool is_prefix = true;
        for (char p : prefix) is_prefix &= std::string_view("rRbBuUfF").find(p) != std::string_view::npos;
        if (is_prefix) {
          std::size_t end = skip_string(src, j);
          tokens.push_back({TokenClass::kOperand, std::string(src.substr(i, end - i))});
          i = end;
          continue;
        }
      }
      std::string word(src.substr(i, j - i));
      bool op = kKeywords.contains(word) && !kOperandKeywords.contains(word);
      tokens.push_back({op ? TokenClass::kOperator : TokenClass::kOperand, std::move(word)});
      i = j;
    } else if (std::isdigit(c) ||
               (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size()) {
        auto d = static_cast<unsigned char>(src[j]);
        if (std::isalnum(d) || d == '_' || d == '.') {
          ++j;
        } else if ((d == '+' || d == '-') && (src[j - 1] == 'e' || src[j - 1] == 'E') &&
                   !(src[i] == '0' && j > i + 1 && (src[i + 1] == 'x' || src[i + 1] == 'X'))) {
          ++j;
        } else {
          break;
        }
      }
      tokens.push_back({TokenClass::kOperand, std::string(src.substr(i, j - i))});
      i = j;
    } else {
      std::string_view matched;
      for (auto sym : kSymbols) {
        if (src.substr(i).starts_with(sym)) {
          matched = sym;
          break;
        }
      }
      if (matched.empty()) {
        ++i;  // closing brackets and stray characters
        continue;
      }
      if (matched != "," && matched != ":" && matched != ";") {
        tokens.push_back({TokenClass::kOperator, std::string(matched)});
      }
      i += matched.size();
    }
  }
  return tokens;
}

}  // namespace

StaticDifficulty static_difficulty(std::string_view source, std::string requirement_id) {
  require(source.find_first_not_of(" \t\r\n") != std::string_view::npos,
          "static_difficulty: empty source");
  std::set<std::string> operators;
  std::set<std::string> operands;
  std::size_t total_operands = 0;
  int branches = 0;
  for (const auto& t : tokenize(source)) {
    if (kBranchTokens.contains(t.text)) ++branches;
    if (t.cls == TokenClass::kOperator) {
      operators.insert(t.text);
    } else {
      operands.insert(t.text);
      ++total_operands;
    }
  }
  if (operands.empty()) {
    fail(ErrorCode::kUnclassifiableSource, "static_difficulty: source has no operands");
  }
  StaticDifficulty out;
  out.requirement_id = std::move(requirement_id);
  out.cyclomatic_approx = 1 + branches;
  out.halstead_difficulty = (static_cast<double>(operators.size()) / 2.0) *
                            (static_cast<double>(total_operands) / static_cast<double>(operands.size()));
  out.overall_metric = (out.cyclomatic_approx + out.halstead_difficulty) / 2.0;
  return out;
}

}  // namespace cdp
