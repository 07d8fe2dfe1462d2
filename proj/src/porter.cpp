// Copyright 2026 The acueval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Port of the reference ANSI C Porter stemmer (tartarus.org/martin/PorterStemmer).

#include <string>
#include <string_view>

#include "acueval/lexmetrics.hpp"

namespace acueval {

namespace {

class PorterStemmer {
 public:
  explicit PorterStemmer(std::string_view word) : b_(word), k_(static_cast<int>(word.size()) - 1) {}

  std::string run() {
    if (k_ <= 1) return b_;
    step1ab();
    if (k_ > 0) {
      step1c();
      step2();
      step3();
      step4();
      step5();
    }
    return b_.substr(0, static_cast<std::size_t>(k_ + 1));
  }

 private:
  char at(int i) const { return b_[static_cast<std::size_t>(i)]; }

  bool cons(int i) const {
    switch (at(i)) {
      case 'a': case 'e': case 'i': case 'o': case 'u': return false;
      case 'y': return i == 0 ? true : !cons(i - 1);
      default: return true;
    }
  }

  // Number of VC sequences in b[0..j].
  int m() const {
    int n = 0, i = 0;
    while (true) {
      if (i > j_) return n;
      if (!cons(i)) break;
      ++i;
    }
    ++i;
    while (true) {
      while (true) {
        if (i > j_) return n;
        if (cons(i)) break;
        ++i;
      }
      ++i;
      ++n;
      while (true) {
        if (i > j_) return n;
        if (!cons(i)) break;
        ++i;
      }
      ++i;
    }
  }

  bool vowel_in_stem() const {
    for (int i = 0; i <= j_; ++i)
      if (!cons(i)) return true;
    return false;
  }

  bool double_c(int j) const { return j >= 1 && at(j) == at(j - 1) && cons(j); }

  bool cvc(int i) const {
    if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
    const char ch = at(i);
    return ch != 'w' && ch != 'x' && ch != 'y';
  }

  bool ends(std::string_view s) {
    const int len = static_cast<int>(s.size());
    if (len > k_ + 1) return false;
    if (b_.compare(static_cast<std::size_t>(k_ - len + 1), s.size(), s) != 0) return false;
    j_ = k_ - len;
    return true;
  }

  void set_to(std::string_view s) {
    b_.replace(static_cast<std::size_t>(j_ + 1), static_cast<std::size_t>(k_ - j_), s);
    k_ = j_ + static_cast<int>(s.size());
    b_.resize(static_cast<std::size_t>(k_ + 1));
  }

  void r(std::string_view s) {
    if (m() > 0) set_to(s);
  }

  void step1ab() {
    if (at(k_) == 's') {
      if (ends("sses")) {
        k_ -= 2;
      } else if (ends("ies")) {
        set_to("i");
      } else if (at(k_ - 1) != 's') {
        --k_;
      }
    }
    if (ends("eed")) {
      if (m() > 0) --k_;
    } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
      k_ = j_;
      if (ends("at")) {
        set_to("ate");
      } else if (ends("bl")) {
        set_to("ble");
      } else if (ends("iz")) {
        set_to("ize");
      } else if (double_c(k_)) {
        --k_;
        const char ch = at(k_);
        if (ch == 'l' || ch == 's' || ch == 'z') ++k_;
      } else if (m() == 1 && cvc(k_)) {
        set_to("e");
      }
    }
    b_.resize(static_cast<std::size_t>(k_ + 1));
  }

  void step1c() {
    if (ends("y") && vowel_in_stem()) b_[static_cast<std::size_t>(k_)] = 'i';
  }

  // Tries each (suffix, replacement) in order; the first matching suffix wins.
  template <std::size_t N>
  bool replace_first(const std::pair<std::string_view, std::string_view> (&rules)[N]) {
    for (const auto& [suffix, repl] : rules) {
      if (ends(suffix)) {
        r(repl);
        return true;
      }
    }
    return false;
  }

  void step2() {
    if (k_ < 1) return;
    switch (at(k_ - 1)) {
      case 'a': {
        static const std::pair<std::string_view, std::string_view> rules[] = {
            {"ational", "ate"}, {"tional", "tion"}};
        replace_first(rules);
        break;
      }
      case 'c': {
        static const std::pair<std::string_view, std::string_view> rules[] = {
            {"enci", "ence"}, {"anci", "ance"}};
        replace_first(rules);
        break;
      }
      case 'e': {
        static const std::pair<std::string_view, std::string_view> rules[] = {{"izer", "ize"}};
        replace_first(rules);
        break;
      }
      case 'l': {
        static const std::pair<std::string_view, std::string_view> rules[] = {
            {"bli", "ble"}, {"alli", "al"}, {"entli", "ent"}, {"eli", "e"}, {"ousli", "ous"}};
        replace_first(rules);
        break;
      }
      case 'o': {
        static const std::pair<std::string_view, std::string_view> rules[] = {
            {"ization", "ize"}, {"ation", "ate"}, {"ator", "ate"}};
        replace_first(rules);
        break;
      }
      case 's': {
        static const std::pair<std::string_view, std::string_view> rules[] = {
            {"alism", "al"}, {"iveness", "ive"}, {"fulness", "ful"}, {"ousness", "ous"}};
        replace_first(rules);
        break;
      }
      case 't': {
        static const std::pair<std::string_view, std::string_view> rules[] = {
            {"aliti", "al"}, {"iviti", "ive"}, {"biliti", "ble"}};
        replace_first(rules);
        break;
      }
      case 'g': {
        static const std::pair<std::string_view, std::string_view> rules[] = {{"logi", "log"}};
        replace_first(rules);
        break;
      }
      default:
        break;
    }
  }

  void step3() {
    switch (at(k_)) {
      case 'e': {
        static const std::pair<std::string_view, std::string_view> rules[] = {
            {"icate", "ic"}, {"ative", ""}, {"alize", "al"}};
        replace_first(rules);
        break;
      }
      case 'i': {
        static const std::pair<std::string_view, std::string_view> rules[] = {{"iciti", "ic"}};
        replace_first(rules);
        break;
      }
      case 'l': {
        static const std::pair<std::string_view, std::string_view> rules[] = {
            {"ical", "ic"}, {"ful", ""}};
        replace_first(rules);
        break;
      }
      case 's': {
        static const std::pair<std::string_view, std::string_view> rules[] = {{"ness", ""}};
        replace_first(rules);
        break;
      }
      default:
        break;
    }
  }

  void step4() {
    if (k_ < 1) return;
    auto any_of = [&](std::initializer_list<std::string_view> suffixes) {
      for (auto s : suffixes)
        if (ends(s)) return true;
      return false;
    };
    bool matched = false;
    switch (at(k_ - 1)) {
      case 'a': matched = any_of({"al"}); break;
      case 'c': matched = any_of({"ance", "ence"}); break;
      case 'e': matched = any_of({"er"}); break;
      case 'i': matched = any_of({"ic"}); break;
      case 'l': matched = any_of({"able", "ible"}); break;
      case 'n': matched = any_of({"ant", "ement", "ment", "ent"}); break;
      case 'o':
        if (ends("ion") && j_ >= 0 && (at(j_) == 's' || at(j_) == 't')) {
          matched = true;
        } else {
          matched = ends("ou");
        }
        break;
      case 's': matched = any_of({"ism"}); break;
      case 't': matched = any_of({"ate", "iti"}); break;
      case 'u': matched = any_of({"ous"}); break;
      case 'v': matched = any_of({"ive"}); break;
      case 'z': matched = any_of({"ize"}); break;
      default: break;
    }
    if (matched && m() > 1) k_ = j_;
  }

  void step5() {
    j_ = k_;
    if (at(k_) == 'e') {
      const int a = m();
      if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
    }
    if (at(k_) == 'l' && double_c(k_) && m() > 1) --k_;
  }

  std::string b_;
  int k_;
  int j_ = 0;
};

}  // namespace

std::string porter_stem(std::string_view word) { return PorterStemmer(word).run(); }

}  // namespace acueval
