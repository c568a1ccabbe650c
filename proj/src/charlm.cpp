#include "ctxem/charlm.hpp"

#include <cctype>
#include <stdexcept>

namespace ctxem {

namespace {

// Plain English prose written for this project; only its letter statistics matter.
constexpr std::string_view kCorpus =
    "the river was quiet in the morning and no one moved on the water except a small boat that drifted "
    "toward the bridge. part of the town still slept, but the baker had opened his shop and the smell "
    "of bread reached the street. she walked along the bank with her hands in her pockets and thought about "
    "the letter she had not yet written. there was not a line in it that she could not say aloud, and yet every "
    "time she sat down the words would not come. her brother said that the best way to begin was to begin, "
    "which was the kind of thing he always said and which was never any help at all. "
    "on the other side of the river the old mill stood with its windows open. children used to play there in "
    "the summer, running up and down the stairs and shouting from the top floor so that their voices came "
    "back from the hills. now it was empty and the wheel had not turned for many years. part of the roof "
    "had fallen in during the winter storms and nobody had the money to repair it. "
    "when she reached the bridge she stopped and looked down into the water. it was clear enough to see the "
    "stones on the bottom and the long green weeds that moved with the current. she remembered the day her "
    "father had taught her to swim just below this point, holding her up with one hand and telling her that "
    "there was no reason to be afraid. she had believed him then and she believed him still. "
    "the morning went on. people came out of their houses and the market began to fill with voices and the "
    "noise of carts. a man was selling apples from a wooden table and another was mending shoes in the shade "
    "of a wall. she bought bread and cheese and a small jar of honey and carried them home in a paper bag. "
    "in the afternoon she finally sat down at the table by the window and took out a clean sheet of paper. "
    "she wrote the date at the top and then her brother's name, and then she wrote about the river and the "
    "mill and the swimming lesson, and about how little in the town had really changed even though "
    "everything had. when she was finished she read it through once, folded it twice and put it in an "
    "envelope before she could change her mind. "
    "the evening was warm and the light stayed for a long time over the water. she walked back to the bridge "
    "to post the letter and watched the boats come in one after another. the fishermen were tired but they "
    "were laughing, and one of them waved to her as he tied his rope to the post. she waved back and turned "
    "toward home, thinking that tomorrow she would write another letter, and perhaps another after that, "
    "until there was no word left that needed to be said. "
    "the next day brought rain. it fell without stopping from early morning until well after noon, and the "
    "river rose a little and turned the colour of tea. she stayed inside and read an old book about the "
    "history of the region, which described the building of the mill and the long dispute over the water "
    "rights that had divided the town for a generation. each family had claimed a part of the river and "
    "each had been certain of its own claim. in the end a judge from the city had settled the matter, "
    "and both sides had been equally unhappy with the result, which the book said was the mark of a fair "
    "decision. ";

}  // namespace

CharLM::CharLM(int order, double discount) : order_(order), discount_(discount) {
  if (order < 0) throw std::invalid_argument("order must be >= 0");
  if (!(discount > 0.0 && discount < 1.0)) throw std::invalid_argument("discount must lie in (0, 1)");
}

int CharLM::symbol_index(char c) {
  if (c >= 'a' && c <= 'z') return c - 'a';
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c == ' ') return kSpace;
  if (c == '<' || c == '\b') return kBackspace;
  return -1;
}

char CharLM::symbol_char(int k) {
  if (k >= 0 && k < 26) return static_cast<char>('a' + k);
  if (k == kSpace) return ' ';
  if (k == kBackspace) return '<';
  throw std::out_of_range("symbol index out of range");
}

void CharLM::train(std::string_view text) {
  std::string clean;
  for (char c : text) {
    const char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (l >= 'a' && l <= 'z')
      clean.push_back(l);
    else if (clean.empty() || clean.back() != ' ')
      clean.push_back(' ');
  }
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const int sym = symbol_index(clean[i]);
    for (int k = 0; k <= order_ && static_cast<std::size_t>(k) <= i; ++k) {
      auto& cnt = table_[clean.substr(i - static_cast<std::size_t>(k), static_cast<std::size_t>(k))];
      if (cnt.next[static_cast<std::size_t>(sym)] == 0.0) ++cnt.distinct;
      cnt.next[static_cast<std::size_t>(sym)] += 1.0;
      cnt.total += 1.0;
    }
  }
}

Eigen::VectorXd CharLM::level(std::string_view history) const {
  if (history.empty()) {
    // Add-one unigram keeps every symbol (backspace included) possible.
    Eigen::VectorXd p = Eigen::VectorXd::Ones(kSymbols);
    if (auto it = table_.find(std::string_view{}); it != table_.end())
      for (int k = 0; k < kSymbols; ++k) p(k) += it->second.next[static_cast<std::size_t>(k)];
    return p / p.sum();
  }
  const Eigen::VectorXd lower = level(history.substr(1));
  auto it = table_.find(history);
  if (it == table_.end() || it->second.total == 0.0) return lower;
  const Counts& c = it->second;
  Eigen::VectorXd p(kSymbols);
  const double back = discount_ * c.distinct / c.total;
  for (int k = 0; k < kSymbols; ++k)
    p(k) = std::max(c.next[static_cast<std::size_t>(k)] - discount_, 0.0) / c.total + back * lower(k);
  return p / p.sum();
}

Eigen::VectorXd CharLM::distribution(std::string_view prefix) const {
  std::string hist;
  for (char c : prefix) {
    const int k = symbol_index(c);
    if (k < 0 || k == kBackspace) continue;
    hist.push_back(symbol_char(k));
  }
  if (hist.size() > static_cast<std::size_t>(order_)) hist = hist.substr(hist.size() - static_cast<std::size_t>(order_));
  return level(hist);
}

const CharLM& CharLM::bundled() {
  static const CharLM lm = [] {
    CharLM m(2, 0.75);
    m.train(kCorpus);
    return m;
  }();
  return lm;
}

std::string_view CharLM::bundled_text() { return kCorpus; }

}  // namespace ctxem
