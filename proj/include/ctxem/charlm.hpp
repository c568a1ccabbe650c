#pragma once

// Order-k character model with interpolated absolute-discounting backoff.
// Symbols: 'a'..'z' -> 0..25, space -> 26, backspace -> 27.

#include <Eigen/Dense>

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ctxem {

class CharLM {
 public:
  static constexpr int kSymbols = 28;
  static constexpr int kSpace = 26;
  static constexpr int kBackspace = 27;

  explicit CharLM(int order = 2, double discount = 0.75);

  // Letters are lowercased; anything else becomes a single space.
  void train(std::string_view text);

  // p(c | last `order` symbols of prefix); strictly positive, sums to 1.
  Eigen::VectorXd distribution(std::string_view prefix) const;

  int order() const { return order_; }

  static int symbol_index(char c);  // -1 when not in the alphabet
  static char symbol_char(int k);   // '<' for backspace

  // Model trained on the bundled corpus.
  static const CharLM& bundled();
  static std::string_view bundled_text();

 private:
  struct Counts {
    std::vector<double> next = std::vector<double>(kSymbols, 0.0);
    double total = 0.0;
    int distinct = 0;
  };
  Eigen::VectorXd level(std::string_view history) const;

  int order_;
  double discount_;
  std::map<std::string, Counts, std::less<>> table_;  // history (symbol chars) -> counts
};

}  // namespace ctxem
