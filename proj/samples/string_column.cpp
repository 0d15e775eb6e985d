// Compresses a sorted string column.
#include <algorithm>
#include <iostream>
#include <string>
#include <vector>

#include "leco/leco.hpp"

int main() {
  std::vector<std::string> words;
  for (int i = 0; i < 2000; ++i) words.push_back("user" + std::to_string(100000 + i * 7));
  std::sort(words.begin(), words.end());

  const auto col = leco::StringColumn::encode(words);
  size_t raw = 0;
  for (const auto& w : words) raw += w.size();
  std::cout << words.size() << " strings, " << raw << " raw bytes, " << col.bytes().size() << " compressed bytes\n";
  std::cout << "word[777] = " << col.at(777) << '\n';
  return col.decode_all() == words ? 0 : 1;
}
