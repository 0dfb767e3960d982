#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace qweblab {

// Finite per-environment token table. Id 0 is the shared unknown-token row.
class Vocab {
 public:
  Vocab() { tokens_.push_back("<unk>"); }

  explicit Vocab(const std::vector<std::string>& tokens) : Vocab() {
    for (const std::string& t : tokens) {
      if (index_.count(t)) continue;
      index_.emplace(t, static_cast<int>(tokens_.size()));
      tokens_.push_back(t);
    }
  }

  int id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? 0 : it->second;
  }

  const std::string& token(int id) const { return tokens_.at(id); }
  int size() const { return static_cast<int>(tokens_.size()); }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace qweblab
