#pragma once

// In-process stand-in for a MapReduce shuffle: mappers emit (key, value)
// pairs, reducers see each key's values in emission order.

#include <cstdint>
#include <map>
#include <vector>

namespace ssq {

template <class Key, class Value>
class Shuffle {
 public:
  void emit(const Key& key, Value value) {
    groups_[key].push_back(std::move(value));
    ++pairs_;
  }

  template <class Reduce>
  void reduce(Reduce&& fn) const {
    for (const auto& [key, values] : groups_) fn(key, values);
  }

  uint64_t pairs() const { return pairs_; }
  size_t keys() const { return groups_.size(); }

 private:
  std::map<Key, std::vector<Value>> groups_;
  uint64_t pairs_ = 0;
};

}  // namespace ssq
