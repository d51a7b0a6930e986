#pragma once

#include <any>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace prevent::bt {

/// Shared key/value state for the behaviors of one tree. Writes are visible to
/// every node visited after the write, in the same tick and later ones.
class Blackboard {
 public:
  template <class T>
  void set(std::string key, T value) {
    entries_[std::move(key)] = std::move(value);
  }

  template <class T>
  const T* find(std::string_view key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    return std::any_cast<T>(&it->second);
  }

  template <class T>
  T* find_mut(std::string_view key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    return std::any_cast<T>(&it->second);
  }

  template <class T>
  const T& get(std::string_view key) const {
    if (const T* v = find<T>(key)) return *v;
    throw std::out_of_range("blackboard: missing or mistyped key '" + std::string(key) + "'");
  }

  template <class T>
  T value_or(std::string_view key, T fallback) const {
    if (const T* v = find<T>(key)) return *v;
    return fallback;
  }

  bool contains(std::string_view key) const { return entries_.find(key) != entries_.end(); }
  void erase(std::string_view key) {
    auto it = entries_.find(key);
    if (it != entries_.end()) entries_.erase(it);
  }
  void clear() { entries_.clear(); }

  std::uint64_t tick_count() const { return ticks_; }
  /// Simulated time in seconds; owned by the caller's clock.
  double now() const { return now_; }
  void set_now(double t) { now_ = t; }

  /// Called once by the engine at the start of every tick.
  void advance_tick() { ++ticks_; }

 private:
  std::map<std::string, std::any, std::less<>> entries_;
  std::uint64_t ticks_ = 0;
  double now_ = 0.0;
};

}  // namespace prevent::bt
