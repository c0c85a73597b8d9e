#pragma once

#include <cstddef>
#include <functional>
#include <list>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mo {

// Capacity-bounded map that evicts the least recently used entry. Not
// thread-safe; the owner serializes access.
template <typename K, typename V, typename Hash = std::hash<K>>
class LruCache {
public:
    explicit LruCache(std::size_t capacity) : capacity_(capacity) {}

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return map_.size(); }
    bool contains(const K& key) const { return map_.contains(key); }

    // Marks the entry most recently used. Returns nullptr on a miss.
    V* get(const K& key) {
        auto it = map_.find(key);
        if (it == map_.end()) return nullptr;
        order_.splice(order_.begin(), order_, it->second);
        return &it->second->second;
    }

    // Looks without touching recency.
    const V* peek(const K& key) const {
        auto it = map_.find(key);
        return it == map_.end() ? nullptr : &it->second->second;
    }

    // Inserts or replaces, making the entry most recently used. Returns the
    // entries evicted to make room, oldest first.
    std::vector<std::pair<K, V>> put(const K& key, V value) {
        std::vector<std::pair<K, V>> evicted;
        if (auto it = map_.find(key); it != map_.end()) {
            it->second->second = std::move(value);
            order_.splice(order_.begin(), order_, it->second);
            return evicted;
        }
        order_.emplace_front(key, std::move(value));
        map_.emplace(key, order_.begin());
        while (map_.size() > capacity_) {
            auto& last = order_.back();
            map_.erase(last.first);
            evicted.push_back(std::move(last));
            order_.pop_back();
        }
        return evicted;
    }

    bool erase(const K& key) {
        auto it = map_.find(key);
        if (it == map_.end()) return false;
        order_.erase(it->second);
        map_.erase(it);
        return true;
    }

    // Keys from most to least recently used.
    std::vector<K> keys() const {
        std::vector<K> out;
        out.reserve(order_.size());
        for (const auto& [k, v] : order_) out.push_back(k);
        return out;
    }

private:
    using Node = std::pair<K, V>;
    std::size_t capacity_;
    std::list<Node> order_;
    std::unordered_map<K, typename std::list<Node>::iterator, Hash> map_;
};

} // namespace mo
