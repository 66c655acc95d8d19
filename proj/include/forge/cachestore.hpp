#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forge/fakes.hpp"  // fnv1a64
#include "forge/textseg.hpp"

namespace forge {

enum class CacheNamespace { engine, page, snippet, browse };

inline constexpr std::array<CacheNamespace, 4> kAllCacheNamespaces = {
    CacheNamespace::engine, CacheNamespace::page, CacheNamespace::snippet,
    CacheNamespace::browse};

inline std::string to_string(CacheNamespace ns) {
    switch (ns) {
        case CacheNamespace::engine: return "engine";
        case CacheNamespace::page: return "page";
        case CacheNamespace::snippet: return "snippet";
        case CacheNamespace::browse: return "browse";
    }
    return "unknown";
}

/// Trim plus collapse of internal whitespace. Case is preserved because the
/// cached requests carry model-generated queries where case can matter.
inline std::string normalize_key_part(std::string_view part) {
    return normalize_whitespace(part);
}

struct CacheKey {
    CacheNamespace ns;
    std::string digest;

    bool operator==(const CacheKey& other) const {
        return ns == other.ns && digest == other.digest;
    }
    bool operator<(const CacheKey& other) const {
        if (ns != other.ns) return ns < other.ns;
        return digest < other.digest;
    }
};

/// Builds a key from the request tuple. Parts are normalized individually and
/// joined with an unprintable separator before hashing, so ("ab","c") and
/// ("a","bc") never collide by concatenation.
inline CacheKey make_cache_key(CacheNamespace ns, const std::vector<std::string>& parts) {
    std::string joined;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) joined.push_back('\x1f');
        joined += normalize_key_part(parts[i]);
    }
    std::uint64_t h = fnv1a64(joined);
    static const char* hex = "0123456789abcdef";
    std::string digest(16, '0');
    for (int i = 15; i >= 0; --i) {
        digest[static_cast<std::size_t>(i)] = hex[h & 0xf];
        h >>= 4;
    }
    return {ns, digest};
}

struct CacheStats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t puts = 0;
    std::map<std::string, std::uint64_t> hits_by_namespace;
    std::map<std::string, std::uint64_t> misses_by_namespace;

    std::uint64_t lookups() const { return hits + misses; }
    double hit_rate() const {
        auto total = lookups();
        return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
    }
};

/// Storage behind the cache. Implementations must be safe for concurrent
/// get/put; the store layers stats on top.
class KvBackend {
  public:
    virtual ~KvBackend() = default;
    virtual std::optional<std::string> get(const CacheKey& key) = 0;
    virtual void put(const CacheKey& key, std::string value) = 0;
};

/// Mutex-guarded map backend. With max_entries == 0 nothing is ever evicted;
/// otherwise least-recently-used entries are dropped once the cap is hit.
class InMemoryKv : public KvBackend {
  public:
    explicit InMemoryKv(std::size_t max_entries = 0) : max_entries_(max_entries) {}

    std::optional<std::string> get(const CacheKey& key) override {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        if (max_entries_ > 0) lru_.splice(lru_.begin(), lru_, it->second.order);
        return it->second.value;
    }

    void put(const CacheKey& key, std::string value) override {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = entries_.find(key);
        if (it != entries_.end()) {
            it->second.value = std::move(value);
            if (max_entries_ > 0) lru_.splice(lru_.begin(), lru_, it->second.order);
            return;
        }
        Entry e;
        e.value = std::move(value);
        if (max_entries_ > 0) {
            lru_.push_front(key);
            e.order = lru_.begin();
        }
        entries_.emplace(key, std::move(e));
        if (max_entries_ > 0 && entries_.size() > max_entries_) {
            entries_.erase(lru_.back());
            lru_.pop_back();
        }
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return entries_.size();
    }

  private:
    struct Entry {
        std::string value;
        std::list<CacheKey>::iterator order;
    };

    mutable std::mutex mu_;
    std::size_t max_entries_;
    std::map<CacheKey, Entry> entries_;
    std::list<CacheKey> lru_;
};

/// Namespaced cache with hit/miss accounting. All intermediate tool results
/// (engine result lists, crawled pages, snippets, browse documents) go
/// through one of these, which is what makes grouped rollouts cheap: peers in
/// a group re-issue mostly identical requests.
class CacheStore {
  public:
    explicit CacheStore(std::shared_ptr<KvBackend> backend = nullptr)
        : backend_(backend ? std::move(backend) : std::make_shared<InMemoryKv>()) {}

    std::optional<std::string> get(const CacheKey& key) {
        auto value = backend_->get(key);
        std::size_t ns = static_cast<std::size_t>(key.ns);
        if (value) {
            hits_.fetch_add(1, std::memory_order_relaxed);
            ns_hits_[ns].fetch_add(1, std::memory_order_relaxed);
        } else {
            misses_.fetch_add(1, std::memory_order_relaxed);
            ns_misses_[ns].fetch_add(1, std::memory_order_relaxed);
        }
        return value;
    }

    void put(const CacheKey& key, std::string value) {
        puts_.fetch_add(1, std::memory_order_relaxed);
        backend_->put(key, std::move(value));
    }

    /// Fetches through the cache: on a miss, computes, stores, and returns
    /// the fresh value. `compute` returning nullopt is passed through without
    /// caching, so failures are retried on the next lookup.
    template <typename Compute>
    std::optional<std::string> get_or_compute(const CacheKey& key, Compute&& compute) {
        if (auto cached = get(key)) return cached;
        std::optional<std::string> fresh = compute();
        if (fresh) put(key, *fresh);
        return fresh;
    }

    CacheStats stats() const {
        CacheStats s;
        s.hits = hits_.load(std::memory_order_relaxed);
        s.misses = misses_.load(std::memory_order_relaxed);
        s.puts = puts_.load(std::memory_order_relaxed);
        for (auto ns : kAllCacheNamespaces) {
            std::size_t i = static_cast<std::size_t>(ns);
            s.hits_by_namespace[to_string(ns)] = ns_hits_[i].load(std::memory_order_relaxed);
            s.misses_by_namespace[to_string(ns)] = ns_misses_[i].load(std::memory_order_relaxed);
        }
        return s;
    }

    void reset_stats() {
        hits_ = 0;
        misses_ = 0;
        puts_ = 0;
        for (auto& c : ns_hits_) c = 0;
        for (auto& c : ns_misses_) c = 0;
    }

  private:
    std::shared_ptr<KvBackend> backend_;
    std::atomic<std::uint64_t> hits_{0};
    std::atomic<std::uint64_t> misses_{0};
    std::atomic<std::uint64_t> puts_{0};
    std::array<std::atomic<std::uint64_t>, 4> ns_hits_{};
    std::array<std::atomic<std::uint64_t>, 4> ns_misses_{};
};

}  // namespace forge
