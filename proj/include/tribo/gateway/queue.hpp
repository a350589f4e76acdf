#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>

namespace tribo::gw {

/// Bounded multi-producer queue. push() either evicts the oldest item or
/// refuses when full, depending on the call.
template <typename T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

    /// Returns false (and drops nothing) when full or closed.
    bool try_push(T item) {
        {
            std::lock_guard lock(m_);
            if (closed_ || items_.size() >= capacity_) return false;
            items_.push_back(std::move(item));
        }
        cv_.notify_one();
        return true;
    }

    /// Always enqueues; returns true when an older item was evicted.
    bool push_drop_oldest(T item) {
        bool evicted = false;
        {
            std::lock_guard lock(m_);
            if (closed_) return false;
            if (items_.size() >= capacity_) {
                items_.pop_front();
                evicted = true;
            }
            items_.push_back(std::move(item));
        }
        cv_.notify_one();
        return evicted;
    }

    /// Waits up to `timeout`; nullopt on timeout or when closed and drained.
    std::optional<T> pop_for(std::chrono::milliseconds timeout) {
        std::unique_lock lock(m_);
        cv_.wait_for(lock, timeout, [&] { return closed_ || !items_.empty(); });
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        return item;
    }

    void close() {
        {
            std::lock_guard lock(m_);
            closed_ = true;
        }
        cv_.notify_all();
    }

    bool closed() const {
        std::lock_guard lock(m_);
        return closed_;
    }

    std::size_t size() const {
        std::lock_guard lock(m_);
        return items_.size();
    }

private:
    std::size_t capacity_;
    mutable std::mutex m_;
    std::condition_variable cv_;
    std::deque<T> items_;
    bool closed_ = false;
};

}  // namespace tribo::gw
