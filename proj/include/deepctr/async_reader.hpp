#pragma once

#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <variant>

#include "deepctr/dataio.hpp"

namespace deepctr {

// Bounded FIFO between exactly one producer and one consumer.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("queue capacity must be >= 1");
  }

  // Returns false if the queue was closed before the item could be enqueued.
  bool push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [this] { return items_.size() < capacity_ || closed_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  // Empty optional means the stream is finished (or the queue was closed).
  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [this] { return !items_.empty() || finished_ || closed_; });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  // Producer signals normal end of stream.
  void finish() {
    std::lock_guard lock(mu_);
    finished_ = true;
    not_empty_.notify_all();
  }

  // Consumer cancels; unblocks a producer stuck on a full queue.
  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  std::size_t capacity_;
  bool finished_ = false;
  bool closed_ = false;
};

// Decouples batch reading from model updating: a reader thread drains the
// source into a bounded queue while the consumer pops from it. The output
// sequence is identical to a synchronous read of the same source; producer
// errors are forwarded in order; destroying the reader early stops the
// producer without deadlock.
class AsyncBatchReader : public BatchSource {
 public:
  AsyncBatchReader(BatchSource& source, std::size_t queue_capacity)
      : queue_(queue_capacity), producer_([this, &source] { produce(source); }) {}

  ~AsyncBatchReader() override {
    queue_.close();
    if (producer_.joinable()) producer_.join();
  }

  AsyncBatchReader(const AsyncBatchReader&) = delete;
  AsyncBatchReader& operator=(const AsyncBatchReader&) = delete;

  std::optional<Batch> next() override {
    auto item = queue_.pop();
    if (!item) return std::nullopt;
    if (std::holds_alternative<std::exception_ptr>(*item)) {
      std::rethrow_exception(std::get<std::exception_ptr>(*item));
    }
    return std::get<Batch>(std::move(*item));
  }

 private:
  using Item = std::variant<Batch, std::exception_ptr>;

  void produce(BatchSource& source) {
    try {
      while (auto batch = source.next()) {
        if (!queue_.push(Item(std::move(*batch)))) return;  // consumer cancelled
      }
    } catch (...) {
      queue_.push(Item(std::current_exception()));
    }
    queue_.finish();
  }

  BoundedQueue<Item> queue_;
  std::thread producer_;
};

}  // namespace deepctr
