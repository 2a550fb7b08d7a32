// Copyright 2026 The pwavec Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PWAVEC_COMMON_HPP_
#define PWAVEC_COMMON_HPP_

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pwavec {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent caller-supplied configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Corrupt, truncated or mismatched bitstream / container data.
class DecodeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

inline void Require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

inline void RequireDecode(bool cond, const std::string& msg) {
  if (!cond) throw DecodeError(msg);
}

// ---------------------------------------------------------------------------
// Threading. Work is split into index ranges with a fixed deterministic
// partition; every task writes a disjoint slice of the output, so the result
// does not depend on the number of workers.

inline int ThreadCountFromEnv() {
  const char* env = std::getenv("PWAVEC_THREADS");
  if (env != nullptr) {
    int n = std::atoi(env);
    if (n >= 1) return std::min(n, 64);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(std::min(hw, 64u));
}

class ThreadPool {
 public:
  static ThreadPool& Instance() {
    static ThreadPool pool(ThreadCountFromEnv());
    return pool;
  }

  int num_threads() const { return num_threads_; }

  // Runs fn(begin, end) over a static partition of [0, n).
  void ParallelFor(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
    if (n <= 0) return;
    int slices = static_cast<int>(std::min<int64_t>(n, num_threads_));
    if (slices <= 1) {
      fn(0, n);
      return;
    }
    std::unique_lock<std::mutex> guard(run_mutex_);
    pending_.store(slices - 1, std::memory_order_relaxed);
    int64_t chunk = (n + slices - 1) / slices;
    {
      std::lock_guard<std::mutex> lock(queue_mutex_);
      for (int s = 1; s < slices; ++s) {
        int64_t begin = s * chunk;
        int64_t end = std::min<int64_t>(n, begin + chunk);
        queue_.emplace_back([&fn, begin, end] { fn(begin, end); });
      }
    }
    queue_cv_.notify_all();
    fn(0, std::min<int64_t>(n, chunk));
    std::unique_lock<std::mutex> lock(done_mutex_);
    done_cv_.wait(lock, [this] {
      return pending_.load(std::memory_order_acquire) == 0;
    });
  }

  ~ThreadPool() {
    {
      std::lock_guard<std::mutex> lock(queue_mutex_);
      stop_ = true;
    }
    queue_cv_.notify_all();
    for (auto& t : workers_) t.join();
  }

 private:
  explicit ThreadPool(int num_threads) : num_threads_(num_threads) {
    for (int i = 1; i < num_threads_; ++i) {
      workers_.emplace_back([this] { WorkerLoop(); });
    }
  }

  void WorkerLoop() {
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock<std::mutex> lock(queue_mutex_);
        queue_cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
        if (stop_ && queue_.empty()) return;
        task = std::move(queue_.back());
        queue_.pop_back();
      }
      task();
      if (pending_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
        std::lock_guard<std::mutex> lock(done_mutex_);
        done_cv_.notify_all();
      }
    }
  }

  int num_threads_;
  std::vector<std::thread> workers_;
  std::vector<std::function<void()>> queue_;
  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::mutex run_mutex_;
  std::mutex done_mutex_;
  std::condition_variable done_cv_;
  std::atomic<int> pending_{0};
  bool stop_ = false;
};

inline void ParallelFor(int64_t n,
                        const std::function<void(int64_t, int64_t)>& fn) {
  ThreadPool::Instance().ParallelFor(n, fn);
}

// ---------------------------------------------------------------------------
// Little-endian byte stream helpers shared by all container formats.

class ByteWriter {
 public:
  void U8(uint8_t v) { bytes_.push_back(v); }
  void U16(uint16_t v) {
    for (int i = 0; i < 2; ++i) bytes_.push_back(uint8_t(v >> (8 * i)));
  }
  void U32(uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(uint8_t(v >> (8 * i)));
  }
  void U64(uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(uint8_t(v >> (8 * i)));
  }
  void F64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    U64(bits);
  }
  void Bytes(const uint8_t* data, size_t n) {
    bytes_.insert(bytes_.end(), data, data + n);
  }
  void Bytes(const std::vector<uint8_t>& data) {
    Bytes(data.data(), data.size());
  }
  void String(const std::string& s) {
    Require(s.size() <= 0xFFFF, "string too long for container");
    U16(static_cast<uint16_t>(s.size()));
    Bytes(reinterpret_cast<const uint8_t*>(s.data()), s.size());
  }

  const std::vector<uint8_t>& data() const { return bytes_; }
  std::vector<uint8_t> Take() { return std::move(bytes_); }

 private:
  std::vector<uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}
  explicit ByteReader(const std::vector<uint8_t>& data)
      : ByteReader(data.data(), data.size()) {}

  uint8_t U8() {
    Need(1);
    return data_[pos_++];
  }
  uint16_t U16() {
    Need(2);
    uint16_t v = uint16_t(data_[pos_]) | uint16_t(data_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
  }
  uint32_t U32() {
    Need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t U64() {
    Need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double F64() {
    uint64_t bits = U64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  std::vector<uint8_t> Bytes(size_t n) {
    Need(n);
    std::vector<uint8_t> out(data_ + pos_, data_ + pos_ + n);
    pos_ += n;
    return out;
  }
  std::string String() {
    uint16_t n = U16();
    Need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }

  size_t pos() const { return pos_; }
  size_t remaining() const { return size_ - pos_; }

 private:
  void Need(size_t n) {
    RequireDecode(pos_ + n <= size_, "truncated stream");
  }
  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
};

inline uint64_t Fnv1a64(const uint8_t* data, size_t n) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t Fnv1a64(const std::vector<uint8_t>& data) {
  return Fnv1a64(data.data(), data.size());
}

}  // namespace pwavec

#endif  // PWAVEC_COMMON_HPP_
