#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "sketchreg/cli/cli.hpp"
#include "sketchreg/cli/manifest.hpp"
#include "sketchreg/error.hpp"

namespace sketchreg::cli {
namespace {

struct Block {
  std::uint64_t first_row = 0;
  DenseMatrix rows;
};

class BlockQueue {
 public:
  void push(Block b) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return items_.size() < kCapacity; });
    items_.push_back(std::move(b));
    not_empty_.notify_one();
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_empty_.notify_all();
  }

  bool pop(Block& out) {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return false;
    out = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return true;
  }

 private:
  static constexpr std::size_t kCapacity = 2;
  std::mutex mutex_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::deque<Block> items_;
  bool closed_ = false;
};

SketchBuilder make_builder(const SketchJob& job) {
  return SketchBuilder(job.method, job.d_total, job.k, job.n_hint, job.seed, job.options);
}

class BlockReader {
 public:
  BlockReader(RowStream& rows, std::uint64_t d_total, std::uint64_t first_row)
      : rows_(rows), d_total_(d_total), next_row_(first_row) {}

  bool read(Block& b) {
    const auto d = static_cast<Eigen::Index>(d_total_);
    b.first_row = next_row_;
    b.rows.resize(static_cast<Eigen::Index>(kStreamBlockRows), d);
    Eigen::Index filled = 0;
    while (filled < static_cast<Eigen::Index>(kStreamBlockRows) && rows_.next(row_)) {
      std::copy(row_.begin(), row_.end(), b.rows.row(filled).data());
      ++filled;
    }
    if (filled < static_cast<Eigen::Index>(kStreamBlockRows)) b.rows.conservativeResize(filled, d);
    next_row_ += static_cast<std::uint64_t>(filled);
    return filled > 0;
  }

 private:
  RowStream& rows_;
  std::uint64_t d_total_;
  std::vector<double> row_;
  std::uint64_t next_row_;
};

}  // namespace

unsigned thread_cap() {
  const char* env = std::getenv("SKETCHREG_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024) {
    throw ContractError(std::string("SKETCHREG_THREADS must be an integer in [1, 1024], got '") +
                        env + "'");
  }
  return static_cast<unsigned>(v);
}

SketchBuilder sketch_rows(RowStream& rows, const SketchJob& job, unsigned threads,
                          StreamTimings& timings) {
  if (rows.d_total() != job.d_total) {
    throw ContractError("stream has " + std::to_string(rows.d_total()) + " columns, sketch expects " +
                        std::to_string(job.d_total));
  }
  threads = std::max(1u, threads);
  BlockReader reader(rows, job.d_total, job.row_offset);
  Block block;

  if (threads == 1) {
    SketchBuilder builder = make_builder(job);
    while (true) {
      Stopwatch read;
      const bool more = reader.read(block);
      timings.read_ms += read.elapsed_ms();
      if (!more) break;
      Stopwatch push;
      builder.push_rows(block.first_row, block.rows);
      timings.sketch_ms += push.elapsed_ms();
    }
    Stopwatch push;
    builder.flush();
    timings.sketch_ms += push.elapsed_ms();
    return builder;
  }

  std::vector<SketchBuilder> builders;
  builders.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) builders.push_back(make_builder(job));
  std::vector<BlockQueue> queues(threads);
  std::vector<double> busy_ms(threads, 0.0);
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> workers;
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      Block b;
      while (queues[t].pop(b)) {
        if (errors[t]) continue;  // keep draining so the reader never blocks
        try {
          Stopwatch push;
          builders[t].push_rows(b.first_row, b.rows);
          busy_ms[t] += push.elapsed_ms();
        } catch (...) {
          errors[t] = std::current_exception();
        }
      }
      try {
        Stopwatch push;
        builders[t].flush();
        busy_ms[t] += push.elapsed_ms();
      } catch (...) {
        if (!errors[t]) errors[t] = std::current_exception();
      }
    });
  }

  std::exception_ptr read_error;
  try {
    for (std::uint64_t b = 0;; ++b) {
      Stopwatch read;
      const bool more = reader.read(block);
      timings.read_ms += read.elapsed_ms();
      if (!more) break;
      queues[b % threads].push(std::move(block));
      block = Block{};
    }
  } catch (...) {
    read_error = std::current_exception();
  }
  for (auto& q : queues) q.close();
  for (auto& w : workers) w.join();
  if (read_error) std::rethrow_exception(read_error);
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  timings.sketch_ms += *std::max_element(busy_ms.begin(), busy_ms.end());

  SketchBuilder result = std::move(builders[0]);
  for (unsigned t = 1; t < threads; ++t) result = merge(result, builders[t]);
  return result;
}

std::uint64_t resolve_k(SketchMethod method, std::uint64_t d_total, bool intercept,
                        std::optional<double> epsilon, std::optional<std::uint64_t> k,
                        double alpha, bool alpha_strict) {
  if (method == SketchMethod::Gram) {
    if (d_total < 2) throw ContractError("input needs at least one variable and a response");
    return d_total - 1;
  }
  if (epsilon && k) throw ContractError("--epsilon and --k are mutually exclusive");
  if (!epsilon && !k) throw ContractError("one of --epsilon or --k is required");
  if (k) {
    if (*k == 0) throw ContractError("--k must be positive");
    return *k;
  }
  const std::uint64_t reserved = (method == SketchMethod::Cw) ? 1 + (intercept ? 1 : 0) : 0;
  if (d_total <= reserved) throw ContractError("input has no variable columns to size the sketch on");
  return target_dimension(method, d_total - reserved, *epsilon, alpha, alpha_strict);
}

double time_sketch_ms(const SketchJob& job, const DenseMatrix& data, int repeats) {
  double best = 0.0;
  for (int r = 0; r < std::max(1, repeats); ++r) {
    Stopwatch clock;
    SketchBuilder builder = make_builder(job);
    builder.push_rows(0, data);
    builder.flush();
    const double ms = clock.elapsed_ms();
    if (r == 0 || ms < best) best = ms;
  }
  return best;
}

}  // namespace sketchreg::cli
