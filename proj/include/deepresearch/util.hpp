#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace deepresearch {

// --- strings ---------------------------------------------------------------

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> tokenize_words(std::string_view s);

// Truncates to at most `max_chars` Unicode code points, never splitting a
// UTF-8 sequence. Invalid bytes count as one character each.
std::string truncate_chars(std::string_view s, std::size_t max_chars);

std::size_t count_chars(std::string_view s);

// Python str.format-like substitution: {name} -> values.at(name),
// {{ and }} are literal braces. Unknown names and stray braces are errors.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& values);

// --- hashing / ids ----------------------------------------------------------

std::uint64_t fnv1a64(std::string_view data);
std::string to_hex(std::uint64_t v);

// --- deterministic sampling ---------------------------------------------------

// Uniform integer in [0, n) by rejection sampling; mt19937_64 output is fully
// specified by the standard, so results are identical across platforms.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

// k distinct indices from [0, n), in selection order.
std::vector<std::size_t> sample_without_replacement(std::mt19937_64& rng,
                                                    std::size_t n,
                                                    std::size_t k);

// --- filesystem --------------------------------------------------------------

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);
std::vector<std::string> list_files_sorted(const std::string& dir,
                                           std::string_view extension);

// --- concurrency ---------------------------------------------------------------

// Runs fn(0..n-1) on up to `workers` threads. The first exception thrown by
// any worker is rethrown on the calling thread after all workers finish.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

class Semaphore {
public:
    explicit Semaphore(int count);
    void acquire();
    void release();

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

class SemaphoreGuard {
public:
    explicit SemaphoreGuard(Semaphore& s) : s_(s) { s_.acquire(); }
    ~SemaphoreGuard() { s_.release(); }
    SemaphoreGuard(const SemaphoreGuard&) = delete;
    SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

private:
    Semaphore& s_;
};

// --- logging ---------------------------------------------------------------

// Warnings go to stderr unless a sink is installed (tests capture them).
void warn(const std::string& message);
void set_warning_sink(std::function<void(const std::string&)> sink);

} // namespace deepresearch
