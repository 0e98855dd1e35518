#include "deepresearch/util.hpp"

#include <atomic>
#include <cctype>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "deepresearch/errors.hpp"

namespace deepresearch {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::config: return "config";
        case ErrorCode::transport: return "transport";
        case ErrorCode::protocol: return "protocol";
        case ErrorCode::format: return "format";
        case ErrorCode::capacity: return "capacity";
        case ErrorCode::io: return "io";
        case ErrorCode::runtime: return "runtime";
    }
    return "unknown";
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> tokenize_words(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            cur.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a') : ch);
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

namespace {

bool is_utf8_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

} // namespace

std::string truncate_chars(std::string_view s, std::size_t max_chars) {
    std::size_t chars = 0;
    std::size_t i = 0;
    while (i < s.size() && chars < max_chars) {
        ++i;
        while (i < s.size() && is_utf8_continuation(static_cast<unsigned char>(s[i]))) ++i;
        ++chars;
    }
    return std::string(s.substr(0, i));
}

std::size_t count_chars(std::string_view s) {
    std::size_t chars = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!is_utf8_continuation(static_cast<unsigned char>(s[i]))) ++chars;
    }
    return chars;
}

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        char c = tmpl[i];
        if (c == '{') {
            if (i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
                out.push_back('{');
                ++i;
                continue;
            }
            std::size_t close = tmpl.find('}', i + 1);
            if (close == std::string_view::npos) {
                throw Error(ErrorCode::invalid_argument, "template: unmatched '{'");
            }
            std::string name(tmpl.substr(i + 1, close - i - 1));
            auto it = values.find(name);
            if (it == values.end()) {
                throw Error(ErrorCode::invalid_argument,
                            "template: no value for placeholder '" + name + "'");
            }
            out += it->second;
            i = close;
        } else if (c == '}') {
            if (i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
                out.push_back('}');
                ++i;
                continue;
            }
            throw Error(ErrorCode::invalid_argument, "template: unmatched '}'");
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    if (n == 0) throw Error(ErrorCode::invalid_argument, "uniform_index: n must be > 0");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return static_cast<std::size_t>(v % n);
}

std::vector<std::size_t> sample_without_replacement(std::mt19937_64& rng,
                                                    std::size_t n,
                                                    std::size_t k) {
    if (k > n) k = n;
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + uniform_index(rng, n - i);
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write file: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::io, "write failed: " + path);
}

std::vector<std::string> list_files_sorted(const std::string& dir,
                                           std::string_view extension) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw Error(ErrorCode::io, "not a directory: " + dir);
    }
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (!extension.empty() && entry.path().extension() != extension) continue;
        files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t nthreads =
        std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    if (nthreads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> threads;
    threads.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        threads.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct Semaphore::Impl {
    std::mutex m;
    std::condition_variable cv;
    int count;
};

Semaphore::Semaphore(int count) : impl_(std::make_shared<Impl>()) {
    impl_->count = count;
}

void Semaphore::acquire() {
    std::unique_lock<std::mutex> lock(impl_->m);
    impl_->cv.wait(lock, [&] { return impl_->count > 0; });
    --impl_->count;
}

void Semaphore::release() {
    {
        std::lock_guard<std::mutex> lock(impl_->m);
        ++impl_->count;
    }
    impl_->cv.notify_one();
}

namespace {

std::mutex g_warn_mutex;
std::function<void(const std::string&)> g_warn_sink;

} // namespace

void warn(const std::string& message) {
    std::lock_guard<std::mutex> lock(g_warn_mutex);
    if (g_warn_sink) {
        g_warn_sink(message);
    } else {
        std::cerr << "[warn] " << message << "\n";
    }
}

void set_warning_sink(std::function<void(const std::string&)> sink) {
    std::lock_guard<std::mutex> lock(g_warn_mutex);
    g_warn_sink = std::move(sink);
}

} // namespace deepresearch
