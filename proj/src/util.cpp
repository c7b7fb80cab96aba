#include "cohnet/util.hpp"

#include <atomic>
#include <cctype>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "cohnet/errors.hpp"

namespace cohnet {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& tok, const std::string& context) {
  const std::string t = trim(tok);
  try {
    std::size_t consumed = 0;
    double v = std::stod(t, &consumed);
    if (consumed != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(context + ": not a number: '" + tok + "'");
  }
}

long long parse_int(const std::string& tok, const std::string& context) {
  const std::string t = trim(tok);
  try {
    std::size_t consumed = 0;
    long long v = std::stoll(t, &consumed);
    if (consumed != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(context + ": not an integer: '" + tok + "'");
  }
}

bool parse_bool01(const std::string& tok, const std::string& context) {
  const std::string t = trim(tok);
  if (t == "0") return false;
  if (t == "1") return true;
  throw ValidationError(context + ": expected 0 or 1, got '" + tok + "'");
}

std::string format_full(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string format_fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

double population_std(const Eigen::VectorXd& x) {
  if (x.size() == 0) return 0.0;
  const double mean = x.mean();
  return std::sqrt((x.array() - mean).square().mean());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int threads) {
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_workers = static_cast<int>(std::min<std::size_t>(threads, n));
  pool.reserve(n_workers);
  for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace cohnet
