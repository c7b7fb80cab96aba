#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace cohnet {

// --- string / CSV helpers -------------------------------------------------

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& line, char sep = ',');

// Strict numeric parsing: the whole token must be consumed. `context` goes
// into the error message.
double parse_double(const std::string& tok, const std::string& context);
long long parse_int(const std::string& tok, const std::string& context);
bool parse_bool01(const std::string& tok, const std::string& context);

// Shortest round-trip formatting for feature/score CSVs.
std::string format_full(double x);
// Fixed-precision formatting for report tables.
std::string format_fixed(double x, int digits);

// --- statistics helpers ---------------------------------------------------

// Population convention (divide by n) is used across the repo.
double population_std(const Eigen::VectorXd& x);

// --- parallel helper ------------------------------------------------------

// Runs fn(i) for i in [0, n) on `threads` workers (0 = hardware default).
// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int threads = 0);

}  // namespace cohnet
