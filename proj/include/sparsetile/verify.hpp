#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sparsetile/chain.hpp"
#include "sparsetile/executor.hpp"
#include "sparsetile/inspector.hpp"

namespace sparsetile {

/// Every checker returns human-readable violations; empty means it holds.

/// For each loop the tiles' iteration lists are disjoint, ascending and
/// cover the whole iteration space; non-exec elements only sit in T_ne.
std::vector<std::string> check_partition(const Schedule& schedule, const LoopChain& chain);

/// No boundary or non-exec iteration in a core tile, and
/// core colors < boundary colors < color(T_ne).
std::vector<std::string> check_regions(const Schedule& schedule, const LoopChain& chain);

/// Distinct tiles of equal color never touch a common element of any space
/// through any descriptor of any loop.
std::vector<std::string> check_conflict_free(const Schedule& schedule, const LoopChain& chain);

struct ValueMismatch {
  std::string dataset;
  std::string space;
  std::size_t element = 0;
  double expected = 0;
  double actual = 0;
};

struct CompareOptions {
  /// 0 compares bitwise; otherwise relative tolerance.
  double tolerance = 0;
  std::size_t max_reported = 10;
};

/// Compares the named datasets (all of `expected` when `names` is empty).
/// Also counts the total number of mismatches.
std::vector<ValueMismatch> compare_datasets(const Datasets& expected, const Datasets& actual,
                                            const std::vector<std::string>& names = {},
                                            const CompareOptions& options = {}, std::size_t* total = nullptr);

std::string format_mismatches(const std::vector<ValueMismatch>& mismatches, std::size_t total);

/// Test hook: in the last loop, moves the first iteration of the
/// highest-colored executable tile into the lowest-colored one, breaking
/// legality. Returns false when fewer than two executable tiles have work.
bool corrupt_schedule(Schedule& schedule, const LoopChain& chain);

} // namespace sparsetile
