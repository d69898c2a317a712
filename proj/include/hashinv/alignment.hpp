#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hashinv/bitcode.hpp"

// Optimal assignment between estimated and true code sets, plus the
// retrieval-quality metric used to compare center estimates.

namespace hashinv {

struct HungarianResult {
  std::vector<int> assignment;  // row i -> column assignment[i]
  double total = 0.0;
};

// Minimum-cost perfect matching on a square cost matrix, O(n^3). Among all
// optimal assignments returns the lexicographically smallest permutation
// (row 0 gets its smallest feasible column, then row 1, ...).
HungarianResult hungarian_match(const std::vector<std::vector<double>>& cost);

struct AlignmentReport {
  std::vector<int> permutation;           // estimated i matched to truth perm[i]
  std::vector<std::uint32_t> per_center;  // hamming distance per estimated center
  double mean_distance = 0.0;
  int exact_matches = 0;
  std::map<std::uint32_t, int> histogram;  // distance -> count
};

AlignmentReport align_centers(const CodeMatrix& estimated, const CodeMatrix& truth);

nlohmann::json alignment_to_json(const AlignmentReport& r);
// CSV with header "center,matched,distance" one row per estimated center.
std::string alignment_to_csv(const AlignmentReport& r);

// Mean average precision of retrieving same-label database codes by Hamming
// distance (ascending, ties broken by database index). Queries with no
// relevant database entries contribute AP = 0.
double compute_map(const CodeMatrix& queries, const std::vector<int>& query_labels,
                   const CodeMatrix& database, const std::vector<int>& db_labels);

}  // namespace hashinv
