#include "hashinv/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hashinv/errors.hpp"

namespace hashinv {

namespace {

// Shortest-augmenting-path assignment (Jonker–Volgenant style potentials).
// Returns column->row matching plus the dual potentials, which certify
// optimality: every optimal assignment uses only edges with zero reduced cost.
struct JvState {
  std::vector<int> col_row;  // 1-based: col j matched to row col_row[j]
  std::vector<double> u, v;  // potentials, 1-based
};

JvState jv_solve(const std::vector<std::vector<double>>& a, int n) {
  const double inf = std::numeric_limits<double>::infinity();
  JvState st;
  st.u.assign(n + 1, 0.0);
  st.v.assign(n + 1, 0.0);
  st.col_row.assign(n + 1, 0);
  std::vector<int> way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    st.col_row[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = st.col_row[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - st.u[i0] - st.v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          st.u[st.col_row[j]] += delta;
          st.v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (st.col_row[j0] != 0);
    do {
      const int j1 = way[j0];
      st.col_row[j0] = st.col_row[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  return st;
}

// Single augmenting-path attempt on the tight-edge graph (Kuhn).
bool try_rematch(int r, const std::vector<std::vector<int>>& adj,
                 const std::vector<char>& col_blocked, std::vector<char>& visited,
                 std::vector<int>& row_col, std::vector<int>& col_row) {
  for (int j : adj[r]) {
    if (col_blocked[j] || visited[j]) continue;
    visited[j] = 1;
    if (col_row[j] == -1 ||
        try_rematch(col_row[j], adj, col_blocked, visited, row_col, col_row)) {
      row_col[r] = j;
      col_row[j] = r;
      return true;
    }
  }
  return false;
}

}  // namespace

HungarianResult hungarian_match(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) throw input_error("hungarian_match: empty cost matrix");
  double max_abs = 0.0;
  for (const auto& row : cost) {
    if (static_cast<int>(row.size()) != n)
      throw input_error("hungarian_match: cost matrix must be square");
    for (double c : row) {
      if (!std::isfinite(c))
        throw input_error("hungarian_match: cost entries must be finite");
      max_abs = std::max(max_abs, std::abs(c));
    }
  }

  const JvState st = jv_solve(cost, n);

  // Tight edges under the optimal potentials span every optimal assignment.
  const double eps = 1e-9 * (1.0 + max_abs);
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (cost[i][j] - st.u[i + 1] - st.v[j + 1] <= eps) adj[i].push_back(j);

  std::vector<int> row_col(n, -1), col_row(n, -1);
  for (int j = 1; j <= n; ++j) {
    row_col[st.col_row[j] - 1] = j - 1;
    col_row[j - 1] = st.col_row[j] - 1;
  }

  // Make the permutation lexicographically smallest among optima: fix rows in
  // order, trying candidate columns ascending; feasibility = the remaining
  // tight graph still has a perfect matching, checked by one augment attempt.
  std::vector<char> col_blocked(n, 0);
  for (int i = 0; i < n; ++i) {
    const int j_cur = row_col[i];
    for (int j : adj[i]) {
      if (col_blocked[j]) continue;
      if (j >= j_cur) break;  // adj sorted ascending; current match is the fallback
      const int r = col_row[j];
      // Tentatively give column j to row i and rematch the displaced row.
      col_row[row_col[i]] = -1;
      const int j_old = row_col[i];
      row_col[i] = j;
      col_row[j] = i;
      row_col[r] = -1;
      std::vector<char> visited(n, 0);
      visited[j] = 1;
      if (try_rematch(r, adj, col_blocked, visited, row_col, col_row)) break;
      // Revert.
      row_col[i] = j_old;
      col_row[j_old] = i;
      row_col[r] = j;
      col_row[j] = r;
    }
    col_blocked[row_col[i]] = 1;
  }

  HungarianResult res;
  res.assignment = row_col;
  for (int i = 0; i < n; ++i) res.total += cost[i][row_col[i]];
  return res;
}

AlignmentReport align_centers(const CodeMatrix& estimated, const CodeMatrix& truth) {
  if (estimated.rows() != truth.rows())
    throw dimension_error("align_centers: row count mismatch");
  if (estimated.length() != truth.length())
    throw dimension_error("align_centers: code length mismatch");
  const int K = static_cast<int>(estimated.rows());
  std::vector<std::vector<double>> cost(K, std::vector<double>(K));
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j)
      cost[i][j] = static_cast<double>(row_distance(estimated, i, truth, j));
  const HungarianResult h = hungarian_match(cost);

  AlignmentReport r;
  r.permutation = h.assignment;
  r.per_center.resize(K);
  for (int i = 0; i < K; ++i) {
    const auto d = static_cast<std::uint32_t>(cost[i][h.assignment[i]]);
    r.per_center[i] = d;
    r.histogram[d] += 1;
    if (d == 0) r.exact_matches += 1;
  }
  r.mean_distance = h.total / static_cast<double>(K);
  return r;
}

nlohmann::json alignment_to_json(const AlignmentReport& r) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [d, c] : r.histogram) hist[std::to_string(d)] = c;
  return nlohmann::json{{"permutation", r.permutation},
                        {"per_center_distance", r.per_center},
                        {"mean_distance", r.mean_distance},
                        {"exact_matches", r.exact_matches},
                        {"histogram", hist}};
}

std::string alignment_to_csv(const AlignmentReport& r) {
  std::string out = "center,matched,distance\n";
  for (std::size_t i = 0; i < r.permutation.size(); ++i) {
    out += std::to_string(i) + "," + std::to_string(r.permutation[i]) + "," +
           std::to_string(r.per_center[i]) + "\n";
  }
  return out;
}

double compute_map(const CodeMatrix& queries, const std::vector<int>& query_labels,
                   const CodeMatrix& database, const std::vector<int>& db_labels) {
  if (queries.rows() != query_labels.size())
    throw input_error("compute_map: query labels missing or wrong count");
  if (database.rows() != db_labels.size())
    throw input_error("compute_map: database labels missing or wrong count");
  if (queries.length() != database.length())
    throw dimension_error("compute_map: code length mismatch");

  const std::uint32_t nq = queries.rows();
  const std::uint32_t nd = database.rows();
  double ap_sum = 0.0;
  std::vector<std::uint32_t> order(nd);
  for (std::uint32_t q = 0; q < nq; ++q) {
    const auto dists = distances_to(queries.get(q), database);
    for (std::uint32_t i = 0; i < nd; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return dists[a] < dists[b]; });
    int relevant_total = 0;
    for (std::uint32_t i = 0; i < nd; ++i)
      if (db_labels[i] == query_labels[q]) ++relevant_total;
    if (relevant_total == 0) continue;  // AP = 0
    int hits = 0;
    double ap = 0.0;
    for (std::uint32_t pos = 0; pos < nd; ++pos) {
      if (db_labels[order[pos]] == query_labels[q]) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(pos + 1);
      }
    }
    ap_sum += ap / static_cast<double>(relevant_total);
  }
  return ap_sum / static_cast<double>(nq);
}

}  // namespace hashinv
