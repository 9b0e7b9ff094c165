#include "bowlab/interpret.hpp"

#include <fstream>

namespace bowlab::interpret {

void write_coverage_csv(const CoverageReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write coverage csv: " + path);
  out << "text_id,k,r_dominate\n";
  for (const TextCoverage& tc : report.texts)
    for (std::size_t g = 0; g < report.k_grid.size(); ++g)
      out << tc.text_id << ',' << report.k_grid[g] << ',' << tc.r_by_k[g] << '\n';
}

void write_top_tokens_csv(const CoverageReport& report, const text::Vocab& vocab, const std::string& path,
                          int top_n) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write top-token csv: " + path);
  out << "text_id,rank,token,score,hit\n";
  for (const TextCoverage& tc : report.texts) {
    const int n = std::min<int>(top_n, static_cast<int>(tc.top_ids.size()));
    for (int r = 0; r < n; ++r) {
      const std::int32_t id = tc.top_ids[static_cast<std::size_t>(r)];
      const bool hit =
          std::find(tc.input_set.begin(), tc.input_set.end(), id) != tc.input_set.end();
      out << tc.text_id << ',' << (r + 1) << ',' << vocab.token_of(id) << ','
          << tc.top_scores[static_cast<std::size_t>(r)] << ',' << (hit ? 1 : 0) << '\n';
    }
  }
}

}  // namespace bowlab::interpret
