#include "probemb/report_io.hpp"

#include <fstream>

#include "json.hpp"

namespace probemb {

std::string report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["overall_recall1_t2i"] = r.overall_recall1_t2i;
  j["overall_recall1_i2t"] = r.overall_recall1_i2t;
  j["per_bin_recall_t2i"] = r.per_bin_recall_t2i;
  j["per_bin_recall_i2t"] = r.per_bin_recall_i2t;
  j["spearman_t2i"] = r.spearman_t2i;
  j["spearman_i2t"] = r.spearman_i2t;
  j["r2_t2i"] = r.r2_t2i;
  j["r2_i2t"] = r.r2_i2t;
  j["n_bins"] = r.n_bins;
  if (r.group_stats) {
    nlohmann::ordered_json groups = nlohmann::ordered_json::object();
    for (const auto& [key, g] : *r.group_stats) {
      groups[key] = {{"mean_uncertainty", g.mean_uncertainty},
                     {"mean_log_likelihood", g.mean_log_likelihood},
                     {"count", g.count}};
    }
    j["group_stats"] = std::move(groups);
  } else {
    j["group_stats"] = nullptr;
  }
  return j.dump(2) + "\n";
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << report_to_json(report);
  if (!out) {
    throw IoError("write failed for '" + path.string() + "'");
  }
}

}  // namespace probemb
