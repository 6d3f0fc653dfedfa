#include "dissect/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "dissect/errors.hpp"
#include "dissect/info_nce.hpp"

namespace dissect {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

void write_metrics_csv(const ExperimentResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open metrics csv for writing: " + path.string());
  out << "epoch,loss,ir1,ir5,ir10,tr1,tr5,tr10,tp_acc,clean_mean,noisy_mean,"
         "clean_var,noisy_var,overlap,fwd,bwd,wall_ms\n";
  for (const auto& r : result.rows) {
    out << r.epoch << "," << fmt(r.loss) << "," << fmt(r.ir1) << "," << fmt(r.ir5) << ","
        << fmt(r.ir10) << "," << fmt(r.tr1) << "," << fmt(r.tr5) << "," << fmt(r.tr10) << ",";
    if (result.has_ground_truth) {
      out << fmt(r.tp_acc) << "," << fmt(r.clean_mean) << "," << fmt(r.noisy_mean) << ","
          << fmt(r.clean_var) << "," << fmt(r.noisy_var) << "," << fmt(r.overlap);
    } else {
      out << ",,,,,";
    }
    out << "," << r.fwd << "," << r.bwd << "," << fmt(r.wall_ms) << "\n";
  }
  if (!out) throw IoError("metrics csv write failed: " + path.string());
}

RecallTable recall_at_k(const EncoderParams& params, const Dataset& gallery,
                        std::span<const int> ks) {
  const std::size_t n = gallery.size();
  if (n == 0) throw EmptyGalleryError();

  std::vector<std::uint32_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::uint32_t>(i);
  const BatchForward fwd = forward_batch(params, gallery, rows, 1.0);

  RecallTable table;
  table.ks.assign(ks.begin(), ks.end());
  table.img_to_txt.assign(ks.size(), 0.0);
  table.txt_to_img.assign(ks.size(), 0.0);

  // Rank of the true partner: count candidates that strictly beat it, plus
  // equal-scored candidates with a smaller id (tie-break by ascending id).
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rank_txt = 1, rank_img = 1;
    const double diag = fwd.sim(i, i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double s_it = fwd.sim(i, j);  // image i against text j
      if (s_it > diag || (s_it == diag && gallery.samples[j].id < gallery.samples[i].id))
        ++rank_txt;
      const double s_ti = fwd.sim(j, i);  // text i against image j
      if (s_ti > diag || (s_ti == diag && gallery.samples[j].id < gallery.samples[i].id))
        ++rank_img;
    }
    for (std::size_t k = 0; k < table.ks.size(); ++k) {
      if (rank_txt <= static_cast<std::size_t>(table.ks[k])) table.img_to_txt[k] += 1.0;
      if (rank_img <= static_cast<std::size_t>(table.ks[k])) table.txt_to_img[k] += 1.0;
    }
  }
  for (auto& v : table.img_to_txt) v /= static_cast<double>(n);
  for (auto& v : table.txt_to_img) v /= static_cast<double>(n);
  return table;
}

double tp_accuracy(std::span<const std::uint64_t> selected_ids, const Dataset& dataset) {
  if (!dataset.ground_truth_available) throw GroundTruthUnavailableError();
  if (selected_ids.empty()) return 0.0;
  std::vector<std::uint8_t> noisy_by_id;
  std::uint64_t max_id = 0;
  for (const auto& s : dataset.samples) max_id = std::max(max_id, s.id);
  noisy_by_id.assign(max_id + 1, 0);
  for (const auto& s : dataset.samples) noisy_by_id[s.id] = s.is_noisy ? 1 : 0;
  std::size_t clean = 0;
  for (auto id : selected_ids)
    if (id < noisy_by_id.size() && noisy_by_id[id] == 0) ++clean;
  return static_cast<double>(clean) / static_cast<double>(selected_ids.size());
}

DistributionStats distribution_stats(const std::map<std::uint64_t, double>& scores,
                                     const Dataset& dataset, double w) {
  if (!dataset.ground_truth_available) throw GroundTruthUnavailableError();
  std::vector<double> clean, noisy;
  for (const auto& s : dataset.samples) {
    auto it = scores.find(s.id);
    if (it == scores.end()) continue;
    (s.is_noisy ? noisy : clean).push_back(it->second);
  }

  DistributionStats out;
  out.clean_count = clean.size();
  out.noisy_count = noisy.size();
  out.clean_mean = mean_of(clean);
  out.noisy_mean = mean_of(noisy);
  out.clean_var = var_of(clean, out.clean_mean);
  out.noisy_var = var_of(noisy, out.noisy_mean);

  // 64 fixed bins over [0, w]; scores land there by construction.
  constexpr int kBins = 64;
  if (!clean.empty() && !noisy.empty() && w > 0.0) {
    std::vector<double> pc(kBins, 0.0), pn(kBins, 0.0);
    auto bin_of = [&](double x) {
      int b = static_cast<int>(std::floor(x / w * kBins));
      return std::clamp(b, 0, kBins - 1);
    };
    for (double x : clean) pc[bin_of(x)] += 1.0 / static_cast<double>(clean.size());
    for (double x : noisy) pn[bin_of(x)] += 1.0 / static_cast<double>(noisy.size());
    double ov = 0.0;
    for (int b = 0; b < kBins; ++b) ov += std::min(pc[b], pn[b]);
    out.overlap = ov;
  } else {
    out.overlap = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

namespace {

double metric_value(const EpochRow& r, const std::string& name) {
  if (name == "loss") return r.loss;
  if (name == "ir1") return r.ir1;
  if (name == "ir5") return r.ir5;
  if (name == "ir10") return r.ir10;
  if (name == "tr1") return r.tr1;
  if (name == "tr5") return r.tr5;
  if (name == "tr10") return r.tr10;
  if (name == "tp_acc") return r.tp_acc;
  throw MetricMissingError("unknown metric: " + name);
}

}  // namespace

AccelerationReport acceleration_report(const ExperimentResult& a, const ExperimentResult& b,
                                       const std::string& target_metric, double target_value) {
  if (a.rows.empty() || b.rows.empty())
    throw MetricMissingError("empty metrics series for " + target_metric);
  const bool lower_better = target_metric == "loss";

  auto scan = [&](const ExperimentResult& res, bool& reached, int& epoch, std::uint64_t& bwd) {
    for (const auto& r : res.rows) {
      const double v = metric_value(r, target_metric);
      if ((lower_better && v <= target_value) || (!lower_better && v >= target_value)) {
        reached = true;
        epoch = r.epoch;
        bwd = r.bwd;
        return;
      }
    }
    reached = false;
    epoch = -1;
    bwd = 0;
  };

  AccelerationReport rep;
  scan(a, rep.a_reached, rep.epoch_a, rep.bwd_a);
  scan(b, rep.b_reached, rep.epoch_b, rep.bwd_b);
  if (rep.a_reached && rep.b_reached && rep.bwd_b > 0)
    rep.ratio = static_cast<double>(rep.bwd_a) / static_cast<double>(rep.bwd_b);
  return rep;
}

}  // namespace dissect
