#include "dissect/ledger.hpp"

#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "dissect/dataset.hpp"
#include "dissect/errors.hpp"

namespace dissect {

void ScoreLedger::snapshot_hist(const std::map<std::uint64_t, double>& scores) {
  if (initialized_) throw AlreadyInitializedError();
  for (const auto& [id, score] : scores) {
    auto& e = entries_[id];
    e.hist = score;
    e.has_hist = true;
  }
  initialized_ = true;
}

void ScoreLedger::update_hist_momentum(std::uint64_t id, double curr, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidBetaError(beta);
  auto& e = entries_[id];
  if (!e.has_hist) {
    e.hist = curr;  // base case: first observation seeds the ensemble
    e.has_hist = true;
  } else {
    e.hist = beta * e.hist + (1.0 - beta) * curr;
  }
}

void ScoreLedger::set_curr(std::uint64_t id, double score, int epoch) {
  auto& e = entries_[id];
  e.curr = score;
  e.has_curr = true;
  e.last_seen_epoch = epoch;
}

double ScoreLedger::delta(std::uint64_t id) const {
  auto it = entries_.find(id);
  if (it == entries_.end() || !it->second.has_hist || !it->second.has_curr)
    throw MissingScoreError(id);
  return it->second.hist - it->second.curr;
}

std::vector<double> ScoreLedger::compute_delta(std::span<const std::uint64_t> ids) const {
  std::vector<double> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(delta(id));
  return out;
}

bool ScoreLedger::has_hist(std::uint64_t id) const {
  auto it = entries_.find(id);
  return it != entries_.end() && it->second.has_hist;
}

bool ScoreLedger::has_curr(std::uint64_t id) const {
  auto it = entries_.find(id);
  return it != entries_.end() && it->second.has_curr;
}

double ScoreLedger::hist(std::uint64_t id) const {
  auto it = entries_.find(id);
  if (it == entries_.end() || !it->second.has_hist) throw MissingScoreError(id);
  return it->second.hist;
}

double ScoreLedger::curr(std::uint64_t id) const {
  auto it = entries_.find(id);
  if (it == entries_.end() || !it->second.has_curr) throw MissingScoreError(id);
  return it->second.curr;
}

std::optional<ScoreLedger::Entry> ScoreLedger::entry(std::uint64_t id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ScoreLedger::export_csv(const std::filesystem::path& path, const Dataset* dataset) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open ledger csv for writing: " + path.string());

  std::unordered_map<std::uint64_t, bool> noisy;
  if (dataset != nullptr && dataset->ground_truth_available) {
    for (const auto& s : dataset->samples) noisy[s.id] = s.is_noisy;
  }

  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };

  out << "id,hist_score,curr_score,delta,is_noisy,epoch\n";
  for (const auto& [id, e] : entries_) {
    out << id << ",";
    out << (e.has_hist ? num(e.hist) : "") << ",";
    out << (e.has_curr ? num(e.curr) : "") << ",";
    out << (e.has_hist && e.has_curr ? num(e.hist - e.curr) : "") << ",";
    auto it = noisy.find(id);
    out << (it != noisy.end() ? (it->second ? "1" : "0") : "") << ",";
    if (e.last_seen_epoch >= 0) out << e.last_seen_epoch;
    out << "\n";
  }
  if (!out) throw IoError("ledger csv write failed: " + path.string());
}

}  // namespace dissect
