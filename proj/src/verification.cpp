#include "probekit/verification.hpp"

#include <algorithm>
#include <unordered_map>

namespace probekit {

ScoredTrials score_trials(const PooledMatrix& embeddings, const TrialSet& trials,
                          const std::vector<int>* subset) {
  require(!trials.trials.empty(), "score_trials: no trials");
  if (subset) {
    for (int j : *subset)
      require(j >= 0 && j < embeddings.cols(), "score_trials: subset column out of range");
  }

  std::unordered_map<std::string, int> row_of;
  row_of.reserve(embeddings.utterance_ids.size());
  for (size_t i = 0; i < embeddings.utterance_ids.size(); ++i)
    row_of.emplace(embeddings.utterance_ids[i], static_cast<int>(i));

  // Normalize each referenced utterance once.
  std::unordered_map<int, VectorD> unit;
  auto unit_vector = [&](const std::string& id) -> const VectorD& {
    auto it = row_of.find(id);
    require(it != row_of.end(), "score_trials: utterance '" + id + "' not in store");
    auto cached = unit.find(it->second);
    if (cached != unit.end()) return cached->second;
    VectorD v;
    if (subset) {
      v.resize(static_cast<Eigen::Index>(subset->size()));
      for (size_t k = 0; k < subset->size(); ++k)
        v[static_cast<Eigen::Index>(k)] =
            static_cast<double>(embeddings.values(it->second, (*subset)[k]));
    } else {
      v = embeddings.values.row(it->second).cast<double>();
    }
    const double norm = v.norm();
    require(norm > 0.0, "score_trials: utterance '" + id + "' is a zero vector after slicing");
    v /= norm;
    return unit.emplace(it->second, std::move(v)).first->second;
  };

  ScoredTrials out;
  out.trials.reserve(trials.trials.size());
  for (const auto& t : trials.trials) {
    const VectorD& a = unit_vector(t.utt_a);
    const VectorD& b = unit_vector(t.utt_b);
    out.trials.push_back({a.dot(b), t.same});
  }
  return out;
}

EERResult compute_eer(const ScoredTrials& scored) {
  std::vector<double> target, nontarget;
  for (const auto& t : scored.trials) {
    require(std::isfinite(t.score), "compute_eer: non-finite score");
    (t.target ? target : nontarget).push_back(t.score);
  }
  require(!target.empty() && !nontarget.empty(),
          "compute_eer: need at least one trial of each target class");
  std::sort(target.begin(), target.end());
  std::sort(nontarget.begin(), nontarget.end());
  const double nt = static_cast<double>(target.size());
  const double nn = static_cast<double>(nontarget.size());

  auto frr = [&](double t) {  // targets rejected: score < t
    return static_cast<double>(std::lower_bound(target.begin(), target.end(), t) -
                               target.begin()) /
           nt;
  };
  auto far = [&](double t) {  // nontargets accepted: score >= t
    return static_cast<double>(nontarget.end() -
                               std::lower_bound(nontarget.begin(), nontarget.end(), t)) /
           nn;
  };

  std::vector<double> thresholds;
  thresholds.reserve(target.size() + nontarget.size() + 1);
  thresholds.insert(thresholds.end(), target.begin(), target.end());
  thresholds.insert(thresholds.end(), nontarget.begin(), nontarget.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(thresholds.back() + 1.0);  // reject-all sentinel

  EERResult result;
  result.num_target = static_cast<int>(target.size());
  result.num_nontarget = static_cast<int>(nontarget.size());

  // FAR - FRR is non-increasing in t, from +1 at the lowest score to -1 at
  // the sentinel, so a sign change always exists.
  double prev_t = thresholds.front();
  double prev_far = far(prev_t), prev_frr = frr(prev_t);
  for (double t : thresholds) {
    const double a = far(t), r = frr(t);
    const double d = a - r;
    if (d == 0.0) {
      result.eer = 100.0 * a;
      result.threshold = t;
      return result;
    }
    if (d < 0.0) {
      const double prev_d = prev_far - prev_frr;
      const double alpha = prev_d / (prev_d - d);
      result.eer = 100.0 * (prev_far + alpha * (a - prev_far));
      result.threshold = prev_t + alpha * (t - prev_t);
      return result;
    }
    prev_t = t;
    prev_far = a;
    prev_frr = r;
  }
  throw Error("compute_eer: no crossing found");  // unreachable
}

}  // namespace probekit
