#pragma once

#include <string>
#include <vector>

#include "probekit/common.hpp"
#include "probekit/pooling.hpp"
#include "probekit/store.hpp"

namespace probekit {

struct ScoredTrial {
  double score = 0.0;  // cosine, in [-1, 1]
  bool target = false;
};

struct ScoredTrials {
  std::vector<ScoredTrial> trials;
};

// Optional column slice, then length-normalize, then dot product per pair.
ScoredTrials score_trials(const PooledMatrix& embeddings, const TrialSet& trials,
                          const std::vector<int>* subset = nullptr);

struct EERResult {
  double eer = 0.0;        // percent
  double threshold = 0.0;  // score value at the crossing
  int num_target = 0;
  int num_nontarget = 0;
};

// Acceptance convention: score >= threshold accepts (ties accept).
// FRR(t) = fraction of target trials below t, FAR(t) = fraction of
// non-target trials at or above t. Thresholds sweep every distinct score
// plus a reject-all sentinel; the EER is read at the swept point where
// FAR = FRR exactly, or linearly interpolated between the two adjacent
// operating points where FAR - FRR changes sign.
EERResult compute_eer(const ScoredTrials& scored);

}  // namespace probekit
