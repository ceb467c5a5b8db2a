// Copyright 2026 The attnrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Personality- and knowledge-aware nonnegative matrix factorization.
//
// A user's effective latent vector mixes its own row of P with the mean row
// of its same-personality neighbours:
//
//   u_i = g_i * p_i + (1 - g_i) * mean_{k in nbr(i)} p_k      (u_i = p_i with no nbrs)
//   R_ij ~ u_i . q_j
//
// and training minimizes
//
//   1/2 sum_obs (u_i.q_j - R_ij)^2 + a1 |P|^2 + a2 |Q|^2 + lambda tr(P^T (D - L) P)
//
// with multiplicative updates built from the positive and negative parts of
// the gradient, P <- P * (grad^- / grad^+)^exponent, and likewise for Q.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attnrec/checkpoint.hpp"
#include "attnrec/data.hpp"
#include "attnrec/numeric.hpp"
#include "attnrec/personality.hpp"
#include "attnrec/rng.hpp"
#include "attnrec/scorer.hpp"

namespace attnrec {

struct AparParams {
  int d = 100;
  double alpha1 = 0.1;
  double alpha2 = 0.1;
  double lambda = 0.01;  // personality-regularizer weight
  double beta = 0.5;
  /// Overrides every g_i when set (experiments use one global value).
  std::optional<double> global_gamma;
  double exponent = 1.0;
  int max_iters = 500;
  double tolerance = 1e-5;
  double init_max = 0.1;  // P, Q start uniform in (0, init_max]
};

/// clamp(beta + normalized kl, 0, 1); undefined knowledge counts as 0.
double gamma(double beta, const KnowledgeLevel& knowledge);

struct AparTraceRow {
  int iteration = 0;
  double objective = 0.0;
  bool fallback = false;  // projected-gradient step replaced the update
};

struct AparState {
  DenseMatrix P;  // n_users x d, entrywise >= 0
  DenseMatrix Q;  // n_items x d, entrywise >= 0
  std::vector<double> gamma;           // per user, in [0,1]
  std::vector<std::vector<int>> neighbors;  // nbr(i) from L
  AparParams params;
  std::uint64_t seed = 0;
  std::vector<AparTraceRow> trace;
  bool converged = false;

  int n_users() const { return static_cast<int>(P.rows()); }
  int n_items() const { return static_cast<int>(Q.rows()); }
};

/// Effective user vector u_i.
Vector effective_user(const AparState& state, int user);

double predict(const AparState& state, int user, int item);

/// tr(P^T (D - L) P) with D the degree matrix of L.
double personality_trace(const DenseMatrix& p, std::span<const std::vector<int>> neighbors);
/// 1/2 sum_{j,k} L_jk |p_j - p_k|^2, the same quantity computed pairwise.
double personality_pairwise(const DenseMatrix& p, std::span<const std::vector<int>> neighbors);

double objective(const AparState& state, std::span<const RatingTriplet> ratings);

/// Full gradient of `objective` with respect to P and Q.
void objective_gradient(const AparState& state, std::span<const RatingTriplet> ratings,
                        DenseMatrix& grad_p, DenseMatrix& grad_q);

struct StepResult {
  double objective = 0.0;
  bool fallback = false;
};

/// One P-then-Q multiplicative sweep. If the objective went up, the sweep is
/// discarded and a projected-gradient step with backtracking is taken
/// instead, so the objective never increases. Throws NumericalFailure on a
/// non-finite entry, naming `iteration`.
StepResult multiplicative_step(AparState& state, std::span<const RatingTriplet> ratings,
                               int iteration = 0);

/// Strictly positive random init plus per-user gamma and neighbour lists.
AparState init_apar(int n_users, int n_items, const SimilarityMatrix& similarity,
                    std::span<const KnowledgeLevel> knowledge, const AparParams& params, Rng& rng);

/// Runs multiplicative_step until the relative objective change drops below
/// params.tolerance or max_iters is hit (then `converged` stays false).
AparState train_apar(std::span<const RatingTriplet> ratings, int n_users, int n_items,
                     const SimilarityMatrix& similarity, std::span<const KnowledgeLevel> knowledge,
                     const AparParams& params, Rng& rng);

class AparPredictor : public RatingPredictor {
 public:
  explicit AparPredictor(AparState state) : state_(std::move(state)) {}
  std::string name() const override { return "apar"; }
  double predict(int user, int item) const override;
  const AparState& state() const { return state_; }

 private:
  AparState state_;
};

Checkpoint to_checkpoint(const AparState& state);
AparState apar_from_checkpoint(const Checkpoint& ck);

}  // namespace attnrec
