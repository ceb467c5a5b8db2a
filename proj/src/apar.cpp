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

#include "attnrec/apar.hpp"

#include <algorithm>
#include <cmath>

#include "attnrec/errors.hpp"

namespace attnrec {
namespace {

constexpr double kDenominatorFloor = 1e-12;

// Weight of the user's own row and of each neighbour row in u_i.
std::pair<double, double> mixing_weights(const AparState& s, std::size_t i) {
  const auto& nb = s.neighbors[i];
  if (nb.empty()) return {1.0, 0.0};
  const double g = s.gamma[i];
  return {g, (1.0 - g) / static_cast<double>(nb.size())};
}

DenseMatrix effective_users(const AparState& s) {
  DenseMatrix u(s.P.rows(), s.P.cols());
  for (std::size_t i = 0; i < s.P.rows(); ++i) {
    const auto [self_w, nb_w] = mixing_weights(s, i);
    axpy(self_w, s.P.row(i), u.row(i));
    for (int k : s.neighbors[i]) axpy(nb_w, s.P.row(static_cast<std::size_t>(k)), u.row(i));
  }
  return u;
}

// Positive and negative parts of the gradient, both entrywise >= 0 while P,
// Q and the ratings are nonnegative.
struct GradientParts {
  DenseMatrix p_pos, p_neg, q_pos, q_neg;
};

// Part for P given Q fixed.
void p_parts(const AparState& s, std::span<const RatingTriplet> ratings, const DenseMatrix& u,
             DenseMatrix& pos, DenseMatrix& neg) {
  const std::size_t d = s.P.cols();
  DenseMatrix g_pos(s.P.rows(), d), g_neg(s.P.rows(), d);
  for (const auto& r : ratings) {
    const auto i = static_cast<std::size_t>(r.user);
    const auto q = s.Q.row(static_cast<std::size_t>(r.item));
    const double pred = dot(u.row(i), q);
    axpy(pred, q, g_pos.row(i));
    axpy(r.rating, q, g_neg.row(i));
  }
  pos = DenseMatrix(s.P.rows(), d);
  neg = DenseMatrix(s.P.rows(), d);
  for (std::size_t i = 0; i < s.P.rows(); ++i) {
    const auto [self_w, nb_w] = mixing_weights(s, i);
    axpy(self_w, g_pos.row(i), pos.row(i));
    axpy(self_w, g_neg.row(i), neg.row(i));
    for (int k : s.neighbors[i]) {
      axpy(nb_w, g_pos.row(i), pos.row(static_cast<std::size_t>(k)));
      axpy(nb_w, g_neg.row(i), neg.row(static_cast<std::size_t>(k)));
    }
    // 2 a1 P + 2 lambda (D - L) P
    axpy(2.0 * s.params.alpha1, s.P.row(i), pos.row(i));
    const double degree = static_cast<double>(s.neighbors[i].size());
    axpy(2.0 * s.params.lambda * degree, s.P.row(i), pos.row(i));
    for (int k : s.neighbors[i]) axpy(2.0 * s.params.lambda, s.P.row(static_cast<std::size_t>(k)), neg.row(i));
  }
}

void q_parts(const AparState& s, std::span<const RatingTriplet> ratings, const DenseMatrix& u,
             DenseMatrix& pos, DenseMatrix& neg) {
  pos = DenseMatrix(s.Q.rows(), s.Q.cols());
  neg = DenseMatrix(s.Q.rows(), s.Q.cols());
  for (const auto& r : ratings) {
    const auto j = static_cast<std::size_t>(r.item);
    const auto ui = u.row(static_cast<std::size_t>(r.user));
    const double pred = dot(ui, s.Q.row(j));
    axpy(pred, ui, pos.row(j));
    axpy(r.rating, ui, neg.row(j));
  }
  for (std::size_t j = 0; j < s.Q.rows(); ++j) axpy(2.0 * s.params.alpha2, s.Q.row(j), pos.row(j));
}

void multiplicative_update(DenseMatrix& m, const DenseMatrix& pos, const DenseMatrix& neg,
                           double exponent) {
  auto v = m.values();
  auto p = pos.values();
  auto n = neg.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double ratio = n[i] / std::max(p[i], kDenominatorFloor);
    v[i] *= exponent == 1.0 ? ratio : std::pow(ratio, exponent);
  }
}

void require_finite(const AparState& s, int iteration) {
  if (!s.P.all_finite() || !s.Q.all_finite()) {
    throw NumericalFailure("apar: non-finite factor entry at iteration " + std::to_string(iteration));
  }
}

void check_ratings(const AparState& s, std::span<const RatingTriplet> ratings) {
  for (const auto& r : ratings) {
    if (r.user < 0 || r.user >= s.n_users() || r.item < 0 || r.item >= s.n_items()) {
      throw InvalidArgument("apar: rating references user " + std::to_string(r.user) + " item " +
                            std::to_string(r.item) + " outside the model");
    }
  }
}

}  // namespace

double gamma(double beta, const KnowledgeLevel& knowledge) {
  const double kl = knowledge.defined ? knowledge.normalized : 0.0;
  return std::clamp(beta + kl, 0.0, 1.0);
}

Vector effective_user(const AparState& state, int user) {
  const auto i = static_cast<std::size_t>(user);
  Vector u(state.P.cols(), 0.0);
  const auto [self_w, nb_w] = mixing_weights(state, i);
  axpy(self_w, state.P.row(i), u);
  for (int k : state.neighbors[i]) axpy(nb_w, state.P.row(static_cast<std::size_t>(k)), u);
  return u;
}

double predict(const AparState& state, int user, int item) {
  if (user < 0 || user >= state.n_users() || item < 0 || item >= state.n_items()) {
    throw InvalidArgument("apar predict: index out of range");
  }
  return dot(effective_user(state, user), state.Q.row(static_cast<std::size_t>(item)));
}

double personality_trace(const DenseMatrix& p, std::span<const std::vector<int>> neighbors) {
  // sum_k P[:,k]^T (D - L) P[:,k] = sum_i deg_i |p_i|^2 - sum_i sum_{k in nbr(i)} p_i.p_k
  double total = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    total += static_cast<double>(neighbors[i].size()) * dot(p.row(i), p.row(i));
    for (int k : neighbors[i]) total -= dot(p.row(i), p.row(static_cast<std::size_t>(k)));
  }
  return total;
}

double personality_pairwise(const DenseMatrix& p, std::span<const std::vector<int>> neighbors) {
  double total = 0.0;
  for (std::size_t j = 0; j < p.rows(); ++j) {
    for (int k : neighbors[j]) {
      double dist = 0.0;
      for (std::size_t c = 0; c < p.cols(); ++c) {
        const double diff = p(j, c) - p(static_cast<std::size_t>(k), c);
        dist += diff * diff;
      }
      total += dist;
    }
  }
  return 0.5 * total;
}

double objective(const AparState& state, std::span<const RatingTriplet> ratings) {
  const DenseMatrix u = effective_users(state);
  double fit = 0.0;
  for (const auto& r : ratings) {
    const double e = dot(u.row(static_cast<std::size_t>(r.user)), state.Q.row(static_cast<std::size_t>(r.item))) - r.rating;
    fit += e * e;
  }
  return 0.5 * fit + state.params.alpha1 * state.P.squared_norm() +
         state.params.alpha2 * state.Q.squared_norm() +
         state.params.lambda * personality_trace(state.P, state.neighbors);
}

void objective_gradient(const AparState& state, std::span<const RatingTriplet> ratings,
                        DenseMatrix& grad_p, DenseMatrix& grad_q) {
  const DenseMatrix u = effective_users(state);
  DenseMatrix pos, neg;
  p_parts(state, ratings, u, pos, neg);
  grad_p = pos;
  axpy(-1.0, neg.values(), grad_p.values());
  q_parts(state, ratings, u, pos, neg);
  grad_q = pos;
  axpy(-1.0, neg.values(), grad_q.values());
}

StepResult multiplicative_step(AparState& state, std::span<const RatingTriplet> ratings,
                               int iteration) {
  check_ratings(state, ratings);
  const double before = objective(state, ratings);
  const DenseMatrix saved_p = state.P;
  const DenseMatrix saved_q = state.Q;

  DenseMatrix pos, neg;
  p_parts(state, ratings, effective_users(state), pos, neg);
  multiplicative_update(state.P, pos, neg, state.params.exponent);
  q_parts(state, ratings, effective_users(state), pos, neg);
  multiplicative_update(state.Q, pos, neg, state.params.exponent);
  require_finite(state, iteration);

  const double after = objective(state, ratings);
  if (std::isfinite(after) && after <= before) return {after, false};

  // Projected gradient with backtracking from the pre-step point.
  state.P = saved_p;
  state.Q = saved_q;
  DenseMatrix gp, gq;
  objective_gradient(state, ratings, gp, gq);
  const double grad_norm = std::sqrt(gp.squared_norm() + gq.squared_norm());
  if (grad_norm == 0.0) return {before, true};
  double step = 1.0 / grad_norm;
  for (int attempt = 0; attempt < 60; ++attempt, step *= 0.5) {
    for (std::size_t i = 0; i < saved_p.size(); ++i)
      state.P.values()[i] = std::max(0.0, saved_p.values()[i] - step * gp.values()[i]);
    for (std::size_t i = 0; i < saved_q.size(); ++i)
      state.Q.values()[i] = std::max(0.0, saved_q.values()[i] - step * gq.values()[i]);
    const double trial = objective(state, ratings);
    if (std::isfinite(trial) && trial <= before) return {trial, true};
  }
  state.P = saved_p;
  state.Q = saved_q;
  return {before, true};
}

AparState init_apar(int n_users, int n_items, const SimilarityMatrix& similarity,
                    std::span<const KnowledgeLevel> knowledge, const AparParams& params, Rng& rng) {
  if (params.d < 1) throw InvalidArgument("apar: d must be >= 1");
  if (n_users < 0 || n_items < 0) throw InvalidArgument("apar: negative dimensions");
  if (similarity.size() != 0 && similarity.size() != static_cast<std::size_t>(n_users)) {
    throw InvalidArgument("apar: similarity matrix covers " + std::to_string(similarity.size()) +
                          " users, model has " + std::to_string(n_users));
  }
  if (!knowledge.empty() && knowledge.size() != static_cast<std::size_t>(n_users)) {
    throw InvalidArgument("apar: knowledge levels do not cover every user");
  }
  AparState s;
  s.params = params;
  s.seed = rng.seed();
  const auto d = static_cast<std::size_t>(params.d);
  s.P = DenseMatrix(static_cast<std::size_t>(n_users), d);
  s.Q = DenseMatrix(static_cast<std::size_t>(n_items), d);
  // (0, init_max]: 1 - uniform() is never 0.
  for (double& v : s.P.values()) v = params.init_max * (1.0 - rng.uniform());
  for (double& v : s.Q.values()) v = params.init_max * (1.0 - rng.uniform());
  s.gamma.resize(static_cast<std::size_t>(n_users));
  for (std::size_t i = 0; i < s.gamma.size(); ++i) {
    if (params.global_gamma) {
      s.gamma[i] = std::clamp(*params.global_gamma, 0.0, 1.0);
    } else {
      s.gamma[i] = knowledge.empty() ? std::clamp(params.beta, 0.0, 1.0) : gamma(params.beta, knowledge[i]);
    }
  }
  s.neighbors.resize(static_cast<std::size_t>(n_users));
  if (similarity.size() != 0) {
    for (std::size_t i = 0; i < s.neighbors.size(); ++i) s.neighbors[i] = similarity.neighbors(i);
  }
  return s;
}

AparState train_apar(std::span<const RatingTriplet> ratings, int n_users, int n_items,
                     const SimilarityMatrix& similarity, std::span<const KnowledgeLevel> knowledge,
                     const AparParams& params, Rng& rng) {
  AparState s = init_apar(n_users, n_items, similarity, knowledge, params, rng);
  check_ratings(s, ratings);
  double previous = objective(s, ratings);
  s.trace.push_back({0, previous, false});
  for (int it = 1; it <= params.max_iters; ++it) {
    const StepResult step = multiplicative_step(s, ratings, it);
    s.trace.push_back({it, step.objective, step.fallback});
    const double change = std::abs(previous - step.objective) / std::max(previous, 1e-300);
    previous = step.objective;
    if (change < params.tolerance) {
      s.converged = true;
      break;
    }
  }
  return s;
}

double AparPredictor::predict(int user, int item) const { return attnrec::predict(state_, user, item); }

Checkpoint to_checkpoint(const AparState& state) {
  Checkpoint ck;
  ck.model = "apar";
  ck.set("d", state.params.d);
  ck.set("alpha1", state.params.alpha1);
  ck.set("alpha2", state.params.alpha2);
  ck.set("lambda", state.params.lambda);
  ck.set("beta", state.params.beta);
  ck.set("global_gamma", state.params.global_gamma ? format_hexfloat(*state.params.global_gamma) : "none");
  ck.set("exponent", state.params.exponent);
  ck.set("max_iters", state.params.max_iters);
  ck.set("tolerance", state.params.tolerance);
  ck.set("init_max", state.params.init_max);
  ck.set("seed", state.seed);
  ck.set("converged", state.converged ? 1 : 0);
  ck.tensors["P"] = state.P;
  ck.tensors["Q"] = state.Q;
  ck.tensors["gamma"] = DenseMatrix(1, state.gamma.size(), state.gamma);
  std::vector<double> pairs;
  for (std::size_t j = 0; j < state.neighbors.size(); ++j) {
    for (int k : state.neighbors[j]) {
      if (static_cast<std::size_t>(k) > j) {
        pairs.push_back(static_cast<double>(j));
        pairs.push_back(static_cast<double>(k));
      }
    }
  }
  ck.tensors["links"] = DenseMatrix(pairs.size() / 2, 2, pairs);
  DenseMatrix trace(state.trace.size(), 3);
  for (std::size_t i = 0; i < state.trace.size(); ++i) {
    trace(i, 0) = state.trace[i].iteration;
    trace(i, 1) = state.trace[i].objective;
    trace(i, 2) = state.trace[i].fallback ? 1.0 : 0.0;
  }
  ck.tensors["trace"] = trace;
  return ck;
}

AparState apar_from_checkpoint(const Checkpoint& ck) {
  if (ck.model != "apar") throw DataError("checkpoint holds model '" + ck.model + "', expected apar");
  AparState s;
  s.params.d = static_cast<int>(ck.get_int("d"));
  s.params.alpha1 = ck.get_double("alpha1");
  s.params.alpha2 = ck.get_double("alpha2");
  s.params.lambda = ck.get_double("lambda");
  s.params.beta = ck.get_double("beta");
  if (ck.get_string("global_gamma") != "none") s.params.global_gamma = ck.get_double("global_gamma");
  s.params.exponent = ck.get_double("exponent");
  s.params.max_iters = static_cast<int>(ck.get_int("max_iters"));
  s.params.tolerance = ck.get_double("tolerance");
  s.params.init_max = ck.get_double("init_max");
  s.seed = ck.get_u64("seed");
  s.converged = ck.get_int("converged") != 0;
  s.P = ck.tensor("P");
  s.Q = ck.tensor("Q");
  const auto g = ck.tensor("gamma").values();
  s.gamma.assign(g.begin(), g.end());
  if (s.gamma.size() != s.P.rows()) throw DataError("apar checkpoint: gamma/P size mismatch");
  s.neighbors.assign(s.P.rows(), {});
  const DenseMatrix& links = ck.tensor("links");
  for (std::size_t r = 0; r < links.rows(); ++r) {
    const auto j = static_cast<std::size_t>(links(r, 0));
    const auto k = static_cast<std::size_t>(links(r, 1));
    if (j >= s.neighbors.size() || k >= s.neighbors.size()) throw DataError("apar checkpoint: bad link");
    s.neighbors[j].push_back(static_cast<int>(k));
    s.neighbors[k].push_back(static_cast<int>(j));
  }
  for (auto& nb : s.neighbors) std::sort(nb.begin(), nb.end());
  const DenseMatrix& trace = ck.tensor("trace");
  for (std::size_t i = 0; i < trace.rows(); ++i)
    s.trace.push_back({static_cast<int>(trace(i, 0)), trace(i, 1), trace(i, 2) != 0.0});
  return s;
}

}  // namespace attnrec
