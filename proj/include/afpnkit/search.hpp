#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "afpnkit/augment.hpp"
#include "afpnkit/rng.hpp"

namespace afpnkit {

/// Exact (n_ops * D * P)^(2 * n_subs), returned as a decimal string since
/// the realistic values overflow any machine word.
std::string search_space_size(int n_ops, int d_levels, int p_levels,
                              int n_subs);

struct ControllerConfig {
  int hidden = 64;  // recurrent state width
  int embed = 16;   // decision embedding width
  static constexpr int kSteps = 30;  // 5 subs x 2 ops x 3 decisions
};

/// Recurrent policy sampler: a tanh cell whose step t consumes the
/// embedding of decision t-1 and emits categorical logits for the head
/// cycling (kind, mag_level, prob_level). All parameters are doubles kept
/// as named flat arrays so checkpoints and gradient checks can address
/// them uniformly.
class Controller {
 public:
  static Controller zeros(const ControllerConfig& cfg);
  static Controller random(const ControllerConfig& cfg, Rng& rng);

  const ControllerConfig& config() const { return cfg_; }
  std::map<std::string, std::vector<double>>& params() { return params_; }
  const std::map<std::string, std::vector<double>>& params() const {
    return params_;
  }

 private:
  Controller() = default;
  ControllerConfig cfg_;
  std::map<std::string, std::vector<double>> params_;
};

/// Sizes of the three decision heads in step order (kind, mag, prob).
int head_cardinality(int head);

struct ControllerSample {
  Policy policy;
  double log_prob = 0.0;
  std::array<int, ControllerConfig::kSteps> trace{};
};

/// 30 sequential categorical draws; each drawn index is embedded and fed
/// into the next recurrent step. Throws on non-finite logits.
ControllerSample controller_sample(const Controller& c, Rng& rng);

/// Summed log softmax probability of an existing trace under `c`.
double replay_log_prob(const Controller& c,
                       const std::array<int, ControllerConfig::kSteps>& trace);

/// Greedy argmax decode (no randomness), used for the final reported
/// policy after a search.
ControllerSample controller_argmax(const Controller& c);

Policy decode_trace(const std::array<int, ControllerConfig::kSteps>& trace);

struct PpoItem {
  std::array<int, ControllerConfig::kSteps> trace{};
  double log_prob_old = 0.0;
  double reward = 0.0;
};

/// Clipped surrogate mean over the batch:
///   mean_i min(r_i * A_i, clip(r_i, 1-eps, 1+eps) * A_i),
/// r_i = exp(log_prob_new - log_prob_old), A_i = reward - baseline.
double ppo_surrogate(const Controller& c, const std::vector<PpoItem>& batch,
                     double baseline, double clip_eps);

/// One analytic gradient-ascent step on the clipped surrogate, then an
/// exponential-moving-average baseline update toward the batch mean
/// reward. Throws std::invalid_argument on an empty batch or clip_eps
/// outside (0, 1).
void ppo_update(Controller& c, const std::vector<PpoItem>& batch,
                double& baseline, double clip_eps, double lr,
                double baseline_decay = 0.9);

using RewardEvaluator = std::function<double(const Policy&)>;

enum class SearchAlgo { Ppo, Random };

struct SearchConfig {
  SearchAlgo algo = SearchAlgo::Ppo;
  int budget = 300;  // total evaluator calls
  int batch = 8;     // policies per PPO iteration
  double lr = 0.00035;
  double clip_eps = 0.2;
  double baseline_decay = 0.9;
  ControllerConfig controller;
  std::uint64_t seed = 0;
};

struct HistoryEntry {
  int eval_index = 0;  // evaluator call counter, 0-based
  double reward = 0.0;
};

/// Complete resumable search state; the checkpoint file serializes all of
/// it, so a resumed run continues the exact rng stream and history.
struct SearchState {
  SearchAlgo algo = SearchAlgo::Ppo;
  Controller controller = Controller::zeros(ControllerConfig{});
  double baseline = 0.0;
  bool baseline_initialized = false;
  int iterations = 0;  // completed ppo updates
  int evals = 0;       // completed evaluator calls
  Rng rng{0};
  std::uint64_t seed = 0;
  Policy best_policy{};
  double best_reward = 0.0;
  bool has_best = false;
  std::vector<HistoryEntry> history;
};

struct SearchResult {
  Policy best_policy{};
  double best_reward = 0.0;
  Policy final_policy{};  // argmax decode for ppo, best for random
  std::vector<HistoryEntry> history;
};

SearchState make_search_state(const SearchConfig& cfg);

/// Runs `extra_evals` more evaluator calls against `state`, appending to
/// its history. Evaluator exceptions abort with the offending policy's
/// JSON attached to the rethrown message.
void search_continue(SearchState& state, const RewardEvaluator& evaluator,
                     const SearchConfig& cfg, int extra_evals);

/// make_search_state + search_continue(budget), packaged.
SearchResult search(const RewardEvaluator& evaluator, const SearchConfig& cfg);

SearchResult result_from_state(const SearchState& state);

void save_checkpoint(const std::string& path, const SearchState& state);
SearchState load_checkpoint(const std::string& path);

/// Shipped rewards. The separable reward pays 10 points per op slot whose
/// kind is translate_x (so 0..100, maximal iff every slot agrees) — a
/// deliberately easy landscape for verifying that the optimizer learns.
double synthetic_separable_reward(const Policy& p);

/// Tiny deterministic proxy task: nearest-centroid classification over a
/// generated 3-class toy image set, trained on policy-augmented copies;
/// reward is held-out accuracy in percent.
RewardEvaluator make_proxy_evaluator(std::uint64_t seed);

}  // namespace afpnkit
