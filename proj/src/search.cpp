#include "afpnkit/search.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace afpnkit {

std::string search_space_size(int n_ops, int d_levels, int p_levels,
                              int n_subs) {
  if (n_ops < 1 || d_levels < 1 || p_levels < 1 || n_subs < 1) {
    throw std::invalid_argument("search_space_size arguments must be >= 1");
  }
  const unsigned long long base = 1ULL * n_ops * d_levels * p_levels;
  // Little-endian base-1e9 big integer; the exponent is small (2*n_subs)
  // but the value itself overflows any machine word.
  std::vector<std::uint32_t> limbs{1};
  for (int i = 0; i < 2 * n_subs; ++i) {
    unsigned long long carry = 0;
    for (auto& limb : limbs) {
      const unsigned long long cur = limb * base + carry;
      limb = static_cast<std::uint32_t>(cur % 1000000000ULL);
      carry = cur / 1000000000ULL;
    }
    while (carry) {
      limbs.push_back(static_cast<std::uint32_t>(carry % 1000000000ULL));
      carry /= 1000000000ULL;
    }
  }
  std::ostringstream os;
  os << limbs.back();
  for (auto it = limbs.rbegin() + 1; it != limbs.rend(); ++it) {
    os.width(9);
    os.fill('0');
    os << *it;
  }
  return os.str();
}

int head_cardinality(int head) {
  switch (head) {
    case 0: return kNumAugKinds;    // 15
    case 1: return kNumMagLevels;   // 11
    case 2: return kNumProbLevels;  // 10
  }
  throw std::invalid_argument("head index must be 0, 1 or 2");
}

namespace {

constexpr const char* kHeadNames[3] = {"kind", "mag", "prob"};
constexpr int kSteps = ControllerConfig::kSteps;

std::vector<std::string> param_names() {
  std::vector<std::string> names = {"emb.kind", "emb.mag", "emb.prob", "x0",
                                    "rnn.wx", "rnn.wh", "rnn.b"};
  for (int h = 0; h < 3; ++h) {
    names.push_back(std::string("head.") + kHeadNames[h] + ".w");
    names.push_back(std::string("head.") + kHeadNames[h] + ".b");
  }
  return names;
}

std::size_t param_size(const std::string& name, const ControllerConfig& cfg) {
  const std::size_t H = cfg.hidden, E = cfg.embed;
  if (name == "emb.kind") return kNumAugKinds * E;
  if (name == "emb.mag") return kNumMagLevels * E;
  if (name == "emb.prob") return kNumProbLevels * E;
  if (name == "x0") return E;
  if (name == "rnn.wx") return H * E;
  if (name == "rnn.wh") return H * H;
  if (name == "rnn.b") return H;
  for (int h = 0; h < 3; ++h) {
    if (name == std::string("head.") + kHeadNames[h] + ".w")
      return head_cardinality(h) * H;
    if (name == std::string("head.") + kHeadNames[h] + ".b")
      return head_cardinality(h);
  }
  throw std::invalid_argument("unknown controller parameter " + name);
}

// One recorded recurrent step, kept for backprop.
struct StepRecord {
  int head = 0;
  int action = 0;
  std::vector<double> x;      // input embedding
  std::vector<double> h;      // post-tanh hidden state
  std::vector<double> probs;  // softmax over the head
};

std::vector<double> softmax(const std::vector<double>& logits) {
  double mx = logits[0];
  for (double v : logits) {
    if (!std::isfinite(v)) {
      throw std::runtime_error("controller produced non-finite logits");
    }
    mx = std::max(mx, v);
  }
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

// Runs the 30 recurrent steps. `choose` maps (step, probs) to the action
// index; records go to `steps` when provided. Returns the summed log
// probability of the chosen actions.
template <typename Chooser>
double run_controller(const Controller& c, Chooser&& choose,
                      std::array<int, kSteps>& trace,
                      std::vector<StepRecord>* steps) {
  const auto& P = c.params();
  const int H = c.config().hidden, E = c.config().embed;
  const auto& wx = P.at("rnn.wx");
  const auto& wh = P.at("rnn.wh");
  const auto& rb = P.at("rnn.b");

  std::vector<double> x = P.at("x0");
  std::vector<double> h_prev(H, 0.0);
  double log_prob = 0.0;

  for (int t = 0; t < kSteps; ++t) {
    const int head = t % 3;
    const int K = head_cardinality(head);
    std::vector<double> h(H);
    for (int i = 0; i < H; ++i) {
      double pre = rb[i];
      for (int j = 0; j < E; ++j) pre += wx[i * E + j] * x[j];
      for (int j = 0; j < H; ++j) pre += wh[i * H + j] * h_prev[j];
      h[i] = std::tanh(pre);
    }
    const auto& hw = P.at(std::string("head.") + kHeadNames[head] + ".w");
    const auto& hb = P.at(std::string("head.") + kHeadNames[head] + ".b");
    std::vector<double> logits(K);
    for (int k = 0; k < K; ++k) {
      double v = hb[k];
      for (int j = 0; j < H; ++j) v += hw[k * H + j] * h[j];
      logits[k] = v;
    }
    const auto probs = softmax(logits);
    const int a = choose(t, probs);
    if (a < 0 || a >= K) {
      throw std::out_of_range("controller trace action out of range");
    }
    trace[t] = a;
    log_prob += std::log(std::max(probs[a], 1e-300));

    if (steps) {
      steps->push_back({head, a, x, h, probs});
    }
    const auto& emb = P.at(std::string("emb.") + kHeadNames[head]);
    x.assign(emb.begin() + static_cast<std::ptrdiff_t>(a) * E,
             emb.begin() + static_cast<std::ptrdiff_t>(a + 1) * E);
    h_prev = std::move(h);
  }
  return log_prob;
}

int sample_categorical(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

Policy random_policy(Rng& rng) {
  std::array<int, kSteps> trace{};
  for (int t = 0; t < kSteps; ++t) {
    trace[t] = static_cast<int>(rng.uniform_int(head_cardinality(t % 3)));
  }
  return decode_trace(trace);
}

nlohmann::json policy_to_json(const Policy& p) {
  return nlohmann::json::parse(policy_to_json_text(p));
}

}  // namespace

Controller Controller::zeros(const ControllerConfig& cfg) {
  if (cfg.hidden < 1 || cfg.embed < 1) {
    throw std::invalid_argument("controller widths must be >= 1");
  }
  Controller c;
  c.cfg_ = cfg;
  for (const auto& name : param_names()) {
    c.params_[name] = std::vector<double>(param_size(name, cfg), 0.0);
  }
  return c;
}

Controller Controller::random(const ControllerConfig& cfg, Rng& rng) {
  Controller c = zeros(cfg);
  // The recurrent pathway starts live (so hidden states carry real signal
  // for the heads to latch onto) while the heads start neutral, making
  // the initial decision distribution exactly uniform.
  const std::vector<std::pair<std::string, double>> scales = {
      {"emb.kind", 0.3}, {"emb.mag", 0.3}, {"emb.prob", 0.3}, {"x0", 0.3},
      {"rnn.wx", 0.3},   {"rnn.wh", 1.0 / std::sqrt(cfg.hidden)},
      {"rnn.b", 0.7},
  };
  for (const auto& [name, scale] : scales) {
    for (auto& v : c.params_.at(name)) v = rng.normal() * scale;
  }
  return c;
}

ControllerSample controller_sample(const Controller& c, Rng& rng) {
  ControllerSample out;
  out.log_prob = run_controller(
      c, [&](int, const std::vector<double>& p) { return sample_categorical(p, rng); },
      out.trace, nullptr);
  out.policy = decode_trace(out.trace);
  return out;
}

double replay_log_prob(const Controller& c,
                       const std::array<int, kSteps>& trace) {
  std::array<int, kSteps> tmp{};
  return run_controller(
      c, [&](int t, const std::vector<double>&) { return trace[t]; }, tmp,
      nullptr);
}

ControllerSample controller_argmax(const Controller& c) {
  ControllerSample out;
  out.log_prob = run_controller(
      c,
      [](int, const std::vector<double>& p) {
        return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
      },
      out.trace, nullptr);
  out.policy = decode_trace(out.trace);
  return out;
}

Policy decode_trace(const std::array<int, kSteps>& trace) {
  Policy p;
  for (int slot = 0; slot < 10; ++slot) {
    AugOpSpec spec;
    spec.kind = static_cast<AugKind>(trace[slot * 3 + 0]);
    spec.mag_level = trace[slot * 3 + 1];
    spec.prob_level = trace[slot * 3 + 2];
    spec.validate();
    p.subs[slot / 2].ops[slot % 2] = spec;
  }
  return p;
}

double ppo_surrogate(const Controller& c, const std::vector<PpoItem>& batch,
                     double baseline, double clip_eps) {
  if (batch.empty()) throw std::invalid_argument("ppo batch must be non-empty");
  double total = 0.0;
  for (const auto& item : batch) {
    const double lp = replay_log_prob(c, item.trace);
    const double r = std::exp(lp - item.log_prob_old);
    const double adv = item.reward - baseline;
    const double clipped = std::clamp(r, 1.0 - clip_eps, 1.0 + clip_eps);
    total += std::min(r * adv, clipped * adv);
  }
  return total / static_cast<double>(batch.size());
}

void ppo_update(Controller& c, const std::vector<PpoItem>& batch,
                double& baseline, double clip_eps, double lr,
                double baseline_decay) {
  if (batch.empty()) throw std::invalid_argument("ppo batch must be non-empty");
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) {
    throw std::invalid_argument("ppo clip_eps must be in (0, 1)");
  }
  const int H = c.config().hidden, E = c.config().embed;
  auto& P = c.params();

  std::map<std::string, std::vector<double>> grad;
  for (const auto& [name, vals] : P) grad[name].assign(vals.size(), 0.0);

  double reward_sum = 0.0;
  for (const auto& item : batch) {
    reward_sum += item.reward;

    std::vector<StepRecord> steps;
    steps.reserve(kSteps);
    std::array<int, kSteps> tmp{};
    const double lp = run_controller(
        c, [&](int t, const std::vector<double>&) { return item.trace[t]; },
        tmp, &steps);

    const double ratio = std::exp(lp - item.log_prob_old);
    const double adv = item.reward - baseline;
    // Subgradient of min(r*A, clip(r)*A): zero once the clipped branch is
    // strictly active, the usual PPO trust-region cutoff.
    const bool unclipped_active =
        ratio * adv <= std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * adv;
    const double coeff =
        (unclipped_active ? ratio * adv : 0.0) / static_cast<double>(batch.size());
    if (coeff == 0.0) continue;

    auto& g_wx = grad.at("rnn.wx");
    auto& g_wh = grad.at("rnn.wh");
    auto& g_rb = grad.at("rnn.b");
    const auto& wx = P.at("rnn.wx");
    const auto& wh = P.at("rnn.wh");

    std::vector<double> dh_carry(H, 0.0);  // dL/dh_t flowing from step t+1
    const std::vector<double> h_start(H, 0.0);
    for (int t = kSteps - 1; t >= 0; --t) {
      const StepRecord& st = steps[t];
      const int K = head_cardinality(st.head);
      const auto& hw = P.at(std::string("head.") + kHeadNames[st.head] + ".w");
      auto& g_hw = grad.at(std::string("head.") + kHeadNames[st.head] + ".w");
      auto& g_hb = grad.at(std::string("head.") + kHeadNames[st.head] + ".b");

      // dL/dlogits = coeff * (one_hot(action) - probs)
      std::vector<double> dh(H, 0.0);
      for (int k = 0; k < K; ++k) {
        const double dl = coeff * ((k == st.action ? 1.0 : 0.0) - st.probs[k]);
        g_hb[k] += dl;
        for (int j = 0; j < H; ++j) {
          g_hw[k * H + j] += dl * st.h[j];
          dh[j] += dl * hw[k * H + j];
        }
      }
      for (int j = 0; j < H; ++j) dh[j] += dh_carry[j];

      const std::vector<double>& h_prev = t > 0 ? steps[t - 1].h : h_start;
      std::vector<double> dx(E, 0.0);
      std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
      for (int i = 0; i < H; ++i) {
        const double dpre = dh[i] * (1.0 - st.h[i] * st.h[i]);
        g_rb[i] += dpre;
        for (int j = 0; j < E; ++j) {
          g_wx[i * E + j] += dpre * st.x[j];
          dx[j] += dpre * wx[i * E + j];
        }
        for (int j = 0; j < H; ++j) {
          g_wh[i * H + j] += dpre * h_prev[j];
          dh_carry[j] += dpre * wh[i * H + j];
        }
      }
      if (t == 0) {
        auto& g_x0 = grad.at("x0");
        for (int j = 0; j < E; ++j) g_x0[j] += dx[j];
      } else {
        const StepRecord& prev = steps[t - 1];
        auto& g_emb = grad.at(std::string("emb.") + kHeadNames[prev.head]);
        for (int j = 0; j < E; ++j) g_emb[prev.action * E + j] += dx[j];
      }
    }
  }

  for (auto& [name, vals] : P) {
    const auto& g = grad.at(name);
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] += lr * g[i];
  }
  const double mean_reward = reward_sum / static_cast<double>(batch.size());
  baseline = baseline_decay * baseline + (1.0 - baseline_decay) * mean_reward;
}

SearchState make_search_state(const SearchConfig& cfg) {
  SearchState st;
  st.algo = cfg.algo;
  st.seed = cfg.seed;
  st.rng = Rng(cfg.seed);
  st.controller = cfg.algo == SearchAlgo::Ppo
                      ? Controller::random(cfg.controller, st.rng)
                      : Controller::zeros(cfg.controller);
  return st;
}

void search_continue(SearchState& st, const RewardEvaluator& evaluator,
                     const SearchConfig& cfg, int extra_evals) {
  if (extra_evals < 1) {
    throw std::invalid_argument("search budget must be >= 1");
  }
  auto score = [&](const Policy& p) {
    double r;
    try {
      r = evaluator(p);
    } catch (const std::exception& ex) {
      throw std::runtime_error(std::string("reward evaluator failed: ") +
                               ex.what() + "\nfailing policy:\n" +
                               policy_to_json_text(p));
    }
    if (!std::isfinite(r)) {
      throw std::runtime_error(
          "reward evaluator returned a non-finite reward\nfailing policy:\n" +
          policy_to_json_text(p));
    }
    st.history.push_back({st.evals, r});
    if (!st.has_best || r > st.best_reward) {
      st.best_reward = r;
      st.best_policy = p;
      st.has_best = true;
    }
    ++st.evals;
    return r;
  };

  if (st.algo == SearchAlgo::Random) {
    for (int i = 0; i < extra_evals; ++i) score(random_policy(st.rng));
    return;
  }

  int remaining = extra_evals;
  while (remaining > 0) {
    const int b = std::min(remaining, cfg.batch);
    std::vector<PpoItem> batch(b);
    double mean = 0.0;
    for (int i = 0; i < b; ++i) {
      const ControllerSample s = controller_sample(st.controller, st.rng);
      batch[i].trace = s.trace;
      batch[i].log_prob_old = s.log_prob;
      batch[i].reward = score(s.policy);
      mean += batch[i].reward;
    }
    mean /= b;
    if (!st.baseline_initialized) {
      st.baseline = mean;
      st.baseline_initialized = true;
    }
    ppo_update(st.controller, batch, st.baseline, cfg.clip_eps, cfg.lr,
               cfg.baseline_decay);
    ++st.iterations;
    remaining -= b;
  }
}

SearchResult result_from_state(const SearchState& st) {
  SearchResult out;
  out.best_policy = st.best_policy;
  out.best_reward = st.best_reward;
  out.history = st.history;
  out.final_policy = st.algo == SearchAlgo::Ppo
                         ? controller_argmax(st.controller).policy
                         : st.best_policy;
  return out;
}

SearchResult search(const RewardEvaluator& evaluator, const SearchConfig& cfg) {
  SearchState st = make_search_state(cfg);
  search_continue(st, evaluator, cfg, cfg.budget);
  return result_from_state(st);
}

void save_checkpoint(const std::string& path, const SearchState& st) {
  nlohmann::json doc;
  doc["algo"] = st.algo == SearchAlgo::Ppo ? "ppo" : "random";
  doc["seed"] = st.seed;
  doc["baseline"] = st.baseline;
  doc["baseline_initialized"] = st.baseline_initialized;
  doc["iterations"] = st.iterations;
  doc["evals"] = st.evals;
  doc["rng_state"] = st.rng.state();
  doc["best_reward"] = st.best_reward;
  doc["best_policy"] =
      st.has_best ? policy_to_json(st.best_policy) : nlohmann::json();
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : st.history) hist.push_back({h.eval_index, h.reward});
  doc["history"] = hist;
  nlohmann::json controller;
  controller["hidden"] = st.controller.config().hidden;
  controller["embed"] = st.controller.config().embed;
  controller["steps"] = ControllerConfig::kSteps;
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [name, vals] : st.controller.params()) params[name] = vals;
  controller["params"] = params;
  doc["controller"] = controller;

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << doc.dump(2) << "\n";
}

SearchState load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  const auto doc = nlohmann::json::parse(in);

  SearchState st;
  const std::string algo = doc.at("algo").get<std::string>();
  if (algo == "ppo") {
    st.algo = SearchAlgo::Ppo;
  } else if (algo == "random") {
    st.algo = SearchAlgo::Random;
  } else {
    throw std::runtime_error("checkpoint has unknown algo \"" + algo + "\"");
  }
  st.seed = doc.at("seed").get<std::uint64_t>();
  st.baseline = doc.at("baseline").get<double>();
  st.baseline_initialized = doc.at("baseline_initialized").get<bool>();
  st.iterations = doc.at("iterations").get<int>();
  st.evals = doc.at("evals").get<int>();
  st.rng.set_state(doc.at("rng_state").get<std::string>());
  st.best_reward = doc.at("best_reward").get<double>();
  st.has_best = !doc.at("best_policy").is_null();
  if (st.has_best) {
    st.best_policy = policy_from_json_text(doc.at("best_policy").dump());
  }
  for (const auto& h : doc.at("history")) {
    st.history.push_back({h.at(0).get<int>(), h.at(1).get<double>()});
  }
  const auto& controller = doc.at("controller");
  ControllerConfig cfg;
  cfg.hidden = controller.at("hidden").get<int>();
  cfg.embed = controller.at("embed").get<int>();
  st.controller = Controller::zeros(cfg);
  for (auto& [name, vals] : st.controller.params()) {
    const auto loaded =
        controller.at("params").at(name).get<std::vector<double>>();
    if (loaded.size() != vals.size()) {
      throw std::runtime_error("checkpoint parameter \"" + name +
                               "\" has the wrong size");
    }
    vals = loaded;
  }
  return st;
}

double synthetic_separable_reward(const Policy& p) {
  int hits = 0;
  for (const auto& sub : p.subs) {
    for (const auto& op : sub.ops) {
      if (op.kind == AugKind::TranslateX) ++hits;
    }
  }
  return 10.0 * hits;  // percent of the 10 slots, 0..100
}

RewardEvaluator make_proxy_evaluator(std::uint64_t seed) {
  // Build the toy set once: 3 classes of 12x12 images, each class a
  // distinct smooth gradient, with per-image noise. Train 8 / test 4.
  struct Task {
    std::vector<Sample> train;
    std::vector<int> train_labels;
    std::vector<Sample> test;
    std::vector<int> test_labels;
    std::uint64_t seed;
  };
  auto task = std::make_shared<Task>();
  task->seed = seed;
  Rng rng(seed);
  const int side = 12;
  for (int cls = 0; cls < 3; ++cls) {
    double coef[3][3];
    for (auto& row : coef)
      for (auto& v : row) v = rng.uniform(-0.4, 0.4);
    auto make_image = [&](Rng& noise_rng) {
      Sample s;
      s.image = Tensor(1, 3, side, side);
      for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < side; ++y)
          for (int x = 0; x < side; ++x) {
            const double base = 0.5 + coef[ch][0] * (x / double(side)) +
                                coef[ch][1] * (y / double(side)) +
                                coef[ch][2] * (x * y / double(side * side));
            s.image.at(0, ch, y, x) = static_cast<float>(
                std::clamp(base + noise_rng.normal() * 0.03, 0.0, 1.0));
          }
      s.label_weights[cls] = 1.0;
      return s;
    };
    for (int i = 0; i < 8; ++i) {
      task->train.push_back(make_image(rng));
      task->train_labels.push_back(cls);
    }
    for (int i = 0; i < 4; ++i) {
      task->test.push_back(make_image(rng));
      task->test_labels.push_back(cls);
    }
  }

  return [task](const Policy& policy) {
    // Augment every training image deterministically, recompute class
    // centroids, then score nearest-centroid accuracy on the clean test
    // split. Reward is percent correct.
    const int side = task->train[0].image.h();
    std::vector<Tensor> centroids(3, Tensor(1, 3, side, side));
    std::vector<int> counts(3, 0);
    for (std::size_t i = 0; i < task->train.size(); ++i) {
      Rng rng(task->seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
      const Sample aug =
          apply_policy(task->train[i], policy, rng, &task->train);
      Tensor img = aug.image;
      if (img.h() != side || img.w() != side) {
        img = resize_bilinear(img, side, side);
      }
      const int cls = task->train_labels[i];
      for (std::size_t j = 0; j < img.size(); ++j)
        centroids[cls].data()[j] += img.data()[j];
      ++counts[cls];
    }
    for (int cls = 0; cls < 3; ++cls)
      for (auto& v : centroids[cls].data()) v /= counts[cls];

    int correct = 0;
    for (std::size_t i = 0; i < task->test.size(); ++i) {
      double best = 1e300;
      int arg = -1;
      for (int cls = 0; cls < 3; ++cls) {
        double dist = 0.0;
        for (std::size_t j = 0; j < centroids[cls].size(); ++j) {
          const double d =
              centroids[cls].data()[j] - task->test[i].image.data()[j];
          dist += d * d;
        }
        if (dist < best) {
          best = dist;
          arg = cls;
        }
      }
      correct += arg == task->test_labels[i];
    }
    return 100.0 * correct / static_cast<double>(task->test.size());
  };
}

}  // namespace afpnkit
