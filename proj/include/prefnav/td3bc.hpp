#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "prefnav/demo_pipeline.hpp"
#include "prefnav/mlp.hpp"
#include "prefnav/rollout.hpp"
#include "prefnav/sim_env.hpp"

namespace prefnav {

inline constexpr int kActionDim = 2;

// ---------------------------------------------------------------------------
// Configuration

struct TrainConfig {
  double gamma{0.99};
  double sigma_explore{0.2};
  double sigma_target{0.05};
  double target_clip{0.1};
  double lambda_rl{10.0 / 3.0};
  double lambda_bc{20.0 / 3.0};
  int batch_online{64};
  int batch_demo{64};
  double lr_actor{1e-4};
  double lr_critic{8e-4};
  double p_env{0.25};
  int n_ep{300};
  int epochs{800};
  int interactions_per_epoch{5000};
  int update_every{5};
  int eval_episodes{10};
  int preinit_steps{50000};
  std::size_t buffer_capacity{1000000};
  int lambda_switch_epoch{350};
  double lambda_rl_after{5.0};
  double lambda_bc_after{5.0};
  int lr_switch_epoch{650};
  double lr_actor_after{1e-5};
  double tau{0.005};
  int policy_delay{2};
  bool target_actor_in_targets{true};  // false: bootstrap with the live actor
  std::vector<int> hidden{256, 256, 256};
  int checkpoint_every{1};

  void validate() const {
    auto pos = [](double x, const char* what) {
      require(std::isfinite(x) && x > 0.0, ErrorCode::invalid_argument,
              std::string("train config: ") + what + " must be positive");
    };
    pos(gamma, "gamma");
    require(gamma <= 1.0, ErrorCode::invalid_argument, "train config: gamma must be <= 1");
    pos(sigma_explore, "sigma_explore");
    pos(sigma_target, "sigma_target");
    pos(target_clip, "target_clip");
    pos(lambda_rl, "lambda_rl");
    pos(lambda_bc, "lambda_bc");
    pos(lr_actor, "lr_actor");
    pos(lr_critic, "lr_critic");
    pos(lambda_rl_after, "lambda_rl_after");
    pos(lambda_bc_after, "lambda_bc_after");
    pos(lr_actor_after, "lr_actor_after");
    require(p_env >= 0.0 && p_env <= 1.0, ErrorCode::invalid_argument, "train config: p_env outside [0, 1]");
    require(tau > 0.0 && tau <= 1.0, ErrorCode::invalid_argument, "train config: tau outside (0, 1]");
    require(batch_online > 0 && batch_demo > 0 && n_ep > 0 && epochs > 0 &&
                interactions_per_epoch > 0 && update_every > 0 && eval_episodes >= 0 &&
                preinit_steps >= 0 && buffer_capacity > 0 && policy_delay > 0 &&
                lambda_switch_epoch > 0 && lr_switch_epoch > 0 && checkpoint_every >= 0,
            ErrorCode::invalid_argument, "train config: counts must be positive");
    require(!hidden.empty(), ErrorCode::invalid_argument, "train config: no hidden layers");
    for (int h : hidden) require(h > 0, ErrorCode::invalid_argument, "train config: hidden width must be > 0");
  }
};

/// Shrinks the schedule to `epochs` epochs of 1000 interactions with 5e3
/// pre-initialization steps and a 1e5 buffer. Switch epochs scale with the
/// epoch ratio (rounded), so 60 epochs switch at 26 and 49.
inline TrainConfig desk_scale(TrainConfig cfg, int epochs = 60) {
  require(epochs > 0, ErrorCode::invalid_argument, "desk_scale: epochs must be positive");
  const double ratio = static_cast<double>(epochs) / cfg.epochs;
  cfg.lambda_switch_epoch = std::max(1, static_cast<int>(std::lround(cfg.lambda_switch_epoch * ratio)));
  cfg.lr_switch_epoch = std::max(1, static_cast<int>(std::lround(cfg.lr_switch_epoch * ratio)));
  cfg.epochs = epochs;
  cfg.interactions_per_epoch = 1000;
  cfg.preinit_steps = 5000;
  cfg.buffer_capacity = 100000;
  return cfg;
}

/// Hyperparameters in force during 1-based `epoch`.
inline TrainConfig scheduled(const TrainConfig& cfg, int epoch) {
  TrainConfig out = cfg;
  if (epoch >= cfg.lambda_switch_epoch) {
    out.lambda_rl = cfg.lambda_rl_after;
    out.lambda_bc = cfg.lambda_bc_after;
  }
  if (epoch >= cfg.lr_switch_epoch) out.lr_actor = cfg.lr_actor_after;
  return out;
}

// ---------------------------------------------------------------------------
// Replay storage. Rows are packed float32 in network units:
//   [s (dim) | a (2) | r | s' (dim) | done | source]

class PackedTransitions {
 public:
  explicit PackedTransitions(std::size_t state_dim) : dim_(state_dim), width_(2 * state_dim + kActionDim + 3) {}

  [[nodiscard]] std::size_t state_dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }
  [[nodiscard]] std::size_t rows() const noexcept { return data_.size() / width_; }
  [[nodiscard]] const float* row(std::size_t i) const noexcept { return data_.data() + i * width_; }
  [[nodiscard]] const std::vector<float>& data() const noexcept { return data_; }

  [[nodiscard]] const float* state(std::size_t i) const noexcept { return row(i); }
  [[nodiscard]] const float* action(std::size_t i) const noexcept { return row(i) + dim_; }
  [[nodiscard]] float reward(std::size_t i) const noexcept { return row(i)[dim_ + kActionDim]; }
  [[nodiscard]] const float* next_state(std::size_t i) const noexcept { return row(i) + dim_ + kActionDim + 1; }
  [[nodiscard]] bool done(std::size_t i) const noexcept { return row(i)[width_ - 2] != 0.0f; }
  [[nodiscard]] Source source(std::size_t i) const noexcept {
    return row(i)[width_ - 1] != 0.0f ? Source::demo : Source::online;
  }

  void pack(const Transition& t, const Normalizer& n, float* out) const {
    require(t.s.size() == dim_ && t.s_next.size() == dim_, ErrorCode::dimension_mismatch,
            "buffer: state dimension mismatch");
    const auto s = n.normalize_state(t.s).values;
    const auto sn = n.normalize_state(t.s_next).values;
    const auto [uv, uw] = n.normalize_action(t.a);
    std::size_t k = 0;
    for (double x : s) out[k++] = static_cast<float>(x);
    out[k++] = static_cast<float>(uv);
    out[k++] = static_cast<float>(uw);
    out[k++] = static_cast<float>(t.r);
    for (double x : sn) out[k++] = static_cast<float>(x);
    out[k++] = t.done ? 1.0f : 0.0f;
    out[k++] = t.source == Source::demo ? 1.0f : 0.0f;
  }

  void append(const Transition& t, const Normalizer& n) {
    data_.resize(data_.size() + width_);
    pack(t, n, data_.data() + data_.size() - width_);
  }

  void overwrite(std::size_t i, const Transition& t, const Normalizer& n) { pack(t, n, data_.data() + i * width_); }

  /// FNV-1a over the packed bytes.
  [[nodiscard]] std::uint64_t hash() const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    const auto* bytes = reinterpret_cast<const unsigned char*>(data_.data());
    for (std::size_t i = 0; i < data_.size() * sizeof(float); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
    return h;
  }

 private:
  std::size_t dim_;
  std::size_t width_;
  std::vector<float> data_;
};

/// Ring buffer of online experience; overwrites the oldest row when full.
class ExperienceBuffer {
 public:
  ExperienceBuffer(std::size_t state_dim, std::size_t capacity) : table_(state_dim), capacity_(capacity) {
    require(capacity > 0, ErrorCode::invalid_argument, "experience buffer: capacity must be > 0");
  }

  void push(const Transition& t, const Normalizer& n) {
    if (table_.rows() < capacity_) {
      table_.append(t, n);
    } else {
      table_.overwrite(cursor_, t, n);
    }
    cursor_ = (cursor_ + 1) % capacity_;
    ++total_;
  }

  [[nodiscard]] std::size_t size() const noexcept { return table_.rows(); }
  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
  [[nodiscard]] std::size_t cursor() const noexcept { return cursor_; }
  [[nodiscard]] std::uint64_t total_pushed() const noexcept { return total_; }
  [[nodiscard]] const PackedTransitions& table() const noexcept { return table_; }

 private:
  PackedTransitions table_;
  std::size_t capacity_;
  std::size_t cursor_{0};
  std::uint64_t total_{0};
};

/// Demonstration transitions, fixed at construction.
class DemoBuffer {
 public:
  DemoBuffer(const std::vector<Transition>& transitions, const Normalizer& n, std::size_t state_dim)
      : table_(state_dim) {
    for (const auto& t : transitions) {
      require(t.source == Source::demo, ErrorCode::invalid_argument,
              "demo buffer: every transition must come from a demonstration");
      table_.append(t, n);
    }
    hash_ = table_.hash();
  }

  [[nodiscard]] std::size_t size() const noexcept { return table_.rows(); }
  [[nodiscard]] const PackedTransitions& table() const noexcept { return table_; }
  [[nodiscard]] std::uint64_t construction_hash() const noexcept { return hash_; }
  [[nodiscard]] std::uint64_t hash() const noexcept { return table_.hash(); }

 private:
  PackedTransitions table_;
  std::uint64_t hash_{0};
};

// ---------------------------------------------------------------------------
// Batches

/// k indices in [0, n): without replacement when n >= k, otherwise with.
template <typename Engine>
std::vector<std::size_t> draw_indices(std::size_t n, std::size_t k, Engine& rng) {
  require(n > 0, ErrorCode::sampling, "sample_batch: empty buffer");
  std::vector<std::size_t> out;
  out.reserve(k);
  if (n < k) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < k; ++i) out.push_back(pick(rng));
    return out;
  }
  // Floyd's algorithm
  for (std::size_t j = n - k; j < n; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j);
    const std::size_t t = pick(rng);
    out.push_back(std::find(out.begin(), out.end(), t) == out.end() ? t : j);
  }
  return out;
}

/// Columns are batch elements; demo elements come first.
template <typename Scalar = float>
struct TrainingBatch {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Matrix s, a, s_next;
  Vector r, done;
  std::vector<bool> demo_mask;
  Vector y;

  [[nodiscard]] Eigen::Index size() const noexcept { return s.cols(); }
  [[nodiscard]] std::size_t demo_count() const noexcept {
    return static_cast<std::size_t>(std::count(demo_mask.begin(), demo_mask.end(), true));
  }

  void resize(Eigen::Index dim, Eigen::Index n) {
    s.resize(dim, n);
    a.resize(kActionDim, n);
    s_next.resize(dim, n);
    r.resize(n);
    done.resize(n);
    demo_mask.assign(static_cast<std::size_t>(n), false);
  }

  void set_column(Eigen::Index j, const PackedTransitions& t, std::size_t i) {
    const auto dim = static_cast<Eigen::Index>(t.state_dim());
    for (Eigen::Index d = 0; d < dim; ++d) {
      s(d, j) = static_cast<Scalar>(t.state(i)[d]);
      s_next(d, j) = static_cast<Scalar>(t.next_state(i)[d]);
    }
    a(0, j) = static_cast<Scalar>(t.action(i)[0]);
    a(1, j) = static_cast<Scalar>(t.action(i)[1]);
    r(j) = static_cast<Scalar>(t.reward(i));
    done(j) = t.done(i) ? Scalar(1) : Scalar(0);
    demo_mask[static_cast<std::size_t>(j)] = t.source(i) == Source::demo;
  }
};

template <typename Scalar = float, typename Engine>
TrainingBatch<Scalar> sample_batch(const ExperienceBuffer& exp, const DemoBuffer& demo, Engine& rng,
                                   int b_online = 64, int b_demo = 64) {
  require(exp.size() > 0, ErrorCode::sampling, "sample_batch: experience buffer is empty");
  require(demo.size() > 0, ErrorCode::sampling, "sample_batch: demo buffer is empty");
  require(exp.table().state_dim() == demo.table().state_dim(), ErrorCode::dimension_mismatch,
          "sample_batch: buffers disagree on state dimension");
  TrainingBatch<Scalar> b;
  b.resize(static_cast<Eigen::Index>(exp.table().state_dim()), b_online + b_demo);
  Eigen::Index j = 0;
  for (std::size_t i : draw_indices(demo.size(), static_cast<std::size_t>(b_demo), rng))
    b.set_column(j++, demo.table(), i);
  for (std::size_t i : draw_indices(exp.size(), static_cast<std::size_t>(b_online), rng))
    b.set_column(j++, exp.table(), i);
  return b;
}

// ---------------------------------------------------------------------------
// Agent

template <typename Scalar = float>
struct AgentT {
  Mlp<Scalar> actor, critic1, critic2;
  Mlp<Scalar> actor_target, critic1_target, critic2_target;
  AdamState<Scalar> actor_opt, critic1_opt, critic2_opt;
  Normalizer normalizer;

  [[nodiscard]] std::size_t state_dim() const noexcept { return static_cast<std::size_t>(actor.input_dim()); }
};

using Agent = AgentT<float>;

inline std::vector<int> layer_dims(int input, const std::vector<int>& hidden, int output) {
  std::vector<int> d{input};
  d.insert(d.end(), hidden.begin(), hidden.end());
  d.push_back(output);
  return d;
}

template <typename Scalar = float, typename Engine>
AgentT<Scalar> make_agent(std::size_t state_dim, const Normalizer& normalizer,
                          const std::vector<int>& hidden, Engine& rng) {
  const int dim = static_cast<int>(state_dim);
  AgentT<Scalar> ag;
  ag.actor = init_params<Scalar>(rng, layer_dims(dim, hidden, kActionDim), Head::tanh);
  ag.critic1 = init_params<Scalar>(rng, layer_dims(dim + kActionDim, hidden, 1), Head::linear);
  ag.critic2 = init_params<Scalar>(rng, layer_dims(dim + kActionDim, hidden, 1), Head::linear);
  ag.actor_target = ag.actor;
  ag.critic1_target = ag.critic1;
  ag.critic2_target = ag.critic2;
  ag.actor_opt = AdamState<Scalar>(ag.actor);
  ag.critic1_opt = AdamState<Scalar>(ag.critic1);
  ag.critic2_opt = AdamState<Scalar>(ag.critic2);
  ag.normalizer = normalizer;
  return ag;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> critic_input(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& s,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> x(s.rows() + a.rows(), s.cols());
  x << s, a;
  return x;
}

/// y = r + gamma * (1 - done) * min_i Q_i'(s', clip(pi'(s') + clip(eps, -c, c), -1, 1))
template <typename Scalar, typename Engine>
typename TrainingBatch<Scalar>::Vector compute_targets(TrainingBatch<Scalar>& batch, const AgentT<Scalar>& ag,
                                                       const TrainConfig& cfg, Engine& rng) {
  using Matrix = typename TrainingBatch<Scalar>::Matrix;
  const Mlp<Scalar>& pi = cfg.target_actor_in_targets ? ag.actor_target : ag.actor;
  Matrix a_next = pi.predict(batch.s_next);
  std::normal_distribution<double> noise(0.0, cfg.sigma_target);
  for (Eigen::Index j = 0; j < a_next.cols(); ++j)
    for (Eigen::Index i = 0; i < a_next.rows(); ++i) {
      const double e = std::clamp(noise(rng), -cfg.target_clip, cfg.target_clip);
      a_next(i, j) = static_cast<Scalar>(std::clamp(static_cast<double>(a_next(i, j)) + e, -1.0, 1.0));
    }
  const Matrix x = critic_input<Scalar>(batch.s_next, a_next);
  const Matrix q1 = ag.critic1_target.predict(x);
  const Matrix q2 = ag.critic2_target.predict(x);
  batch.y.resize(batch.size());
  const auto g = static_cast<Scalar>(cfg.gamma);
  for (Eigen::Index j = 0; j < batch.size(); ++j) {
    const Scalar bootstrap = batch.done(j) != Scalar(0) ? Scalar(0) : g * std::min(q1(0, j), q2(0, j));
    batch.y(j) = batch.r(j) + bootstrap;
  }
  return batch.y;
}

struct CriticLoss {
  double critic1{0.0};
  double critic2{0.0};
};

/// Mean squared error of each critic against batch.y, one optimizer step each.
template <typename Scalar>
CriticLoss critic_update(AgentT<Scalar>& ag, const TrainingBatch<Scalar>& batch, const TrainConfig& cfg) {
  using Matrix = typename TrainingBatch<Scalar>::Matrix;
  require(batch.y.size() == batch.size(), ErrorCode::invalid_argument, "critic_update: targets not computed");
  const Matrix x = critic_input<Scalar>(batch.s, batch.a);
  const auto n = static_cast<Scalar>(batch.size());
  auto one = [&](Mlp<Scalar>& critic, AdamState<Scalar>& opt) {
    const auto cache = critic.forward(x);
    const Matrix residual = cache.output - batch.y.transpose();
    const double loss = static_cast<double>(residual.squaredNorm()) / static_cast<double>(batch.size());
    require(std::isfinite(loss), ErrorCode::non_finite, "critic_update: non-finite loss");
    const Matrix grad_out = (Scalar(2) / n) * residual;
    adam_step(critic, critic.backward(cache, grad_out).params, opt, cfg.lr_critic);
    return loss;
  };
  CriticLoss out;
  out.critic1 = one(ag.critic1, ag.critic1_opt);
  out.critic2 = one(ag.critic2, ag.critic2_opt);
  return out;
}

template <typename Scalar>
struct ActorGradient {
  MlpGradients<Scalar> grad;  // gradient of lambda_rl * J - lambda_bc * L_bc (ascent direction)
  double j{0.0};              // mean over the batch of min(Q1, Q2)(s, pi(s))
  double l_bc{0.0};           // summed squared action error over demo elements
};

template <typename Scalar>
ActorGradient<Scalar> actor_gradient(const AgentT<Scalar>& ag, const TrainingBatch<Scalar>& batch,
                                     const TrainConfig& cfg) {
  using Matrix = typename TrainingBatch<Scalar>::Matrix;
  const Eigen::Index n = batch.size();
  const auto actor_cache = ag.actor.forward(batch.s);
  const Matrix& pi = actor_cache.output;
  const Matrix x = critic_input<Scalar>(batch.s, pi);
  const auto c1 = ag.critic1.forward(x);
  const auto c2 = ag.critic2.forward(x);

  ActorGradient<Scalar> out;
  Matrix g1 = Matrix::Zero(1, n), g2 = Matrix::Zero(1, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const bool first = c1.output(0, j) <= c2.output(0, j);
    out.j += static_cast<double>(first ? c1.output(0, j) : c2.output(0, j));
    (first ? g1 : g2)(0, j) = Scalar(1) / static_cast<Scalar>(n);
  }
  out.j /= static_cast<double>(n);
  const Matrix dq_da = ag.critic1.input_gradient(c1, g1).bottomRows(kActionDim) +
                       ag.critic2.input_gradient(c2, g2).bottomRows(kActionDim);

  Matrix dbc_da = Matrix::Zero(kActionDim, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!batch.demo_mask[static_cast<std::size_t>(j)]) continue;
    const auto err = (pi.col(j) - batch.a.col(j)).eval();
    out.l_bc += static_cast<double>(err.squaredNorm());
    dbc_da.col(j) = Scalar(2) * err;
  }

  const Matrix d_total = static_cast<Scalar>(cfg.lambda_rl) * dq_da - static_cast<Scalar>(cfg.lambda_bc) * dbc_da;
  out.grad = ag.actor.backward(actor_cache, d_total).params;
  return out;
}

struct ActorStats {
  double j{0.0};
  double l_bc{0.0};
};

/// One ascent step on lambda_rl * J - lambda_bc * L_bc. Targets are untouched.
template <typename Scalar>
ActorStats actor_update(AgentT<Scalar>& ag, const TrainingBatch<Scalar>& batch, const TrainConfig& cfg) {
  ActorGradient<Scalar> g = actor_gradient(ag, batch, cfg);
  require(std::isfinite(g.j) && std::isfinite(g.l_bc), ErrorCode::non_finite,
          "actor_update: non-finite objective");
  for (auto& layer : g.grad) {
    layer.weight = -layer.weight;
    layer.bias = -layer.bias;
  }
  adam_step(ag.actor, g.grad, ag.actor_opt, cfg.lr_actor);
  return {g.j, g.l_bc};
}

template <typename Scalar>
void soft_update(AgentT<Scalar>& ag, double tau) {
  soft_update(ag.actor_target, ag.actor, tau);
  soft_update(ag.critic1_target, ag.critic1, tau);
  soft_update(ag.critic2_target, ag.critic2, tau);
}

struct UnitAction {
  double v{0.0};
  double omega{0.0};
};

/// pi(s) + N(0, sigma) per coordinate, clamped to [-1, 1]. sigma = 0 is deterministic.
template <typename Scalar, typename Engine>
UnitAction select_unit_action(const AgentT<Scalar>& ag, const StateVector& s, double sigma, Engine& rng) {
  require(s.size() == ag.state_dim(), ErrorCode::dimension_mismatch, "select_action: state dimension mismatch");
  const auto u = ag.normalizer.normalize_state(s).values;
  typename Mlp<Scalar>::Matrix x(static_cast<Eigen::Index>(u.size()), 1);
  for (std::size_t i = 0; i < u.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = static_cast<Scalar>(u[i]);
  const auto y = ag.actor.predict(x);
  UnitAction a{static_cast<double>(y(0, 0)), static_cast<double>(y(1, 0))};
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma);
    a.v += noise(rng);
    a.omega += noise(rng);
  }
  a.v = std::clamp(a.v, -1.0, 1.0);
  a.omega = std::clamp(a.omega, -1.0, 1.0);
  return a;
}

template <typename Scalar, typename Engine>
Action select_action(const AgentT<Scalar>& ag, const StateVector& s, double sigma, Engine& rng) {
  const UnitAction u = select_unit_action(ag, s, sigma, rng);
  return ag.normalizer.denormalize_action(u.v, u.omega);
}

template <typename Scalar>
Policy greedy_policy_of(const AgentT<Scalar>& ag) {
  return [&ag](const StateVector& s) {
    Rng unused(0);
    return select_action(ag, s, 0.0, unused);
  };
}

/// Noiseless episodes from env resets.
template <typename Scalar>
EvalResult evaluate(const AgentT<Scalar>& ag, const SimEnv& env, const ResetConfig& reset, int n_episodes,
                    Rng& rng, double gamma = 0.99) {
  return evaluate_policy(greedy_policy_of(ag), env, reset, n_episodes, rng, gamma);
}

// ---------------------------------------------------------------------------
// Training loop

struct EpochLog {
  int epoch{0};
  std::uint64_t interactions{0};
  std::size_t buffer_size{0};
  int critic_updates{0};
  int actor_updates{0};
  double critic_loss{0.0};  // mean over the epoch's updates, both critics averaged
  double actor_j{0.0};
  double actor_bc{0.0};
  double lambda_rl{0.0};
  double lambda_bc{0.0};
  double lr_actor{0.0};
  EvalSummary eval;
};

struct TrainHooks {
  std::function<void(const Agent&, const EpochLog&)> on_epoch;
  std::function<void(const Agent&, const Error&)> on_halt;
  std::function<void(const EpochLog&)> on_log;
};

struct TrainResult {
  Agent agent;
  std::vector<EpochLog> log;
  std::uint64_t interactions{0};
};

inline Rng eval_rng(std::uint64_t seed, int epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x65766131u};
  return Rng(seq);
}

/// Pre-fills the experience buffer with uniform random actions, then runs the
/// epoch schedule: exploratory interaction, one critic update every
/// update_every interactions, one actor + target update every policy_delay
/// critic updates, and eval_episodes noiseless evaluations per epoch.
inline TrainResult train_loop(const TrainConfig& cfg, const SimEnv& env, ResetConfig reset,
                              const DemoBuffer& demo, std::uint64_t seed, const TrainHooks& hooks = {}) {
  cfg.validate();
  require(env.n_ep() == cfg.n_ep, ErrorCode::invalid_argument, "train: environment n_ep differs from config");
  require(demo.size() > 0, ErrorCode::sampling, "train: demo buffer is empty");
  require(demo.table().state_dim() == env.state_dim(), ErrorCode::dimension_mismatch,
          "train: demo state dimension does not match the environment");
  reset.p_env = cfg.p_env;
  Rng rng(seed);
  TrainResult res{make_agent<float>(env.state_dim(), env.normalizer(), cfg.hidden, rng), {}, 0};
  Agent& ag = res.agent;
  ExperienceBuffer exp(env.state_dim(), cfg.buffer_capacity);
  const Normalizer& norm = env.normalizer();

  EpisodeState ep = env.reset(reset, rng);
  StateVector s = observe(ep.scene, ep.robot);
  auto interact = [&](UnitAction u) {
    const Action a = norm.denormalize_action(u.v, u.omega);
    StepResult r = env.step(ep, a);
    const bool done = r.done_reason != DoneReason::running;
    exp.push({s, a, r.reward, r.state, done, Source::online}, norm);
    ++res.interactions;
    if (done) {
      ep = env.reset(reset, rng);
      s = observe(ep.scene, ep.robot);
    } else {
      s = std::move(r.state);
    }
  };

  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int i = 0; i < cfg.preinit_steps; ++i) {
    const double uv = unit(rng);
    const double uw = unit(rng);
    interact({uv, uw});
  }

  int critic_updates = 0;
  try {
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
      const TrainConfig now = scheduled(cfg, epoch);
      EpochLog log;
      log.epoch = epoch;
      log.lambda_rl = now.lambda_rl;
      log.lambda_bc = now.lambda_bc;
      log.lr_actor = now.lr_actor;
      for (int i = 0; i < cfg.interactions_per_epoch; ++i) {
        interact(select_unit_action(ag, s, cfg.sigma_explore, rng));
        if ((i + 1) % cfg.update_every != 0) continue;
        auto batch = sample_batch<float>(exp, demo, rng, cfg.batch_online, cfg.batch_demo);
        compute_targets(batch, ag, now, rng);
        const CriticLoss cl = critic_update(ag, batch, now);
        log.critic_loss += 0.5 * (cl.critic1 + cl.critic2);
        ++log.critic_updates;
        if (++critic_updates % cfg.policy_delay == 0) {
          const ActorStats st = actor_update(ag, batch, now);
          soft_update(ag, cfg.tau);
          log.actor_j += st.j;
          log.actor_bc += st.l_bc;
          ++log.actor_updates;
        }
      }
      if (log.critic_updates > 0) log.critic_loss /= log.critic_updates;
      if (log.actor_updates > 0) {
        log.actor_j /= log.actor_updates;
        log.actor_bc /= log.actor_updates;
      }
      log.interactions = res.interactions;
      log.buffer_size = exp.size();
      Rng erng = eval_rng(seed, epoch);
      log.eval = evaluate(ag, env, reset, cfg.eval_episodes, erng, cfg.gamma).summary;
      res.log.push_back(log);
      if (hooks.on_log) hooks.on_log(log);
      if (hooks.on_epoch) hooks.on_epoch(ag, log);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::non_finite && hooks.on_halt) hooks.on_halt(ag, e);
    throw;
  }
  return res;
}

}  // namespace prefnav
