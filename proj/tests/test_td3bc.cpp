#include <gtest/gtest.h>

#include <set>

#include "gradcheck.hpp"
#include "prefnav/checkpoint.hpp"
#include "prefnav/demo_pipeline.hpp"
#include "prefnav/scripted_demo.hpp"
#include "prefnav/td3bc.hpp"

using namespace prefnav;
using MatrixD = Eigen::MatrixXd;

namespace {

const SimEnv& room_env() {
  static const SimEnv env(room_environment(), {}, {}, 60);
  return env;
}

Transition random_transition(std::size_t dim, Source src, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.0, 5.0), a(-kPi, kPi), v(0.0, 0.25), w(-1.5, 1.5);
  auto state = [&] {
    StateVector s;
    for (std::size_t i = 0; i < dim; ++i) s.values.push_back(i % 2 == 0 && i != 2 ? d(rng) : a(rng));
    return s;
  };
  return {state(), {v(rng), w(rng)}, 0.0, state(), false, src};
}

std::vector<Transition> random_transitions(std::size_t n, Source src, std::mt19937_64& rng) {
  std::vector<Transition> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_transition(room_env().state_dim(), src, rng));
  return out;
}

ExperienceBuffer filled_experience(std::size_t n, std::mt19937_64& rng) {
  ExperienceBuffer exp(room_env().state_dim(), 10000);
  for (const auto& t : random_transitions(n, Source::online, rng)) exp.push(t, room_env().normalizer());
  return exp;
}

std::vector<Transition> scripted_transitions(int count) {
  std::vector<Transition> out;
  const auto scenes = anchor_scenes(room_environment());
  for (int i = 0; i < count; ++i) {
    const Scene& sc = scenes[static_cast<std::size_t>(i) % scenes.size()];
    const auto raw = scripted_demo(DemoStyle::wide_curve, sc, static_cast<std::uint64_t>(i));
    const auto pd = process_demo(raw, sc, room_env());
    for (const auto& v : pd.augmented.variants) out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

AgentT<double> small_agent(std::uint64_t seed, int dim = 6, std::vector<int> hidden = {8, 8}) {
  std::mt19937_64 rng(seed);
  auto ag = make_agent<double>(static_cast<std::size_t>(dim), Normalizer(1.0, 0.25, 1.5), hidden, rng);
  std::uniform_real_distribution<double> b(-0.3, 0.3);
  for (auto* net : {&ag.actor, &ag.critic1, &ag.critic2})
    for (auto& l : net->mutable_layers())
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = b(rng);
  ag.actor_target = ag.actor;
  ag.critic1_target = ag.critic1;
  ag.critic2_target = ag.critic2;
  return ag;
}

// Independent target: noise negligible, so y = r + gamma (1 - d) min Q'(s', clip(pi(s'))).
Eigen::VectorXd oracle_targets(const AgentT<double>& ag, const TrainingBatch<double>& b, double gamma,
                               bool target_actor) {
  Eigen::VectorXd y(b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    const MatrixD sn = b.s_next.col(j);
    MatrixD a = (target_actor ? ag.actor_target : ag.actor).predict(sn);
    a = a.cwiseMax(-1.0).cwiseMin(1.0);
    MatrixD x(sn.rows() + 2, 1);
    x << sn, a;
    const double q = std::min(ag.critic1_target.predict(x)(0, 0), ag.critic2_target.predict(x)(0, 0));
    y(j) = b.r(j) + (b.done(j) != 0.0 ? 0.0 : gamma * q);
  }
  return y;
}

}  // namespace

// ---------------------------------------------------------------------------

TEST(DrawIndices, WithoutReplacementWhenPossible) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const auto idx = draw_indices(100, 64, rng);
    ASSERT_EQ(idx.size(), 64u);
    EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 64u);
    for (auto i : idx) EXPECT_LT(i, 100u);
  }
  const auto all = draw_indices(64, 64, rng);
  EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), 64u);
}

TEST(DrawIndices, UniformInclusion) {
  std::mt19937_64 rng(2);
  std::vector<int> hits(10, 0);
  const int reps = 40000;
  for (int rep = 0; rep < reps; ++rep)
    for (auto i : draw_indices(10, 3, rng)) ++hits[i];
  for (int h : hits) EXPECT_NEAR(static_cast<double>(h) / reps, 0.3, 0.01);
}

TEST(DrawIndices, EmptyRejected) {
  std::mt19937_64 rng(3);
  try {
    (void)draw_indices(0, 4, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::sampling);
  }
}

TEST(SampleBatch, DemoFirstThenOnline) {
  std::mt19937_64 rng(4);
  const auto exp = filled_experience(500, rng);
  const DemoBuffer demo(random_transitions(200, Source::demo, rng), room_env().normalizer(), room_env().state_dim());
  const auto b = sample_batch<float>(exp, demo, rng);
  ASSERT_EQ(b.size(), 128);
  EXPECT_EQ(b.demo_count(), 64u);
  for (std::size_t j = 0; j < 128; ++j) EXPECT_EQ(b.demo_mask[j], j < 64);
  std::set<float> firsts;
  for (Eigen::Index j = 0; j < 64; ++j) firsts.insert(b.s(0, j));
  EXPECT_EQ(firsts.size(), 64u);
}

TEST(SampleBatch, SmallDemoBufferDrawsWithReplacement) {
  std::mt19937_64 rng(5);
  const auto exp = filled_experience(500, rng);
  const auto demo_t = random_transitions(10, Source::demo, rng);
  const DemoBuffer demo(demo_t, room_env().normalizer(), room_env().state_dim());
  const auto b = sample_batch<float>(exp, demo, rng);
  EXPECT_EQ(b.demo_count(), 64u);
  std::set<float> firsts;
  for (Eigen::Index j = 0; j < 64; ++j) firsts.insert(b.s(0, j));
  EXPECT_LE(firsts.size(), 10u);
  std::set<float> table;
  for (std::size_t i = 0; i < demo.size(); ++i) table.insert(demo.table().state(i)[0]);
  for (float f : firsts) EXPECT_TRUE(table.count(f));
}

TEST(SampleBatch, Deterministic) {
  std::mt19937_64 rng(6);
  const auto exp = filled_experience(300, rng);
  const DemoBuffer demo(random_transitions(100, Source::demo, rng), room_env().normalizer(), room_env().state_dim());
  std::mt19937_64 a(9), b(9);
  const auto b1 = sample_batch<float>(exp, demo, a);
  const auto b2 = sample_batch<float>(exp, demo, b);
  EXPECT_EQ(b1.s, b2.s);
  EXPECT_EQ(b1.a, b2.a);
  EXPECT_EQ(b1.r, b2.r);
}

TEST(SampleBatch, EmptyBuffersRejected) {
  std::mt19937_64 rng(7);
  const ExperienceBuffer empty(room_env().state_dim(), 10);
  const DemoBuffer demo(random_transitions(5, Source::demo, rng), room_env().normalizer(), room_env().state_dim());
  try {
    (void)sample_batch<float>(empty, demo, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::sampling);
  }
  const DemoBuffer none({}, room_env().normalizer(), room_env().state_dim());
  EXPECT_THROW((void)sample_batch<float>(filled_experience(5, rng), none, rng), Error);
}

TEST(Buffers, RingOverwritesOldest) {
  std::mt19937_64 rng(8);
  const auto ts = random_transitions(5, Source::online, rng);
  ExperienceBuffer exp(room_env().state_dim(), 3);
  for (const auto& t : ts) exp.push(t, room_env().normalizer());
  EXPECT_EQ(exp.size(), 3u);
  EXPECT_EQ(exp.cursor(), 2u);
  EXPECT_EQ(exp.total_pushed(), 5u);
  PackedTransitions expect(room_env().state_dim());
  expect.append(ts[3], room_env().normalizer());
  expect.append(ts[4], room_env().normalizer());
  expect.append(ts[2], room_env().normalizer());
  EXPECT_EQ(exp.table().data(), expect.data());
}

TEST(Buffers, PackedLayout) {
  std::mt19937_64 rng(9);
  auto t = random_transition(room_env().state_dim(), Source::demo, rng);
  t.r = 5.0;
  t.done = true;
  t.a = {0.25, -1.5};
  PackedTransitions p(room_env().state_dim());
  p.append(t, room_env().normalizer());
  EXPECT_EQ(p.width(), 2 * room_env().state_dim() + 5);
  EXPECT_EQ(p.reward(0), 5.0f);
  EXPECT_TRUE(p.done(0));
  EXPECT_EQ(p.source(0), Source::demo);
  EXPECT_FLOAT_EQ(p.action(0)[0], 1.0f);
  EXPECT_FLOAT_EQ(p.action(0)[1], -1.0f);
  const auto norm = room_env().normalizer().normalize_state(t.s).values;
  for (std::size_t i = 0; i < norm.size(); ++i) EXPECT_FLOAT_EQ(p.state(0)[i], static_cast<float>(norm[i]));
}

TEST(Buffers, DemoBufferRejectsOnline) {
  std::mt19937_64 rng(10);
  EXPECT_THROW(DemoBuffer(random_transitions(3, Source::online, rng), room_env().normalizer(), room_env().state_dim()),
               Error);
}

// ---------------------------------------------------------------------------

TEST(Targets, TerminalDemoGoalIsFive) {
  std::mt19937_64 rng(11);
  auto ag = small_agent(1);
  auto b = gradcheck::toy_batch(6, 2, 2, rng);
  b.r(0) = 5.0;
  b.done(0) = 1.0;
  TrainConfig cfg;
  compute_targets(b, ag, cfg, rng);
  EXPECT_EQ(b.y(0), 5.0);
}

TEST(Targets, MatchOracle) {
  std::mt19937_64 rng(12);
  TrainConfig cfg;
  cfg.sigma_target = 1e-14;
  for (bool target_actor : {true, false}) {
    auto ag = small_agent(2);
    // live actor drifts from the target actor
    for (auto& l : ag.actor.mutable_layers()) l.weight *= 1.7;
    cfg.target_actor_in_targets = target_actor;
    auto b = gradcheck::toy_batch(6, 8, 8, rng);
    std::uniform_real_distribution<double> r(-5.0, 5.0);
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      b.r(j) = r(rng);
      b.done(j) = j % 3 == 0 ? 1.0 : 0.0;
    }
    compute_targets(b, ag, cfg, rng);
    EXPECT_LE((b.y - oracle_targets(ag, b, cfg.gamma, target_actor)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Targets, HandSetOneUnitToy) {
  // critics ignore the action: Q1 = 2 s + 0.5, Q2 = relu(s) - 1 through one hidden unit
  std::mt19937_64 rng(13);
  auto ag = make_agent<double>(1, Normalizer(1.0, 0.25, 1.5), {1}, rng);
  auto set = [](Mlp<double>& q, double w0, double b0, double w1, double b1) {
    auto& L = q.mutable_layers();
    L[0].weight << w0, 0.0, 0.0;
    L[0].bias << b0;
    L[1].weight << w1;
    L[1].bias << b1;
  };
  set(ag.critic1_target, 1.0, 0.0, 2.0, 0.5);
  set(ag.critic2_target, 1.0, 0.0, 1.0, -1.0);
  TrainingBatch<double> b;
  b.resize(1, 2);
  b.s.setZero();
  b.a.setZero();
  b.s_next << 0.5, 2.0;
  b.r << 0.1, -0.2;
  b.done << 0.0, 0.0;
  TrainConfig cfg;
  compute_targets(b, ag, cfg, rng);
  // s' = 0.5: Q1 = 1.5, Q2 = -0.5; s' = 2: Q1 = 4.5, Q2 = 1
  EXPECT_NEAR(b.y(0), 0.1 + 0.99 * -0.5, 1e-12);
  EXPECT_NEAR(b.y(1), -0.2 + 0.99 * 1.0, 1e-12);
}

TEST(Targets, NoiseIsClipped) {
  // Q' = a_v exactly, actor outputs 0: the target spread is bounded by the clip.
  std::mt19937_64 rng(14);
  auto ag = make_agent<double>(1, Normalizer(1.0, 0.25, 1.5), {1}, rng);
  for (auto* q : {&ag.critic1_target, &ag.critic2_target}) {
    auto& L = q->mutable_layers();
    L[0].weight << 0.0, 1.0, 0.0;
    L[0].bias << 1.0;
    L[1].weight << 1.0;
    L[1].bias << -1.0;
  }
  for (auto& l : ag.actor_target.mutable_layers()) l.weight.setZero();
  TrainingBatch<double> b;
  b.resize(1, 2000);
  b.s.setZero();
  b.s_next.setZero();
  b.a.setZero();
  b.r.setZero();
  b.done.setZero();
  TrainConfig cfg;
  compute_targets(b, ag, cfg, rng);
  EXPECT_LE(b.y.cwiseAbs().maxCoeff(), 0.99 * 0.1 + 1e-12);
  EXPECT_GT(b.y.cwiseAbs().maxCoeff(), 0.99 * 0.09);
}

// ---------------------------------------------------------------------------

TEST(Critic, LossMatchesRecomputation) {
  std::mt19937_64 rng(15);
  auto ag = small_agent(3);
  auto b = gradcheck::toy_batch(6, 6, 6, rng);
  b.y = Eigen::VectorXd::Random(b.size());
  const MatrixD x = critic_input<double>(b.s, b.a);
  const double l1 = (ag.critic1.predict(x).transpose() - b.y).squaredNorm() / static_cast<double>(b.size());
  const double l2 = (ag.critic2.predict(x).transpose() - b.y).squaredNorm() / static_cast<double>(b.size());
  const auto loss = critic_update(ag, b, TrainConfig{});
  EXPECT_NEAR(loss.critic1, l1, 1e-12);
  EXPECT_NEAR(loss.critic2, l2, 1e-12);
}

TEST(Critic, LossDecreasesOnFrozenBatch) {
  std::mt19937_64 rng(16);
  auto ag = small_agent(4, 6, {32, 32});
  auto b = gradcheck::toy_batch(6, 16, 16, rng);
  b.y = Eigen::VectorXd::Random(b.size());
  TrainConfig cfg;
  const auto first = critic_update(ag, b, cfg);
  CriticLoss last;
  for (int i = 0; i < 100; ++i) last = critic_update(ag, b, cfg);
  EXPECT_LT(last.critic1, 0.5 * first.critic1);
  EXPECT_LT(last.critic2, 0.5 * first.critic2);
}

TEST(Critic, RequiresTargets) {
  std::mt19937_64 rng(17);
  auto ag = small_agent(5);
  auto b = gradcheck::toy_batch(6, 2, 2, rng);
  EXPECT_THROW((void)critic_update(ag, b, TrainConfig{}), Error);
}

// ---------------------------------------------------------------------------

TEST(Actor, CombinedObjectiveGradientCheck) {
  std::mt19937_64 rng(18);
  for (int rep = 0; rep < 20; ++rep) {
    const auto ag = small_agent(100 + static_cast<std::uint64_t>(rep));
    const auto b = gradcheck::toy_batch(6, 5, 5, rng);
    TrainConfig cfg;
    EXPECT_LE(gradcheck::actor_objective_error(ag, b, cfg), 1e-4) << rep;
    cfg.lambda_bc = 1e-9;
    EXPECT_LE(gradcheck::actor_objective_error(ag, b, cfg), 1e-4) << rep;
  }
}

TEST(Actor, ReportsObjectiveTerms) {
  std::mt19937_64 rng(19);
  const auto ag = small_agent(6);
  const auto b = gradcheck::toy_batch(6, 4, 4, rng);
  TrainConfig cfg;
  cfg.lambda_rl = 1.0;
  cfg.lambda_bc = 0.0;
  const auto g = actor_gradient(ag, b, cfg);
  EXPECT_NEAR(g.j, gradcheck::actor_objective(ag, b, cfg), 1e-12);
  const MatrixD pi = ag.actor.predict(b.s);
  EXPECT_NEAR(g.l_bc, (pi.leftCols(4) - b.a.leftCols(4)).squaredNorm(), 1e-12);
}

TEST(Actor, BcGradientVanishesAtDemoActions) {
  std::mt19937_64 rng(20);
  const auto ag = small_agent(7);
  auto b = gradcheck::toy_batch(6, 4, 4, rng);
  b.a.leftCols(4) = ag.actor.predict(b.s).leftCols(4);
  TrainConfig with, without;
  with.lambda_bc = 5.0;
  without.lambda_bc = 0.0;
  const auto g1 = actor_gradient(ag, b, with);
  const auto g0 = actor_gradient(ag, b, without);
  EXPECT_NEAR(g1.l_bc, 0.0, 1e-24);
  for (std::size_t l = 0; l < g1.grad.size(); ++l)
    EXPECT_LE((g1.grad[l].weight - g0.grad[l].weight).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Actor, BcMaskedOnOnlineElements) {
  std::mt19937_64 rng(21);
  const auto ag = small_agent(8);
  auto b = gradcheck::toy_batch(6, 4, 4, rng);
  TrainConfig cfg;
  const auto g1 = actor_gradient(ag, b, cfg);
  b.a.rightCols(4).setConstant(0.9);
  const auto g2 = actor_gradient(ag, b, cfg);
  EXPECT_EQ(g1.l_bc, g2.l_bc);
  for (std::size_t l = 0; l < g1.grad.size(); ++l) EXPECT_EQ(g1.grad[l].weight, g2.grad[l].weight);
}

TEST(Actor, UpdateAscendsAndSparesTargets) {
  std::mt19937_64 rng(22);
  auto ag = small_agent(9);
  const auto b = gradcheck::toy_batch(6, 8, 8, rng);
  TrainConfig cfg;
  cfg.lr_actor = 1e-3;
  const auto before = ag;
  const double f0 = gradcheck::actor_objective(ag, b, cfg);
  for (int i = 0; i < 20; ++i) (void)actor_update(ag, b, cfg);
  EXPECT_GT(gradcheck::actor_objective(ag, b, cfg), f0);
  for (std::size_t l = 0; l < before.actor.layers().size(); ++l) {
    EXPECT_EQ(ag.actor_target.layers()[l].weight, before.actor_target.layers()[l].weight);
    EXPECT_EQ(ag.critic1.layers()[l].weight, before.critic1.layers()[l].weight);
  }
}

TEST(Actor, BehaviourCloningConverges) {
  std::mt19937_64 rng(23);
  auto ag = small_agent(10, 6, {32, 32});
  auto b = gradcheck::toy_batch(6, 16, 0, rng);
  b.a *= 0.8;
  TrainConfig cfg;
  cfg.lambda_rl = 0.0;
  cfg.lambda_bc = 1.0;
  cfg.lr_actor = 3e-3;
  const double first = actor_update(ag, b, cfg).l_bc;
  double last = first;
  for (int i = 0; i < 300; ++i) last = actor_update(ag, b, cfg).l_bc;
  EXPECT_LT(last, 0.1 * first);
}

TEST(Agent, SoftUpdateAllTargets) {
  auto ag = small_agent(11);
  auto live = small_agent(12);
  live.actor_target = ag.actor_target;
  live.critic1_target = ag.critic1_target;
  live.critic2_target = ag.critic2_target;
  const auto t0 = ag.critic2_target.layers();
  soft_update(live, 0.25);
  const MatrixD expect = 0.25 * live.critic2.layers()[0].weight + 0.75 * t0[0].weight;
  EXPECT_LE((live.critic2_target.layers()[0].weight - expect).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NE(live.actor_target.layers()[0].weight, ag.actor_target.layers()[0].weight);
}

TEST(Agent, ShapesFollowStateDimension) {
  std::mt19937_64 rng(24);
  const Agent ag = make_agent<float>(room_env().state_dim(), room_env().normalizer(), {256, 256, 256}, rng);
  EXPECT_EQ(ag.actor.dims(), (std::vector<int>{12, 256, 256, 256, 2}));
  EXPECT_EQ(ag.critic1.dims(), (std::vector<int>{14, 256, 256, 256, 1}));
  EXPECT_EQ(ag.actor.head(), Head::tanh);
  EXPECT_EQ(ag.critic2.head(), Head::linear);
}

TEST(SelectAction, NoiseStdAndCaps) {
  std::mt19937_64 rng(25);
  Agent ag = make_agent<float>(room_env().state_dim(), room_env().normalizer(), {16}, rng);
  for (auto& l : ag.actor.mutable_layers()) l.weight.setZero();
  const auto ep = room_env().start(anchor_scenes(room_environment())[0]);
  const StateVector s = observe(ep.scene, ep.robot);
  double sum = 0, sq = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const UnitAction u = select_unit_action(ag, s, 0.2, rng);
    sum += u.v;
    sq += u.v * u.v;
    const Action a = select_action(ag, s, 0.2, rng);
    ASSERT_TRUE(room_env().params().within_caps(a));
    ASSERT_GE(a.v, 0.0);
  }
  const double mean = sum / n;
  EXPECT_NEAR(std::sqrt(sq / n - mean * mean), 0.2, 0.01);
  EXPECT_NEAR(mean, 0.0, 0.01);
  const Action greedy = select_action(ag, s, 0.0, rng);
  EXPECT_NEAR(greedy.v, 0.125, 1e-9);
  EXPECT_EQ(greedy.omega, 0.0);
}

// ---------------------------------------------------------------------------

TEST(Schedule, DeskScaleSwitches) {
  const TrainConfig cfg = desk_scale(TrainConfig{});
  EXPECT_EQ(cfg.epochs, 60);
  EXPECT_EQ(cfg.lambda_switch_epoch, 26);
  EXPECT_EQ(cfg.lr_switch_epoch, 49);
  EXPECT_EQ(cfg.interactions_per_epoch, 1000);
  EXPECT_EQ(cfg.preinit_steps, 5000);
  EXPECT_EQ(cfg.buffer_capacity, 100000u);
  const auto before = scheduled(cfg, 25), after = scheduled(cfg, 26);
  EXPECT_DOUBLE_EQ(before.lambda_bc / before.lambda_rl, 2.0);
  EXPECT_DOUBLE_EQ(after.lambda_bc / after.lambda_rl, 1.0);
  EXPECT_EQ(scheduled(cfg, 48).lr_actor, 1e-4);
  EXPECT_EQ(scheduled(cfg, 49).lr_actor, 1e-5);
  const TrainConfig full;
  EXPECT_DOUBLE_EQ(scheduled(full, 349).lambda_rl, 10.0 / 3.0);
  EXPECT_DOUBLE_EQ(scheduled(full, 350).lambda_rl, 5.0);
  EXPECT_EQ(scheduled(full, 650).lr_actor, 1e-5);
}

TEST(Schedule, ConfigValidation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.tau = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.hidden = {};
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.p_env = 1.2;
  EXPECT_THROW(c.validate(), Error);
}

// ---------------------------------------------------------------------------

namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.n_ep = 60;
  cfg.epochs = 2;
  cfg.interactions_per_epoch = 50;
  cfg.preinit_steps = 200;
  cfg.buffer_capacity = 1000;
  cfg.hidden = {16, 16};
  cfg.eval_episodes = 2;
  return cfg;
}

}  // namespace

TEST(TrainLoop, CountsAndDemoHashUnchanged) {
  const auto demos = scripted_transitions(2);
  const DemoBuffer demo(demos, room_env().normalizer(), room_env().state_dim());
  ResetConfig reset;
  reset.anchors = anchor_scenes(room_environment());
  std::vector<EpochLog> seen;
  TrainHooks hooks;
  hooks.on_log = [&](const EpochLog& l) { seen.push_back(l); };
  const auto res = train_loop(tiny_config(), room_env(), reset, demo, 7, hooks);
  EXPECT_EQ(demo.hash(), demo.construction_hash());
  ASSERT_EQ(res.log.size(), 2u);
  EXPECT_EQ(seen.size(), 2u);
  EXPECT_EQ(res.interactions, 300u);
  for (const auto& l : res.log) {
    EXPECT_EQ(l.critic_updates, 10);
    EXPECT_EQ(l.actor_updates, 5);
    EXPECT_TRUE(std::isfinite(l.critic_loss));
    EXPECT_EQ(l.eval.episodes, 2);
  }
  EXPECT_EQ(res.log[1].interactions, 300u);
  EXPECT_EQ(res.log[1].buffer_size, 300u);
}

TEST(TrainLoop, DeterministicGivenSeed) {
  const DemoBuffer demo(scripted_transitions(1), room_env().normalizer(), room_env().state_dim());
  ResetConfig reset;
  reset.anchors = anchor_scenes(room_environment());
  const auto a = train_loop(tiny_config(), room_env(), reset, demo, 3);
  const auto b = train_loop(tiny_config(), room_env(), reset, demo, 3);
  EXPECT_EQ(a.agent.actor.layers()[0].weight, b.agent.actor.layers()[0].weight);
  EXPECT_EQ(a.log.back().critic_loss, b.log.back().critic_loss);
}

TEST(TrainLoop, RejectsMismatchedEpisodeLength) {
  const DemoBuffer demo(scripted_transitions(1), room_env().normalizer(), room_env().state_dim());
  TrainConfig cfg = tiny_config();
  cfg.n_ep = 300;
  EXPECT_THROW((void)train_loop(cfg, room_env(), {}, demo, 1), Error);
}

TEST(Checkpoint, RoundTripGivesIdenticalEvaluation) {
  std::mt19937_64 rng(26);
  Agent ag = make_agent<float>(room_env().state_dim(), room_env().normalizer(), {32, 32}, rng);
  ag.actor_opt.step = 17;
  const std::string bytes = serialize_checkpoint(ag, {3, 1234, "room", to_json(tiny_config())});
  const Checkpoint ck = deserialize_checkpoint(bytes);
  EXPECT_EQ(ck.meta.epoch, 3);
  EXPECT_EQ(ck.meta.interactions, 1234u);
  EXPECT_EQ(ck.meta.environment, "room");
  EXPECT_EQ(ck.agent.actor_opt.step, 17);
  EXPECT_NO_THROW(check_compatible(ck, room_env()));
  ResetConfig reset;
  reset.anchors = anchor_scenes(room_environment());
  Rng r1(5), r2(5);
  const auto e1 = evaluate(ag, room_env(), reset, 10, r1);
  const auto e2 = evaluate(ck.agent, room_env(), reset, 10, r2);
  EXPECT_EQ(e1.summary, e2.summary);
  for (std::size_t i = 0; i < e1.traces.size(); ++i)
    EXPECT_EQ(e1.traces[i].rows.back().pose, e2.traces[i].rows.back().pose);
  EXPECT_EQ(serialize_checkpoint(ck.agent, ck.meta), bytes);
}

TEST(Checkpoint, RejectsCorruption) {
  std::mt19937_64 rng(27);
  const Agent ag = make_agent<float>(room_env().state_dim(), room_env().normalizer(), {8}, rng);
  std::string bytes = serialize_checkpoint(ag, {});
  EXPECT_THROW((void)deserialize_checkpoint(bytes.substr(0, bytes.size() - 4)), Error);
  bytes[0] = 'X';
  EXPECT_THROW((void)deserialize_checkpoint(bytes), Error);
  const Agent other = make_agent<float>(8, room_env().normalizer(), {8}, rng);
  EXPECT_THROW(check_compatible(deserialize_checkpoint(serialize_checkpoint(other, {})), room_env()), Error);
}

TEST(Evaluate, RandomAgentRarelySucceeds) {
  std::mt19937_64 rng(28);
  const Agent ag = make_agent<float>(room_env().state_dim(), room_env().normalizer(), {64, 64}, rng);
  ResetConfig reset;
  reset.anchors = anchor_scenes(room_environment());
  Rng er(1);
  const auto res = evaluate(ag, room_env(), reset, 100, er);
  EXPECT_LT(res.summary.success_rate, 0.3);
  EXPECT_NEAR(res.summary.success_rate + res.summary.collision_rate + res.summary.timeout_rate, 1.0, 1e-12);
  EXPECT_EQ(res.summary.episodes, 100);
}
