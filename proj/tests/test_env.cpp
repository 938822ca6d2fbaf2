#include <doctest.h>

#include <cmath>
#include <set>

#include "lamp/env.hpp"

using namespace lamp;
using namespace lamp::env;

namespace {

EnvConfig base_cfg() { return EnvConfig{}; }

SceneState roll(const EnvConfig& cfg, SceneState s, const TaskSpec& task, int max_steps,
                bool* success_latch = nullptr) {
  for (int t = 0; t < max_steps; ++t) {
    Action a = expert_policy(cfg, s, task);
    StepResult r = step(cfg, s, a);
    s = std::move(r.state);
    if (success_latch && task_reward(cfg, s, task).success) *success_latch = true;
    if (r.done) break;
  }
  return s;
}

}  // namespace

TEST_CASE("finetune mode always uses the default texture") {
  EnvConfig cfg = base_cfg();
  cfg.mode = EnvMode::finetune;
  for (std::uint64_t seed = 0; seed < 200; ++seed)
    CHECK(reset(cfg, seed).texture_id == 0);
}

TEST_CASE("pretrain texture distribution: 0.2 default, rest uniform") {
  EnvConfig cfg = base_cfg();
  int defaults = 0, lo = 1 << 30, hi = 0;
  const int n = 10000;
  for (int seed = 0; seed < n; ++seed) {
    int t = reset(cfg, static_cast<std::uint64_t>(seed)).texture_id;
    CHECK(t >= 0);
    CHECK(t <= 96);
    if (t == 0) {
      ++defaults;
    } else {
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  }
  double frac = static_cast<double>(defaults) / n;
  CHECK(frac > 0.18);
  CHECK(frac < 0.22);
  CHECK(lo == 1);
  CHECK(hi == 96);
}

TEST_CASE("reset is deterministic and respects placement rules") {
  EnvConfig cfg = base_cfg();
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    SceneState a = reset(cfg, seed);
    SceneState b = reset(cfg, seed);
    CHECK(a.texture_id == b.texture_id);
    REQUIRE(a.objects.size() == b.objects.size());
    for (std::size_t i = 0; i < a.objects.size(); ++i) {
      CHECK(a.objects[i].class_id == b.objects[i].class_id);
      CHECK(a.objects[i].position.x == b.objects[i].position.x);
      CHECK(a.objects[i].position.y == b.objects[i].position.y);
    }

    CHECK(a.ee_pos.x == real(0.5));
    CHECK(a.ee_pos.y == real(0.5));
    CHECK(a.ee_pos.z == real(0.4));
    CHECK(!a.gripper_closed);
    CHECK(a.step_index == 0);
    REQUIRE(a.objects.size() >= 1);
    REQUIRE(a.objects.size() <= 3);
    std::set<ObjectClass> classes;
    for (const auto& o : a.objects) {
      classes.insert(o.class_id);
      CHECK(o.position.z == real(0));
      CHECK(o.position.x >= real(0));
      CHECK(o.position.x <= real(1));
      CHECK(o.position.y >= real(0));
      CHECK(o.position.y <= real(1));
      CHECK(!o.grasped);
    }
    CHECK(classes.size() == a.objects.size());  // distinct classes
    for (std::size_t i = 0; i < a.objects.size(); ++i)
      for (std::size_t j = i + 1; j < a.objects.size(); ++j)
        CHECK(dist(a.objects[i].position, a.objects[j].position) >= cfg.min_pairwise);
  }
}

TEST_CASE("required class is always present at index 0") {
  EnvConfig cfg = base_cfg();
  cfg.required_class = ObjectClass::phone;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SceneState s = reset(cfg, seed);
    CHECK(s.objects[0].class_id == ObjectClass::phone);
  }
}

TEST_CASE("invalid env configs are rejected") {
  EnvConfig cfg = base_cfg();
  cfg.min_objects = 0;
  CHECK_THROWS_AS(reset(cfg, 1), ConfigError);
  cfg = base_cfg();
  cfg.max_objects = 9;
  CHECK_THROWS_AS(reset(cfg, 1), ConfigError);
  cfg = base_cfg();
  cfg.horizon = 0;
  CHECK_THROWS_AS(reset(cfg, 1), ConfigError);
  cfg = base_cfg();
  cfg.default_texture_prob = real(1.5);
  CHECK_THROWS_AS(reset(cfg, 1), ConfigError);
}

TEST_CASE("no-op action leaves the end effector in place") {
  EnvConfig cfg = base_cfg();
  SceneState s = reset(cfg, 7);
  Action a;
  a.v = {0, 0, 0, -1};
  StepResult r = step(cfg, s, a);
  CHECK(r.state.ee_pos.x == s.ee_pos.x);
  CHECK(r.state.ee_pos.y == s.ee_pos.y);
  CHECK(r.state.ee_pos.z == s.ee_pos.z);
  CHECK(!r.state.gripper_closed);
  CHECK(r.state.step_index == 1);
}

TEST_CASE("workspace clamp holds at the corner") {
  EnvConfig cfg = base_cfg();
  SceneState s = reset(cfg, 7);
  s.ee_pos = {0, 0, 0};
  Action a;
  a.v = {-1, -1, -1, -1};
  StepResult r = step(cfg, s, a);
  CHECK(r.state.ee_pos.x == real(0));
  CHECK(r.state.ee_pos.y == real(0));
  CHECK(r.state.ee_pos.z == real(0));
}

TEST_CASE("closing near an object grasps it and it tracks the gripper") {
  EnvConfig cfg = base_cfg();
  SceneState s = reset(cfg, 3);
  s.objects.resize(1);
  s.objects[0].position = {real(0.5), real(0.5), real(0)};
  s.objects[0].grasped = false;
  s.ee_pos = {real(0.5), real(0.5), real(0.05)};
  Action close;
  close.v = {0, 0, 0, 1};
  StepResult r = step(cfg, s, close);
  CHECK(r.state.objects[0].grasped);
  CHECK(r.state.gripper_closed);
  // Snaps to the gripper on pickup, then tracks it.
  CHECK(r.state.objects[0].position.z == r.state.ee_pos.z);
  Action up;
  up.v = {0, 0, 1, 1};
  StepResult r2 = step(cfg, r.state, up);
  CHECK(r2.state.objects[0].position.z == r2.state.ee_pos.z);
  CHECK(r2.state.objects[0].position.z > real(0.05));
}

TEST_CASE("a held-closed gripper still picks up what it passes over") {
  // The grasp rule is state-based, not edge-triggered.
  EnvConfig cfg = base_cfg();
  SceneState s = reset(cfg, 3);
  s.objects.resize(1);
  s.objects[0].position = {real(0.5), real(0.5), real(0)};
  s.ee_pos = {real(0.5), real(0.5), real(0.05)};
  s.gripper_closed = true;  // closed on empty air
  Action keep;
  keep.v = {0, 0, 0, 1};
  CHECK(step(cfg, s, keep).state.objects[0].grasped);
}

TEST_CASE("grasp ties resolve to the lowest object index") {
  EnvConfig cfg = base_cfg();
  SceneState s = reset(cfg, 9);
  s.objects.resize(2);
  s.objects[0].position = {real(0.45), real(0.5), real(0)};
  s.objects[0].grasped = false;
  s.objects[1].position = {real(0.55), real(0.5), real(0)};
  s.objects[1].grasped = false;
  s.ee_pos = {real(0.5), real(0.5), real(0)};
  Action close;
  close.v = {0, 0, 0, 1};
  StepResult r = step(cfg, s, close);
  CHECK(r.state.objects[0].grasped);
  CHECK(!r.state.objects[1].grasped);
}

TEST_CASE("opening releases at the current position") {
  EnvConfig cfg = base_cfg();
  SceneState s = reset(cfg, 3);
  s.objects.resize(1);
  s.objects[0].position = {real(0.5), real(0.5), real(0.2)};
  s.objects[0].grasped = true;
  s.ee_pos = {real(0.5), real(0.5), real(0.2)};
  s.gripper_closed = true;
  Action open;
  open.v = {0, 0, 0, -1};
  StepResult r = step(cfg, s, open);
  CHECK(!r.state.objects[0].grasped);
  CHECK(r.state.objects[0].position.z == real(0.2));  // no falling
}

TEST_CASE("non-finite action components are treated as zero") {
  EnvConfig cfg = base_cfg();
  SceneState s = reset(cfg, 5);
  Action a;
  a.v = {std::numeric_limits<real>::quiet_NaN(), std::numeric_limits<real>::infinity(),
         0, -1};
  StepResult r = step(cfg, s, a);
  CHECK(r.state.ee_pos.x == s.ee_pos.x);
  CHECK(r.state.ee_pos.y == s.ee_pos.y);
}

TEST_CASE("containment and single-grasp hold under random action sequences") {
  EnvConfig cfg = base_cfg();
  Rng rng(404);
  for (int ep = 0; ep < 5; ++ep) {
    SceneState s = reset(cfg, 1000 + ep);
    for (int t = 0; t < cfg.horizon; ++t) {
      Action a;
      for (auto& v : a.v) v = static_cast<real>(rng.uniform(-1.5, 1.5));  // pre-clamp range
      StepResult r = step(cfg, s, a);
      s = std::move(r.state);
      for (real c : {s.ee_pos.x, s.ee_pos.y, s.ee_pos.z}) {
        CHECK(c >= real(0));
        CHECK(c <= real(1));
      }
      int grasped = 0;
      for (const auto& o : s.objects) {
        grasped += o.grasped;
        for (real c : {o.position.x, o.position.y, o.position.z}) {
          CHECK(c >= real(0));
          CHECK(c <= real(1));
        }
      }
      CHECK(grasped <= 1);
      if (r.done) break;
    }
    CHECK(s.step_index == cfg.horizon);
    CHECK_THROWS_AS(step(cfg, s, Action{}), UsageError);
  }
}

TEST_CASE("reach reward is 1 exactly at the object and increases monotonically") {
  EnvConfig cfg = base_cfg();
  SceneState s = reset(cfg, 11);
  TaskSpec task{TaskId::reach, s.objects[0].class_id, std::nullopt, real(0.05)};
  s.ee_pos = s.objects[0].position;
  CHECK(task_reward(cfg, s, task).reward == real(1));
  CHECK(task_reward(cfg, s, task).success);

  real prev = -1;
  for (int k = 20; k >= 0; --k) {  // walk straight in
    real f = real(k) / real(20);
    s.ee_pos = {s.objects[0].position.x + f * real(0.4),
                s.objects[0].position.y, s.objects[0].position.z + f * real(0.3)};
    s.ee_pos.x = std::min(s.ee_pos.x, real(1));
    real r = task_reward(cfg, s, task).reward;
    CHECK(r > prev);
    prev = r;
  }
}

TEST_CASE("pick_up saturates to exactly 1 when grasped and lifted") {
  EnvConfig cfg = base_cfg();
  SceneState s = reset(cfg, 11);
  s.objects[0].grasped = true;
  s.ee_pos = {real(0.5), real(0.5), real(0.3)};
  s.objects[0].position = s.ee_pos;
  TaskSpec task{TaskId::pick_up, s.objects[0].class_id, std::nullopt, real(0.05)};
  TaskReward r = task_reward(cfg, s, task);
  CHECK(r.reward == real(1));
  CHECK(r.success);
}

TEST_CASE("rewards stay in [0,1] and success implies at least 0.9") {
  EnvConfig cfg = base_cfg();
  Rng rng(77);
  for (int ep = 0; ep < 4; ++ep) {
    SceneState s = reset(cfg, 2000 + ep);
    TaskSpec tasks[3] = {
        {TaskId::reach, s.objects[0].class_id, std::nullopt, real(0.05)},
        {TaskId::pick_up, s.objects[0].class_id, std::nullopt, real(0.05)},
        {TaskId::place_on_target, s.objects[0].class_id,
         Vec3{real(0.8), real(0.2), real(0)}, real(0.05)},
    };
    for (int t = 0; t < cfg.horizon; ++t) {
      // Mix expert actions (to actually visit success states) with noise.
      Action a = expert_policy(cfg, s, tasks[ep % 3]);
      if (t % 7 == 0)
        for (auto& v : a.v) v = static_cast<real>(rng.uniform(-1, 1));
      s = step(cfg, s, a).state;
      for (const TaskSpec& task : tasks) {
        TaskReward r = task_reward(cfg, s, task);
        CHECK(r.reward >= real(0));
        CHECK(r.reward <= real(1));
        if (r.success) CHECK(r.reward >= real(0.9));
      }
    }
  }
}

TEST_CASE("task errors: missing class and missing zone") {
  EnvConfig cfg = base_cfg();
  cfg.required_class = ObjectClass::bag;
  cfg.max_objects = 1;
  SceneState s = reset(cfg, 1);
  TaskSpec task{TaskId::reach, ObjectClass::block, std::nullopt, real(0.05)};
  CHECK_THROWS_AS(task_reward(cfg, s, task), TaskError);
  TaskSpec place{TaskId::place_on_target, ObjectClass::bag, std::nullopt, real(0.05)};
  CHECK_THROWS_AS(task_reward(cfg, s, place), UsageError);
}

TEST_CASE("scripted expert solves every task from many seeds") {
  EnvConfig cfg = base_cfg();
  for (std::uint64_t seed = 50; seed < 70; ++seed) {
    SceneState s0 = reset(cfg, seed);
    ObjectClass cls = s0.objects[0].class_id;

    bool ok = false;
    roll(cfg, s0, {TaskId::reach, cls, std::nullopt, real(0.05)}, cfg.horizon, &ok);
    CHECK(ok);

    ok = false;
    roll(cfg, s0, {TaskId::pick_up, cls, std::nullopt, real(0.05)}, cfg.horizon, &ok);
    CHECK(ok);

    ok = false;
    roll(cfg, s0,
         {TaskId::place_on_target, cls, Vec3{real(0.7), real(0.3), real(0)}, real(0.05)},
         cfg.horizon, &ok);
    CHECK(ok);
  }
}

TEST_CASE("expert grasps before it lifts") {
  EnvConfig cfg = base_cfg();
  SceneState s = reset(cfg, 123);
  TaskSpec task{TaskId::pick_up, s.objects[0].class_id, std::nullopt, real(0.05)};
  bool seen_grasp = false;
  real z_at_grasp = 0;
  for (int t = 0; t < cfg.horizon; ++t) {
    s = step(cfg, s, expert_policy(cfg, s, task)).state;
    if (!seen_grasp && s.objects[0].grasped) {
      seen_grasp = true;
      z_at_grasp = s.objects[0].position.z;
    }
  }
  CHECK(seen_grasp);
  CHECK(z_at_grasp < real(0.1));  // grasped low, lifted after
  CHECK(s.objects[0].position.z >= cfg.lift_height);
}

TEST_CASE("expert rollouts are reproducible") {
  EnvConfig cfg = base_cfg();
  SceneState a = reset(cfg, 31), b = reset(cfg, 31);
  TaskSpec task{TaskId::pick_up, a.objects[0].class_id, std::nullopt, real(0.05)};
  for (int t = 0; t < 40; ++t) {
    a = step(cfg, a, expert_policy(cfg, a, task)).state;
    b = step(cfg, b, expert_policy(cfg, b, task)).state;
    CHECK(a.ee_pos.x == b.ee_pos.x);
    CHECK(a.ee_pos.z == b.ee_pos.z);
    CHECK(a.objects[0].grasped == b.objects[0].grasped);
  }
}

TEST_CASE("scene json round-trips exactly") {
  EnvConfig cfg = base_cfg();
  SceneState s = reset(cfg, 99);
  s.objects[0].grasped = true;
  s.ee_pos = {real(0.123456789), real(0.5), real(1.0 / 3.0)};
  s.step_index = 42;
  SceneState back = scene_from_json(scene_to_json(s));
  CHECK(back.ee_pos.x == s.ee_pos.x);
  CHECK(back.ee_pos.z == s.ee_pos.z);
  REQUIRE(back.objects.size() == s.objects.size());
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    CHECK(back.objects[i].class_id == s.objects[i].class_id);
    CHECK(back.objects[i].position.x == s.objects[i].position.x);
    CHECK(back.objects[i].grasped == s.objects[i].grasped);
  }
  CHECK(back.texture_id == s.texture_id);
  CHECK(back.step_index == 42);
  CHECK(back.episode_seed == 99);

  CHECK_THROWS_AS(scene_from_json("{not json"), IoError);
  CHECK_THROWS_AS(scene_from_json("{\"ee\":[0,0,0]}"), IoError);
}

TEST_CASE("class and task names round-trip") {
  for (int i = 0; i < kNumClasses; ++i) {
    auto c = static_cast<ObjectClass>(i);
    CHECK(class_from_name(class_name(c)) == c);
  }
  CHECK(!class_from_name("sandwich").has_value());
  for (TaskId t : {TaskId::reach, TaskId::pick_up, TaskId::place_on_target})
    CHECK(task_from_name(task_name(t)) == t);
  CHECK(!task_from_name("juggle").has_value());
}
