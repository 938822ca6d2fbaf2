#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lamp/common.hpp"

namespace lamp::env {

enum class ObjectClass : int { bag = 0, mug, cup, bowl, button, phone, lid, block };
constexpr int kNumClasses = 8;

std::string_view class_name(ObjectClass c);
std::optional<ObjectClass> class_from_name(std::string_view name);

struct Vec3 {
  real x = 0, y = 0, z = 0;
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  real norm() const { return std::sqrt(x * x + y * y + z * z); }
};
inline real dist(Vec3 a, Vec3 b) { return (a - b).norm(); }

struct ObjectInstance {
  ObjectClass class_id = ObjectClass::bag;
  Vec3 position;  // table plane is z = 0
  bool grasped = false;
};

struct SceneState {
  Vec3 ee_pos;
  bool gripper_closed = false;
  std::vector<ObjectInstance> objects;
  int texture_id = 0;  // 0 = default texture, 1..texture_count randomized
  int step_index = 0;
  std::uint64_t episode_seed = 0;
};

// (dx, dy, dz, gripper); components are clamped to [-1,1] and non-finite
// values are zeroed on ingestion. gripper > 0 closes.
struct Action {
  std::array<real, 4> v{};
};

enum class TaskId { reach, pick_up, place_on_target };

std::string_view task_name(TaskId t);
std::optional<TaskId> task_from_name(std::string_view name);

struct TaskSpec {
  TaskId task_id = TaskId::pick_up;
  ObjectClass target_class = ObjectClass::bag;
  std::optional<Vec3> target_zone;  // required for place_on_target
  real success_threshold = real(0.05);
};

enum class EnvMode { pretrain, finetune };

struct EnvConfig {
  EnvMode mode = EnvMode::pretrain;
  int horizon = 100;
  int min_objects = 1;
  int max_objects = 3;
  real step_scale = real(0.05);
  real grasp_radius = real(0.07);
  real lift_height = real(0.3);
  real min_pairwise = real(0.1);
  real default_texture_prob = real(0.2);
  int texture_count = 96;
  // When set, reset guarantees an object of this class (always at index 0).
  std::optional<ObjectClass> required_class;
  Vec3 ee_start{real(0.5), real(0.5), real(0.4)};
  // Distance normalization for shaped rewards: workspace diagonal, so the
  // reach term stays strictly monotone over the whole cube.
  real dist_norm = real(1.7320508075688772);

  void validate() const;
};

SceneState reset(const EnvConfig& cfg, std::uint64_t episode_seed);

struct StepResult {
  SceneState state;
  bool done = false;
};
StepResult step(const EnvConfig& cfg, const SceneState& state, const Action& action);

struct TaskReward {
  real reward = 0;
  bool success = false;
};
TaskReward task_reward(const EnvConfig& cfg, const SceneState& state, const TaskSpec& task);

Action expert_policy(const EnvConfig& cfg, const SceneState& state, const TaskSpec& task);

// Deterministically formatted JSON for trajectory dumps; parse accepts
// exactly what scene_to_json emits.
std::string scene_to_json(const SceneState& s);
SceneState scene_from_json(std::string_view text);

}  // namespace lamp::env
