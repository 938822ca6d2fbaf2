#include "lamp/env.hpp"

#include <algorithm>
#include <json.hpp>

namespace lamp::env {

namespace {
constexpr std::string_view kClassNames[kNumClasses] = {
    "bag", "mug", "cup", "bowl", "button", "phone", "lid", "block"};
}

std::string_view class_name(ObjectClass c) { return kClassNames[static_cast<int>(c)]; }

std::optional<ObjectClass> class_from_name(std::string_view name) {
  for (int i = 0; i < kNumClasses; ++i)
    if (kClassNames[i] == name) return static_cast<ObjectClass>(i);
  return std::nullopt;
}

std::string_view task_name(TaskId t) {
  switch (t) {
    case TaskId::reach: return "reach";
    case TaskId::pick_up: return "pick_up";
    case TaskId::place_on_target: return "place_on_target";
  }
  return "?";
}

std::optional<TaskId> task_from_name(std::string_view name) {
  if (name == "reach") return TaskId::reach;
  if (name == "pick_up") return TaskId::pick_up;
  if (name == "place_on_target") return TaskId::place_on_target;
  return std::nullopt;
}

void EnvConfig::validate() const {
  if (min_objects < 1) throw ConfigError("env: at least one object per scene required");
  if (max_objects < min_objects) throw ConfigError("env: max_objects < min_objects");
  if (max_objects > kNumClasses) throw ConfigError("env: more objects than distinct classes");
  if (horizon < 1) throw ConfigError("env: horizon must be positive");
  if (step_scale <= real(0) || grasp_radius <= real(0) || lift_height <= real(0))
    throw ConfigError("env: scales must be positive");
  if (default_texture_prob < real(0) || default_texture_prob > real(1))
    throw ConfigError("env: default_texture_prob out of [0,1]");
  if (texture_count < 1) throw ConfigError("env: texture_count must be positive");
  if (min_pairwise < real(0) || min_pairwise > real(0.5))
    throw ConfigError("env: min_pairwise out of range");
  if (dist_norm <= real(0)) throw ConfigError("env: dist_norm must be positive");
}

SceneState reset(const EnvConfig& cfg, std::uint64_t episode_seed) {
  cfg.validate();
  Rng rng(mix_seed(episode_seed, 0x5ce11eull));

  SceneState s;
  s.episode_seed = episode_seed;
  s.ee_pos = cfg.ee_start;
  s.gripper_closed = false;
  s.step_index = 0;

  if (cfg.mode == EnvMode::finetune) {
    s.texture_id = 0;
  } else {
    s.texture_id = rng.uniform01() < static_cast<double>(cfg.default_texture_prob)
                       ? 0
                       : 1 + static_cast<int>(rng.uniform_int(cfg.texture_count));
  }

  int n = cfg.min_objects +
          static_cast<int>(rng.uniform_int(cfg.max_objects - cfg.min_objects + 1));

  // Distinct classes: partial Fisher-Yates over the class ids, with the
  // required class (if any) pinned to slot 0.
  std::array<int, kNumClasses> ids;
  for (int i = 0; i < kNumClasses; ++i) ids[i] = i;
  int fixed = 0;
  if (cfg.required_class) {
    int want = static_cast<int>(*cfg.required_class);
    std::swap(ids[0], ids[want]);
    fixed = 1;
  }
  for (int i = fixed; i < n; ++i) {
    int j = i + static_cast<int>(rng.uniform_int(kNumClasses - i));
    std::swap(ids[i], ids[j]);
  }

  for (int i = 0; i < n; ++i) {
    ObjectInstance obj;
    obj.class_id = static_cast<ObjectClass>(ids[i]);
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 10000) throw ConfigError("env: cannot place objects with min_pairwise");
      obj.position = {static_cast<real>(rng.uniform01()),
                      static_cast<real>(rng.uniform01()), real(0)};
      bool ok = true;
      for (const ObjectInstance& other : s.objects)
        if (dist(obj.position, other.position) < cfg.min_pairwise) ok = false;
      if (ok) break;
    }
    s.objects.push_back(obj);
  }
  return s;
}

namespace {

real sanitize(real v) {
  if (!is_finite(v)) return real(0);
  return std::clamp(v, real(-1), real(1));
}

real clamp_unit(real v) { return std::clamp(v, real(0), real(1)); }

int grasped_index(const SceneState& s) {
  for (std::size_t i = 0; i < s.objects.size(); ++i)
    if (s.objects[i].grasped) return static_cast<int>(i);
  return -1;
}

}  // namespace

StepResult step(const EnvConfig& cfg, const SceneState& state, const Action& action) {
  if (state.step_index >= cfg.horizon)
    throw UsageError("env: step called on a terminal state");

  SceneState s = state;
  real dx = sanitize(action.v[0]), dy = sanitize(action.v[1]), dz = sanitize(action.v[2]);
  real grip = sanitize(action.v[3]);

  s.ee_pos.x = clamp_unit(s.ee_pos.x + cfg.step_scale * dx);
  s.ee_pos.y = clamp_unit(s.ee_pos.y + cfg.step_scale * dy);
  s.ee_pos.z = clamp_unit(s.ee_pos.z + cfg.step_scale * dz);

  int held = grasped_index(s);
  if (held >= 0) s.objects[held].position = s.ee_pos;

  s.gripper_closed = grip > real(0);
  if (!s.gripper_closed && held >= 0) {
    // Release where the object currently is; no falling (no physics).
    s.objects[held].grasped = false;
  } else if (s.gripper_closed && held < 0) {
    int best = -1;
    real best_d = cfg.grasp_radius;
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
      real d = dist(s.ee_pos, s.objects[i].position);
      if (d < best_d) {  // strict: ties on distance resolve to the lowest index
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    if (best >= 0) {
      s.objects[best].grasped = true;
      s.objects[best].position = s.ee_pos;  // rigid attach to the gripper
    }
  }

  s.step_index += 1;
  const bool done = s.step_index >= cfg.horizon;
  return {std::move(s), done};
}

namespace {

const ObjectInstance& find_target(const SceneState& state, const TaskSpec& task) {
  for (const ObjectInstance& o : state.objects)
    if (o.class_id == task.target_class) return o;
  throw TaskError(std::string("env: target class not in scene: ") +
                  std::string(class_name(task.target_class)));
}

}  // namespace

TaskReward task_reward(const EnvConfig& cfg, const SceneState& state, const TaskSpec& task) {
  const ObjectInstance& obj = find_target(state, task);
  const real d_ee = dist(state.ee_pos, obj.position);
  const real reach_term = real(1) - clamp_unit(d_ee / cfg.dist_norm);
  const real lift_term = clamp_unit(obj.position.z / cfg.lift_height);

  TaskReward out;
  switch (task.task_id) {
    case TaskId::reach:
      out.reward = reach_term;
      out.success = d_ee < task.success_threshold;
      break;
    case TaskId::pick_up:
      out.reward = real(0.5) * reach_term + real(0.25) * (obj.grasped ? real(1) : real(0)) +
                   real(0.25) * lift_term;
      out.success = obj.grasped && obj.position.z >= cfg.lift_height;
      break;
    case TaskId::place_on_target: {
      if (!task.target_zone)
        throw UsageError("env: place_on_target needs a target_zone");
      const real pick_term = real(0.5) * reach_term +
                             real(0.25) * (obj.grasped ? real(1) : real(0)) +
                             real(0.25) * lift_term;
      const real d_zone = dist(obj.position, *task.target_zone);
      out.reward = real(0.5) * pick_term +
                   real(0.5) * (real(1) - clamp_unit(d_zone / cfg.dist_norm));
      out.success = d_zone < task.success_threshold && !obj.grasped;
      // The shaped terms cannot reach 1 once the gripper lets go; pin success
      // at full reward so "solved" states dominate everything partial.
      if (out.success) out.reward = real(1);
      break;
    }
  }
  return out;
}

Action expert_policy(const EnvConfig& cfg, const SceneState& state, const TaskSpec& task) {
  const ObjectInstance& obj = find_target(state, task);

  auto toward = [&](Vec3 target, real grip) {
    Action a;
    a.v[0] = std::clamp((target.x - state.ee_pos.x) / cfg.step_scale, real(-1), real(1));
    a.v[1] = std::clamp((target.y - state.ee_pos.y) / cfg.step_scale, real(-1), real(1));
    a.v[2] = std::clamp((target.z - state.ee_pos.z) / cfg.step_scale, real(-1), real(1));
    a.v[3] = grip;
    return a;
  };

  if (task.task_id == TaskId::reach) return toward(obj.position, real(-1));

  const real close_enough = cfg.grasp_radius * real(0.7);
  if (!obj.grasped) {
    // Done placing: keep the gripper open and stay put, or the controller
    // would immediately pick the object back up.
    if (task.task_id == TaskId::place_on_target && task.target_zone &&
        dist(obj.position, *task.target_zone) < task.success_threshold)
      return toward(state.ee_pos, real(-1));
    // Another object may still be in hand from a previous phase: let it go.
    const real xy = std::hypot(obj.position.x - state.ee_pos.x,
                               obj.position.y - state.ee_pos.y);
    if (xy > real(0.02))
      return toward({obj.position.x, obj.position.y, obj.position.z + real(0.1)}, real(-1));
    if (dist(state.ee_pos, obj.position) > close_enough)
      return toward(obj.position, real(-1));
    return toward(obj.position, real(1));  // in range: close
  }

  // Holding the target (it tracks the gripper from here on).
  const real carry_z = std::min(cfg.lift_height + real(0.05), real(1));
  if (task.task_id == TaskId::pick_up)
    return toward({state.ee_pos.x, state.ee_pos.y, carry_z}, real(1));

  const Vec3 zone = *task.target_zone;
  const real xy_zone = std::hypot(zone.x - state.ee_pos.x, zone.y - state.ee_pos.y);
  if (xy_zone > real(0.02)) {
    // Lift before translating so low drags across the table are avoided.
    if (state.ee_pos.z < carry_z - real(0.01))
      return toward({state.ee_pos.x, state.ee_pos.y, carry_z}, real(1));
    return toward({zone.x, zone.y, carry_z}, real(1));
  }
  if (dist(state.ee_pos, zone) > task.success_threshold * real(0.6))
    return toward(zone, real(1));
  return toward(zone, real(-1));  // inside the zone: release
}

std::string scene_to_json(const SceneState& s) {
  std::string out = "{\"ee\":[";
  out += format_real(s.ee_pos.x);
  out += ',';
  out += format_real(s.ee_pos.y);
  out += ',';
  out += format_real(s.ee_pos.z);
  out += "],\"gripper\":";
  out += s.gripper_closed ? "1" : "0";
  out += ",\"objects\":[";
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    const ObjectInstance& o = s.objects[i];
    if (i) out += ',';
    out += "{\"class\":\"";
    out += class_name(o.class_id);
    out += "\",\"pos\":[";
    out += format_real(o.position.x);
    out += ',';
    out += format_real(o.position.y);
    out += ',';
    out += format_real(o.position.z);
    out += "],\"grasped\":";
    out += o.grasped ? "true" : "false";
    out += '}';
  }
  out += "],\"texture\":";
  out += std::to_string(s.texture_id);
  out += ",\"step\":";
  out += std::to_string(s.step_index);
  out += ",\"seed\":";
  out += std::to_string(s.episode_seed);
  out += '}';
  return out;
}

SceneState scene_from_json(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw IoError("env: malformed scene json");
  try {
    SceneState s;
    s.ee_pos = {j["ee"][0].get<real>(), j["ee"][1].get<real>(), j["ee"][2].get<real>()};
    s.gripper_closed = j["gripper"].get<int>() != 0;
    for (const auto& jo : j["objects"]) {
      ObjectInstance o;
      auto cls = class_from_name(jo["class"].get<std::string>());
      if (!cls) throw IoError("env: unknown object class in scene json");
      o.class_id = *cls;
      o.position = {jo["pos"][0].get<real>(), jo["pos"][1].get<real>(),
                    jo["pos"][2].get<real>()};
      o.grasped = jo["grasped"].get<bool>();
      s.objects.push_back(o);
    }
    s.texture_id = j["texture"].get<int>();
    s.step_index = j["step"].get<int>();
    s.episode_seed = j["seed"].get<std::uint64_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("env: scene json missing fields: ") + e.what());
  }
}

}  // namespace lamp::env
