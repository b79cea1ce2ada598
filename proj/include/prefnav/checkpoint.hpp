#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "prefnav/formats.hpp"
#include "prefnav/td3bc.hpp"

namespace prefnav {

// Layout: "PNAVCKPT" | u32 version | u64 header length | JSON header |
// float32 payload (little-endian), in the order listed in header["payload"].

inline constexpr char kCheckpointMagic[8] = {'P', 'N', 'A', 'V', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  int epoch{0};
  std::uint64_t interactions{0};
  std::string environment;
  Json config = Json::object();
};

struct Checkpoint {
  Agent agent;
  CheckpointMeta meta;
};

namespace detail {

inline void put_layers(std::string& out, const LayerSet<float>& layers) {
  for (const auto& l : layers) {
    out.append(reinterpret_cast<const char*>(l.weight.data()), sizeof(float) * static_cast<std::size_t>(l.weight.size()));
    out.append(reinterpret_cast<const char*>(l.bias.data()), sizeof(float) * static_cast<std::size_t>(l.bias.size()));
  }
}

inline void get_layers(const std::string& in, std::size_t& pos, LayerSet<float>& layers) {
  auto take = [&](float* dst, std::size_t n) {
    const std::size_t bytes = n * sizeof(float);
    require(pos + bytes <= in.size(), ErrorCode::format, "checkpoint: truncated payload");
    std::memcpy(dst, in.data() + pos, bytes);
    pos += bytes;
  };
  for (auto& l : layers) {
    take(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    take(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
}

inline Json adam_header(const AdamState<float>& s) {
  return {{"step", s.step}, {"beta1", s.beta1}, {"beta2", s.beta2}, {"eps", s.eps}};
}

inline void adam_from_header(const Json& j, AdamState<float>& s) {
  s.step = j.at("step").get<std::int64_t>();
  s.beta1 = j.at("beta1").get<double>();
  s.beta2 = j.at("beta2").get<double>();
  s.eps = j.at("eps").get<double>();
}

}  // namespace detail

inline std::string serialize_checkpoint(const Agent& ag, const CheckpointMeta& meta) {
  const Json header = {
      {"state_dim", ag.state_dim()},
      {"actor_dims", ag.actor.dims()},
      {"critic_dims", ag.critic1.dims()},
      {"normalizer",
       {{"distance_scale", ag.normalizer.distance_scale()},
        {"v_cap", ag.normalizer.v_cap()},
        {"omega_cap", ag.normalizer.omega_cap()}}},
      {"adam",
       {{"actor", detail::adam_header(ag.actor_opt)},
        {"critic1", detail::adam_header(ag.critic1_opt)},
        {"critic2", detail::adam_header(ag.critic2_opt)}}},
      {"epoch", meta.epoch},
      {"interactions", meta.interactions},
      {"environment", meta.environment},
      {"config", meta.config},
      {"payload",
       {"actor", "critic1", "critic2", "actor_target", "critic1_target", "critic2_target", "actor_m", "actor_v",
        "critic1_m", "critic1_v", "critic2_m", "critic2_v"}}};
  const std::string h = header.dump();
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint32_t version = kCheckpointVersion;
  const std::uint64_t len = h.size();
  out.append(reinterpret_cast<const char*>(&version), sizeof(version));
  out.append(reinterpret_cast<const char*>(&len), sizeof(len));
  out += h;
  for (const Mlp<float>* net : {&ag.actor, &ag.critic1, &ag.critic2, &ag.actor_target, &ag.critic1_target,
                                &ag.critic2_target})
    detail::put_layers(out, net->layers());
  for (const AdamState<float>* s : {&ag.actor_opt, &ag.critic1_opt, &ag.critic2_opt}) {
    detail::put_layers(out, s->m);
    detail::put_layers(out, s->v);
  }
  return out;
}

inline Checkpoint deserialize_checkpoint(const std::string& in) {
  require(in.size() >= sizeof(kCheckpointMagic) + 12 &&
              std::memcmp(in.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) == 0,
          ErrorCode::format, "checkpoint: bad magic");
  std::size_t pos = sizeof(kCheckpointMagic);
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  std::memcpy(&version, in.data() + pos, sizeof(version));
  pos += sizeof(version);
  std::memcpy(&len, in.data() + pos, sizeof(len));
  pos += sizeof(len);
  require(version == kCheckpointVersion, ErrorCode::format,
          "checkpoint: unsupported version " + std::to_string(version));
  require(pos + len <= in.size(), ErrorCode::format, "checkpoint: truncated header");
  Json header;
  try {
    header = Json::parse(in.substr(pos, len));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::format, std::string("checkpoint: bad header: ") + e.what());
  }
  pos += len;
  return detail::parse_guard("checkpoint", [&] {
    Checkpoint ck;
    const auto actor_dims = header.at("actor_dims").get<std::vector<int>>();
    const auto critic_dims = header.at("critic_dims").get<std::vector<int>>();
    const auto state_dim = header.at("state_dim").get<std::size_t>();
    require(!actor_dims.empty() && static_cast<std::size_t>(actor_dims.front()) == state_dim &&
                actor_dims.back() == kActionDim && !critic_dims.empty() &&
                static_cast<std::size_t>(critic_dims.front()) == state_dim + kActionDim && critic_dims.back() == 1,
            ErrorCode::format, "checkpoint: inconsistent layer dimensions");
    Agent& ag = ck.agent;
    ag.actor = Mlp<float>(actor_dims, Head::tanh);
    ag.critic1 = Mlp<float>(critic_dims, Head::linear);
    ag.critic2 = Mlp<float>(critic_dims, Head::linear);
    ag.actor_target = ag.actor;
    ag.critic1_target = ag.critic1;
    ag.critic2_target = ag.critic2;
    for (Mlp<float>* net : {&ag.actor, &ag.critic1, &ag.critic2, &ag.actor_target, &ag.critic1_target,
                            &ag.critic2_target})
      detail::get_layers(in, pos, net->mutable_layers());
    ag.actor_opt = AdamState<float>(ag.actor);
    ag.critic1_opt = AdamState<float>(ag.critic1);
    ag.critic2_opt = AdamState<float>(ag.critic2);
    const auto& adam = header.at("adam");
    detail::adam_from_header(adam.at("actor"), ag.actor_opt);
    detail::adam_from_header(adam.at("critic1"), ag.critic1_opt);
    detail::adam_from_header(adam.at("critic2"), ag.critic2_opt);
    for (AdamState<float>* s : {&ag.actor_opt, &ag.critic1_opt, &ag.critic2_opt}) {
      detail::get_layers(in, pos, s->m);
      detail::get_layers(in, pos, s->v);
    }
    require(pos == in.size(), ErrorCode::format, "checkpoint: trailing bytes");
    const auto& n = header.at("normalizer");
    ag.normalizer = Normalizer(n.at("distance_scale").get<double>(), n.at("v_cap").get<double>(),
                               n.at("omega_cap").get<double>());
    ck.meta.epoch = header.at("epoch").get<int>();
    ck.meta.interactions = header.at("interactions").get<std::uint64_t>();
    ck.meta.environment = header.at("environment").get<std::string>();
    ck.meta.config = header.at("config");
    return ck;
  });
}

inline void save_checkpoint(const std::string& path, const Agent& ag, const CheckpointMeta& meta) {
  write_text(path, serialize_checkpoint(ag, meta));
}

inline Checkpoint load_checkpoint(const std::string& path) { return deserialize_checkpoint(read_text(path)); }

/// Rejects a checkpoint whose state layout differs from the environment's.
inline void check_compatible(const Checkpoint& ck, const SimEnv& env) {
  require(ck.agent.state_dim() == env.state_dim(), ErrorCode::format,
          "checkpoint: state dimension " + std::to_string(ck.agent.state_dim()) + " incompatible with environment '" +
              env.environment().name + "' (" + std::to_string(env.state_dim()) + ")");
}

}  // namespace prefnav
