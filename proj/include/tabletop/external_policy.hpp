#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>

#include "tabletop/image_io.hpp"
#include "tabletop/policy.hpp"
#include "tabletop/serialize.hpp"
#include "tabletop/subprocess.hpp"
#include "tabletop/tokenizer.hpp"

namespace tabletop {

/// Environment variable through which a spawned policy receives its episode seed.
inline constexpr const char* kPolicySeedEnv = "TABLETOP_POLICY_SEED";

struct ExternalPolicyConfig {
  std::string command;
  std::chrono::milliseconds timeout{10000};
  std::uint64_t seed = 0;
  bool send_rasters = true;
};

/// Observation payload of a request frame.
inline json observation_json(const Observation& obs) {
  json j;
  j["color_png_b64"] = obs.has_rasters() ? base64_encode(encode_color_png(obs.color)) : std::string();
  j["depth_png_b64"] = obs.has_rasters() ? base64_encode(encode_depth_png(obs.depth)) : std::string();
  j["symbolic"] = obs.symbolic ? to_json(*obs.symbolic) : json(nullptr);
  return j;
}

/// Policy served by a child process over newline-delimited JSON on its stdin/stdout.
class ExternalPolicy : public Policy {
 public:
  explicit ExternalPolicy(ExternalPolicyConfig cfg)
      : cfg_(std::move(cfg)), proc_(cfg_.command, {{kPolicySeedEnv, std::to_string(cfg_.seed)}}) {}

  SubTask plan(const Observation& obs, std::string_view goal) override {
    json req{{"id", next_id_}, {"type", "plan"}, {"goal", goal}, {"obs", observation_json(obs)}};
    const json resp = round_trip(req);
    if (!resp.contains("subtask")) throw PolicyError(PolicyError::Kind::malformed_frame, "plan response lacks 'subtask'");
    SubTask st;
    try {
      st = subtask_from_json(resp["subtask"]);
    } catch (const std::exception& e) {
      throw PolicyError(PolicyError::Kind::malformed_frame, std::string("bad sub-task: ") + e.what());
    }
    if (obs.symbolic) {
      try {
        st = resolve(st, obs.symbolic->scene);
      } catch (const SubTaskResolutionError& e) {
        throw PolicyError(PolicyError::Kind::malformed_frame, std::string("unresolvable sub-task: ") + e.what());
      }
    }
    return st;
  }

  Action act(const Observation& obs, std::string_view goal, const SubTask& subtask) override {
    json req{{"id", next_id_},
             {"type", "act"},
             {"goal", goal},
             {"subtask", subtask.text},
             {"subtask_struct", to_json(subtask)},
             {"obs", observation_json(obs)}};
    const json resp = round_trip(req);
    const auto it = resp.find("tokens");
    if (it == resp.end() || !it->is_array() || it->size() != 6) {
      throw PolicyError(PolicyError::Kind::malformed_frame, "act response needs 'tokens' with 6 entries");
    }
    Tokens t{};
    for (std::size_t i = 0; i < 6; ++i) {
      if (!(*it)[i].is_number_integer()) throw PolicyError(PolicyError::Kind::malformed_frame, "tokens must be integers");
      const auto v = (*it)[i].get<std::int64_t>();
      if (v < 0 || v >= ActionCodec::kBins) {
        throw PolicyError(PolicyError::Kind::out_of_range_tokens, "token " + std::to_string(v) + " outside [0, 1023]");
      }
      t[i] = static_cast<int>(v);
    }
    return codec_.decode(t);
  }

  bool wants_rasters() const override { return cfg_.send_rasters; }

 private:
  json round_trip(json& req) {
    const std::int64_t id = next_id_++;
    try {
      proc_.write_line(req.dump());
    } catch (const ProcessError& e) {
      throw PolicyError(PolicyError::Kind::process_failure, e.what());
    }
    const auto deadline = std::chrono::steady_clock::now() + cfg_.timeout;
    for (;;) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      std::optional<std::string> line;
      try {
        line = left.count() > 0 ? proc_.read_line(left) : std::nullopt;
      } catch (const ProcessError& e) {
        throw PolicyError(PolicyError::Kind::process_failure, e.what());
      }
      if (!line) {
        throw PolicyError(PolicyError::Kind::timeout,
                          "no response to request " + std::to_string(id) + " within " +
                              std::to_string(cfg_.timeout.count()) + " ms");
      }
      json resp = json::parse(*line, nullptr, false);
      if (resp.is_discarded() || !resp.is_object()) {
        throw PolicyError(PolicyError::Kind::malformed_frame, "response is not a JSON object");
      }
      const auto rid = resp.find("id");
      if (rid == resp.end() || !rid->is_number_integer()) {
        throw PolicyError(PolicyError::Kind::malformed_frame, "response lacks an integer 'id'");
      }
      if (rid->get<std::int64_t>() < id) continue;  // late answer to a request that already timed out
      if (rid->get<std::int64_t>() != id) {
        throw PolicyError(PolicyError::Kind::malformed_frame, "response id does not echo the request id");
      }
      if (resp.contains("error")) {
        throw PolicyError(PolicyError::Kind::error_frame, "policy reported: " + resp["error"].dump());
      }
      return resp;
    }
  }

  ExternalPolicyConfig cfg_;
  Subprocess proc_;
  ActionCodec codec_;
  std::int64_t next_id_ = 0;
};

}  // namespace tabletop
