#include "fcot/mock_backend.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <thread>

#include "fcot/errors.hpp"
#include "fcot/util.hpp"

namespace fcot {

namespace {
using json = nlohmann::ordered_json;

MockReply reply_from_json(const json& j) {
  MockReply reply;
  reply.text = j.at("text").get<std::string>();
  if (j.contains("completion_tokens")) reply.completion_tokens = j["completion_tokens"].get<long long>();
  if (j.contains("delay_ms")) reply.delay_ms = j["delay_ms"].get<int>();
  return reply;
}

}  // namespace

MockBackend::MockBackend(std::vector<MockRule> rules, std::string id)
    : rules_(std::move(rules)), id_(std::move(id)) {}

std::shared_ptr<MockBackend> MockBackend::from_script(const std::filesystem::path& script) {
  std::vector<MockRule> rules;
  auto lines = split_lines(read_file(script));
  for (size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    json j = json::parse(lines[i], nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error("mock script line " + std::to_string(i + 1) + ": not a JSON object");
    }
    MockRule rule;
    if (j.contains("prompt_sha256")) rule.prompt_sha256 = j["prompt_sha256"].get<std::string>();
    if (j.contains("substring")) rule.substring = j["substring"].get<std::string>();
    if (!rule.prompt_sha256 && !rule.substring) {
      throw Error("mock script line " + std::to_string(i + 1) +
                  ": rule needs prompt_sha256 or substring");
    }
    if (j.contains("replies")) {
      for (const auto& r : j["replies"]) rule.replies.push_back(reply_from_json(r));
    } else {
      rule.replies.push_back(reply_from_json(j));
    }
    if (rule.replies.empty()) {
      throw Error("mock script line " + std::to_string(i + 1) + ": rule has no replies");
    }
    rules.push_back(std::move(rule));
  }
  return std::make_shared<MockBackend>(std::move(rules), "mock:" + script.filename().string());
}

ChatResponse MockBackend::complete_one(const ChatRequest& request, int sample_index) {
  total_calls_.fetch_add(1);
  int now = in_flight_.fetch_add(1) + 1;
  int seen = high_water_.load();
  while (now > seen && !high_water_.compare_exchange_weak(seen, now)) {
  }

  const MockRule* hit = nullptr;
  std::string digest = sha256_hex(request.prompt);
  for (const auto& rule : rules_) {
    if (rule.prompt_sha256 && *rule.prompt_sha256 == digest) {
      hit = &rule;
      break;
    }
    if (rule.substring && contains(request.prompt, *rule.substring)) {
      hit = &rule;
      break;
    }
  }
  if (!hit) {
    in_flight_.fetch_sub(1);
    throw MalformedBackendReply("mock backend: no rule matches prompt (digest " + digest + ")");
  }
  const MockReply& reply = hit->replies[static_cast<size_t>(sample_index) % hit->replies.size()];
  if (reply.delay_ms > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(reply.delay_ms));
  }
  in_flight_.fetch_sub(1);

  ChatResponse response;
  response.text = reply.text;
  response.completion_tokens = reply.completion_tokens;  // may be -1: unreported
  response.prompt_tokens = estimate_tokens(request.prompt);
  response.usage_estimated = false;
  response.backend_id = id_;
  response.latency_ms = reply.delay_ms;
  return response;
}

}  // namespace fcot
