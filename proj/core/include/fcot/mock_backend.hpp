#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fcot/gateway.hpp"

namespace fcot {

struct MockReply {
  std::string text;
  long long completion_tokens = -1;  // < 0: backend reports no usage
  int delay_ms = 0;
};

// First matching rule wins. A rule matches on the exact SHA-256 of the sent
// prompt or on a substring; an empty substring is a catch-all. With several
// replies the sample index picks one (modulo), so scripted runs can vary
// across the five samples.
struct MockRule {
  std::optional<std::string> prompt_sha256;
  std::optional<std::string> substring;
  std::vector<MockReply> replies;
};

class MockBackend : public Backend {
 public:
  explicit MockBackend(std::vector<MockRule> rules, std::string id = "mock");

  // Line-delimited script: one JSON rule per line, e.g.
  //   {"substring": "apple", "text": "\\boxed{4}", "completion_tokens": 7}
  //   {"prompt_sha256": "...", "replies": [{"text": "a"}, {"text": "b"}]}
  //   {"substring": "", "text": "fallback"}
  static std::shared_ptr<MockBackend> from_script(const std::filesystem::path& script);

  std::string id() const override { return id_; }
  ChatResponse complete_one(const ChatRequest& request, int sample_index) override;

  long long total_calls() const { return total_calls_.load(); }
  // Highest number of simultaneously outstanding calls ever observed.
  int high_water() const { return high_water_.load(); }

 private:
  std::vector<MockRule> rules_;
  std::string id_;
  std::atomic<long long> total_calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> high_water_{0};
};

}  // namespace fcot
