#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace fcot {

struct SamplingParams {
  double temperature = 0.6;
  double top_p = 0.95;
  int top_k = 20;
  double min_p = 0.0;
  int max_new_tokens = 32768;
  int n_samples = 5;
  std::optional<std::uint64_t> seed;

  friend bool operator==(const SamplingParams&, const SamplingParams&) = default;
};

enum class ThinkMode { Think, NoThink, Unsupported };

const char* to_string(ThinkMode mode);
std::optional<ThinkMode> think_mode_from_string(std::string_view s);

// Free-form bookkeeping carried along with a request; never part of the
// cache key.
struct RequestTag {
  std::string problem_id;
  std::string stage;
  int sample_index = 0;
};

struct ChatRequest {
  std::string model;
  std::string prompt;
  SamplingParams sampling;
  ThinkMode think = ThinkMode::Think;
  RequestTag tag;
};

struct ChatResponse {
  std::string text;
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
  bool usage_estimated = false;
  std::string backend_id;
  long long latency_ms = 0;
};

// A single chat-completion backend. Implementations signal retryable
// failures with TransientBackendError; anything else fails fast.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  // One completion for the prompt exactly as given (think marker already
  // applied). completion_tokens < 0 means the backend did not report usage.
  virtual ChatResponse complete_one(const ChatRequest& request, int sample_index) = 0;
};

struct ThinkControl {
  std::string prompt;
  std::optional<std::string> warning;
};

// NoThink appends the model family's suppression marker (qwen3-style:
// a trailing " /no_think"). Think leaves the prompt alone. Unsupported or an
// unrecognized family leaves the prompt alone and carries a warning.
ThinkControl apply_think_control(std::string_view prompt, ThinkMode mode,
                                 std::string_view family);

// ceil(bytes / 4): the flagged fallback whenever a backend reports no usage.
int estimate_tokens(std::string_view text);

// Content hash over (backend id, model, prompt, sampling minus n_samples,
// think mode, sample index). Tags and wall clock never enter; each sample is
// keyed independently so partial runs can be resumed.
std::string cache_key(std::string_view backend_id, const ChatRequest& request, int sample_index);

struct GatewayConfig {
  int in_flight_limit = 4;
  int retry_max = 5;        // total attempts per sample
  int backoff_base_ms = 500;  // 0 disables sleeping between attempts
  std::string think_family = "qwen3";
};

// Shareable front door to a backend: applies think control, fans a request
// out into n_samples single-sample calls, retries transient failures with
// exponential backoff and jitter, enforces the in-flight limit, and caches
// every response under cache/<first-2-hex>/<key> so a finished run replays
// offline.
class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, GatewayConfig config = {},
          std::optional<std::filesystem::path> cache_dir = std::nullopt);

  // n_samples responses in sample order. Cached samples are returned
  // byte-identically without touching the backend.
  std::vector<ChatResponse> complete(const ChatRequest& request);

  std::vector<std::string> drain_warnings();

  Backend& backend() { return *backend_; }
  const GatewayConfig& config() const { return config_; }
  const std::optional<std::filesystem::path>& cache_dir() const { return cache_dir_; }

 private:
  ChatResponse complete_sample(const ChatRequest& request, int sample_index);
  std::optional<ChatResponse> cache_load(const std::string& key) const;
  void cache_store(const std::string& key, const ChatRequest& request, int sample_index,
                   const ChatResponse& response) const;
  std::filesystem::path cache_path(const std::string& key) const;
  void note_warning(std::string warning);

  std::shared_ptr<Backend> backend_;
  GatewayConfig config_;
  std::optional<std::filesystem::path> cache_dir_;

  std::mutex slots_mu_;
  std::condition_variable slots_cv_;
  int in_flight_ = 0;

  std::mutex misc_mu_;  // warnings + backoff rng
  std::vector<std::string> warnings_;
  std::mt19937 rng_{0x5eed};
};

}  // namespace fcot
