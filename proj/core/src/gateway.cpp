#include "fcot/gateway.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <thread>

#include "fcot/errors.hpp"
#include "fcot/util.hpp"

namespace fcot {

namespace {
using json = nlohmann::ordered_json;
}

const char* to_string(ThinkMode mode) {
  switch (mode) {
    case ThinkMode::Think: return "think";
    case ThinkMode::NoThink: return "no-think";
    case ThinkMode::Unsupported: return "unsupported";
  }
  return "?";
}

std::optional<ThinkMode> think_mode_from_string(std::string_view s) {
  if (s == "think") return ThinkMode::Think;
  if (s == "no-think" || s == "no_think" || s == "nothink") return ThinkMode::NoThink;
  if (s == "unsupported") return ThinkMode::Unsupported;
  return std::nullopt;
}

ThinkControl apply_think_control(std::string_view prompt, ThinkMode mode,
                                 std::string_view family) {
  ThinkControl result;
  result.prompt = std::string(prompt);
  if (mode == ThinkMode::Think) return result;
  if (mode == ThinkMode::Unsupported) {
    result.warning = "think control unsupported for family '" + std::string(family) +
                     "', prompt sent unchanged";
    return result;
  }
  // NoThink
  std::string f = to_lower(family);
  if (f.rfind("qwen", 0) == 0) {
    result.prompt += " /no_think";
    return result;
  }
  result.warning = "no suppression marker known for family '" + std::string(family) +
                   "', prompt sent unchanged";
  return result;
}

int estimate_tokens(std::string_view text) {
  return static_cast<int>((text.size() + 3) / 4);
}

std::string cache_key(std::string_view backend_id, const ChatRequest& request, int sample_index) {
  const SamplingParams& s = request.sampling;
  std::string canonical;
  canonical.reserve(256);
  canonical += "v1\n";
  canonical += backend_id;
  canonical += '\n';
  canonical += request.model;
  canonical += '\n';
  canonical += to_string(request.think);
  canonical += '\n';
  canonical += std::to_string(sample_index);
  canonical += '\n';
  canonical += format_double(s.temperature) + "," + format_double(s.top_p) + "," +
               std::to_string(s.top_k) + "," + format_double(s.min_p) + "," +
               std::to_string(s.max_new_tokens);
  canonical += '\n';
  canonical += s.seed ? std::to_string(*s.seed) : std::string("-");
  canonical += '\n';
  canonical += sha256_hex(request.prompt);
  return sha256_hex(canonical);
}

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayConfig config,
                 std::optional<std::filesystem::path> cache_dir)
    : backend_(std::move(backend)), config_(config), cache_dir_(std::move(cache_dir)) {
  if (config_.in_flight_limit < 1) config_.in_flight_limit = 1;
  if (config_.retry_max < 1) config_.retry_max = 1;
  if (cache_dir_) std::filesystem::create_directories(*cache_dir_);
}

std::vector<ChatResponse> Gateway::complete(const ChatRequest& request) {
  if (request.prompt.empty()) throw Error("ChatRequest.prompt must be non-empty");
  std::vector<ChatResponse> responses;
  responses.reserve(static_cast<size_t>(request.sampling.n_samples));
  for (int i = 0; i < request.sampling.n_samples; ++i) {
    responses.push_back(complete_sample(request, i));
  }
  return responses;
}

ChatResponse Gateway::complete_sample(const ChatRequest& request, int sample_index) {
  std::string key = cache_key(backend_->id(), request, sample_index);
  if (auto cached = cache_load(key)) return *cached;

  ThinkControl controlled =
      apply_think_control(request.prompt, request.think, config_.think_family);
  if (controlled.warning) note_warning(*controlled.warning);
  ChatRequest sent = request;
  sent.prompt = controlled.prompt;
  sent.tag.sample_index = sample_index;

  ChatResponse response;
  std::string last_error;
  for (int attempt = 1;; ++attempt) {
    // in-flight slot
    {
      std::unique_lock lock(slots_mu_);
      slots_cv_.wait(lock, [&] { return in_flight_ < config_.in_flight_limit; });
      ++in_flight_;
    }
    auto started = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      response = backend_->complete_one(sent, sample_index);
      ok = true;
    } catch (const TransientBackendError& e) {
      last_error = e.what();
    } catch (...) {
      {
        std::lock_guard lock(slots_mu_);
        --in_flight_;
      }
      slots_cv_.notify_one();
      throw;
    }
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - started)
                       .count();
    {
      std::lock_guard lock(slots_mu_);
      --in_flight_;
    }
    slots_cv_.notify_one();

    if (ok) {
      if (response.latency_ms == 0) response.latency_ms = elapsed;
      break;
    }
    if (attempt >= config_.retry_max) {
      throw BackendUnavailable("backend '" + backend_->id() + "' failed after " +
                               std::to_string(attempt) + " attempts: " + last_error);
    }
    if (config_.backoff_base_ms > 0) {
      long long base = config_.backoff_base_ms * (1LL << (attempt - 1));
      long long jitter;
      {
        std::lock_guard lock(misc_mu_);
        jitter = std::uniform_int_distribution<long long>(0, config_.backoff_base_ms / 2 + 1)(rng_);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(std::min(base + jitter, 60'000LL)));
    }
  }

  response.backend_id = backend_->id();
  if (response.completion_tokens < 0) {
    response.completion_tokens = estimate_tokens(response.text);
    response.usage_estimated = true;
  }
  if (response.prompt_tokens < 0) {
    response.prompt_tokens = estimate_tokens(sent.prompt);
    response.usage_estimated = true;
  }
  cache_store(key, sent, sample_index, response);
  return response;
}

std::filesystem::path Gateway::cache_path(const std::string& key) const {
  return *cache_dir_ / key.substr(0, 2) / key;
}

std::optional<ChatResponse> Gateway::cache_load(const std::string& key) const {
  if (!cache_dir_) return std::nullopt;
  auto path = cache_path(key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.contains("response")) {
    throw MalformedBackendReply("corrupt cache entry: " + path.string());
  }
  const auto& r = j["response"];
  ChatResponse response;
  response.text = r.at("text").get<std::string>();
  response.prompt_tokens = r.at("prompt_tokens").get<long long>();
  response.completion_tokens = r.at("completion_tokens").get<long long>();
  response.usage_estimated = r.at("usage_estimated").get<bool>();
  response.backend_id = r.at("backend_id").get<std::string>();
  response.latency_ms = r.at("latency_ms").get<long long>();
  return response;
}

void Gateway::cache_store(const std::string& key, const ChatRequest& request, int sample_index,
                          const ChatResponse& response) const {
  if (!cache_dir_) return;
  auto path = cache_path(key);
  std::filesystem::create_directories(path.parent_path());
  json j;
  j["key"] = key;
  j["backend_id"] = backend_->id();
  j["model"] = request.model;
  j["prompt"] = request.prompt;
  j["sampling"] = {{"temperature", request.sampling.temperature},
                   {"top_p", request.sampling.top_p},
                   {"top_k", request.sampling.top_k},
                   {"min_p", request.sampling.min_p},
                   {"max_new_tokens", request.sampling.max_new_tokens}};
  if (request.sampling.seed) j["sampling"]["seed"] = *request.sampling.seed;
  j["think"] = to_string(request.think);
  j["sample_index"] = sample_index;
  j["response"] = {{"text", response.text},
                   {"prompt_tokens", response.prompt_tokens},
                   {"completion_tokens", response.completion_tokens},
                   {"usage_estimated", response.usage_estimated},
                   {"backend_id", response.backend_id},
                   {"latency_ms", response.latency_ms}};
  // Atomic rename keeps concurrent readers away from half-written entries;
  // last writer wins for identical content.
  write_file_atomic(path, j.dump());
}

void Gateway::note_warning(std::string warning) {
  std::lock_guard lock(misc_mu_);
  warnings_.push_back(std::move(warning));
}

std::vector<std::string> Gateway::drain_warnings() {
  std::lock_guard lock(misc_mu_);
  return std::exchange(warnings_, {});
}

}  // namespace fcot
