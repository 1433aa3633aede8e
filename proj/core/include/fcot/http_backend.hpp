#pragma once

#include <memory>
#include <string>

#include "fcot/gateway.hpp"

namespace fcot {

struct HttpBackendConfig {
  // Chat-completions root, e.g. "http://localhost:8000/v1"; the backend
  // POSTs to <base_url>/chat/completions.
  std::string base_url;
  std::string api_key;  // empty: no Authorization header
  int timeout_s = 600;
};

// OpenAI-style chat-completions client. Sends model, a single user message,
// and the sampling fields (temperature, top_p, top_k, min_p, max_tokens,
// seed); reads choices[0] and usage. Connection failures, 408/429 and 5xx
// are transient; a context-length 400 raises ContextLengthExceeded; other
// 4xx fail fast.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  ~HttpBackend() override;

  std::string id() const override;
  ChatResponse complete_one(const ChatRequest& request, int sample_index) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fcot
