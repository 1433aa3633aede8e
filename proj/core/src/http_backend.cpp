#include "fcot/http_backend.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fcot/errors.hpp"
#include "fcot/util.hpp"

namespace fcot {

namespace {

using json = nlohmann::ordered_json;

struct SplitUrl {
  std::string host_port;  // scheme://host[:port]
  std::string path;       // leading path, no trailing slash
};

SplitUrl split_base_url(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error("base url must include a scheme: " + base_url);
  }
  auto path_start = base_url.find('/', scheme_end + 3);
  SplitUrl split;
  if (path_start == std::string::npos) {
    split.host_port = base_url;
  } else {
    split.host_port = base_url.substr(0, path_start);
    split.path = base_url.substr(path_start);
  }
  while (!split.path.empty() && split.path.back() == '/') split.path.pop_back();
  return split;
}

bool looks_like_context_overflow(const std::string& body) {
  auto lower = to_lower(body);
  return contains(lower, "context length") || contains(lower, "context window") ||
         contains(lower, "maximum context");
}

}  // namespace

struct HttpBackend::Impl {
  HttpBackendConfig config;
  SplitUrl url;
  std::unique_ptr<httplib::Client> client;
};

HttpBackend::HttpBackend(HttpBackendConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  impl_->url = split_base_url(impl_->config.base_url);
  impl_->client = std::make_unique<httplib::Client>(impl_->url.host_port);
  impl_->client->set_connection_timeout(10, 0);
  impl_->client->set_read_timeout(impl_->config.timeout_s, 0);
  impl_->client->set_write_timeout(impl_->config.timeout_s, 0);
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::id() const { return impl_->config.base_url; }

ChatResponse HttpBackend::complete_one(const ChatRequest& request, int /*sample_index*/) {
  const SamplingParams& s = request.sampling;
  json body;
  body["model"] = request.model;
  body["messages"] = json::array({json{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = s.temperature;
  body["top_p"] = s.top_p;
  body["top_k"] = s.top_k;
  body["min_p"] = s.min_p;
  body["max_tokens"] = s.max_new_tokens;
  body["n"] = 1;
  if (s.seed) body["seed"] = *s.seed;

  httplib::Headers headers;
  if (!impl_->config.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + impl_->config.api_key);
  }

  auto result = impl_->client->Post(impl_->url.path + "/chat/completions", headers, body.dump(),
                                    "application/json");
  if (!result) {
    throw TransientBackendError("connection to " + impl_->config.base_url +
                                " failed: " + httplib::to_string(result.error()));
  }
  const auto& response = *result;
  if (response.status == 408 || response.status == 429 || response.status >= 500) {
    throw TransientBackendError("backend returned HTTP " + std::to_string(response.status));
  }
  if (response.status == 400 && looks_like_context_overflow(response.body)) {
    throw ContextLengthExceeded("backend rejected request: " + response.body.substr(0, 200));
  }
  if (response.status != 200) {
    throw BackendRequestRejected("backend returned HTTP " + std::to_string(response.status) +
                                 ": " + response.body.substr(0, 200));
  }

  json reply = json::parse(response.body, nullptr, false);
  if (reply.is_discarded()) {
    throw MalformedBackendReply("backend reply is not JSON");
  }
  ChatResponse out;
  try {
    const auto& choice = reply.at("choices").at(0);
    if (choice.contains("message")) {
      out.text = choice["message"].at("content").get<std::string>();
    } else {
      out.text = choice.at("text").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw MalformedBackendReply(std::string("backend reply lacks choices: ") + e.what());
  }
  out.prompt_tokens = -1;
  out.completion_tokens = -1;
  if (reply.contains("usage") && reply["usage"].is_object()) {
    const auto& usage = reply["usage"];
    if (usage.contains("prompt_tokens")) out.prompt_tokens = usage["prompt_tokens"].get<long long>();
    if (usage.contains("completion_tokens")) {
      out.completion_tokens = usage["completion_tokens"].get<long long>();
    }
  }
  out.backend_id = impl_->config.base_url;
  return out;
}

}  // namespace fcot
