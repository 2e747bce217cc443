#include "httplib.h"
#include "json.hpp"
#include "simulpipe/engines.hpp"
#include "simulpipe/error.hpp"

namespace simulpipe {

namespace {

// Splits "http://host:port/path" into origin and path.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "remote url needs a scheme: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

RemoteEngine::RemoteEngine(EngineDescriptor descriptor, std::string url, std::int64_t timeout_ms,
                           int max_connections)
    : TranslationEngine(std::move(descriptor)),
      timeout_ms_(timeout_ms),
      max_connections_(std::max(1, max_connections)) {
  std::tie(origin_, path_) = split_url(url);
}

std::string RemoteEngine::request_body(const LanguageCode& src, const LanguageCode& tgt,
                                       std::string_view text, const RequestContext& context,
                                       SegmentKind granularity) {
  nlohmann::ordered_json body;
  body["src"] = src.code();
  body["tgt"] = tgt.code();
  body["text"] = std::string(text);
  auto history = nlohmann::ordered_json::array();
  for (const auto& h : context.history) {
    history.push_back(nlohmann::ordered_json::array({h.source, h.translation}));
  }
  body["history"] = std::move(history);
  body["granularity"] = std::string(to_string(granularity));
  return body.dump();
}

std::string RemoteEngine::post(const std::string& body) {
  {
    std::unique_lock lock(mutex_);
    slot_free_.wait(lock, [this] { return active_ < max_connections_; });
    ++active_;
  }
  struct Release {
    RemoteEngine* self;
    ~Release() {
      {
        std::lock_guard lock(self->mutex_);
        --self->active_;
      }
      self->slot_free_.notify_one();
    }
  } release{this};

  httplib::Client client(origin_);
  const auto sec = static_cast<time_t>(timeout_ms_ / 1000);
  const auto usec = static_cast<time_t>((timeout_ms_ % 1000) * 1000);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  auto res = client.Post(path_, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::EngineUnavailable,
                id() + ": " + httplib::to_string(res.error()) + " (" + origin_ + path_ + ")");
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::EngineUnavailable, id() + ": HTTP " + std::to_string(res->status));
  }
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::EngineUnavailable, id() + ": bad response body: " + e.what());
  }
}

std::string RemoteEngine::forward(const TranslationRequest& request) {
  return post(request_body(request.src, request.tgt, request.text, request.context,
                           request.granularity));
}

std::string RemoteEngine::reverse(std::string_view text, const TranslationRequest& request) {
  return post(request_body(request.tgt, request.src, text, RequestContext{}, request.granularity));
}

}  // namespace simulpipe
