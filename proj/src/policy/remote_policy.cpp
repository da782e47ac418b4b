// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include <json.hpp>

#include "imagine/digest.hpp"
#include "imagine/error.hpp"
#include "imagine/policy.hpp"
#include "net/http.hpp"

namespace imagine {

using nlohmann::json;

std::string chat_request_json(const ChatRequest& req, bool inline_images) {
  json messages = json::array();
  for (const auto& m : req.messages) {
    const bool has_image = std::any_of(m.parts.begin(), m.parts.end(),
                                       [](const ChatPart& p) { return p.kind == ChatPart::Kind::Image; });
    if (!has_image && m.parts.size() == 1) {
      messages.push_back({{"role", m.role}, {"content", m.parts[0].text}});
      continue;
    }
    json content = json::array();
    for (const auto& p : m.parts) {
      if (p.kind == ChatPart::Kind::Text) {
        content.push_back({{"type", "text"}, {"text", p.text}});
      } else if (inline_images) {
        content.push_back(
            {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_encode(*p.image.png)}}}});
      } else {
        content.push_back({{"type", "image_ref"}, {"digest", p.image.digest}});
      }
    }
    messages.push_back({{"role", m.role}, {"content", std::move(content)}});
  }
  json j = {{"model", req.model}, {"temperature", req.temperature}, {"messages", std::move(messages)}};
  return j.dump();
}

std::string ScriptedPolicy::decide(const Observation&, const ChatRequest&) {
  if (next_ >= lines_.size()) throw Error(ErrorCode::BudgetExhausted, "scripted policy has no more replies");
  return lines_[next_++];
}

std::string redact(std::string text, std::string_view secret) {
  if (secret.empty()) return text;
  static constexpr std::string_view kMarker = "[REDACTED]";
  for (std::size_t p = text.find(secret); p != std::string::npos; p = text.find(secret, p + kMarker.size())) {
    text.replace(p, secret.size(), kMarker);
  }
  return text;
}

RemotePolicy::RemotePolicy(ChatEndpoint endpoint, std::string auth_token)
    : endpoint_(std::move(endpoint)), auth_token_(std::move(auth_token)) {
  net::parse_url(endpoint_.url);
}

std::string RemotePolicy::decide(const Observation&, const ChatRequest& request) {
  const std::string body = chat_request_json(request, true);
  net::Headers headers;
  if (!auth_token_.empty()) headers.emplace_back("Authorization", "Bearer " + auth_token_);
  const net::Response r = net::with_retries(
      {endpoint_.max_retries, endpoint_.backoff},
      [&] { return net::post(endpoint_.url, headers, body, "application/json", endpoint_.timeout); });
  try {
    const json reply = json::parse(r.body);
    const json& content = reply.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    std::string text;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") text += part.at("text").get<std::string>();
    }
    return text;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderRejected, std::string("malformed chat response: ") + e.what());
  }
}

}  // namespace imagine
