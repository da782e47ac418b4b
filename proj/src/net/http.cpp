// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include "net/http.hpp"

#include <thread>

#include <httplib.h>

#include "imagine/error.hpp"

namespace imagine::net {

Url parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidArgument, "url without scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

namespace {

httplib::Headers to_headers(const Headers& headers) {
  httplib::Headers out;
  for (const auto& [k, v] : headers) out.emplace(k, v);
  return out;
}

Response finish(const httplib::Result& res, std::chrono::steady_clock::time_point start,
                std::chrono::milliseconds timeout) {
  if (!res) {
    const auto elapsed = std::chrono::steady_clock::now() - start;
    if (res.error() == httplib::Error::Read && elapsed >= timeout - std::chrono::milliseconds(50)) {
      throw Error(ErrorCode::Timeout, "request exceeded " + std::to_string(timeout.count()) + " ms");
    }
    throw Error(ErrorCode::ProviderUnavailable, "transport error: " + httplib::to_string(res.error()));
  }
  return {res->status, res->body};
}

httplib::Client make_client(const Url& u, std::chrono::milliseconds timeout) {
  httplib::Client cli(u.scheme_host);
  cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count() + 1);
  cli.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                       std::chrono::duration_cast<std::chrono::microseconds>(timeout % std::chrono::seconds(1)).count());
  cli.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count() + 1);
  return cli;
}

}  // namespace

Response post(const std::string& url, const Headers& headers, const std::string& body,
              const std::string& content_type, std::chrono::milliseconds timeout) {
  const Url u = parse_url(url);
  auto cli = make_client(u, timeout);
  const auto start = std::chrono::steady_clock::now();
  return finish(cli.Post(u.path, to_headers(headers), body, content_type), start, timeout);
}

Response post_multipart(const std::string& url, const Headers& headers, const std::vector<Part>& parts,
                        std::chrono::milliseconds timeout) {
  const Url u = parse_url(url);
  auto cli = make_client(u, timeout);
  httplib::MultipartFormDataItems items;
  for (const auto& p : parts) items.push_back({p.name, p.content, p.filename, p.content_type});
  const auto start = std::chrono::steady_clock::now();
  return finish(cli.Post(u.path, to_headers(headers), items), start, timeout);
}

Response with_retries(const RetryPolicy& policy, const std::function<Response()>& attempt, int* attempts) {
  auto delay = policy.backoff;
  std::string last_failure;
  for (int i = 0; i <= policy.max_retries; ++i) {
    if (attempts) *attempts = i + 1;
    try {
      Response r = attempt();
      if (r.status >= 200 && r.status < 300) return r;
      if (r.status >= 400 && r.status < 500) {
        throw Error(ErrorCode::ProviderRejected, "HTTP " + std::to_string(r.status) + ": " + r.body.substr(0, 200));
      }
      last_failure = "HTTP " + std::to_string(r.status);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ProviderUnavailable) throw;
      last_failure = e.what();
    }
    if (i < policy.max_retries) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
  throw Error(ErrorCode::ProviderUnavailable,
              "gave up after " + std::to_string(policy.max_retries) + " retries: " + last_failure);
}

}  // namespace imagine::net
