// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

// Thin blocking HTTP client shared by the remote providers. Keeps the
// cpp-httplib include in a single translation unit.

#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace imagine::net {

struct Url {
  std::string scheme_host;  // e.g. "http://localhost:8080"
  std::string path;         // e.g. "/segment"
};

Url parse_url(const std::string& url);

struct Part {
  std::string name;
  std::string content;
  std::string filename;
  std::string content_type;
};

struct Response {
  int status = 0;
  std::string body;
};

using Headers = std::vector<std::pair<std::string, std::string>>;

/// Transport failures throw Error(ProviderUnavailable) or Error(Timeout).
Response post(const std::string& url, const Headers& headers, const std::string& body,
              const std::string& content_type, std::chrono::milliseconds timeout);
Response post_multipart(const std::string& url, const Headers& headers, const std::vector<Part>& parts,
                        std::chrono::milliseconds timeout);

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds backoff{250};
};

/// Runs `attempt` until it returns a 2xx/4xx response or retries run out.
/// 5xx and connection errors are retried with exponential backoff; 4xx
/// throws Error(ProviderRejected); timeouts propagate immediately.
/// `attempts` receives the number of attempts made.
Response with_retries(const RetryPolicy& policy, const std::function<Response()>& attempt, int* attempts = nullptr);

}  // namespace imagine::net
