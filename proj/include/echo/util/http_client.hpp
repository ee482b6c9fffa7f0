#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace echo {

struct HttpRetryPolicy {
  std::chrono::milliseconds timeout{60000};
  int retries = 1;  // extra attempts after the first
  std::chrono::milliseconds backoff{1000};
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

// POSTs a JSON body and returns the response body of a 2xx reply.
// 401/403 throw AuthError immediately. Timeouts, connection failures, 429
// and 5xx are retried per the policy; the final failure throws Timeout or
// HttpError. Other statuses throw HttpError without retry.
std::string http_post_json(const std::string& url, const std::string& body,
                           const HttpHeaders& headers, const HttpRetryPolicy& policy);

}  // namespace echo
