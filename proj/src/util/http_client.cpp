#include "echo/util/http_client.hpp"

#include <thread>

#include <httplib.h>

#include "echo/error.hpp"

namespace echo {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(Errc::ConfigError, "endpoint '" + url + "' has no scheme");
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string http_post_json(const std::string& url, const std::string& body,
                           const HttpHeaders& headers, const HttpRetryPolicy& policy) {
  SplitUrl target = split_url(url);
  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);

  auto seconds = std::chrono::duration_cast<std::chrono::seconds>(policy.timeout);
  auto micros = std::chrono::duration_cast<std::chrono::microseconds>(policy.timeout - seconds);

  for (int attempt = 0;; ++attempt) {
    httplib::Client client(target.origin);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());

    auto res = client.Post(target.path, hdrs, body, "application/json");
    bool last = attempt >= policy.retries;
    if (!res) {
      httplib::Error err = res.error();
      bool timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                       err == httplib::Error::ConnectionTimeout;
      if (last) {
        throw Error(timed_out ? Errc::Timeout : Errc::HttpError,
                    "POST " + url + " failed: " + httplib::to_string(err));
      }
    } else if (res->status == 401 || res->status == 403) {
      throw Error(Errc::AuthError, "POST " + url + " rejected credentials (HTTP " +
                                       std::to_string(res->status) + ")");
    } else if (res->status >= 200 && res->status < 300) {
      return res->body;
    } else if (!retryable_status(res->status) || last) {
      throw Error(Errc::HttpError, "POST " + url + " returned HTTP " +
                                       std::to_string(res->status) + ": " +
                                       res->body.substr(0, 200));
    }
    std::this_thread::sleep_for(policy.backoff * (attempt + 1));
  }
}

}  // namespace echo
