#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "srmcts/errors.hpp"
#include "srmcts/policy.hpp"

namespace srmcts {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

ExternalPrior::ExternalPrior(std::string address, const Vocabulary& vocab,
                             std::vector<std::string> names, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw ConfigError("policy.external_addr must be host:port, got '" + address + "'");
  }
  host_ = address.substr(0, colon);
  port_ = address.substr(colon + 1);
  token_names_.reserve(vocab.size());
  for (const auto& t : vocab.tokens()) token_names_.push_back(token_string(t, names));
}

ExternalPrior::~ExternalPrior() { disconnect(); }

std::size_t ExternalPrior::fallback_count() const {
  std::lock_guard lock(mutex_);
  return fallbacks_;
}

std::string ExternalPrior::encode_request(std::int64_t id, const SearchState& s,
                                          const ActionMask& mask) const {
  json context = json::array({"BOS"});
  for (ActionId a : s.actions) context.push_back(token_names_.at(a));
  json legal = json::array();
  for (std::size_t a = 0; a < mask.legal.size(); ++a) {
    if (mask.legal[a]) legal.push_back(a);
  }
  return json{{"id", id}, {"context", std::move(context)}, {"legal", std::move(legal)}}.dump();
}

void ExternalPrior::disconnect() const {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  buffer_.clear();
}

bool ExternalPrior::ensure_connected() const {
  if (fd_ >= 0) return true;
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host_.c_str(), port_.c_str(), &hints, &res) != 0) return false;
  for (addrinfo* p = res; p != nullptr; p = p->ai_next) {
    const int fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) {
      fd_ = fd;
      break;
    }
    ::close(fd);
  }
  ::freeaddrinfo(res);
  return fd_ >= 0;
}

bool ExternalPrior::send_all(const std::string& data) const {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

bool ExternalPrior::read_line(std::string& line, Clock::time_point deadline) const {
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return true;
    }
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) return false;
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) return false;
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n <= 0) return false;
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<double> ExternalPrior::fallback(const SearchState& s, const ActionMask& mask,
                                            const std::string& reason) const {
  ++fallbacks_;
  spdlog::warn("policy server {}:{} unusable ({}); using uniform prior", host_, port_, reason);
  return UniformPrior{}.probabilities(s, mask);
}

std::vector<double> ExternalPrior::probabilities(const SearchState& s,
                                                 const ActionMask& mask) const {
  if (s.terminal()) throw TerminalState();
  if (!mask.any()) throw EmptyMask();

  std::lock_guard lock(mutex_);
  if (!ensure_connected()) return fallback(s, mask, "connect failed");

  const std::int64_t id = next_id_++;
  if (!send_all(encode_request(id, s, mask) + "\n")) {
    disconnect();
    return fallback(s, mask, "send failed");
  }

  const auto deadline = Clock::now() + timeout_;
  std::string line;
  for (;;) {
    if (!read_line(line, deadline)) {
      // A late reply would desynchronise the stream, so start over.
      disconnect();
      return fallback(s, mask, "timeout");
    }
    json reply = json::parse(line, nullptr, false);
    if (reply.is_discarded() || !reply.is_object()) return fallback(s, mask, "malformed reply");
    const auto id_it = reply.find("id");
    if (id_it == reply.end() || !id_it->is_number_integer()) {
      return fallback(s, mask, "reply without id");
    }
    if (id_it->get<std::int64_t>() < id) continue;  // stale reply to an abandoned request
    if (id_it->get<std::int64_t>() != id) return fallback(s, mask, "unexpected reply id");

    const auto probs_it = reply.find("probs");
    const std::size_t n_legal = mask.count();
    if (probs_it == reply.end() || !probs_it->is_array() || probs_it->size() != n_legal) {
      return fallback(s, mask, "probs missing or misaligned");
    }
    std::vector<double> out(mask.legal.size(), 0.0);
    double total = 0.0;
    std::size_t k = 0;
    for (std::size_t a = 0; a < mask.legal.size(); ++a) {
      if (!mask.legal[a]) continue;
      const auto& v = (*probs_it)[k++];
      if (!v.is_number()) return fallback(s, mask, "non-numeric probability");
      const double p = v.get<double>();
      if (!std::isfinite(p) || p < 0.0) return fallback(s, mask, "invalid probability");
      out[a] = p;
      total += p;
    }
    if (!(total > 0.0)) return fallback(s, mask, "probabilities sum to zero");
    // Legal actions keep positive mass even when the server assigns zero.
    constexpr double kFloor = 1e-12;
    total = 0.0;
    for (std::size_t a = 0; a < out.size(); ++a) {
      if (mask.legal[a]) {
        out[a] = std::max(out[a], kFloor);
        total += out[a];
      }
    }
    for (auto& p : out) p /= total;
    return out;
  }
}

}  // namespace srmcts
