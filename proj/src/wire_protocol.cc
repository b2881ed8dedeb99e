#include "strata/wire_protocol.h"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <csignal>
#include <cstring>
#include <thread>
#include <unordered_set>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "strata/text.h"

extern char** environ;

namespace strata {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string_view kind_name(MessageKind kind) {
  switch (kind) {
    case MessageKind::kPointwise: return "pointwise";
    case MessageKind::kPairwise: return "pairwise";
    case MessageKind::kExtract: return "extract";
  }
  return "pointwise";
}

json parse_response(std::string_view line, std::int64_t expected_id) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  }
  if (!obj.is_object()) throw ProtocolError("response is not an object");
  auto id = obj.find("id");
  if (id == obj.end() || !id->is_number_integer()) throw ProtocolError("response without integer id");
  if (id->get<std::int64_t>() != expected_id) {
    throw ProtocolError("response id " + std::to_string(id->get<std::int64_t>()) + " does not echo request id " +
                        std::to_string(expected_id));
  }
  return obj;
}

void ignore_sigpipe() {
  static const bool once = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

}  // namespace

std::string encode_request(const WireRequest& r) {
  nlohmann::ordered_json obj;
  obj["kind"] = kind_name(r.kind);
  obj["id"] = r.id;
  obj["query"] = r.query;
  obj["doc"] = r.doc;
  if (r.doc2) obj["doc2"] = *r.doc2;
  // Invalid UTF-8 is replaced rather than aborting the batch.
  return obj.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

double decode_score_response(std::string_view line, std::int64_t expected_id) {
  const json obj = parse_response(line, expected_id);
  auto score = obj.find("score");
  if (score == obj.end() || !score->is_number()) throw ProtocolError("response without numeric score");
  const double p = score->get<double>();
  if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
    throw ProtocolError("score " + std::to_string(p) + " outside [0,1]");
  }
  return p;
}

std::vector<std::string> decode_extract_response(std::string_view line, std::int64_t expected_id) {
  const json obj = parse_response(line, expected_id);
  auto terms = obj.find("terms");
  if (terms == obj.end() || !terms->is_array()) throw ProtocolError("extract response without terms array");
  std::vector<std::string> out;
  for (const json& t : *terms) {
    if (!t.is_string()) throw ProtocolError("extract terms must be strings");
    out.push_back(t.get<std::string>());
  }
  return out;
}

FdChannel::FdChannel(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {
  ignore_sigpipe();
}

FdChannel::~FdChannel() {
  if (read_fd_ >= 0) ::close(read_fd_);
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
}

void FdChannel::close_write() {
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  write_fd_ = -1;
}

void FdChannel::write_line(std::string_view line) {
  if (write_fd_ < 0) throw ChannelClosed("channel closed for writing");
  std::string data(line);
  data.push_back('\n');
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::write(write_fd_, data.data() + sent, data.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ChannelClosed(std::string("write failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string FdChannel::read_line(std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  while (true) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (remaining.count() <= 0) throw ChannelTimeout("timed out waiting for response");
    pollfd pfd{read_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw ChannelClosed(std::string("poll failed: ") + std::strerror(errno));
    }
    if (ready == 0) throw ChannelTimeout("timed out waiting for response");
    char chunk[4096];
    const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw ChannelClosed(std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) throw ChannelClosed("peer closed the channel");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::unique_ptr<ProcessChannel> ProcessChannel::spawn(const std::string& command) {
  ignore_sigpipe();
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) throw Error("pipe failed");
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw Error("pipe failed");
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);

  std::string shell = "/bin/sh";
  std::string flag = "-c";
  std::string cmd = command;
  char* argv[] = {shell.data(), flag.data(), cmd.data(), nullptr};
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(to_child[0]);
  ::close(from_child[1]);
  if (rc != 0) {
    ::close(to_child[1]);
    ::close(from_child[0]);
    throw Error("cannot spawn scorer command '" + command + "': " + std::strerror(rc));
  }
  return std::unique_ptr<ProcessChannel>(new ProcessChannel(from_child[0], to_child[1], pid));
}

ProcessChannel::~ProcessChannel() {
  close_write();
  // Give the child a moment to exit on EOF before forcing it.
  for (int i = 0; i < 50; ++i) {
    int status = 0;
    if (::waitpid(pid_, &status, WNOHANG) != 0) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ::kill(pid_, SIGKILL);
  int status = 0;
  ::waitpid(pid_, &status, 0);
}

TcpChannel::TcpChannel(int fd) : FdChannel(fd, fd) {}

std::unique_ptr<TcpChannel> TcpChannel::connect(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &result); rc != 0) {
    throw Error("cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = result; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(result);
  if (fd < 0) throw Error("cannot connect to scorer at " + host + ":" + service);
  return std::unique_ptr<TcpChannel>(new TcpChannel(fd));
}

ExternalScorer::ExternalScorer(std::unique_ptr<LineChannel> channel, std::chrono::milliseconds timeout)
    : channel_(std::move(channel)), timeout_(timeout) {}

std::vector<double> ExternalScorer::exchange(std::vector<WireRequest> requests) {
  std::lock_guard lock(mutex_);
  if (broken_) throw ScorerError("scorer channel is broken", 0);
  for (WireRequest& r : requests) r.id = next_id_++;

  std::size_t at = 0;
  try {
    for (at = 0; at < requests.size(); ++at) channel_->write_line(encode_request(requests[at]));
    std::vector<double> scores;
    scores.reserve(requests.size());
    for (at = 0; at < requests.size(); ++at) {
      scores.push_back(decode_score_response(channel_->read_line(timeout_), requests[at].id));
    }
    return scores;
  } catch (const Error& e) {
    broken_ = true;
    throw ScorerError(e.what(), at);
  }
}

std::vector<double> ExternalScorer::score(std::span<const PointwiseRequest> batch) {
  std::vector<WireRequest> requests;
  requests.reserve(batch.size());
  for (const PointwiseRequest& r : batch) {
    requests.push_back({MessageKind::kPointwise, 0, r.query, r.passage, std::nullopt});
  }
  return exchange(std::move(requests));
}

std::vector<double> ExternalScorer::score(std::span<const PairwiseRequest> batch) {
  std::vector<WireRequest> requests;
  requests.reserve(batch.size());
  for (const PairwiseRequest& r : batch) {
    requests.push_back({MessageKind::kPairwise, 0, r.query, r.passage_a, r.passage_b});
  }
  return exchange(std::move(requests));
}

std::vector<std::string> ExternalScorer::extract(std::string_view question) {
  std::lock_guard lock(mutex_);
  if (broken_) throw ScorerError("scorer channel is broken", 0);
  WireRequest request{MessageKind::kExtract, next_id_++, std::string(question), "", std::nullopt};
  try {
    channel_->write_line(encode_request(request));
    return decode_extract_response(channel_->read_line(timeout_), request.id);
  } catch (const Error& e) {
    broken_ = true;
    throw ScorerError(e.what(), 0);
  }
}

std::vector<std::string> ExternalKeyTermExtractor::extract(std::string_view question) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const std::string& raw : endpoint_->extract(question)) {
    for (std::string& term : strip_stopwords(tokenize(raw))) {
      if (seen.insert(term).second) out.push_back(std::move(term));
    }
  }
  return out;
}

std::unique_ptr<Scorer> make_scorer(std::string_view endpoint, const InvertedIndex* idf_source,
                                    std::chrono::milliseconds timeout) {
  if (endpoint.empty() || endpoint == "reference") return std::make_unique<ReferenceScorer>(idf_source);
  try {
    if (endpoint.starts_with("exec:")) {
      const std::string command(endpoint.substr(5));
      if (command.empty()) throw UsageError("scorer exec: needs a command");
      return std::make_unique<ExternalScorer>(ProcessChannel::spawn(command), timeout);
    }
    if (endpoint.starts_with("tcp:")) {
      const std::string_view rest = endpoint.substr(4);
      const auto colon = rest.rfind(':');
      if (colon == std::string_view::npos || colon == 0) throw UsageError("scorer tcp: needs HOST:PORT");
      int port = 0;
      const std::string_view digits = rest.substr(colon + 1);
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
      if (ec != std::errc() || p != digits.data() + digits.size() || port <= 0 || port > 65535) {
        throw UsageError("invalid scorer port in '" + std::string(endpoint) + "'");
      }
      return std::make_unique<ExternalScorer>(
          TcpChannel::connect(std::string(rest.substr(0, colon)), static_cast<std::uint16_t>(port)), timeout);
    }
  } catch (const UsageError&) {
    throw;
  } catch (const ScorerError&) {
    throw;
  } catch (const Error& e) {
    throw ScorerError(e.what(), 0);
  }
  throw UsageError("unknown scorer '" + std::string(endpoint) + "' (expected reference, exec:CMD or tcp:HOST:PORT)");
}

}  // namespace strata
