#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "strata/errors.h"
#include "strata/scorer.h"
#include "strata/topics.h"

namespace strata {

// Newline-delimited JSON over a byte stream. One response per request, ids
// echo, responses arrive in request order.
//   request:  {"kind":"pointwise"|"pairwise"|"extract","id":N,"query":..,"doc":..[,"doc2":..]}
//   response: {"id":N,"score":p} with p in [0,1], or {"id":N,"terms":[..]} for extract

enum class MessageKind { kPointwise, kPairwise, kExtract };

struct WireRequest {
  MessageKind kind = MessageKind::kPointwise;
  std::int64_t id = 0;
  std::string query;
  std::string doc;
  std::optional<std::string> doc2;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// One line, without the trailing newline.
std::string encode_request(const WireRequest& request);

/// Validates the id echo and that the score is a finite number in [0, 1].
double decode_score_response(std::string_view line, std::int64_t expected_id);

std::vector<std::string> decode_extract_response(std::string_view line, std::int64_t expected_id);

class ChannelClosed : public Error {
 public:
  using Error::Error;
};

class ChannelTimeout : public Error {
 public:
  using Error::Error;
};

/// A bidirectional line-oriented byte stream.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(std::string_view line) = 0;
  /// Throws ChannelClosed on EOF and ChannelTimeout when nothing arrives in time.
  virtual std::string read_line(std::chrono::milliseconds timeout) = 0;
};

/// Channel over a pair of file descriptors, owned and closed on destruction.
class FdChannel : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd);
  ~FdChannel() override;
  FdChannel(const FdChannel&) = delete;
  FdChannel& operator=(const FdChannel&) = delete;

  void write_line(std::string_view line) override;
  std::string read_line(std::chrono::milliseconds timeout) override;

 protected:
  void close_write();

 private:
  int read_fd_;
  int write_fd_;
  std::string buffer_;
};

/// Runs `/bin/sh -c command` with its stdin and stdout connected.
class ProcessChannel final : public FdChannel {
 public:
  static std::unique_ptr<ProcessChannel> spawn(const std::string& command);
  ~ProcessChannel() override;

 private:
  ProcessChannel(int read_fd, int write_fd, int pid) : FdChannel(read_fd, write_fd), pid_(pid) {}
  int pid_;
};

class TcpChannel final : public FdChannel {
 public:
  static std::unique_ptr<TcpChannel> connect(const std::string& host, std::uint16_t port);

 private:
  explicit TcpChannel(int fd);
};

/// Scorer speaking the wire protocol. Calls are serialized over one channel;
/// after any transport or protocol failure the channel is considered broken
/// and every later call fails fast.
class ExternalScorer final : public Scorer {
 public:
  explicit ExternalScorer(std::unique_ptr<LineChannel> channel,
                          std::chrono::milliseconds timeout = std::chrono::seconds(30));

  std::vector<double> score(std::span<const PointwiseRequest> batch) override;
  std::vector<double> score(std::span<const PairwiseRequest> batch) override;

  /// "extract" messages; the question travels in the query field.
  std::vector<std::string> extract(std::string_view question);

 private:
  std::vector<double> exchange(std::vector<WireRequest> requests);

  std::mutex mutex_;
  std::unique_ptr<LineChannel> channel_;
  std::chrono::milliseconds timeout_;
  std::int64_t next_id_ = 0;
  bool broken_ = false;
};

class ExternalKeyTermExtractor final : public KeyTermExtractor {
 public:
  explicit ExternalKeyTermExtractor(ExternalScorer& endpoint) : endpoint_(&endpoint) {}
  std::vector<std::string> extract(std::string_view question) override;

 private:
  ExternalScorer* endpoint_;
};

/// "reference", "exec:CMD" or "tcp:HOST:PORT". Throws UsageError otherwise.
std::unique_ptr<Scorer> make_scorer(std::string_view endpoint, const InvertedIndex* idf_source,
                                    std::chrono::milliseconds timeout = std::chrono::seconds(30));

}  // namespace strata
