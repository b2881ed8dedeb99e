#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <thread>

#include "strata/wire_protocol.h"

using namespace strata;
using namespace std::chrono_literals;

namespace {

std::string helper(const std::string& mode) { return std::string("exec:") + STRATA_ECHO_SCORER + " " + mode; }

std::unique_ptr<Scorer> spawn(const std::string& mode, std::chrono::milliseconds timeout = 5s) {
  return make_scorer(helper(mode), nullptr, timeout);
}

std::vector<PointwiseRequest> three() {
  return {{"q", std::string(10, 'a')}, {"q", std::string(50, 'b')}, {"q", std::string(200, 'c')}};
}

}  // namespace

TEST(Codec, EncodesOrderedFields) {
  EXPECT_EQ(encode_request({MessageKind::kPointwise, 3, "q", "d", std::nullopt}),
            R"({"kind":"pointwise","id":3,"query":"q","doc":"d"})");
  EXPECT_EQ(encode_request({MessageKind::kPairwise, 4, "q", "a", std::string("b")}),
            R"({"kind":"pairwise","id":4,"query":"q","doc":"a","doc2":"b"})");
}

TEST(Codec, InvalidUtf8IsReplaced) {
  const std::string line = encode_request({MessageKind::kPointwise, 1, "q", "bad \xff byte", std::nullopt});
  EXPECT_NE(line.find("\xEF\xBF\xBD"), std::string::npos);
}

TEST(Codec, DecodeValidatesIdAndRange) {
  EXPECT_DOUBLE_EQ(decode_score_response(R"({"id":5,"score":0.25})", 5), 0.25);
  EXPECT_THROW(decode_score_response(R"({"id":6,"score":0.25})", 5), ProtocolError);
  EXPECT_THROW(decode_score_response(R"({"id":5,"score":NaN})", 5), ProtocolError);
  EXPECT_THROW(decode_score_response(R"({"id":5,"score":-0.1})", 5), ProtocolError);
  EXPECT_THROW(decode_score_response(R"({"id":5})", 5), ProtocolError);
  EXPECT_THROW(decode_score_response("garbage", 5), ProtocolError);
  EXPECT_EQ(decode_extract_response(R"({"id":1,"terms":["a","b"]})", 1), (std::vector<std::string>{"a", "b"}));
  EXPECT_THROW(decode_extract_response(R"({"id":1,"terms":[1]})", 1), ProtocolError);
}

TEST(ExternalScorer, BatchOfThreeInOrder) {
  auto scorer = spawn("ok");
  const auto batch = three();
  const auto out = scorer->score(std::span<const PointwiseRequest>(batch));
  EXPECT_EQ(out, (std::vector<double>{0.1, 0.5, 1.0}));
  // The channel stays usable across batches.
  EXPECT_EQ(scorer->score(std::span<const PointwiseRequest>(batch)), out);
}

TEST(ExternalScorer, PairwiseAndEmptyBatch) {
  auto scorer = spawn("ok");
  const std::vector<PairwiseRequest> pairs{{"q", std::string(30, 'x'), "y"}};
  EXPECT_EQ(scorer->score(std::span<const PairwiseRequest>(pairs)), std::vector<double>{0.3});
  EXPECT_TRUE(scorer->score(std::span<const PointwiseRequest>{}).empty());
}

TEST(ExternalScorer, NanResponseIsScorerError) {
  auto scorer = spawn("nan");
  const auto batch = three();
  try {
    scorer->score(std::span<const PointwiseRequest>(batch));
    FAIL();
  } catch (const ScorerError& e) {
    EXPECT_EQ(e.batch_index(), 0u);
  }
  // A failed channel stays failed.
  EXPECT_THROW(scorer->score(std::span<const PointwiseRequest>(batch)), ScorerError);
}

TEST(ExternalScorer, WrongIdAndOutOfRange) {
  const auto batch = three();
  EXPECT_THROW(spawn("badid")->score(std::span<const PointwiseRequest>(batch)), ScorerError);
  EXPECT_THROW(spawn("range")->score(std::span<const PointwiseRequest>(batch)), ScorerError);
}

TEST(ExternalScorer, ClosedChannel) {
  auto scorer = spawn("close");
  const auto batch = three();
  EXPECT_THROW(scorer->score(std::span<const PointwiseRequest>(batch)), ScorerError);
}

TEST(ExternalScorer, TimeoutIsScorerError) {
  auto scorer = spawn("hang", 200ms);
  const auto batch = three();
  const auto start = std::chrono::steady_clock::now();
  EXPECT_THROW(scorer->score(std::span<const PointwiseRequest>(batch)), ScorerError);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 3s);
}

TEST(ExternalScorer, MissingCommandFailsOnFirstUse) {
  std::unique_ptr<Scorer> scorer;
  try {
    scorer = make_scorer("exec:/nonexistent/scorer-binary", nullptr, 1s);
  } catch (const ScorerError&) {
    return;  // spawn itself may already fail
  }
  const auto batch = three();
  EXPECT_THROW(scorer->score(std::span<const PointwiseRequest>(batch)), ScorerError);
}

TEST(ExternalExtractor, NormalizesTerms) {
  auto endpoint = spawn("ok");
  auto* external = dynamic_cast<ExternalScorer*>(endpoint.get());
  ASSERT_NE(external, nullptr);
  ExternalKeyTermExtractor extractor(*external);
  EXPECT_EQ(extractor.extract("which coronavirus antibodies coronavirus"),
            (std::vector<std::string>{"coronavirus", "antibodies"}));
}

TEST(MakeScorer, SpecParsing) {
  EXPECT_TRUE(dynamic_cast<ReferenceScorer*>(make_scorer("reference", nullptr).get()));
  EXPECT_THROW(make_scorer("bogus", nullptr), UsageError);
  EXPECT_THROW(make_scorer("exec:", nullptr), UsageError);
  EXPECT_THROW(make_scorer("tcp:host", nullptr), UsageError);
  EXPECT_THROW(make_scorer("tcp:host:99999", nullptr), UsageError);
  EXPECT_THROW(make_scorer("tcp:127.0.0.1:1", nullptr, 1s), ScorerError);
}

TEST(TcpChannel, ScoresOverSocket) {
  const int server = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(server, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ASSERT_EQ(::bind(server, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)), 0);
  ASSERT_EQ(::listen(server, 1), 0);
  socklen_t len = sizeof(addr);
  ::getsockname(server, reinterpret_cast<sockaddr*>(&addr), &len);
  const int port = ntohs(addr.sin_port);

  std::thread peer([server] {
    const int conn = ::accept(server, nullptr, nullptr);
    std::string buffer;
    char chunk[256];
    int answered = 0;
    while (answered < 2) {
      const ssize_t n = ::read(conn, chunk, sizeof(chunk));
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buffer.find('\n')) != std::string::npos) {
        const std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        const auto id_pos = line.find("\"id\":") + 5;
        const std::string id = line.substr(id_pos, line.find(',', id_pos) - id_pos);
        const std::string reply = "{\"id\":" + id + ",\"score\":0.75}\n";
        if (::write(conn, reply.data(), reply.size()) < 0) break;
        ++answered;
      }
    }
    ::close(conn);
  });

  auto scorer = make_scorer("tcp:127.0.0.1:" + std::to_string(port), nullptr, 2s);
  const std::vector<PointwiseRequest> batch{{"q", "a"}, {"q", "b"}};
  EXPECT_EQ(scorer->score(std::span<const PointwiseRequest>(batch)), (std::vector<double>{0.75, 0.75}));
  peer.join();
  ::close(server);
}
