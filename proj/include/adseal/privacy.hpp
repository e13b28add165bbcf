#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adseal/events.hpp"
#include "adseal/model.hpp"
#include "adseal/trainer.hpp"

namespace adseal {

enum class MessageKind { RawEvents, UserTags, ModelParams, EncryptedBlob };
enum class Verdict { Allowed, Blocked };

std::string to_string(MessageKind k);
std::string to_string(Verdict v);
MessageKind message_kind_from_string(const std::string& s);
Verdict verdict_from_string(const std::string& s);

// A message presented at the client->server boundary. Constructed only via
// the typed factories below, so `kind` always describes the payload.
class BoundaryMessage {
 public:
  static BoundaryMessage raw_events(const std::string& client,
                                    const std::vector<ImpressionEvent>& events);
  static BoundaryMessage user_tags(const std::string& client, const UserTagSet& tags);
  static BoundaryMessage model_params(const std::string& client,
                                      const std::vector<const Matrix*>& delta);
  static BoundaryMessage encrypted_blob(const std::string& client,
                                        std::vector<unsigned char> bytes);

  MessageKind kind() const { return kind_; }
  const std::string& origin() const { return origin_; }
  const std::vector<unsigned char>& payload() const { return payload_; }
  size_t size_bytes() const { return payload_.size(); }

  static std::vector<ImpressionEvent> parse_raw_events(const BoundaryMessage& msg);
  static std::vector<Matrix> parse_model_params(const BoundaryMessage& msg);

 private:
  BoundaryMessage(MessageKind kind, std::string origin, std::vector<unsigned char> payload)
      : kind_(kind), origin_(std::move(origin)), payload_(std::move(payload)) {}

  MessageKind kind_;
  std::string origin_;
  std::vector<unsigned char> payload_;
};

struct LedgerEntry {
  int round = 0;
  std::string client;
  MessageKind kind = MessageKind::RawEvents;
  size_t bytes = 0;
  Verdict verdict = Verdict::Blocked;
};

// Append-only record of every message presented at the boundary.
class AuditLedger {
 public:
  void append(LedgerEntry entry) { entries_.push_back(std::move(entry)); }
  const std::vector<LedgerEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  int count(MessageKind kind, Verdict verdict) const;

  void save_jsonl(const std::string& path) const;
  static AuditLedger load_jsonl(const std::string& path);

 private:
  std::vector<LedgerEntry> entries_;
};

enum class Topology { Local, Cloud };

std::string to_string(Topology t);
Topology topology_from_string(const std::string& s);

struct PrivacyMode {
  Topology topology = Topology::Local;
  double adversary_intercept_rate = 0.05;  // Bernoulli channel-compromise rate
};

// Presents one message at the boundary. Every call appends exactly one
// ledger entry. In LOCAL mode raw events are blocked: the entry records
// BLOCKED and a PrivacyViolation is thrown to the caller.
Verdict send(const BoundaryMessage& msg, const PrivacyMode& mode, AuditLedger& ledger,
             int round);

struct RoundConfig {
  TrainConfig train;
  int tags_top_k = 3;
  double tag_blend = 0.5;
  bool weighted_aggregation = false;  // weight client deltas by event count
  // Test hook: client 0 additionally attempts a raw-events upload first.
  bool inject_raw_upload_attempt = false;
};

struct RoundResult {
  int clients_completed = 0;
  int clients_aborted = 0;
  // Cloud: the server's per-epoch loss. Local: mean final-epoch loss across
  // the clients that completed the round.
  std::vector<double> epoch_loss;
};

// One communication round. LOCAL: every client trains on its own events and
// uploads only a parameter delta plus its user tags; the server averages the
// deltas. CLOUD: every client uploads raw events and the server trains
// centrally on the pooled log.
RoundResult run_round(const std::vector<UserProfile>& clients, const PrivacyMode& mode,
                      Model& model, const std::vector<AdCreative>& catalog,
                      AuditLedger& ledger, int round, const RoundConfig& cfg, uint64_t seed);

struct LeakageMetrics {
  int upload_flag = 0;        // 1 iff any raw-events message was ALLOWED
  int leakage_events = 0;     // raw messages exposed under one adversary draw
  double leakage_probability = 0.0;  // Monte-Carlo over `replays` channel draws
};

LeakageMetrics leakage_metrics(const AuditLedger& ledger, const PrivacyMode& mode,
                               int replays = 10000, uint64_t seed = 0);

}  // namespace adseal
