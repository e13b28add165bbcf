#include "adseal/privacy.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "adseal/errors.hpp"
#include "adseal/rng.hpp"

namespace adseal {

using nlohmann::json;

std::string to_string(MessageKind k) {
  switch (k) {
    case MessageKind::RawEvents: return "RAW_EVENTS";
    case MessageKind::UserTags: return "USER_TAGS";
    case MessageKind::ModelParams: return "MODEL_PARAMS";
    case MessageKind::EncryptedBlob: return "ENCRYPTED_BLOB";
  }
  return "RAW_EVENTS";
}

std::string to_string(Verdict v) { return v == Verdict::Allowed ? "ALLOWED" : "BLOCKED"; }

MessageKind message_kind_from_string(const std::string& s) {
  if (s == "RAW_EVENTS") return MessageKind::RawEvents;
  if (s == "USER_TAGS") return MessageKind::UserTags;
  if (s == "MODEL_PARAMS") return MessageKind::ModelParams;
  if (s == "ENCRYPTED_BLOB") return MessageKind::EncryptedBlob;
  throw DataError("unknown message kind '" + s + "'");
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "ALLOWED") return Verdict::Allowed;
  if (s == "BLOCKED") return Verdict::Blocked;
  throw DataError("unknown verdict '" + s + "'");
}

std::string to_string(Topology t) { return t == Topology::Local ? "local" : "cloud"; }

Topology topology_from_string(const std::string& s) {
  if (s == "local") return Topology::Local;
  if (s == "cloud") return Topology::Cloud;
  throw ConfigError("unknown privacy mode '" + s + "' (expected local|cloud)");
}

BoundaryMessage BoundaryMessage::raw_events(const std::string& client,
                                            const std::vector<ImpressionEvent>& events) {
  std::string lines;
  for (const auto& e : events) lines += event_to_json(e) + "\n";
  return BoundaryMessage(MessageKind::RawEvents, client,
                         std::vector<unsigned char>(lines.begin(), lines.end()));
}

BoundaryMessage BoundaryMessage::user_tags(const std::string& client, const UserTagSet& tags) {
  json j = json::array();
  for (const auto& t : tags.tags) j.push_back({{"category", t.category}, {"weight", t.weight}});
  const std::string s = j.dump();
  return BoundaryMessage(MessageKind::UserTags, client,
                         std::vector<unsigned char>(s.begin(), s.end()));
}

BoundaryMessage BoundaryMessage::model_params(const std::string& client,
                                              const std::vector<const Matrix*>& delta) {
  return BoundaryMessage(MessageKind::ModelParams, client, serialize_matrices(delta));
}

BoundaryMessage BoundaryMessage::encrypted_blob(const std::string& client,
                                                std::vector<unsigned char> bytes) {
  return BoundaryMessage(MessageKind::EncryptedBlob, client, std::move(bytes));
}

std::vector<ImpressionEvent> BoundaryMessage::parse_raw_events(const BoundaryMessage& msg) {
  if (msg.kind() != MessageKind::RawEvents) {
    throw DataError("parse_raw_events: message kind is " + to_string(msg.kind()));
  }
  std::vector<ImpressionEvent> events;
  std::string line;
  for (unsigned char ch : msg.payload()) {
    if (ch == '\n') {
      if (!line.empty()) events.push_back(event_from_json(line));
      line.clear();
    } else {
      line.push_back(static_cast<char>(ch));
    }
  }
  if (!line.empty()) events.push_back(event_from_json(line));
  return events;
}

std::vector<Matrix> BoundaryMessage::parse_model_params(const BoundaryMessage& msg) {
  if (msg.kind() != MessageKind::ModelParams) {
    throw DataError("parse_model_params: message kind is " + to_string(msg.kind()));
  }
  return deserialize_matrices(msg.payload());
}

int AuditLedger::count(MessageKind kind, Verdict verdict) const {
  int n = 0;
  for (const auto& e : entries_)
    if (e.kind == kind && e.verdict == verdict) ++n;
  return n;
}

void AuditLedger::save_jsonl(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write ledger " + path);
  for (const auto& e : entries_) {
    json j;
    j["round"] = e.round;
    j["client"] = e.client;
    j["kind"] = to_string(e.kind);
    j["bytes"] = e.bytes;
    j["verdict"] = to_string(e.verdict);
    out << j.dump() << "\n";
  }
}

AuditLedger AuditLedger::load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read ledger " + path);
  AuditLedger ledger;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError("ledger: invalid JSON in " + path);
    LedgerEntry e;
    e.round = j.at("round").get<int>();
    e.client = j.at("client").get<std::string>();
    e.kind = message_kind_from_string(j.at("kind").get<std::string>());
    e.bytes = j.at("bytes").get<size_t>();
    e.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    ledger.append(std::move(e));
  }
  return ledger;
}

Verdict send(const BoundaryMessage& msg, const PrivacyMode& mode, AuditLedger& ledger,
             int round) {
  const bool blocked =
      mode.topology == Topology::Local && msg.kind() == MessageKind::RawEvents;
  ledger.append(LedgerEntry{round, msg.origin(), msg.kind(), msg.size_bytes(),
                            blocked ? Verdict::Blocked : Verdict::Allowed});
  if (blocked) {
    throw PrivacyViolation("blocked " + to_string(msg.kind()) + " upload from client " +
                           msg.origin() + " in local mode");
  }
  return Verdict::Allowed;
}

RoundResult run_round(const std::vector<UserProfile>& clients, const PrivacyMode& mode,
                      Model& model, const std::vector<AdCreative>& catalog,
                      AuditLedger& ledger, int round, const RoundConfig& cfg, uint64_t seed) {
  if (clients.empty()) throw DataError("run_round: no clients");
  RoundResult result;

  if (mode.topology == Topology::Cloud) {
    std::vector<ImpressionEvent> pooled;
    for (const auto& client : clients) {
      const auto msg = BoundaryMessage::raw_events(client.user_id, client.events);
      send(msg, mode, ledger, round);
      auto events = BoundaryMessage::parse_raw_events(msg);
      pooled.insert(pooled.end(), events.begin(), events.end());
      ++result.clients_completed;
    }
    Rng rng(Rng::derive(seed, 't', 0));
    const TrainStats stats = train_loop(model, pooled, catalog, cfg.train, rng);
    result.epoch_loss = stats.epoch_loss;
    return result;
  }

  // LOCAL: the raw events never reach the boundary; the code path only
  // constructs parameter/tag messages for the uplink.
  const auto base_params = model.parameters();
  std::vector<std::vector<Matrix>> deltas;
  std::vector<double> weights;
  std::vector<double> client_final_losses;

  for (size_t i = 0; i < clients.size(); ++i) {
    const auto& client = clients[i];
    try {
      if (cfg.inject_raw_upload_attempt && i == 0) {
        send(BoundaryMessage::raw_events(client.user_id, client.events), mode, ledger, round);
      }
      Model local = model;
      Rng rng(Rng::derive(seed, 't', i));
      const TrainStats stats = train_loop(local, client.events, catalog, cfg.train, rng);
      if (!stats.epoch_loss.empty()) client_final_losses.push_back(stats.epoch_loss.back());

      const auto local_params = local.parameters();
      std::vector<Matrix> delta;
      delta.reserve(local_params.size());
      for (size_t p = 0; p < local_params.size(); ++p) {
        delta.push_back(sub(*local_params[p], *base_params[p]));
      }
      std::vector<const Matrix*> delta_ptrs;
      for (const auto& d : delta) delta_ptrs.push_back(&d);

      send(BoundaryMessage::model_params(client.user_id, delta_ptrs), mode, ledger, round);
      const auto catalog_view = EmbeddedCatalog::build(catalog, local);
      send(BoundaryMessage::user_tags(
               client.user_id,
               build_user_tags(client, local, catalog_view, cfg.tags_top_k, cfg.tag_blend)),
           mode, ledger, round);

      deltas.push_back(std::move(delta));
      weights.push_back(static_cast<double>(client.events.size()));
      ++result.clients_completed;
    } catch (const PrivacyViolation&) {
      ++result.clients_aborted;  // offending client only; others proceed
    }
  }

  if (!deltas.empty()) {
    double total_weight = 0.0;
    for (size_t i = 0; i < deltas.size(); ++i) {
      total_weight += cfg.weighted_aggregation ? weights[i] : 1.0;
    }
    for (size_t p = 0; p < base_params.size(); ++p) {
      Matrix mean_delta(base_params[p]->rows, base_params[p]->cols);
      for (size_t i = 0; i < deltas.size(); ++i) {
        const double w = (cfg.weighted_aggregation ? weights[i] : 1.0) / total_weight;
        for (size_t j = 0; j < mean_delta.size(); ++j) {
          mean_delta.data[j] += w * deltas[i][p].data[j];
        }
      }
      *base_params[p] = add(*base_params[p], mean_delta);
    }
  }
  if (!client_final_losses.empty()) {
    double mean = 0.0;
    for (double l : client_final_losses) mean += l;
    result.epoch_loss.push_back(mean / static_cast<double>(client_final_losses.size()));
  }
  return result;
}

LeakageMetrics leakage_metrics(const AuditLedger& ledger, const PrivacyMode& mode,
                               int replays, uint64_t seed) {
  LeakageMetrics metrics;
  const int raw_allowed = ledger.count(MessageKind::RawEvents, Verdict::Allowed);
  metrics.upload_flag = raw_allowed > 0 ? 1 : 0;
  if (raw_allowed == 0) {
    return metrics;  // structurally nothing to intercept: exact zeros
  }
  // One adversary draw decides whether the channel was compromised for the
  // run; a compromised channel exposes every raw message that crossed it.
  Rng draw(Rng::derive(seed, 'L', 0));
  metrics.leakage_events =
      draw.bernoulli(mode.adversary_intercept_rate) ? raw_allowed : 0;

  int leaked_runs = 0;
  for (int r = 0; r < replays; ++r) {
    Rng replay(Rng::derive(seed, 'M', static_cast<uint64_t>(r)));
    if (replay.bernoulli(mode.adversary_intercept_rate)) ++leaked_runs;
  }
  metrics.leakage_probability = static_cast<double>(leaked_runs) / replays;
  return metrics;
}

}  // namespace adseal
