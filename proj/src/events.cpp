#include "adseal/events.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "adseal/errors.hpp"

namespace adseal {

using nlohmann::json;

std::string to_string(DeviceType d) {
  switch (d) {
    case DeviceType::Mobile: return "Mobile";
    case DeviceType::Desktop: return "Desktop";
    case DeviceType::Laptop: return "Laptop";
    case DeviceType::Other: return "Other";
  }
  return "Other";
}

std::string to_string(TimeOfDay t) {
  switch (t) {
    case TimeOfDay::Morning: return "Morning";
    case TimeOfDay::Afternoon: return "Afternoon";
    case TimeOfDay::Evening: return "Evening";
    case TimeOfDay::Night: return "Night";
  }
  return "Morning";
}

DeviceType device_from_string(const std::string& s) {
  if (s == "Mobile") return DeviceType::Mobile;
  if (s == "Desktop") return DeviceType::Desktop;
  if (s == "Laptop") return DeviceType::Laptop;
  if (s == "Other") return DeviceType::Other;
  throw DataError("unknown device type '" + s + "'");
}

TimeOfDay time_of_day_from_string(const std::string& s) {
  if (s == "Morning") return TimeOfDay::Morning;
  if (s == "Afternoon") return TimeOfDay::Afternoon;
  if (s == "Evening") return TimeOfDay::Evening;
  if (s == "Night") return TimeOfDay::Night;
  throw DataError("unknown time-of-day bucket '" + s + "'");
}

bool UserTagSet::has(const std::string& category) const {
  for (const auto& t : tags)
    if (t.category == category) return true;
  return false;
}

std::string event_to_json(const ImpressionEvent& e) {
  json j;
  j["user_id"] = e.user_id;
  j["ad_id"] = e.ad_id;
  j["ts"] = e.ts;
  j["clicked"] = e.clicked;
  j["converted"] = e.converted;
  j["ad_category"] = e.ad_category;
  j["device"] = to_string(e.device);
  j["time_of_day"] = to_string(e.time_of_day);
  return j.dump();
}

ImpressionEvent event_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& ex) {
    throw DataError(std::string("event: invalid JSON: ") + ex.what());
  }
  ImpressionEvent e;
  try {
    e.user_id = j.at("user_id").get<std::string>();
    e.ad_id = j.at("ad_id").get<std::string>();
    e.ts = j.at("ts").get<int64_t>();
    e.clicked = j.at("clicked").get<bool>();
    e.converted = j.at("converted").get<bool>();
    e.ad_category = j.at("ad_category").get<std::string>();
    e.device = device_from_string(j.at("device").get<std::string>());
    e.time_of_day = time_of_day_from_string(j.at("time_of_day").get<std::string>());
  } catch (const json::exception& ex) {
    throw DataError(std::string("event: missing or mistyped field: ") + ex.what());
  }
  if (e.converted && !e.clicked) {
    throw DataError("event: conversion without click for user " + e.user_id + ", ad " +
                    e.ad_id);
  }
  return e;
}

std::vector<ImpressionEvent> load_events_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read event log " + path);
  std::vector<ImpressionEvent> events;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      events.push_back(event_from_json(line));
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return events;
}

void save_events_jsonl(const std::vector<ImpressionEvent>& events, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write event log " + path);
  for (const auto& e : events) out << event_to_json(e) << "\n";
}

std::vector<AdCreative> load_catalog_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read catalog " + path);
  std::vector<AdCreative> ads;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError("catalog: invalid JSON in " + path);
    AdCreative ad;
    ad.ad_id = j.at("ad_id").get<std::string>();
    ad.copy = j.at("copy").get<std::string>();
    ad.category = j.at("category").get<std::string>();
    ads.push_back(std::move(ad));
  }
  return ads;
}

void save_catalog_jsonl(const std::vector<AdCreative>& ads, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write catalog " + path);
  for (const auto& ad : ads) {
    json j;
    j["ad_id"] = ad.ad_id;
    j["copy"] = ad.copy;
    j["category"] = ad.category;
    out << j.dump() << "\n";
  }
}

std::vector<UserProfile> load_profiles_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read profiles " + path);
  std::vector<UserProfile> profiles;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError("profiles: invalid JSON in " + path);
    UserProfile p;
    p.user_id = j.at("user_id").get<std::string>();
    p.device = device_from_string(j.at("device").get<std::string>());
    p.time_of_day = time_of_day_from_string(j.at("time_of_day").get<std::string>());
    profiles.push_back(std::move(p));
  }
  return profiles;
}

void save_profiles_jsonl(const std::vector<UserProfile>& profiles, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write profiles " + path);
  for (const auto& p : profiles) {
    json j;
    j["user_id"] = p.user_id;
    j["device"] = to_string(p.device);
    j["time_of_day"] = to_string(p.time_of_day);
    out << j.dump() << "\n";
  }
}

std::vector<UserProfile> profiles_from_events(const std::vector<ImpressionEvent>& events) {
  std::map<std::string, UserProfile> by_user;
  std::map<std::string, std::map<std::string, int>> device_counts;
  std::map<std::string, std::map<std::string, int>> tod_counts;
  for (const auto& e : events) {
    auto& p = by_user[e.user_id];
    p.user_id = e.user_id;
    p.events.push_back(e);
    ++device_counts[e.user_id][to_string(e.device)];
    ++tod_counts[e.user_id][to_string(e.time_of_day)];
  }
  std::vector<UserProfile> out;
  for (auto& [uid, p] : by_user) {
    std::stable_sort(p.events.begin(), p.events.end(),
                     [](const auto& a, const auto& b) { return a.ts < b.ts; });
    const auto most_frequent = [](const std::map<std::string, int>& counts) {
      std::string best;
      int best_count = -1;
      for (const auto& [k, v] : counts) {
        if (v > best_count) {
          best = k;
          best_count = v;
        }
      }
      return best;
    };
    p.device = device_from_string(most_frequent(device_counts[uid]));
    p.time_of_day = time_of_day_from_string(most_frequent(tod_counts[uid]));
    out.push_back(std::move(p));
  }
  return out;
}

void attach_events(std::vector<UserProfile>& profiles,
                   const std::vector<ImpressionEvent>& events) {
  std::map<std::string, std::vector<ImpressionEvent>> by_user;
  for (const auto& e : events) by_user[e.user_id].push_back(e);
  for (auto& p : profiles) {
    auto it = by_user.find(p.user_id);
    if (it == by_user.end()) continue;
    p.events = std::move(it->second);
    std::stable_sort(p.events.begin(), p.events.end(),
                     [](const auto& a, const auto& b) { return a.ts < b.ts; });
  }
}

}  // namespace adseal
