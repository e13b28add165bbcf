#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace adseal {

enum class DeviceType { Mobile, Desktop, Laptop, Other };
enum class TimeOfDay { Morning, Afternoon, Evening, Night };

constexpr int kDeviceCount = 4;
constexpr int kTimeOfDayCount = 4;

std::string to_string(DeviceType d);
std::string to_string(TimeOfDay t);
DeviceType device_from_string(const std::string& s);
TimeOfDay time_of_day_from_string(const std::string& s);

// One user-ad interaction; the privacy-sensitive raw datum.
struct ImpressionEvent {
  std::string user_id;
  std::string ad_id;
  int64_t ts = 0;
  bool clicked = false;
  bool converted = false;  // converted implies clicked, enforced at ingestion
  std::string ad_category;
  DeviceType device = DeviceType::Other;
  TimeOfDay time_of_day = TimeOfDay::Morning;
};

struct UserTag {
  std::string category;
  double weight = 0.0;  // in [0, 1]
};

// Top-k category affinities, descending by weight.
struct UserTagSet {
  std::vector<UserTag> tags;
  bool has(const std::string& category) const;
};

struct UserProfile {
  std::string user_id;
  std::vector<ImpressionEvent> events;  // ordered by timestamp
  UserTagSet interest_tags;             // derived by build_user_tags only
  DeviceType device = DeviceType::Other;
  TimeOfDay time_of_day = TimeOfDay::Morning;
};

struct AdCreative {
  std::string ad_id;
  std::string copy;
  std::string category;
};

// JSONL (de)serialization. Event field names are fixed:
// user_id, ad_id, ts, clicked, converted, ad_category, device, time_of_day.
std::string event_to_json(const ImpressionEvent& e);
ImpressionEvent event_from_json(const std::string& line);

std::vector<ImpressionEvent> load_events_jsonl(const std::string& path);
void save_events_jsonl(const std::vector<ImpressionEvent>& events, const std::string& path);

std::vector<AdCreative> load_catalog_jsonl(const std::string& path);
void save_catalog_jsonl(const std::vector<AdCreative>& ads, const std::string& path);

std::vector<UserProfile> load_profiles_jsonl(const std::string& path);
void save_profiles_jsonl(const std::vector<UserProfile>& profiles, const std::string& path);

// Groups events by user, ordering each user's history by timestamp. Context
// device/time per profile is the most frequent value in that user's events.
std::vector<UserProfile> profiles_from_events(const std::vector<ImpressionEvent>& events);

// Attaches each user's events (sorted by ts) to the matching profile.
void attach_events(std::vector<UserProfile>& profiles,
                   const std::vector<ImpressionEvent>& events);

}  // namespace adseal
