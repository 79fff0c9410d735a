// Copyright 2026 The pmemn2n Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pmemn2n/synthetic.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pmemn2n/errors.hpp"

namespace pmemn2n {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kCuisines = {"italian", "french", "indian", "british"};
const std::vector<std::string> kLocations = {"rome", "paris", "london", "madrid"};
const std::vector<std::string> kPartySizes = {"two", "four", "six"};
const std::vector<std::string> kPrices = {"cheap", "moderate", "expensive"};

enum Slot { kCuisine, kLocation, kParty, kPrice, kSlotCount };

// Bot utterance bodies; the style prefix is prepended when styled.
constexpr std::string_view kGreet = "what can i help you with today";
constexpr std::string_view kOnIt = "i'm on it";
constexpr std::array<std::string_view, kSlotCount> kAsk = {
    "any preference on a type of cuisine", "where should it be",
    "how many people would be in your party", "which price range are you looking for"};
constexpr std::string_view kLooking = "ok let me look into some options for you";
constexpr std::string_view kUpdateAsk = "sure is there anything else to update";
constexpr std::string_view kWelcome = "you're welcome";
constexpr std::string_view kAlternative = "sure let me find an other option for you";
constexpr std::string_view kBooking = "great let me do the reservation";
constexpr std::string_view kPropose = "what do you think of this option:";

struct Item {
  std::string name;
  std::string cuisine;
  std::string location;
  std::string price;
  int rating = 0;
  int popularity = 0;
};

struct Booking {
  std::array<std::string, kSlotCount> slots;
  std::string api_call() const {
    return "api_call " + slots[kCuisine] + " " + slots[kLocation] + " " + slots[kParty] + " " +
           slots[kPrice];
  }
};

const std::string* attribute(const Profile& p, const std::string& key) {
  auto it = p.find(key);
  return it == p.end() ? nullptr : &it->second;
}

std::string style_prefix(const Profile& p) {
  const std::string* age = attribute(p, "age");
  const std::string* gender = attribute(p, "gender");
  const bool young = age && *age == "young";
  std::string out;
  if (age) out = young ? "hey" : *age == "middle-aged" ? "well" : "dear";
  if (gender) {
    const bool male = *gender == "male";
    const std::string word = young ? (male ? "dude" : "girl") : (male ? "sir" : "madam");
    out += out.empty() ? word : " " + word;
  }
  return out;
}

class Generator {
 public:
  explicit Generator(const SyntheticConfig& config)
      : config_(config), rng_(config.seed), schema_(config.schema) {
    profiles_ = schema_.all_profiles();
    make_items();
    register_candidates();
  }

  SyntheticCorpus run() {
    SyntheticCorpus out;
    out.corpus.schema = schema_;
    for (int task : config_.tasks) {
      emit(task, config_.train, out.corpus.train);
      emit(task, config_.dev, out.corpus.dev);
      emit(task, config_.test, out.corpus.test);
    }
    if (uses_kb()) {
      std::vector<KbFact> facts;
      for (const Item& item : items_) {
        for (const std::string& col : config_.kb_columns) {
          facts.push_back({item.name, col, entity(item, col)});
        }
      }
      out.corpus.kb = load_kb(facts);
    }
    out.corpus.candidates = candidates_;
    out.candidate_groups = groups_;
    out.corpus.validate();
    return out;
  }

 private:
  bool uses_kb() const {
    return std::any_of(config_.tasks.begin(), config_.tasks.end(),
                       [](int t) { return t >= 3; });
  }

  static std::string entity(const Item& item, const std::string& column) {
    return item.name + "_" + column;
  }

  template <typename T>
  const T& pick(const std::vector<T>& values) {
    return values[rng_.index(values.size())];
  }

  void make_items() {
    for (std::size_t i = 0; i < config_.kb_items; ++i) {
      Item item;
      item.cuisine = pick(kCuisines);
      item.location = pick(kLocations);
      item.price = pick(kPrices);
      item.name = "resto_" + item.location + "_" + item.cuisine + "_" + std::to_string(i + 1);
      item.rating = 1 + static_cast<int>(rng_.index(9));
      item.popularity = 1 + static_cast<int>(rng_.index(9));
      items_.push_back(std::move(item));
    }
  }

  void add_candidate(const std::string& text, const std::string* group) {
    if (seen_.insert(text).second) candidates_.push_back(text);
    if (group) groups_[text] = *group;
  }

  std::string say(std::string_view body, const Profile* p) const {
    if (!p || !config_.styled) return std::string(body);
    return style_prefix(*p) + " " + std::string(body);
  }

  void register_candidates() {
    std::vector<std::string> bodies = {std::string(kGreet), std::string(kOnIt),
                                       std::string(kLooking), std::string(kUpdateAsk),
                                       std::string(kWelcome), std::string(kAlternative),
                                       std::string(kBooking)};
    for (auto a : kAsk) bodies.emplace_back(a);
    for (const Item& item : items_) bodies.push_back(std::string(kPropose) + " " + item.name);

    for (const std::string& body : bodies) add_candidate(body, nullptr);
    if (config_.styled) {
      for (const Profile& p : profiles_) {
        const std::string label = schema_.label(p);
        for (const std::string& body : bodies) add_candidate(say(body, &p), &label);
      }
    }
    for (const auto& c : kCuisines)
      for (const auto& l : kLocations)
        for (const auto& n : kPartySizes)
          for (const auto& pr : kPrices) add_candidate(Booking{{c, l, n, pr}}.api_call(), nullptr);
    if (uses_kb()) {
      for (const Item& item : items_) {
        for (const std::string& col : config_.kb_columns) {
          add_candidate("here it is " + entity(item, col), nullptr);
        }
      }
    }
  }

  Profile random_profile() { return profiles_[rng_.index(profiles_.size())]; }

  // A profile whose preferred contact column differs from `p`, when one exists.
  Profile partner_profile(const Profile& p) {
    std::vector<Profile> opposite;
    std::vector<Profile> others;
    for (const Profile& q : profiles_) {
      if (q == p) continue;
      others.push_back(q);
      if (preferred_column(q) != preferred_column(p)) opposite.push_back(q);
    }
    if (!opposite.empty()) return pick(opposite);
    if (!others.empty()) return pick(others);
    return p;
  }

  static void exchange(Dialog& d, std::string user, std::string bot) {
    d.events.emplace_back(Exchange{std::move(user), std::move(bot)});
  }

  void facts_for(Dialog& d, const Item& item) {
    d.events.emplace_back(KbFact{item.name, "cuisine", item.cuisine});
    d.events.emplace_back(KbFact{item.name, "location", item.location});
    d.events.emplace_back(KbFact{item.name, "price", item.price});
    d.events.emplace_back(KbFact{item.name, "rating", std::to_string(item.rating)});
    d.events.emplace_back(KbFact{item.name, "popularity", std::to_string(item.popularity)});
    for (const std::string& col : config_.kb_columns) {
      d.events.emplace_back(KbFact{item.name, col, entity(item, col)});
    }
  }

  static std::string slot_phrase(Slot s, const std::string& value) {
    switch (s) {
      case kCuisine: return "with " + value + " food";
      case kLocation: return "in " + value;
      case kParty: return "for " + value + " people";
      case kPrice: return "in a " + value + " price range";
      default: return value;
    }
  }

  static std::string slot_answer(Slot s, const std::string& value) {
    switch (s) {
      case kCuisine: return "i love " + value + " food";
      case kLocation: return value + " please";
      case kParty: return "for " + value + " please";
      case kPrice: return "in a " + value + " price range please";
      default: return value;
    }
  }

  const std::vector<std::string>& slot_values(Slot s) const {
    switch (s) {
      case kCuisine: return kCuisines;
      case kLocation: return kLocations;
      case kParty: return kPartySizes;
      default: return kPrices;
    }
  }

  Booking random_booking() {
    Booking b;
    for (int s = 0; s < kSlotCount; ++s) b.slots[s] = pick(slot_values(static_cast<Slot>(s)));
    return b;
  }

  // Slot filling up to and including the API call.
  Booking api_segment(Dialog& d, const Profile& p, bool all_given) {
    Booking b = random_booking();
    std::array<bool, kSlotCount> given{};
    std::string request = "can you book a table";
    for (int s = 0; s < kSlotCount; ++s) {
      given[s] = all_given || rng_.index(2) == 0;
      if (given[s]) request += " " + slot_phrase(static_cast<Slot>(s), b.slots[s]);
    }
    exchange(d, "hi", say(kGreet, &p));
    exchange(d, request, say(kOnIt, &p));
    std::string user = "<silence>";
    for (int s = 0; s < kSlotCount; ++s) {
      if (given[s]) continue;
      exchange(d, user, say(kAsk[s], &p));
      user = slot_answer(static_cast<Slot>(s), b.slots[s]);
    }
    exchange(d, user, say(kLooking, &p));
    exchange(d, "<silence>", b.api_call());
    return b;
  }

  void update_segment(Dialog& d, const Profile& p, Booking& b) {
    const Slot s = static_cast<Slot>(rng_.index(kSlotCount));
    const auto& values = slot_values(s);
    std::string next = b.slots[s];
    while (next == b.slots[s]) next = pick(values);
    b.slots[s] = next;
    exchange(d, "instead could it be " + slot_phrase(s, next), say(kUpdateAsk, &p));
    exchange(d, "no", say(kLooking, &p));
    exchange(d, "<silence>", b.api_call());
  }

  std::vector<std::size_t> pick_options() {
    // Three items with distinct ratings and popularity so both orders are strict.
    for (;;) {
      std::vector<std::size_t> idx(items_.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      for (std::size_t i = 0; i < 3; ++i) std::swap(idx[i], idx[i + rng_.index(idx.size() - i)]);
      idx.resize(3);
      std::set<int> ratings;
      std::set<int> pops;
      for (std::size_t i : idx) {
        ratings.insert(items_[i].rating);
        pops.insert(items_[i].popularity);
      }
      if (ratings.size() == 3 && pops.size() == 3) return idx;
    }
  }

  // Shows three options and walks through them in the profile's order;
  // returns the accepted item.
  const Item& options_segment(Dialog& d, const Profile& p) {
    auto options = pick_options();
    for (std::size_t i : options) facts_for(d, items_[i]);
    const bool young = preferred_column(p) == "social";
    std::sort(options.begin(), options.end(), [&](std::size_t a, std::size_t b) {
      return young ? items_[a].popularity > items_[b].popularity
                   : items_[a].rating > items_[b].rating;
    });
    const std::size_t rejections = rng_.index(3);
    exchange(d, "<silence>", say(std::string(kPropose) + " " + items_[options[0]].name, &p));
    for (std::size_t r = 1; r <= rejections; ++r) {
      exchange(d, "no this does not work for me", say(kAlternative, &p));
      exchange(d, "<silence>", say(std::string(kPropose) + " " + items_[options[r]].name, &p));
    }
    exchange(d, "let's do it", say(kBooking, &p));
    return items_[options[rejections]];
  }

  void contact_segment(Dialog& d, const Profile& p, const Item& item, const Profile* style) {
    exchange(d, "may i have the contact of the restaurant",
             "here it is " + entity(item, preferred_column(p)));
    exchange(d, "thank you", say(kWelcome, style));
  }

  Dialog make_dialog(int task, const Profile& p) {
    Dialog d;
    d.task_id = task;
    d.profile = p;
    switch (task) {
      case 1:
        api_segment(d, p, false);
        break;
      case 2: {
        Booking b = api_segment(d, p, false);
        update_segment(d, p, b);
        exchange(d, "thank you", say(kWelcome, &p));
        break;
      }
      case 3:
        api_segment(d, p, true);
        options_segment(d, p);
        break;
      case 5: {
        Booking b = api_segment(d, p, false);
        update_segment(d, p, b);
        const Item& chosen = options_segment(d, p);
        contact_segment(d, p, chosen, &p);
        break;
      }
      default:
        throw std::logic_error("task 4 dialogs are generated in pairs");
    }
    return d;
  }

  // Task 4: identical content, two profiles with different preferred columns.
  std::pair<Dialog, Dialog> make_task4_pair() {
    const Profile first = random_profile();
    const Profile second = partner_profile(first);
    const Item& item = items_[rng_.index(items_.size())];
    auto build = [&](const Profile& p) {
      Dialog d;
      d.task_id = 4;
      d.profile = p;
      facts_for(d, item);
      exchange(d, "hi", say(kGreet, nullptr));
      exchange(d, "can you make a reservation at " + item.name, say(kBooking, nullptr));
      contact_segment(d, p, item, nullptr);
      return d;
    };
    return {build(first), build(second)};
  }

  void emit(int task, std::size_t count, std::vector<Dialog>& out) {
    std::vector<Dialog> made;
    if (task == 4) {
      while (made.size() + 2 <= count) {
        auto [a, b] = make_task4_pair();
        made.push_back(std::move(a));
        made.push_back(std::move(b));
      }
      if (made.size() < count) made.push_back(make_task4_pair().first);
    } else {
      for (std::size_t i = 0; i < count; ++i) made.push_back(make_dialog(task, random_profile()));
    }
    for (Dialog& d : made) {
      d.dialog_id = out.size();
      out.push_back(std::move(d));
    }
  }

  const SyntheticConfig& config_;
  Rng rng_;
  ProfileSchema schema_;
  std::vector<Profile> profiles_;
  std::vector<Item> items_;
  std::vector<std::string> candidates_;
  std::set<std::string> seen_;
  std::map<std::string, std::string> groups_;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string preferred_column(const Profile& profile) {
  const std::string* age = attribute(profile, "age");
  return age && *age == "young" ? "social" : "phone";
}

void SyntheticConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("synthetic config: " + m); };
  if (tasks.empty()) fail("no tasks");
  for (int t : tasks) {
    if (t < 1 || t > 5) fail("task ids must be in 1..5");
  }
  if (train == 0 || dev == 0 || test == 0) fail("every split needs at least one dialog");
  const bool kb = std::any_of(tasks.begin(), tasks.end(), [](int t) { return t >= 3; });
  if (kb && kb_items < 3) fail("tasks 3-5 need at least 3 KB items");
  for (const char* col : {"phone", "social"}) {
    if (kb && std::find(kb_columns.begin(), kb_columns.end(), col) == kb_columns.end()) {
      fail(std::string("kb_columns must include ") + col);
    }
  }
  for (const std::string& col : kb_columns) {
    if (col == "cuisine" || col == "location" || col == "price" || col == "rating" ||
        col == "popularity") {
      fail("kb column `" + col + "` would duplicate entity values");
    }
  }
  ProfileSchema s(schema);  // structural checks
  for (const auto& a : schema) {
    const std::set<std::string> allowed =
        a.key == "gender" ? std::set<std::string>{"male", "female"}
        : a.key == "age"  ? std::set<std::string>{"young", "middle-aged", "elderly"}
                          : std::set<std::string>{};
    if (allowed.empty()) fail("unsupported attribute `" + a.key + "` (use gender and/or age)");
    for (const auto& v : a.values) {
      if (!allowed.count(v)) fail("unsupported value `" + v + "` for `" + a.key + "`");
    }
  }
}

SyntheticConfig SyntheticConfig::from_json(std::string_view text) {
  SyntheticConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("synthetic config: ") + e.what());
  }
  try {
    c.seed = j.value("seed", c.seed);
    c.tasks = j.value("tasks", c.tasks);
    if (j.contains("dialogs")) {
      const std::size_t n = j.at("dialogs").get<std::size_t>();
      c.train = n * 70 / 100;
      c.dev = n * 15 / 100;
      c.test = n - c.train - c.dev;
    }
    c.train = j.value("train", c.train);
    c.dev = j.value("dev", c.dev);
    c.test = j.value("test", c.test);
    c.kb_items = j.value("kb_items", c.kb_items);
    c.kb_columns = j.value("kb_columns", c.kb_columns);
    c.styled = j.value("styled", c.styled);
    if (j.contains("schema")) {
      c.schema.clear();
      for (const auto& a : j.at("schema")) {
        c.schema.push_back({a.at("key").get<std::string>(),
                            a.at("values").get<std::vector<std::string>>()});
      }
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("synthetic config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string SyntheticConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["tasks"] = tasks;
  j["train"] = train;
  j["dev"] = dev;
  j["test"] = test;
  j["kb_items"] = kb_items;
  j["kb_columns"] = kb_columns;
  j["styled"] = styled;
  j["schema"] = json::array();
  for (const auto& a : schema) j["schema"].push_back({{"key", a.key}, {"values", a.values}});
  return j.dump(2) + "\n";
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  return Generator(config).run();
}

void save_synthetic(const SyntheticCorpus& synthetic, const SyntheticConfig& config,
                    const fs::path& dir) {
  save_corpus(synthetic.corpus, dir);
  std::ofstream groups(dir / "candidate_groups.tsv", std::ios::binary);
  for (const std::string& c : synthetic.corpus.candidates) {
    auto it = synthetic.candidate_groups.find(c);
    if (it != synthetic.candidate_groups.end()) groups << it->second << '\t' << c << '\n';
  }
  std::ofstream cfg(dir / "generator.json", std::ios::binary);
  cfg << config.to_json();
}

std::map<std::string, std::string> load_candidate_groups(const fs::path& dir) {
  std::map<std::string, std::string> out;
  const fs::path path = dir / "candidate_groups.tsv";
  if (!fs::exists(path)) return out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(line_no, "candidate_groups.tsv: missing tab");
    out[line.substr(tab + 1)] = line.substr(0, tab);
  }
  return out;
}

}  // namespace pmemn2n
