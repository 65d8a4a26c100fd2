#include "cough/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "cough/error.hpp"

namespace cough {

long long Date::civil_days() const {
    // Days since 1970-01-01, proleptic Gregorian.
    int y = year - (month <= 2);
    const long long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy =
        (153u * static_cast<unsigned>(month + (month > 2 ? -3 : 9)) + 2u) / 5u +
        static_cast<unsigned>(day) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<long long>(doe) - 719468;
}

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

std::optional<Date> Date::parse(const std::string& iso) {
    Date d;
    char extra;
    if (std::sscanf(iso.c_str(), "%d-%d-%d%c", &d.year, &d.month, &d.day,
                    &extra) != 3) {
        return std::nullopt;
    }
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) {
        return std::nullopt;
    }
    return d;
}

const char* to_string(Label v) {
    switch (v) {
        case Label::negative: return "negative";
        case Label::positive: return "positive";
        case Label::other_respiratory: return "other_respiratory";
    }
    return "negative";
}

const char* to_string(TestType v) {
    switch (v) {
        case TestType::pcr: return "pcr";
        case TestType::antigen: return "antigen";
        case TestType::unknown: return "unknown";
    }
    return "unknown";
}

const char* to_string(Sex v) {
    switch (v) {
        case Sex::female: return "female";
        case Sex::male: return "male";
        case Sex::other: return "other";
        case Sex::unknown: return "unknown";
    }
    return "unknown";
}

namespace {

using nlohmann::json;

const std::array<const char*, 11> kKnownKeys = {
    "audio_path", "individual_id", "label",    "test_type",
    "test_date",  "recording_date", "age",     "sex",
    "location",   "symptoms",       "triage"};

bool known_symptom(const std::string& name) {
    return std::find_if(kSymptomNames.begin(), kSymptomNames.end(),
                        [&](const char* s) { return name == s; }) !=
           kSymptomNames.end();
}

struct LineError {
    std::string message;
};

std::optional<Label> parse_label(const std::string& s) {
    if (s == "negative") return Label::negative;
    if (s == "positive") return Label::positive;
    if (s == "other_respiratory") return Label::other_respiratory;
    return std::nullopt;
}

std::optional<TestType> parse_test_type(const std::string& s) {
    if (s == "pcr") return TestType::pcr;
    if (s == "antigen") return TestType::antigen;
    if (s == "unknown") return TestType::unknown;
    return std::nullopt;
}

std::optional<Sex> parse_sex(const std::string& s) {
    if (s == "female") return Sex::female;
    if (s == "male") return Sex::male;
    if (s == "other") return Sex::other;
    if (s == "unknown") return Sex::unknown;
    return std::nullopt;
}

// Parses one manifest line that is already valid JSON. Throws LineError for
// value-level problems; missing required fields are reported by the caller.
SampleRecord record_from_json(const json& j) {
    SampleRecord rec;
    rec.audio_path = j.at("audio_path").get<std::string>();
    rec.individual_id = j.at("individual_id").get<std::string>();
    if (rec.individual_id.empty()) {
        throw LineError{"individual_id is empty"};
    }

    auto label = parse_label(j.at("label").get<std::string>());
    if (!label) throw LineError{"unknown label"};
    rec.label = *label;

    if (j.contains("test_type")) {
        auto t = parse_test_type(j["test_type"].get<std::string>());
        if (!t) throw LineError{"unknown test_type"};
        rec.test_type = *t;
    }
    for (auto [key, target] : {std::pair{"test_date", &rec.test_date},
                               std::pair{"recording_date", &rec.recording_date}}) {
        if (j.contains(key)) {
            auto d = Date::parse(j[key].get<std::string>());
            if (!d) throw LineError{std::string("bad date in ") + key};
            *target = d;
        }
    }
    if (j.contains("age")) rec.age = j["age"].get<int>();
    if (j.contains("sex")) {
        auto s = parse_sex(j["sex"].get<std::string>());
        if (!s) throw LineError{"unknown sex"};
        rec.sex = *s;
    }
    if (j.contains("location")) rec.location = j["location"].get<std::string>();

    if (j.contains("symptoms")) {
        if (!j["symptoms"].is_object()) throw LineError{"symptoms must be an object"};
        for (const auto& [name, onset] : j["symptoms"].items()) {
            if (!known_symptom(name)) throw LineError{"unknown symptom: " + name};
            if (onset.is_null()) {
                rec.symptoms[name] = std::nullopt;
            } else {
                auto d = Date::parse(onset.get<std::string>());
                if (!d) throw LineError{"bad onset date for " + name};
                rec.symptoms[name] = d;
            }
        }
    }
    if (j.contains("triage")) {
        const auto& t = j["triage"];
        if (!t.is_object()) throw LineError{"triage must be an object"};
        auto read = [&](const char* key) -> std::optional<bool> {
            if (!t.contains(key) || t[key].is_null()) return std::nullopt;
            return t[key].get<bool>();
        };
        rec.triage.symptomatic_now = read("symptomatic_now");
        rec.triage.close_contact = read("close_contact");
        rec.triage.breathing_problems = read("breathing_problems");
        rec.triage.risk_group = read("risk_group");
    }

    for (const auto& [key, value] : j.items()) {
        if (std::find_if(kKnownKeys.begin(), kKnownKeys.end(), [&](const char* k) {
                return key == k;
            }) == kKnownKeys.end()) {
            rec.extras[key] = value;
        }
    }

    if (rec.test_date && rec.recording_date) {
        rec.swab_window_ok =
            rec.recording_date->civil_days() - rec.test_date->civil_days() <= 3;
    }
    return rec;
}

}  // namespace

ManifestLoad load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open manifest: " + path);

    ManifestLoad out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            out.issues.push_back({ManifestIssue::Kind::malformed_line, line_no,
                                  "", "not a JSON object"});
            continue;
        }
        bool missing = false;
        for (const char* field : {"audio_path", "individual_id", "label"}) {
            if (!j.contains(field)) {
                out.issues.push_back({ManifestIssue::Kind::missing_field, line_no,
                                      field, std::string(field) + " is required"});
                missing = true;
            }
        }
        if (missing) continue;

        try {
            out.records.push_back(record_from_json(j));
        } catch (const LineError& e) {
            out.issues.push_back(
                {ManifestIssue::Kind::malformed_line, line_no, "", e.message});
        } catch (const json::exception& e) {
            out.issues.push_back(
                {ManifestIssue::Kind::malformed_line, line_no, "", e.what()});
        }
    }
    return out;
}

nlohmann::json record_to_json(const SampleRecord& rec) {
    json j;
    j["audio_path"] = rec.audio_path;
    j["individual_id"] = rec.individual_id;
    j["label"] = to_string(rec.label);
    if (rec.test_type != TestType::unknown) {
        j["test_type"] = to_string(rec.test_type);
    }
    if (rec.test_date) j["test_date"] = rec.test_date->iso();
    if (rec.recording_date) j["recording_date"] = rec.recording_date->iso();
    if (rec.age) j["age"] = *rec.age;
    if (rec.sex != Sex::unknown) j["sex"] = to_string(rec.sex);
    if (rec.location) j["location"] = *rec.location;
    if (!rec.symptoms.empty()) {
        json s = json::object();
        for (const auto& [name, onset] : rec.symptoms) {
            if (onset) {
                s[name] = onset->iso();
            } else {
                s[name] = nullptr;
            }
        }
        j["symptoms"] = s;
    }
    {
        json t = json::object();
        auto put = [&](const char* key, const std::optional<bool>& v) {
            if (v) t[key] = *v;
        };
        put("symptomatic_now", rec.triage.symptomatic_now);
        put("close_contact", rec.triage.close_contact);
        put("breathing_problems", rec.triage.breathing_problems);
        put("risk_group", rec.triage.risk_group);
        if (!t.empty()) j["triage"] = t;
    }
    for (const auto& [key, value] : rec.extras) j[key] = value;
    return j;
}

void save_manifest(const std::vector<SampleRecord>& records,
                   const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot open manifest for write: " + path);
    for (const auto& rec : records) {
        out << record_to_json(rec).dump() << '\n';
    }
    if (!out) throw IoFailure("manifest write failed: " + path);
}

SplitPlan split_by_individual(const std::vector<SampleRecord>& records,
                              std::array<double, 3> fractions,
                              std::uint64_t seed) {
    double fsum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(fsum - 1.0) > 1e-9) {
        throw Error("split fractions must sum to 1");
    }

    // One label per individual for stratification: positive wins over
    // other_respiratory wins over negative.
    std::map<std::string, Label> individual_label;
    for (const auto& rec : records) {
        auto [it, inserted] = individual_label.emplace(rec.individual_id, rec.label);
        if (!inserted && static_cast<int>(rec.label) > static_cast<int>(it->second)) {
            it->second = rec.label;
        }
    }
    const std::size_t n = individual_label.size();
    if (n < 3) throw TooFewIndividuals("need at least 3 individuals to split");

    // Global split sizes by largest remainder.
    std::array<std::size_t, 3> global{};
    {
        std::array<double, 3> exact;
        std::size_t assigned = 0;
        for (int j = 0; j < 3; ++j) {
            exact[j] = fractions[j] * static_cast<double>(n);
            global[j] = static_cast<std::size_t>(exact[j]);
            assigned += global[j];
        }
        std::array<int, 3> order = {0, 1, 2};
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            double ra = exact[a] - std::floor(exact[a]);
            double rb = exact[b] - std::floor(exact[b]);
            return ra != rb ? ra > rb : a < b;
        });
        for (int idx = 0; assigned < n; ++idx) {
            ++global[order[idx % 3]];
            ++assigned;
        }
    }

    // Strata in label order; shuffle ids within each (map iteration gives a
    // sorted, deterministic base order).
    std::mt19937_64 rng(seed);
    std::vector<std::vector<std::string>> strata;
    for (Label lab : {Label::negative, Label::positive, Label::other_respiratory}) {
        std::vector<std::string> ids;
        for (const auto& [id, l] : individual_label) {
            if (l == lab) ids.push_back(id);
        }
        if (!ids.empty()) {
            std::shuffle(ids.begin(), ids.end(), rng);
            strata.push_back(std::move(ids));
        }
    }

    // Per-stratum quotas: floors first, then hand leftovers to the split
    // with the largest fractional remainder among those still short.
    const std::size_t ns = strata.size();
    std::vector<std::array<std::size_t, 3>> quota(ns);
    std::vector<std::array<double, 3>> frac(ns);
    std::vector<std::size_t> row_left(ns);
    std::array<long long, 3> col_left{};
    for (int j = 0; j < 3; ++j) col_left[j] = static_cast<long long>(global[j]);
    for (std::size_t s = 0; s < ns; ++s) {
        std::size_t total = strata[s].size(), base_sum = 0;
        for (int j = 0; j < 3; ++j) {
            double exact = fractions[j] * static_cast<double>(total);
            quota[s][j] = static_cast<std::size_t>(exact);
            frac[s][j] = exact - std::floor(exact);
            base_sum += quota[s][j];
            col_left[j] -= static_cast<long long>(quota[s][j]);
        }
        row_left[s] = total - base_sum;
    }
    struct Slot {
        double remainder;
        std::size_t s;
        int j;
    };
    std::vector<Slot> slots;
    for (std::size_t s = 0; s < ns; ++s) {
        for (int j = 0; j < 3; ++j) slots.push_back({frac[s][j], s, j});
    }
    std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
        return a.remainder > b.remainder;
    });
    bool progress = true;
    while (progress) {
        progress = false;
        for (const auto& slot : slots) {
            if (row_left[slot.s] > 0 && col_left[slot.j] > 0) {
                ++quota[slot.s][slot.j];
                --row_left[slot.s];
                --col_left[slot.j];
                progress = true;
            }
        }
        bool done = true;
        for (std::size_t s = 0; s < ns; ++s) {
            if (row_left[s] > 0) done = false;
        }
        if (done) break;
    }

    SplitPlan plan;
    plan.fractions = fractions;
    plan.seed = seed;
    for (std::size_t s = 0; s < ns; ++s) {
        std::size_t pos = 0;
        for (int j = 0; j < 3; ++j) {
            auto* dst = j == 0 ? &plan.train : j == 1 ? &plan.val : &plan.test;
            for (std::size_t i = 0; i < quota[s][j]; ++i) {
                dst->push_back(strata[s][pos++]);
            }
        }
    }
    std::sort(plan.train.begin(), plan.train.end());
    std::sort(plan.val.begin(), plan.val.end());
    std::sort(plan.test.begin(), plan.test.end());
    return plan;
}

CorpusStats corpus_summary(const std::vector<SampleRecord>& records) {
    CorpusStats stats;
    std::map<std::string, bool> ids;
    for (const auto& rec : records) {
        ids[rec.individual_id] = true;
        ++stats.per_label[rec.label];
    }
    stats.n_individuals = ids.size();
    stats.n_files = records.size();
    if (!stats.per_label.empty()) {
        std::size_t mx = 0, mn = SIZE_MAX;
        for (const auto& [label, count] : stats.per_label) {
            mx = std::max(mx, count);
            mn = std::min(mn, count);
        }
        stats.imbalance_ratio = static_cast<double>(mx) / static_cast<double>(mn);
        stats.imbalance_warning = stats.imbalance_ratio > 3.0;
    }
    return stats;
}

}  // namespace cough
