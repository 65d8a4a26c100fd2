#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cough {

// Calendar date with civil-day arithmetic (proleptic Gregorian).
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    long long civil_days() const;
    std::string iso() const;
    static std::optional<Date> parse(const std::string& iso);

    friend bool operator==(const Date&, const Date&) = default;
};

enum class Label { negative = 0, positive = 1, other_respiratory = 2 };
enum class TestType { pcr, antigen, unknown };
enum class Sex { female, male, other, unknown };

const char* to_string(Label v);
const char* to_string(TestType v);
const char* to_string(Sex v);

struct Triage {
    std::optional<bool> symptomatic_now;
    std::optional<bool> close_contact;
    std::optional<bool> breathing_problems;
    std::optional<bool> risk_group;

    friend bool operator==(const Triage&, const Triage&) = default;
};

inline constexpr std::array<const char*, 7> kSymptomNames = {
    "chest_pain_pressure", "cough",       "diarrhoea", "difficulty_breathing",
    "fever",               "sore_throat", "tiredness"};

struct SampleRecord {
    std::string audio_path;
    std::string individual_id;
    Label label = Label::negative;
    TestType test_type = TestType::unknown;
    std::optional<Date> test_date;
    std::optional<Date> recording_date;
    std::optional<int> age;
    Sex sex = Sex::unknown;
    std::optional<std::string> location;
    std::map<std::string, std::optional<Date>> symptoms;  // name -> onset
    Triage triage;
    std::map<std::string, nlohmann::json> extras;  // unknown keys, preserved
    // recording_date - test_date <= 3 days when both present; violations
    // are flagged here rather than rejected.
    bool swab_window_ok = true;
};

struct ManifestIssue {
    enum class Kind { malformed_line, missing_field };
    Kind kind = Kind::malformed_line;
    int line_no = 0;         // 1-based
    std::string field;       // set for missing_field
    std::string message;
};

struct ManifestLoad {
    std::vector<SampleRecord> records;
    std::vector<ManifestIssue> issues;
};

// JSON-lines, one record per line. Bad lines are collected as issues, not
// fatal; an unreadable file throws IoFailure.
ManifestLoad load_manifest(const std::string& path);

// Canonical form: one JSON object per line, keys sorted, absent optionals
// omitted. load-then-save is byte-stable.
void save_manifest(const std::vector<SampleRecord>& records,
                   const std::string& path);

nlohmann::json record_to_json(const SampleRecord& rec);

struct SplitPlan {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
    std::array<double, 3> fractions = {0.8, 0.1, 0.1};
    std::uint64_t seed = 0;
};

// Partition individuals (never files) by seeded shuffle with
// largest-remainder split sizes, stratified by label.
SplitPlan split_by_individual(const std::vector<SampleRecord>& records,
                              std::array<double, 3> fractions = {0.8, 0.1, 0.1},
                              std::uint64_t seed = 0);

struct CorpusStats {
    std::size_t n_individuals = 0;
    std::size_t n_files = 0;
    std::map<Label, std::size_t> per_label;
    double imbalance_ratio = 1.0;  // max label count / min label count
    bool imbalance_warning = false;  // ratio above 3
};

CorpusStats corpus_summary(const std::vector<SampleRecord>& records);

}  // namespace cough
