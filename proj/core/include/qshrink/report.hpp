#ifndef QSHRINK_REPORT_HPP
#define QSHRINK_REPORT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qshrink {

// One aggregated cell of an experiment table: mean and standard error of a
// metric for one (tau, estimator, case, gamma) combination.  `tau` is NaN for
// rows that do not belong to a quantile level (the mean-regression baseline).
struct ReportRow {
    double tau = 0.0;
    std::string estimator;
    std::string case_label;
    double gamma = 0.0;
    double mean = 0.0;
    double se = 0.0;
};

struct ReportMeta {
    std::string experiment; // "pmad", "ape", ...
    std::string metric;     // which scalar the mean/se columns aggregate
    std::uint64_t seed = 0;
    long replications = 0;
    std::string config_echo;  // the fully resolved configuration, one string
    std::string provenance;   // deterministic fingerprint of config + seed
};

struct ExperimentReport {
    ReportMeta meta;
    std::vector<ReportRow> rows;
};

// Equality treats NaN tau fields as equal so JSON round trips compare clean.
bool operator==(const ReportMeta& a, const ReportMeta& b);
bool operator==(const ReportRow& a, const ReportRow& b);
bool operator==(const ExperimentReport& a, const ExperimentReport& b);

// MRME sweeps use their own narrow schema.
struct MrmeRow {
    double delta_star = 0.0;
    std::string estimator;
    double mrme = 0.0;
};

struct MrmeReport {
    ReportMeta meta;
    std::vector<MrmeRow> rows;
};

// Deterministic fingerprint (FNV-1a over the echoed config and seed).
std::string provenance_string(const std::string& config_echo, std::uint64_t seed);

// CSV columns: tau, estimator, case, gamma, mean, se.  NaN tau prints "mean".
void write_report_csv(std::ostream& os, const ExperimentReport& report);
// CSV columns: delta_star, estimator, mrme.
void write_mrme_csv(std::ostream& os, const MrmeReport& report);

// Human-readable fixed-width table, estimators as rows grouped by tau.
void write_report_table(std::ostream& os, const ExperimentReport& report);

std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& text);

} // namespace qshrink

#endif
