#include "qshrink/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "qshrink/errors.hpp"

namespace qshrink {

namespace {

std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool same_double(double a, double b) {
    if (std::isnan(a) && std::isnan(b)) return true;
    return a == b;
}

} // namespace

bool operator==(const ReportMeta& a, const ReportMeta& b) {
    return a.experiment == b.experiment && a.metric == b.metric && a.seed == b.seed &&
           a.replications == b.replications && a.config_echo == b.config_echo &&
           a.provenance == b.provenance;
}

bool operator==(const ReportRow& a, const ReportRow& b) {
    return same_double(a.tau, b.tau) && a.estimator == b.estimator &&
           a.case_label == b.case_label && same_double(a.gamma, b.gamma) &&
           same_double(a.mean, b.mean) && same_double(a.se, b.se);
}

bool operator==(const ExperimentReport& a, const ExperimentReport& b) {
    return a.meta == b.meta && a.rows == b.rows;
}

std::string provenance_string(const std::string& config_echo, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ULL; // FNV-1a
    auto mix = [&h](unsigned char c) {
        h ^= c;
        h *= 1099511628211ULL;
    };
    for (unsigned char c : config_echo) mix(c);
    for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "qshrink-%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_report_csv(std::ostream& os, const ExperimentReport& report) {
    os << "tau,estimator,case,gamma,mean,se\n";
    for (const auto& r : report.rows) {
        os << (std::isnan(r.tau) ? std::string("mean") : fmt_double(r.tau)) << ','
           << r.estimator << ',' << r.case_label << ',' << fmt_double(r.gamma) << ','
           << fmt_double(r.mean) << ',' << fmt_double(r.se) << '\n';
    }
}

void write_mrme_csv(std::ostream& os, const MrmeReport& report) {
    os << "delta_star,estimator,mrme\n";
    for (const auto& r : report.rows)
        os << fmt_double(r.delta_star) << ',' << r.estimator << ',' << fmt_double(r.mrme)
           << '\n';
}

void write_report_table(std::ostream& os, const ExperimentReport& report) {
    os << "# experiment=" << report.meta.experiment << " metric=" << report.meta.metric
       << " seed=" << report.meta.seed << " replications=" << report.meta.replications
       << '\n';
    os << "# provenance=" << report.meta.provenance << '\n';
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%8s %-10s %-8s %8s %12s %12s\n", "tau", "estimator",
                  "case", "gamma", "mean", "se");
    os << buf;
    for (const auto& r : report.rows) {
        char taubuf[32];
        if (std::isnan(r.tau)) std::snprintf(taubuf, sizeof(taubuf), "%8s", "mean");
        else std::snprintf(taubuf, sizeof(taubuf), "%8.3f", r.tau);
        std::snprintf(buf, sizeof(buf), "%s %-10s %-8s %8.3f %12.4f %12.4f\n", taubuf,
                      r.estimator.c_str(), r.case_label.c_str(), r.gamma, r.mean, r.se);
        os << buf;
    }
}

std::string report_to_json(const ExperimentReport& report) {
    nlohmann::ordered_json j;
    j["metadata"] = {{"experiment", report.meta.experiment},
                     {"metric", report.meta.metric},
                     {"seed", report.meta.seed},
                     {"replications", report.meta.replications},
                     {"config", report.meta.config_echo},
                     {"provenance", report.meta.provenance}};
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        nlohmann::ordered_json row;
        if (std::isnan(r.tau)) row["tau"] = nullptr;
        else row["tau"] = fmt_double(r.tau);
        row["estimator"] = r.estimator;
        row["case"] = r.case_label;
        row["gamma"] = fmt_double(r.gamma);
        row["mean"] = fmt_double(r.mean);
        row["se"] = fmt_double(r.se);
        j["rows"].push_back(row);
    }
    return j.dump(2) + "\n";
}

ExperimentReport report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("report JSON parse failure: ") + e.what());
    }
    ExperimentReport rep;
    try {
        const auto& m = j.at("metadata");
        rep.meta.experiment = m.at("experiment").get<std::string>();
        rep.meta.metric = m.at("metric").get<std::string>();
        rep.meta.seed = m.at("seed").get<std::uint64_t>();
        rep.meta.replications = m.at("replications").get<long>();
        rep.meta.config_echo = m.at("config").get<std::string>();
        rep.meta.provenance = m.at("provenance").get<std::string>();
        for (const auto& row : j.at("rows")) {
            ReportRow r;
            r.tau = row.at("tau").is_null() ? std::nan("")
                                            : std::stod(row.at("tau").get<std::string>());
            r.estimator = row.at("estimator").get<std::string>();
            r.case_label = row.at("case").get<std::string>();
            r.gamma = std::stod(row.at("gamma").get<std::string>());
            r.mean = std::stod(row.at("mean").get<std::string>());
            r.se = std::stod(row.at("se").get<std::string>());
            rep.rows.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("report JSON schema failure: ") + e.what());
    }
    return rep;
}

} // namespace qshrink
