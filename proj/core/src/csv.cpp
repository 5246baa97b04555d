#include "qshrink/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "qshrink/errors.hpp"

namespace qshrink {

namespace {

bool is_missing(const std::string& cell) { return cell.empty() || cell == "NA"; }

bool parse_number(const std::string& cell, double* out) {
    const char* s = cell.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s) return false;
    while (*end == ' ' || *end == '\t') ++end;
    if (*end != '\0') return false;
    *out = v;
    return true;
}

std::string quote_if_needed(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        out += c;
        if (c == '"') out += '"';
    }
    out += '"';
    return out;
}

} // namespace

CsvTable parse_csv(std::istream& in) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    char c;
    auto end_field = [&] {
        record.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(record);
        record.clear();
    };
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field += '"';
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field.empty() && !field_started) {
                    in_quotes = true;
                    field_started = true;
                } else {
                    throw validation_error("csv: stray quote inside unquoted field");
                }
                break;
            case ',': end_field(); field_started = false; break;
            case '\r':
                if (in.peek() == '\n') in.get();
                end_record();
                break;
            case '\n': end_record(); break;
            default: field += c; field_started = true; break;
        }
    }
    if (in_quotes) throw validation_error("csv: unterminated quoted field");
    if (!field.empty() || field_started || !record.empty()) end_record();

    if (records.empty()) throw validation_error("csv: no header row");
    CsvTable table;
    table.header = records.front();
    const std::size_t width = table.header.size();
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].size() == 1 && records[i][0].empty()) continue; // trailing blank line
        if (records[i].size() != width) {
            throw validation_error("csv: row " + std::to_string(i + 1) + " has " +
                                   std::to_string(records[i].size()) + " fields, expected " +
                                   std::to_string(width));
        }
        table.rows.push_back(std::move(records[i]));
    }
    return table;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("csv: cannot open " + path);
    return parse_csv(in);
}

void write_csv(std::ostream& out, const CsvTable& table) {
    for (std::size_t j = 0; j < table.header.size(); ++j)
        out << (j ? "," : "") << quote_if_needed(table.header[j]);
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t j = 0; j < row.size(); ++j)
            out << (j ? "," : "") << quote_if_needed(row[j]);
        out << '\n';
    }
}

ResponseTransform parse_transform(const std::string& name) {
    if (name == "none") return ResponseTransform::none;
    if (name == "log") return ResponseTransform::log_e;
    if (name == "sqrt") return ResponseTransform::sqrt_half;
    if (name == "scale") return ResponseTransform::scale;
    throw validation_error("unknown response transform: " + name);
}

const char* to_string(ResponseTransform t) {
    switch (t) {
        case ResponseTransform::none: return "none";
        case ResponseTransform::log_e: return "log";
        case ResponseTransform::sqrt_half: return "sqrt";
        case ResponseTransform::scale: return "scale";
    }
    return "?";
}

IngestResult ingest_csv(const CsvTable& table, const std::string& response_column,
                        const IngestOptions& opts) {
    const std::size_t ncol = table.header.size();
    std::size_t resp = ncol;
    for (std::size_t j = 0; j < ncol; ++j)
        if (table.header[j] == response_column) resp = j;
    if (resp == ncol)
        throw schema_error("csv: response column '" + response_column + "' not found",
                           {response_column});
    if (table.rows.empty()) throw validation_error("csv: file has zero data rows");

    // missing-value scan
    std::vector<bool> keep(table.rows.size(), true);
    std::set<std::string> missing_cols;
    int dropped = 0;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        for (std::size_t j = 0; j < ncol; ++j) {
            if (is_missing(table.rows[i][j])) {
                keep[i] = false;
                missing_cols.insert(table.header[j]);
            }
        }
        if (!keep[i]) ++dropped;
    }
    if (!opts.drop_missing && dropped > 0)
        throw schema_error("csv: missing values present (pass drop_missing to drop rows)",
                           {missing_cols.begin(), missing_cols.end()});

    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < table.rows.size(); ++i)
        if (keep[i]) live.push_back(i);
    if (live.empty()) throw validation_error("csv: no complete rows after dropping missing");

    // column typing over retained rows
    std::vector<bool> numeric(ncol, true);
    for (std::size_t j = 0; j < ncol; ++j) {
        for (std::size_t i : live) {
            double v;
            if (!parse_number(table.rows[i][j], &v)) {
                numeric[j] = false;
                break;
            }
        }
    }
    if (!numeric[resp])
        throw schema_error("csv: response column is not numeric", {response_column});

    // output column plan
    struct OutCol {
        std::size_t src;
        std::string name;
        bool onehot;
        std::string level;
    };
    std::vector<OutCol> plan;
    std::vector<std::string> bad;
    for (std::size_t j = 0; j < ncol; ++j) {
        if (j == resp) continue;
        if (numeric[j]) {
            plan.push_back(OutCol{j, table.header[j], false, ""});
        } else {
            std::set<std::string> levels;
            for (std::size_t i : live) levels.insert(table.rows[i][j]);
            if (levels.size() < 2) {
                bad.push_back(table.header[j]);
                continue;
            }
            bool first = true;
            for (const auto& lv : levels) {
                if (first) { first = false; continue; } // reference level dropped
                plan.push_back(OutCol{j, table.header[j] + "_" + lv, true, lv});
            }
        }
    }
    if (!bad.empty())
        throw schema_error("csv: columns cannot be encoded (single level)", bad);
    if (plan.empty()) throw validation_error("csv: no usable covariate columns");

    const int n = static_cast<int>(live.size());
    const int extra = opts.add_intercept ? 1 : 0;
    Eigen::MatrixXd X(n, static_cast<int>(plan.size()) + extra);
    Eigen::VectorXd y(n);
    std::vector<std::string> names;
    if (opts.add_intercept) {
        X.col(0).setOnes();
        names.push_back("(Intercept)");
    }
    for (std::size_t k = 0; k < plan.size(); ++k) names.push_back(plan[k].name);

    for (int i = 0; i < n; ++i) {
        const auto& row = table.rows[live[i]];
        double v = 0.0;
        parse_number(row[resp], &v);
        switch (opts.transform) {
            case ResponseTransform::none: break;
            case ResponseTransform::log_e:
                if (!(v > 0.0))
                    throw validation_error("csv: log transform needs positive responses");
                v = std::log(v);
                break;
            case ResponseTransform::sqrt_half:
                if (v < 0.0)
                    throw validation_error("csv: sqrt transform needs nonnegative responses");
                v = std::sqrt(v);
                break;
            case ResponseTransform::scale:
                if (!(opts.scale_factor != 0.0))
                    throw validation_error("csv: scale transform needs a nonzero factor");
                v /= opts.scale_factor;
                break;
        }
        y[i] = v;
        for (std::size_t k = 0; k < plan.size(); ++k) {
            const auto& pc = plan[k];
            double x = 0.0;
            if (pc.onehot) {
                x = (row[pc.src] == pc.level) ? 1.0 : 0.0;
            } else {
                parse_number(row[pc.src], &x);
            }
            X(i, static_cast<int>(k) + extra) = x;
        }
    }
    IngestResult out{make_dataset(std::move(y), std::move(X), static_cast<int>(plan.size()) + extra,
                                  std::move(names)),
                     dropped};
    return out;
}

IngestResult ingest_csv_file(const std::string& path, const std::string& response_column,
                             const IngestOptions& opts) {
    return ingest_csv(read_csv(path), response_column, opts);
}

CsvTable dataset_to_table(const Dataset& data, const std::string& response_name) {
    CsvTable t;
    t.header.push_back(response_name);
    for (int j = 0; j < data.p(); ++j)
        t.header.push_back(data.names.empty() ? "x" + std::to_string(j + 1) : data.names[j]);
    char buf[64];
    for (int i = 0; i < data.n(); ++i) {
        std::vector<std::string> row;
        std::snprintf(buf, sizeof(buf), "%.17g", data.y[i]);
        row.push_back(buf);
        for (int j = 0; j < data.p(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", data.X(i, j));
            row.push_back(buf);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace qshrink
