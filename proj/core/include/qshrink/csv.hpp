#ifndef QSHRINK_CSV_HPP
#define QSHRINK_CSV_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "qshrink/dataset.hpp"

namespace qshrink {

// RFC 4180 table: header row plus string cells.  Quoted fields may contain
// commas, doubled quotes, and line breaks.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable parse_csv(std::istream& in);
CsvTable read_csv(const std::string& path);
void write_csv(std::ostream& out, const CsvTable& table);

enum class ResponseTransform { none, log_e, sqrt_half, scale };

ResponseTransform parse_transform(const std::string& name);
const char* to_string(ResponseTransform t);

struct IngestOptions {
    bool drop_missing = false;     // drop rows with any missing cell
    bool add_intercept = false;    // prepend an "(Intercept)" column of ones
    ResponseTransform transform = ResponseTransform::none;
    double scale_factor = 1.0;     // divisor for ResponseTransform::scale
};

struct IngestResult {
    Dataset data; // p1 == p; apply partition_by_columns afterwards
    int rows_dropped = 0;
};

// Builds a numeric design from a parsed table.  Cells equal to "" or "NA"
// count as missing.  Columns with non-numeric entries are one-hot encoded
// with the lexicographically first level dropped; encoded columns are named
// "<column>_<level>".
IngestResult ingest_csv(const CsvTable& table, const std::string& response_column,
                        const IngestOptions& opts = {});

IngestResult ingest_csv_file(const std::string& path, const std::string& response_column,
                             const IngestOptions& opts = {});

// Numeric dataset back to CSV (response first, then covariates).
CsvTable dataset_to_table(const Dataset& data, const std::string& response_name);

} // namespace qshrink

#endif
