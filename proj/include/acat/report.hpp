#pragma once

#include <string>
#include <vector>

namespace acat {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path);

// Aggregates rows from CSVs sharing a schema: groups by the non-numeric
// columns, reports mean/stddev (population) of each numeric column. Writes a
// human-readable summary to summary_path and one whitespace-separated data
// file per numeric column under dat_dir (empty dat_dir skips them). Throws
// DataError on schema mismatch, naming the offending columns.
void report(const std::vector<std::string>& csv_paths, const std::string& summary_path,
            const std::string& dat_dir);

}  // namespace acat
