#include "acat/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "acat/errors.hpp"
#include "acat/format.hpp"

namespace acat {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

bool is_number(const std::string& s) {
    if (s.empty()) return false;
    try {
        std::size_t pos = 0;
        (void)std::stod(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto row = split_csv_line(line);
        if (row.size() != table.header.size())
            throw DataError(path + ": row has " + std::to_string(row.size()) +
                            " fields, header has " + std::to_string(table.header.size()));
        table.rows.push_back(std::move(row));
    }
    return table;
}

void report(const std::vector<std::string>& csv_paths, const std::string& summary_path,
            const std::string& dat_dir) {
    if (csv_paths.empty()) throw DataError("report: no input CSVs");
    CsvTable merged = read_csv(csv_paths[0]);
    for (std::size_t i = 1; i < csv_paths.size(); ++i) {
        const CsvTable t = read_csv(csv_paths[i]);
        if (t.header != merged.header) {
            std::string diff;
            const std::size_t n = std::max(t.header.size(), merged.header.size());
            for (std::size_t c = 0; c < n; ++c) {
                const std::string a = c < merged.header.size() ? merged.header[c] : "<missing>";
                const std::string b = c < t.header.size() ? t.header[c] : "<missing>";
                if (a != b) diff += " " + a + "!=" + b;
            }
            throw DataError("report: schema mismatch in " + csv_paths[i] + ":" + diff);
        }
        merged.rows.insert(merged.rows.end(), t.rows.begin(), t.rows.end());
    }
    if (merged.rows.empty()) throw DataError("report: no data rows");

    // A column is numeric if every row parses as a number.
    const std::size_t ncols = merged.header.size();
    std::vector<bool> numeric(ncols, true);
    for (const auto& row : merged.rows)
        for (std::size_t c = 0; c < ncols; ++c)
            if (!is_number(row[c])) numeric[c] = false;

    std::map<std::string, std::vector<const std::vector<std::string>*>> groups;
    std::vector<std::string> group_order;
    for (const auto& row : merged.rows) {
        std::string key;
        for (std::size_t c = 0; c < ncols; ++c)
            if (!numeric[c]) key += row[c] + "|";
        if (!groups.count(key)) group_order.push_back(key);
        groups[key].push_back(&row);
    }

    std::ofstream summary(summary_path);
    if (!summary) throw IoError("cannot open for writing: " + summary_path);
    summary << "# aggregated over " << merged.rows.size() << " rows from " << csv_paths.size()
            << " file(s)\n";

    std::vector<std::ofstream> dats(ncols);
    if (!dat_dir.empty()) {
        std::filesystem::create_directories(dat_dir);
        for (std::size_t c = 0; c < ncols; ++c) {
            if (!numeric[c]) continue;
            dats[c].open((std::filesystem::path(dat_dir) / (merged.header[c] + ".dat")).string());
            dats[c] << "# group mean stddev\n";
        }
    }

    for (const std::string& key : group_order) {
        const auto& rows = groups[key];
        const std::string label = key.empty() ? "(all)" : key;
        summary << "group " << label << " n=" << rows.size() << "\n";
        for (std::size_t c = 0; c < ncols; ++c) {
            if (!numeric[c]) continue;
            double sum = 0.0, sq = 0.0;
            for (const auto* row : rows) {
                const double v = std::stod((*row)[c]);
                sum += v;
                sq += v * v;
            }
            const double mean = sum / rows.size();
            const double var = std::max(0.0, sq / rows.size() - mean * mean);
            const double sd = std::sqrt(var);
            summary << "  " << merged.header[c] << " mean=" << fmt_double(mean)
                    << " stddev=" << fmt_double(sd) << "\n";
            if (dats[c].is_open())
                dats[c] << '"' << label << "\" " << fmt_double(mean) << ' ' << fmt_double(sd)
                        << '\n';
        }
    }
}

}  // namespace acat
