#include "gcs/csvio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "gcs/errors.hpp"

namespace gcs {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) fail(strf("cannot open %s for writing", tmp.c_str()));
        f << content;
        if (!f.good()) fail(strf("write failed for %s", tmp.c_str()));
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        fail(strf("cannot rename %s to %s", tmp.c_str(), path.c_str()));
}

void write_result_csv(const std::string& path, const std::vector<std::string>& comments,
                      const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    for (const auto& c : comments) os << "# " << c << "\n";
    os << kResultHeader << "\n";
    for (const auto& r : rows) {
        os << format_double(r.power_dbm) << "," << r.span_count << ","
           << model_kind_name(r.kind) << "," << r.label << "," << format_double(r.mi_bit4d) << ","
           << format_double(r.mi_stderr) << "," << format_double(r.kappa) << ","
           << format_double(r.kappa3) << "," << format_double(r.eff_snr_db) << "," << r.path
           << "\n";
    }
    write_text_atomic(path, os.str());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(strf("cannot open %s", path.c_str()));
    CsvTable t;
    std::string line;
    int lineno = 0;
    bool have_header = false;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            t.comments.push_back(line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1));
            continue;
        }
        if (!have_header) {
            t.header = split_csv_line(line);
            have_header = true;
            continue;
        }
        auto cells = split_csv_line(line);
        if (cells.size() != t.header.size())
            fail(strf("%s:%d: %zu cells, header has %zu columns", path.c_str(), lineno,
                      cells.size(), t.header.size()));
        t.rows.push_back(std::move(cells));
    }
    if (!have_header) fail(strf("%s: no header row", path.c_str()));
    return t;
}

void write_csv(const std::string& path, const CsvTable& table) {
    std::ostringstream os;
    for (const auto& c : table.comments) os << "# " << c << "\n";
    for (std::size_t i = 0; i < table.header.size(); ++i)
        os << table.header[i] << (i + 1 == table.header.size() ? "" : ",");
    os << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << row[i] << (i + 1 == row.size() ? "" : ",");
        os << "\n";
    }
    write_text_atomic(path, os.str());
}

std::vector<ResultRow> read_result_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const std::vector<std::string> expected = split_csv_line(kResultHeader);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < t.header.size(); ++i) col[t.header[i]] = i;
    for (const auto& name : expected)
        if (!col.count(name)) fail(strf("%s: missing column '%s'", path.c_str(), name.c_str()));

    std::vector<ResultRow> rows;
    for (const auto& cells : t.rows) {
        ResultRow r;
        r.power_dbm = std::stod(cells[col["power_dbm"]]);
        r.span_count = std::stoi(cells[col["span_count"]]);
        r.kind = model_kind_from(cells[col["model_kind"]]);
        r.label = cells[col["label"]];
        r.mi_bit4d = std::stod(cells[col["mi_bit4d"]]);
        r.mi_stderr = std::stod(cells[col["mi_stderr"]]);
        r.kappa = std::stod(cells[col["kappa"]]);
        r.kappa3 = std::stod(cells[col["kappa3"]]);
        r.eff_snr_db = std::stod(cells[col["eff_snr_db"]]);
        r.path = cells[col["path"]];
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace gcs
