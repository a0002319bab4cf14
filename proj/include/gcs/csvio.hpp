#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gcs/channel.hpp"

namespace gcs {

// One evaluation result: (grid point x constellation x path). `path` is
// "model" for channel-model MI and "ssf" for split-step validation.
struct ResultRow {
    double power_dbm = 0.0;
    int span_count = 0;
    ModelKind kind = ModelKind::Nlin;
    std::string label;
    double mi_bit4d = 0.0;
    double mi_stderr = 0.0;
    double kappa = 0.0;
    double kappa3 = 0.0;
    double eff_snr_db = 0.0;
    std::string path = "model";
};

inline const char* kResultHeader =
    "power_dbm,span_count,model_kind,label,mi_bit4d,mi_stderr,kappa,kappa3,eff_snr_db,path";

// Full 64-bit precision (%.17g), '.' decimal separator.
std::string format_double(double v);

// Writes atomically (temp file + rename). `comments` become leading
// '# key: value' lines; readers skip them.
void write_result_csv(const std::string& path, const std::vector<std::string>& comments,
                      const std::vector<ResultRow>& rows);

std::vector<ResultRow> read_result_csv(const std::string& path);

// Generic table for the figure bundles.
struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace gcs
