#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gcs/channel.hpp"
#include "gcs/metrics.hpp"
#include "gcs/ssf.hpp"
#include "gcs/trainer.hpp"

namespace gcs {

// Sectioned key-value text: [section] headers, key = value lines, '#' and
// ';' comments. Errors carry file:line positions; unknown keys are errors.
class IniFile {
  public:
    static IniFile parse_file(const std::string& path);
    static IniFile parse_string(const std::string& text, const std::string& name = "<string>");

    bool has(const std::string& section, const std::string& key) const;
    std::vector<std::string> keys(const std::string& section) const;
    bool has_section(const std::string& section) const;
    std::vector<std::string> sections() const;

    std::string get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long get_long(const std::string& section, const std::string& key, long fallback) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::uint64_t fallback) const;
    std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                    std::vector<double> fallback) const;
    std::vector<long> get_longs(const std::string& section, const std::string& key,
                                std::vector<long> fallback) const;

    // typo guard: every (section, key) must be consumed by one of the
    // getters above before this is called
    void check_all_consumed() const;

    const std::string& name() const { return name_; }

  private:
    struct Entry {
        std::string value;
        int line = 0;
        mutable bool consumed = false;
    };
    std::string name_;
    std::map<std::string, std::map<std::string, Entry>> sections_;
    std::map<std::string, int> section_lines_;
};

// Full run description; every module default is overridable from the file.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "results";

    LinkConfig link;
    ModelKind kind = ModelKind::Nlin;
    ChiTable chi;
    TrainConfig train;
    SweepSpec sweep;
    MetricsConfig metrics;

    int ssf_samples_per_symbol = 16;
    int ssf_symbols_per_channel = 16384;
    int ssf_steps_per_span = 50;
    double ssf_rrc_rolloff = 0.05;

    std::vector<long> eval_qam;  // QAM baselines added by `evaluate`

    std::uint64_t config_hash = 0;  // FNV-1a of the file bytes
    std::string source_path;

    static RunConfig load(const std::string& path);
    void validate() const;
    SsfConfig ssf_config(double launch_power_dbm) const;
    std::string summary() const;  // human-readable echo for metadata files
};

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace gcs
