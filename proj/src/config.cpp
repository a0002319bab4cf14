#include "gcs/config.hpp"

#include <algorithm>
#include <cinttypes>
#include <fstream>
#include <sstream>

#include "gcs/errors.hpp"

namespace gcs {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

double parse_double(const std::string& v, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        fail(strf("%s: '%s' is not a number", where.c_str(), v.c_str()));
    }
}

long parse_long(const std::string& v, const std::string& where) {
    try {
        std::size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        fail(strf("%s: '%s' is not an integer", where.c_str(), v.c_str()));
    }
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

IniFile IniFile::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(strf("cannot open config file %s", path.c_str()));
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_string(ss.str(), path);
}

IniFile IniFile::parse_string(const std::string& text, const std::string& name) {
    IniFile ini;
    ini.name_ = name;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        // strip comments ('#' or ';' not inside a value we care about)
        if (auto pos = line.find_first_of("#;"); pos != std::string::npos) line.erase(pos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail(strf("%s:%d: malformed section header '%s'", name.c_str(), lineno,
                          line.c_str()));
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) fail(strf("%s:%d: empty section name", name.c_str(), lineno));
            ini.section_lines_.emplace(section, lineno);
            ini.sections_[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(strf("%s:%d: expected 'key = value', got '%s'", name.c_str(), lineno,
                      line.c_str()));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(strf("%s:%d: empty key", name.c_str(), lineno));
        auto& sec = ini.sections_[section];
        if (sec.count(key))
            fail(strf("%s:%d: duplicate key '%s' in section [%s]", name.c_str(), lineno,
                      key.c_str(), section.c_str()));
        sec[key] = Entry{value, lineno, false};
    }
    return ini;
}

bool IniFile::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

bool IniFile::has_section(const std::string& section) const { return sections_.count(section) > 0; }

std::vector<std::string> IniFile::sections() const {
    std::vector<std::string> out;
    for (const auto& [name, entries] : sections_) out.push_back(name);
    return out;
}

std::vector<std::string> IniFile::keys(const std::string& section) const {
    std::vector<std::string> out;
    auto s = sections_.find(section);
    if (s == sections_.end()) return out;
    for (const auto& [k, e] : s->second) out.push_back(k);
    return out;
}

std::string IniFile::get(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) fail(strf("%s: missing section [%s]", name_.c_str(), section.c_str()));
    auto e = s->second.find(key);
    if (e == s->second.end())
        fail(strf("%s: missing key '%s' in section [%s]", name_.c_str(), key.c_str(),
                  section.c_str()));
    e->second.consumed = true;
    return e->second.value;
}

std::string IniFile::get_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
    if (!has(section, key)) return fallback;
    return get(section, key);
}

double IniFile::get_double(const std::string& section, const std::string& key,
                           double fallback) const {
    if (!has(section, key)) return fallback;
    return parse_double(get(section, key), strf("%s: [%s] %s", name_.c_str(), section.c_str(), key.c_str()));
}

long IniFile::get_long(const std::string& section, const std::string& key, long fallback) const {
    if (!has(section, key)) return fallback;
    return parse_long(get(section, key), strf("%s: [%s] %s", name_.c_str(), section.c_str(), key.c_str()));
}

std::uint64_t IniFile::get_u64(const std::string& section, const std::string& key,
                               std::uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key);
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        fail(strf("%s: [%s] %s: '%s' is not an unsigned integer", name_.c_str(), section.c_str(),
                  key.c_str(), v.c_str()));
    }
}

std::vector<double> IniFile::get_doubles(const std::string& section, const std::string& key,
                                         std::vector<double> fallback) const {
    if (!has(section, key)) return fallback;
    const std::string where = strf("%s: [%s] %s", name_.c_str(), section.c_str(), key.c_str());
    std::vector<double> out;
    for (const auto& tok : split_ws(get(section, key))) out.push_back(parse_double(tok, where));
    if (out.empty()) fail(strf("%s: empty list", where.c_str()));
    return out;
}

std::vector<long> IniFile::get_longs(const std::string& section, const std::string& key,
                                     std::vector<long> fallback) const {
    if (!has(section, key)) return fallback;
    const std::string where = strf("%s: [%s] %s", name_.c_str(), section.c_str(), key.c_str());
    std::vector<long> out;
    for (const auto& tok : split_ws(get(section, key))) out.push_back(parse_long(tok, where));
    if (out.empty()) fail(strf("%s: empty list", where.c_str()));
    return out;
}

void IniFile::check_all_consumed() const {
    for (const auto& [sec, entries] : sections_)
        for (const auto& [key, e] : entries)
            if (!e.consumed)
                fail(strf("%s:%d: unknown key '%s' in section [%s]", name_.c_str(), e.line,
                          key.c_str(), sec.c_str()));
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream raw(path, std::ios::binary);
    if (!raw) fail(strf("cannot open config file %s", path.c_str()));
    std::ostringstream bytes;
    bytes << raw.rdbuf();

    const IniFile ini = IniFile::parse_string(bytes.str(), path);
    RunConfig cfg;
    cfg.source_path = path;
    cfg.config_hash = fnv1a64(bytes.str());

    cfg.seed = ini.get_u64("run", "seed", cfg.seed);
    cfg.out_dir = ini.get_or("run", "out", cfg.out_dir);

    LinkConfig& link = cfg.link;
    link.span_count = static_cast<int>(ini.get_long("link", "span_count", link.span_count));
    link.span_length_km = ini.get_double("link", "span_length_km", link.span_length_km);
    link.attenuation_db_per_km =
        ini.get_double("link", "attenuation_db_per_km", link.attenuation_db_per_km);
    link.dispersion_ps_nm_km =
        ini.get_double("link", "dispersion_ps_nm_km", link.dispersion_ps_nm_km);
    link.gamma_per_w_km = ini.get_double("link", "gamma_per_w_km", link.gamma_per_w_km);
    link.symbol_rate_gbd = ini.get_double("link", "symbol_rate_gbd", link.symbol_rate_gbd);
    link.channel_spacing_ghz =
        ini.get_double("link", "channel_spacing_ghz", link.channel_spacing_ghz);
    link.wdm_channels = static_cast<int>(ini.get_long("link", "wdm_channels", link.wdm_channels));
    link.center_wavelength_nm =
        ini.get_double("link", "center_wavelength_nm", link.center_wavelength_nm);
    link.noise_figure_db = ini.get_double("link", "noise_figure_db", link.noise_figure_db);

    cfg.kind = model_kind_from(ini.get_or("channel", "model", "nlin"));

    if (ini.has_section("chi")) {
        cfg.chi.by_spans.clear();
        for (const auto& key : ini.keys("chi")) {
            const long spans = parse_long(key, strf("%s: [chi] key", path.c_str()));
            const auto vals = ini.get_doubles("chi", key, {});
            if (vals.size() != 3)
                fail(strf("%s: [chi] %s: expected 'chi1 chi2 chi3', got %zu values", path.c_str(),
                          key.c_str(), vals.size()));
            cfg.chi.by_spans[static_cast<int>(spans)] = {vals[0], vals[1], vals[2]};
        }
    } else {
        cfg.chi = ChiTable::illustrative_default();
    }

    TrainConfig& tr = cfg.train;
    tr.m = static_cast<int>(ini.get_long("train", "m", tr.m));
    tr.n = static_cast<int>(ini.get_long("train", "n", tr.n));
    if (ini.has("train", "hidden")) {
        tr.hidden.clear();
        for (long h : ini.get_longs("train", "hidden", {}))
            tr.hidden.push_back(static_cast<std::size_t>(h));
    }
    tr.batch = static_cast<int>(ini.get_long("train", "batch", tr.batch));
    tr.iterations = static_cast<int>(ini.get_long("train", "iterations", tr.iterations));
    const std::string opt = ini.get_or("train", "optimizer", "adam");
    if (opt == "adam")
        tr.optimizer = Optimizer::Adam;
    else if (opt == "sgd")
        tr.optimizer = Optimizer::Sgd;
    else
        fail(strf("%s: [train] optimizer '%s' (expected adam or sgd)", path.c_str(), opt.c_str()));
    tr.learning_rate = ini.get_double("train", "learning_rate", tr.learning_rate);
    tr.adam_beta1 = ini.get_double("train", "adam_beta1", tr.adam_beta1);
    tr.adam_beta2 = ini.get_double("train", "adam_beta2", tr.adam_beta2);
    tr.trace_every = static_cast<int>(ini.get_long("train", "trace_every", tr.trace_every));
    tr.seed = cfg.seed;
    tr.kind = cfg.kind;

    cfg.sweep.powers_dbm = ini.get_doubles("sweep", "powers_dbm",
                                           {-5, -4, -3, -2, -1, 0, 1, 2, 3, 4, 5});
    cfg.sweep.span_counts.clear();
    for (long s : ini.get_longs("sweep", "span_counts", {20}))
        cfg.sweep.span_counts.push_back(static_cast<int>(s));

    cfg.metrics.mi_samples = ini.get_long("metrics", "mi_samples", cfg.metrics.mi_samples);
    cfg.metrics.seed = cfg.seed;

    cfg.ssf_samples_per_symbol =
        static_cast<int>(ini.get_long("ssf", "samples_per_symbol", cfg.ssf_samples_per_symbol));
    cfg.ssf_symbols_per_channel =
        static_cast<int>(ini.get_long("ssf", "symbols_per_channel", cfg.ssf_symbols_per_channel));
    cfg.ssf_steps_per_span =
        static_cast<int>(ini.get_long("ssf", "steps_per_span", cfg.ssf_steps_per_span));
    cfg.ssf_rrc_rolloff = ini.get_double("ssf", "rrc_rolloff", cfg.ssf_rrc_rolloff);

    cfg.eval_qam = ini.get_longs("evaluate", "qam", {});

    ini.check_all_consumed();
    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    link.validate();
    train.validate();
    sweep.validate();
    if (metrics.mi_samples < 1000) fail("config: [metrics] mi_samples < 1000");
    for (int spans : sweep.span_counts) chi.lookup(spans);  // fails on missing entries
    if (kind == ModelKind::Nlin && chi.by_spans.empty())
        fail("config: NLIN model requires a [chi] table");
    ssf_config(sweep.powers_dbm.front()).validate();
    for (long m : eval_qam)
        if (m != 4) {
            const long root = std::lround(std::sqrt(static_cast<double>(m)));
            if (root * root != m || (m & (m - 1)) != 0)
                fail(strf("config: [evaluate] qam order %ld unsupported", m));
        }
}

SsfConfig RunConfig::ssf_config(double launch_power_dbm) const {
    SsfConfig s;
    s.link = link;
    s.samples_per_symbol = ssf_samples_per_symbol;
    s.symbols_per_channel = ssf_symbols_per_channel;
    s.steps_per_span = ssf_steps_per_span;
    s.rrc_rolloff = ssf_rrc_rolloff;
    s.launch_power_dbm = launch_power_dbm;
    s.seed = seed;
    return s;
}

std::string RunConfig::summary() const {
    std::ostringstream os;
    os << "seed: " << seed << "\n";
    os << "config_hash: " << strf("%016" PRIx64, config_hash) << "\n";
    os << "model: " << model_kind_name(kind) << "\n";
    os << strf("link: %d x %g km, %g dB/km, D=%g ps/(nm km), gamma=%g /(W km), %g GBd, "
               "%d ch x %g GHz, NF=%g dB\n",
               link.span_count, link.span_length_km, link.attenuation_db_per_km,
               link.dispersion_ps_nm_km, link.gamma_per_w_km, link.symbol_rate_gbd,
               link.wdm_channels, link.channel_spacing_ghz, link.noise_figure_db);
    os << strf("train: M=%d N=%d batch=%d iterations=%d lr=%g optimizer=%s\n", train.m, train.n,
               train.batch, train.iterations, train.learning_rate,
               train.optimizer == Optimizer::Adam ? "adam" : "sgd");
    os << "sweep powers_dbm:";
    for (double p : sweep.powers_dbm) os << " " << p;
    os << "\nsweep span_counts:";
    for (int s : sweep.span_counts) os << " " << s;
    os << "\n";
    os << strf("metrics: mi_samples=%ld\n", metrics.mi_samples);
    os << strf("ssf: sps=%d symbols=%d steps=%d rolloff=%g\n", ssf_samples_per_symbol,
               ssf_symbols_per_channel, ssf_steps_per_span, ssf_rrc_rolloff);
    return os.str();
}

}  // namespace gcs
