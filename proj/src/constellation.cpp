#include "gcs/constellation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gcs/errors.hpp"

namespace gcs {

void Constellation::validate() const {
    if (m < 2 || n < 1) fail(strf("constellation: bad dimensions M=%d N=%d", m, n));
    if (points.rank() != 2 || points.shape[0] != static_cast<std::size_t>(m) ||
        points.shape[1] != static_cast<std::size_t>(n))
        fail(strf("constellation: points shape [%s] does not match M=%d N=%d",
                  shape_str(points.shape).c_str(), m, n));
    double energy = 0.0;
    for (double v : points.data) energy += v * v;
    energy /= static_cast<double>(m) * (static_cast<double>(n) / 2.0);
    if (std::fabs(energy - 1.0) > 1e-9)
        fail(strf("constellation '%s': mean energy %.12g != 1", label.c_str(), energy));
    if (min_distance() <= 0.0) fail(strf("constellation '%s': duplicate points", label.c_str()));
}

double Constellation::min_distance() const {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            double d2 = 0.0;
            for (int k = 0; k < n; ++k) {
                const double d = points.at(i, k) - points.at(j, k);
                d2 += d * d;
            }
            best = std::min(best, std::sqrt(d2));
        }
    return best;
}

void normalize_unit_power(Tensor& points) {
    double energy = 0.0;
    for (double v : points.data) energy += v * v;
    const std::size_t pairs = points.numel() / 2;
    if (energy == 0.0) fail("normalize: zero-energy constellation");
    const double scale = 1.0 / std::sqrt(energy / static_cast<double>(pairs));
    for (double& v : points.data) v *= scale;
}

Constellation qam(int m) {
    if (m != 4) {
        const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
        const bool square = root * root == m;
        const bool pow2 = m > 0 && (m & (m - 1)) == 0;
        if (!square || !pow2)
            fail(strf("qam: unsupported order %d (need 4 or a square power of two)", m));
    }
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
    Tensor pts = Tensor::zeros({static_cast<std::size_t>(m), 2});
    int idx = 0;
    for (int row = 0; row < side; ++row)
        for (int col = 0; col < side; ++col, ++idx) {
            pts.at(idx, 0) = static_cast<double>(2 * col - (side - 1));
            pts.at(idx, 1) = static_cast<double>(2 * row - (side - 1));
        }
    normalize_unit_power(pts);
    Constellation c;
    c.m = m;
    c.n = 2;
    c.points = std::move(pts);
    c.label = strf("%d-QAM", m);
    c.validate();
    return c;
}

void canonicalize(Constellation& c) {
    if (c.n == 2) {
        int best = 0;
        double best_e = -1.0;
        for (int i = 0; i < c.m; ++i) {
            const double e = c.points.at(i, 0) * c.points.at(i, 0) +
                             c.points.at(i, 1) * c.points.at(i, 1);
            if (e > best_e) {
                best_e = e;
                best = i;
            }
        }
        const double phi = std::atan2(c.points.at(best, 1), c.points.at(best, 0));
        const double cs = std::cos(-phi), sn = std::sin(-phi);
        for (int i = 0; i < c.m; ++i) {
            const double re = c.points.at(i, 0), im = c.points.at(i, 1);
            c.points.at(i, 0) = cs * re - sn * im;
            c.points.at(i, 1) = sn * re + cs * im;
        }
    }
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(c.m));
    for (int i = 0; i < c.m; ++i)
        rows[static_cast<std::size_t>(i)].assign(c.points.data.begin() + i * c.n,
                                                 c.points.data.begin() + (i + 1) * c.n);
    std::sort(rows.begin(), rows.end());
    for (int i = 0; i < c.m; ++i)
        std::copy(rows[static_cast<std::size_t>(i)].begin(), rows[static_cast<std::size_t>(i)].end(),
                  c.points.data.begin() + i * c.n);
}

void save_constellation(const std::string& path, const Constellation& c) {
    std::ostringstream os;
    os << c.m << " " << c.n << "\n";
    char buf[32];
    for (int i = 0; i < c.m; ++i) {
        for (int k = 0; k < c.n; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", c.points.at(i, k));
            os << buf << (k + 1 == c.n ? "" : " ");
        }
        os << "\n";
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(strf("cannot open %s for writing", path.c_str()));
    f << os.str();
}

LoadedConstellation load_constellation(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(strf("cannot open %s", path.c_str()));
    std::string line;
    int lineno = 0;
    auto next_content_line = [&](const char* what) {
        while (std::getline(f, line)) {
            ++lineno;
            std::size_t pos = line.find_first_not_of(" \t\r");
            if (pos == std::string::npos || line[pos] == '#') continue;
            return;
        }
        fail(strf("%s:%d: unexpected end of file, expected %s", path.c_str(), lineno, what));
    };

    next_content_line("header 'M N'");
    int m = 0, n = 0;
    {
        std::istringstream is(line);
        if (!(is >> m >> n) || m < 2 || n < 1)
            fail(strf("%s:%d: malformed header, expected 'M N' with M >= 2, N >= 1", path.c_str(),
                      lineno));
    }
    if (n % 2 != 0) fail(strf("%s:%d: N=%d must be even (complex pairs)", path.c_str(), lineno, n));
    Tensor pts = Tensor::zeros({static_cast<std::size_t>(m), static_cast<std::size_t>(n)});
    for (int i = 0; i < m; ++i) {
        next_content_line(strf("point row %d of %d", i + 1, m).c_str());
        std::istringstream is(line);
        for (int k = 0; k < n; ++k)
            if (!(is >> pts.at(static_cast<std::size_t>(i), static_cast<std::size_t>(k))))
                fail(strf("%s:%d: expected %d floats on point row %d", path.c_str(), lineno, n,
                          i + 1));
    }

    double energy = 0.0;
    for (double v : pts.data) energy += v * v;
    energy /= static_cast<double>(m) * (static_cast<double>(n) / 2.0);

    LoadedConstellation out;
    out.renormalized = std::fabs(energy - 1.0) > 1e-9;
    if (out.renormalized) normalize_unit_power(pts);

    // label defaults to the file stem
    std::string stem = path;
    if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
    if (auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);

    out.constellation.m = m;
    out.constellation.n = n;
    out.constellation.points = std::move(pts);
    out.constellation.label = stem;
    out.constellation.validate();
    return out;
}

}  // namespace gcs
