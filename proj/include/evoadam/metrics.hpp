#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace evoadam {

struct FrontPoint {
    double f1 = 0.0;
    double f2 = 0.0;
    std::string tag;
};

using FrontSet = std::vector<FrontPoint>;

// Pareto dominance under minimization: no worse in both, better in at least one.
inline bool dominates(const FrontPoint& a, const FrontPoint& b) {
    return a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2);
}

// Maximal nondominated subset, stable input order, exact duplicates collapsed.
inline FrontSet pareto_filter(const FrontSet& set) {
    FrontSet out;
    for (std::size_t i = 0; i < set.size(); ++i) {
        bool keep = true;
        for (std::size_t j = 0; j < set.size() && keep; ++j) {
            if (j == i) continue;
            if (dominates(set[j], set[i])) keep = false;
            // duplicate values: keep only the first occurrence
            if (j < i && set[j].f1 == set[i].f1 && set[j].f2 == set[i].f2) keep = false;
        }
        if (keep) out.push_back(set[i]);
    }
    return out;
}

// Exact 2-D hypervolume w.r.t. a reference point: filter, sort by f1, sum
// rectangle slabs. Points not dominating the reference are clipped out.
inline double hypervolume_2d(const FrontSet& front, const FrontPoint& ref) {
    FrontSet pts;
    for (const FrontPoint& p : front)
        if (p.f1 < ref.f1 && p.f2 < ref.f2) pts.push_back(p);
    pts = pareto_filter(pts);
    std::sort(pts.begin(), pts.end(),
              [](const FrontPoint& a, const FrontPoint& b) { return a.f1 < b.f1; });
    double hv = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double next_f1 = (i + 1 < pts.size()) ? pts[i + 1].f1 : ref.f1;
        hv += (next_f1 - pts[i].f1) * (ref.f2 - pts[i].f2);
    }
    return hv;
}

// Mean distance from each reference point to its nearest front point.
inline double igd(const FrontSet& front, const FrontSet& reference) {
    if (front.empty() || reference.empty())
        throw std::invalid_argument("igd: empty front or reference");
    double acc = 0.0;
    for (const FrontPoint& r : reference) {
        double best = std::numeric_limits<double>::infinity();
        for (const FrontPoint& p : front) {
            const double d1 = p.f1 - r.f1, d2 = p.f2 - r.f2;
            best = std::min(best, std::sqrt(d1 * d1 + d2 * d2));
        }
        acc += best;
    }
    return acc / static_cast<double>(reference.size());
}

// 17 significant digits; round-trips any double exactly.
inline std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void export_front(const FrontSet& front, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("export_front: cannot open " + path);
    out << "tag,f1,f2\n";
    for (const FrontPoint& p : front)
        out << p.tag << "," << format_real(p.f1) << "," << format_real(p.f2) << "\n";
    if (!out) throw std::runtime_error("export_front: write failed for " + path);
}

inline FrontSet import_front(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("import_front: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "tag,f1,f2")
        throw std::runtime_error("import_front: bad header in " + path);
    FrontSet out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw std::runtime_error("import_front: bad row in " + path);
        FrontPoint p;
        p.tag = line.substr(0, c1);
        p.f1 = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        p.f2 = std::stod(line.substr(c2 + 1));
        out.push_back(p);
    }
    return out;
}

// Shared reference point: componentwise max over the compared fronts, times 1.1.
inline FrontPoint reference_point(const std::vector<const FrontSet*>& fronts) {
    double m1 = -std::numeric_limits<double>::infinity();
    double m2 = m1;
    bool any = false;
    for (const FrontSet* f : fronts)
        for (const FrontPoint& p : *f) {
            m1 = std::max(m1, p.f1);
            m2 = std::max(m2, p.f2);
            any = true;
        }
    if (!any) throw std::invalid_argument("reference_point: no points");
    return FrontPoint{1.1 * m1, 1.1 * m2, "ref"};
}

}  // namespace evoadam
