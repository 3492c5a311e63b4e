#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "evoadam/driver.hpp"
#include "evoadam/metrics.hpp"

namespace evoadam {

inline void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw std::runtime_error("cannot create directory " + path + ": " + ec.message());
}

// log.csv schema: epoch, phase, k, lambda, f1, f2, tcheb, z1, z2.
inline void write_log_csv(const RunLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "epoch,phase,k,lambda,f1,f2,tcheb,z1,z2\n";
    for (const LogRow& r : log) {
        out << r.epoch << "," << r.phase << "," << r.k << "," << format_real(r.lambda) << ","
            << format_real(r.f1) << "," << format_real(r.f2) << "," << format_real(r.tcheb) << ","
            << format_real(r.z1) << "," << format_real(r.z2) << "\n";
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

inline RunLog read_log_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "epoch,phase,k,lambda,f1,f2,tcheb,z1,z2")
        throw std::runtime_error("bad log header in " + path);
    RunLog log;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        LogRow r;
        auto next = [&]() {
            if (!std::getline(ss, field, ',')) throw std::runtime_error("bad log row in " + path);
            return field;
        };
        r.epoch = std::stoull(next());
        r.phase = next();
        r.k = std::stoull(next());
        r.lambda = std::stod(next());
        r.f1 = std::stod(next());
        r.f2 = std::stod(next());
        r.tcheb = std::stod(next());
        r.z1 = std::stod(next());
        r.z2 = std::stod(next());
        log.push_back(r);
    }
    return log;
}

// Final-epoch objective values as a front (one point per individual).
inline FrontSet log_front(const RunLog& log, std::size_t epoch = 0) {
    if (log.empty()) throw std::runtime_error("log_front: empty log");
    if (epoch == 0) epoch = log.back().epoch;
    FrontSet front;
    for (const LogRow& r : log)
        if (r.epoch == epoch) front.push_back({r.f1, r.f2, "ind" + std::to_string(r.k)});
    if (front.empty())
        throw std::runtime_error("log_front: no rows for epoch " + std::to_string(epoch));
    return front;
}

inline void write_text(const std::string& text, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace evoadam
