// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0

#include "relufield/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rf {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_vec(const Vec3& v) {
    return fmt_double(v.x) + " " + fmt_double(v.y) + " " + fmt_double(v.z);
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

Vec3 parse_vec(const std::string& s, const std::string& key) {
    std::istringstream in(s);
    Vec3 v;
    if (!(in >> v.x >> v.y >> v.z))
        throw std::runtime_error("config: expected 3 numbers for key '" + key + "'");
    return v;
}

}  // namespace

std::string serialize_config(const TrainConfig& c) {
    std::ostringstream out;
    // Fixed key order; parse_config accepts any order.
    out << "aabb_lo = " << fmt_vec(c.aabb.lo) << "\n";
    out << "aabb_hi = " << fmt_vec(c.aabb.hi) << "\n";
    out << "background = " << fmt_vec(c.background) << "\n";
    out << "batch_points = " << c.batch_points << "\n";
    out << "batch_rays = " << c.batch_rays << "\n";
    out << "beta1 = " << fmt_double(c.beta1) << "\n";
    out << "beta2 = " << fmt_double(c.beta2) << "\n";
    out << "dims = " << c.dims[0] << " " << c.dims[1] << " " << c.dims[2] << "\n";
    out << "eps = " << fmt_double(c.eps) << "\n";
    out << "init_hi = " << fmt_double(c.init_hi) << "\n";
    out << "init_lo = " << fmt_double(c.init_lo) << "\n";
    out << "jitter = " << (c.jitter ? 1 : 0) << "\n";
    out << "lr = " << fmt_double(c.lr) << "\n";
    out << "mc_samples = " << c.mc_samples << "\n";
    out << "mode = " << c.mode << "\n";
    out << "run_id = " << c.run_id << "\n";
    out << "samples_per_ray = " << c.samples_per_ray << "\n";
    out << "scene = " << c.scene << "\n";
    out << "seed = " << c.seed << "\n";
    out << "stage_iters = " << c.stage_iters << "\n";
    out << "start_shrink_exponent = " << c.start_shrink_exponent << "\n";
    out << "threads = " << c.threads << "\n";
    out << "timing = " << (c.timing ? 1 : 0) << "\n";
    return out.str();
}

TrainConfig parse_config(const std::string& text) {
    TrainConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: missing '=' on line " + std::to_string(lineno));
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        try {
            if (key == "aabb_lo") c.aabb.lo = parse_vec(val, key);
            else if (key == "aabb_hi") c.aabb.hi = parse_vec(val, key);
            else if (key == "background") c.background = parse_vec(val, key);
            else if (key == "batch_points") c.batch_points = std::stoi(val);
            else if (key == "batch_rays") c.batch_rays = std::stoi(val);
            else if (key == "beta1") c.beta1 = std::stod(val);
            else if (key == "beta2") c.beta2 = std::stod(val);
            else if (key == "dims") {
                std::istringstream ds(val);
                if (!(ds >> c.dims[0] >> c.dims[1] >> c.dims[2]))
                    throw std::runtime_error("expected 3 ints");
            } else if (key == "eps") c.eps = std::stod(val);
            else if (key == "init_hi") c.init_hi = std::stod(val);
            else if (key == "init_lo") c.init_lo = std::stod(val);
            else if (key == "jitter") c.jitter = std::stoi(val) != 0;
            else if (key == "lr") c.lr = std::stod(val);
            else if (key == "mc_samples") c.mc_samples = std::stoll(val);
            else if (key == "mode") c.mode = val;
            else if (key == "run_id") c.run_id = val;
            else if (key == "samples_per_ray") c.samples_per_ray = std::stoi(val);
            else if (key == "scene") c.scene = val;
            else if (key == "seed") c.seed = std::stoull(val);
            else if (key == "stage_iters") c.stage_iters = std::stoi(val);
            else if (key == "start_shrink_exponent") c.start_shrink_exponent = std::stoi(val);
            else if (key == "threads") c.threads = std::stoi(val);
            else if (key == "timing") c.timing = std::stoi(val) != 0;
            else throw std::runtime_error("config: unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("config: malformed value for key '" + key + "'");
        }
    }
    return c;
}

void save_config(const std::string& path, const TrainConfig& cfg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("config: cannot open '" + path + "' for writing");
    out << serialize_config(cfg);
}

TrainConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace rf
