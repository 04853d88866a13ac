#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "declutter/config.hpp"
#include "declutter/core.hpp"
#include "declutter/scene.hpp"
#include "declutter/setcover.hpp"

namespace declutter {

struct ParseError : std::runtime_error {
    int line;
    ParseError(int line_, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

namespace detail {

inline std::vector<std::string> tokens_of(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string t;
    while (in >> t) out.push_back(t);
    return out;
}

// Line-oriented token reader with 1-based line numbers for error messages.
class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    bool next(std::vector<std::string>& out) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            out = tokens_of(line);
            if (!out.empty()) return true;
        }
        return false;
    }

    std::vector<std::string> expect(const std::string& head, std::size_t args) {
        std::vector<std::string> t;
        if (!next(t)) throw ParseError(line_no_, "expected '" + head + "', got end of file");
        if (t[0] != head) throw ParseError(line_no_, "expected '" + head + "', got '" + t[0] + "'");
        if (t.size() != args + 1)
            throw ParseError(line_no_, "'" + head + "' needs " + std::to_string(args) + " fields");
        return t;
    }

    int line_no() const { return line_no_; }

private:
    std::istream& in_;
    int line_no_ = 0;
};

inline double num(const std::string& s, int line) {
    try {
        return parse_double(s);
    } catch (const std::exception&) {
        throw ParseError(line, "bad number '" + s + "'");
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scene files. Text key/value; doubles use shortest round-trip formatting so
// load(save(s)) reproduces the scene bit for bit.
// ---------------------------------------------------------------------------

inline std::string scene_to_string(const Scene& scene) {
    std::ostringstream out;
    out << "declutter-scene v1\n";
    out << "grid " << scene.meta.width << " " << scene.meta.height << " " << format_double(scene.meta.cell_size)
        << " " << format_double(scene.meta.origin.x) << " " << format_double(scene.meta.origin.y) << "\n";
    out << "basket " << format_double(scene.basket.x) << " " << format_double(scene.basket.y) << "\n";
    out << "seed " << scene.rng_seed << "\n";
    out << "garments " << scene.stack.size() << "\n";
    for (const auto& g : scene.stack) {
        out << "garment " << g.id << "\n";
        out << "thickness " << format_double(g.thickness) << "\n";
        out << "pose " << format_double(g.pose.x) << " " << format_double(g.pose.y) << " "
            << format_double(g.pose.rotation) << " " << format_double(g.pose.scale) << "\n";
        out << "nominal " << g.nominal_area << "\n";
        if (g.uses_cells()) {
            out << "cells " << g.cells.size() << "\n";
            for (auto [x, y] : g.cells) out << "c " << x << " " << y << "\n";
        } else {
            out << "blob " << g.blob.polygon.size() << " " << g.blob.discs.size() << "\n";
            for (const auto& p : g.blob.polygon)
                out << "p " << format_double(p.x) << " " << format_double(p.y) << "\n";
            for (const auto& d : g.blob.discs)
                out << "d " << format_double(d.cx) << " " << format_double(d.cy) << " " << format_double(d.r)
                    << "\n";
        }
        out << "end\n";
    }
    return out.str();
}

inline Scene scene_from_stream(std::istream& in) {
    detail::LineReader rd(in);
    std::vector<std::string> t = rd.expect("declutter-scene", 1);
    if (t[1] != "v1") throw ParseError(rd.line_no(), "unsupported scene version " + t[1]);

    Scene scene;
    t = rd.expect("grid", 5);
    const int w = static_cast<int>(detail::num(t[1], rd.line_no()));
    const int h = static_cast<int>(detail::num(t[2], rd.line_no()));
    scene.meta = GridMeta(w, h, detail::num(t[3], rd.line_no()),
                          {detail::num(t[4], rd.line_no()), detail::num(t[5], rd.line_no())});
    t = rd.expect("basket", 2);
    scene.basket = {detail::num(t[1], rd.line_no()), detail::num(t[2], rd.line_no())};
    t = rd.expect("seed", 1);
    scene.rng_seed = std::stoull(t[1]);
    t = rd.expect("garments", 1);
    const std::size_t count = std::stoull(t[1]);

    for (std::size_t gi = 0; gi < count; ++gi) {
        Garment g;
        t = rd.expect("garment", 1);
        g.id = static_cast<int>(detail::num(t[1], rd.line_no()));
        t = rd.expect("thickness", 1);
        g.thickness = detail::num(t[1], rd.line_no());
        t = rd.expect("pose", 4);
        g.pose = {detail::num(t[1], rd.line_no()), detail::num(t[2], rd.line_no()),
                  detail::num(t[3], rd.line_no()), detail::num(t[4], rd.line_no())};
        t = rd.expect("nominal", 1);
        g.nominal_area = std::stoull(t[1]);
        if (!rd.next(t)) throw ParseError(rd.line_no(), "expected blob or cells");
        if (t[0] == "blob" && t.size() == 3) {
            const std::size_t np = std::stoull(t[1]), nd = std::stoull(t[2]);
            for (std::size_t i = 0; i < np; ++i) {
                t = rd.expect("p", 2);
                g.blob.polygon.push_back({detail::num(t[1], rd.line_no()), detail::num(t[2], rd.line_no())});
            }
            for (std::size_t i = 0; i < nd; ++i) {
                t = rd.expect("d", 3);
                g.blob.discs.push_back({detail::num(t[1], rd.line_no()), detail::num(t[2], rd.line_no()),
                                        detail::num(t[3], rd.line_no())});
            }
        } else if (t[0] == "cells" && t.size() == 2) {
            const std::size_t nc = std::stoull(t[1]);
            for (std::size_t i = 0; i < nc; ++i) {
                t = rd.expect("c", 2);
                g.cells.push_back({static_cast<int>(std::stol(t[1])), static_cast<int>(std::stol(t[2]))});
            }
        } else {
            throw ParseError(rd.line_no(), "expected 'blob <np> <nd>' or 'cells <n>'");
        }
        rd.expect("end", 0);
        g.posed = rasterize_garment(g, scene.meta);
        scene.stack.push_back(std::move(g));
    }
    return scene;
}

inline void save_scene(const Scene& scene, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << scene_to_string(scene);
}

inline Scene load_scene(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    return scene_from_stream(in);
}

// ---------------------------------------------------------------------------
// Set-cover instance files for the `solve` subcommand: n, m, q, dense
// probability rows, conflict pair list.
// ---------------------------------------------------------------------------

struct InstanceFile {
    ProbMatrix P;
    double q = 0.7;
    std::vector<std::pair<int, int>> conflicts;
};

inline std::string instance_to_string(const InstanceFile& inst) {
    std::ostringstream out;
    out << "setcover v1\n";
    out << "n " << inst.P.n << "\n";
    out << "m " << inst.P.m << "\n";
    out << "q " << format_double(inst.q) << "\n";
    for (std::size_t i = 0; i < inst.P.n; ++i) {
        out << "p";
        for (std::size_t j = 0; j < inst.P.m; ++j) out << " " << format_double(inst.P.at(i, j));
        out << "\n";
    }
    for (auto [i, j] : inst.conflicts) out << "conflict " << i << " " << j << "\n";
    return out.str();
}

inline InstanceFile instance_from_stream(std::istream& in) {
    detail::LineReader rd(in);
    std::vector<std::string> t = rd.expect("setcover", 1);
    if (t[1] != "v1") throw ParseError(rd.line_no(), "unsupported instance version " + t[1]);
    InstanceFile inst;
    t = rd.expect("n", 1);
    const std::size_t n = std::stoull(t[1]);
    t = rd.expect("m", 1);
    const std::size_t m = std::stoull(t[1]);
    t = rd.expect("q", 1);
    inst.q = detail::num(t[1], rd.line_no());
    inst.P = ProbMatrix(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        t = rd.expect("p", m);
        for (std::size_t j = 0; j < m; ++j) inst.P.at(i, j) = detail::num(t[1 + j], rd.line_no());
    }
    while (rd.next(t)) {
        if (t[0] != "conflict" || t.size() != 3) throw ParseError(rd.line_no(), "expected 'conflict i j'");
        inst.conflicts.push_back({static_cast<int>(std::stol(t[1])), static_cast<int>(std::stol(t[2]))});
    }
    return inst;
}

inline InstanceFile load_instance(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    return instance_from_stream(in);
}

// ---------------------------------------------------------------------------
// Config files: `key = value` lines, '#' comments.
// ---------------------------------------------------------------------------

inline Config config_from_stream(std::istream& in) {
    Config cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        auto t = detail::tokens_of(line);
        if (t.empty()) continue;
        if (t.size() < 3 || t[1] != "=") throw ParseError(line_no, "expected 'key = value'");
        std::string value = t[2];
        for (std::size_t i = 3; i < t.size(); ++i) value += t[i];  // allow spaces in lists
        try {
            cfg.set(t[0], value);
        } catch (const std::exception& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return cfg;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    return config_from_stream(in);
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace declutter
