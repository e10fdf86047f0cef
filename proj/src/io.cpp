#include "dgreg/io.hpp"

#include "dgreg/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dgreg {

using nlohmann::json;

namespace {

json load_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void save_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw ConfigError("write failed for " + path.string());
    }
}

std::uint64_t to_little(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) {
            r = (r << 8) | ((v >> (8 * i)) & 0xffu);
        }
        return r;
    }
    return v;
}

void write_raw(const fs::path& path, std::span<const double> values) {
    std::vector<std::uint64_t> buf(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        buf[i] = to_little(std::bit_cast<std::uint64_t>(values[i]));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
    if (!out) {
        throw ConfigError("write failed for " + path.string());
    }
}

std::vector<double> read_raw(const fs::path& path, std::size_t count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    std::vector<std::uint64_t> buf(count);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * 8));
    if (static_cast<std::size_t>(in.gcount()) != count * 8 || in.peek() != std::char_traits<char>::eof()) {
        throw ConfigError(path.string() + ": expected exactly " + std::to_string(count) + " float64 values");
    }
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = std::bit_cast<double>(to_little(buf[i]));
    }
    return out;
}

fs::path raw_path(const fs::path& header) {
    fs::path p = header;
    p.replace_extension(".raw");
    return p;
}

std::vector<int> get_dims(const json& h, const char* key, const fs::path& where) {
    if (!h.contains(key) || !h[key].is_array()) {
        throw ConfigError(where.string() + ": missing '" + key + "'");
    }
    std::vector<int> dims;
    for (const auto& v : h[key]) {
        if (!v.is_number_integer() || v.get<long>() < 1) {
            throw ConfigError(where.string() + ": extents must be positive integers");
        }
        dims.push_back(v.get<int>());
    }
    if (dims.size() != 2 && dims.size() != 3) {
        throw ConfigError(where.string() + ": need 2 or 3 extents");
    }
    return dims;
}

void require(const json& h, const char* key, const std::string& value, const fs::path& where) {
    if (!h.contains(key) || !h[key].is_string() || h[key].get<std::string>() != value) {
        throw ConfigError(where.string() + ": expected " + key + " = \"" + value + "\"");
    }
}

fs::path data_path(const json& h, const fs::path& header) {
    if (!h.contains("data") || !h["data"].is_string()) {
        throw ConfigError(header.string() + ": missing 'data'");
    }
    return header.parent_path() / h["data"].get<std::string>();
}

json field_header(const char* kind, const MeshPtr& mesh, std::size_t count, const fs::path& header) {
    json h;
    h["format"] = "dgreg-field";
    h["version"] = 1;
    h["kind"] = kind;
    std::vector<int> dims(mesh->dims().begin(), mesh->dims().begin() + mesh->dim());
    h["dims"] = dims;
    h["count"] = count;
    h["dtype"] = "float64";
    h["byte_order"] = "little";
    h["data"] = raw_path(header).filename().string();
    return h;
}

void check_field_mesh(const json& h, const MeshPtr& mesh, const fs::path& header) {
    const auto dims = get_dims(h, "dims", header);
    std::vector<int> md(mesh->dims().begin(), mesh->dims().begin() + mesh->dim());
    if (dims != md) {
        throw ConfigError(header.string() + ": field extents do not match the mesh");
    }
}

template <typename T>
T parse_number(std::string_view tok, const fs::path& where) {
    T v{};
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        throw ConfigError(where.string() + ": bad number '" + std::string(tok) + "'");
    }
    return v;
}

} // namespace

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

void write_image(const fs::path& header, const ImageVolume& image) {
    image.validate();
    json h;
    h["format"] = "dgreg-image";
    h["version"] = 1;
    h["dims"] = image.extents();
    h["dtype"] = "float64";
    h["byte_order"] = "little";
    h["axis_order"] = "x-fastest";
    h["spacing"] = 1.0;
    std::vector<int> off(image.offset.begin(), image.offset.begin() + image.dim);
    h["offset"] = off;
    h["data"] = raw_path(header).filename().string();
    save_text(header, h.dump(2) + "\n");
    write_raw(raw_path(header), image.values);
}

ImageVolume read_image(const fs::path& header) {
    const json h = load_json(header);
    require(h, "format", "dgreg-image", header);
    require(h, "dtype", "float64", header);
    require(h, "byte_order", "little", header);
    const auto dims = get_dims(h, "dims", header);
    ImageVolume img(dims);
    if (h.contains("offset")) {
        const auto& off = h["offset"];
        if (!off.is_array() || off.size() != dims.size()) {
            throw ConfigError(header.string() + ": bad 'offset'");
        }
        for (std::size_t a = 0; a < off.size(); ++a) {
            img.offset[a] = off[a].get<int>();
        }
    }
    img.values = read_raw(data_path(h, header), img.size());
    try {
        img.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(header.string() + ": " + e.what());
    }
    return img;
}

void write_pgm(const fs::path& path, const ImageVolume& image, double lo, double hi) {
    if (image.dim != 2) {
        throw InvalidArgument("PGM export needs a 2D image");
    }
    if (!(hi > lo)) {
        throw InvalidArgument("PGM export needs hi > lo");
    }
    std::ostringstream s;
    s << "P5\n" << image.dims[0] << ' ' << image.dims[1] << "\n65535\n";
    std::string data;
    data.reserve(image.size() * 2);
    for (int j = 0; j < image.dims[1]; ++j) {
        for (int i = 0; i < image.dims[0]; ++i) {
            const double t = std::clamp((image.at(i, j) - lo) / (hi - lo), 0.0, 1.0);
            const auto v = static_cast<unsigned>(std::lround(t * 65535.0));
            data.push_back(static_cast<char>((v >> 8) & 0xffu));
            data.push_back(static_cast<char>(v & 0xffu));
        }
    }
    save_text(path, s.str() + data);
}

ImageVolume read_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    auto token = [&]() {
        std::string t;
        char c;
        while (in.get(c)) {
            if (c == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!t.empty()) {
                    break;
                }
                continue;
            }
            t.push_back(c);
        }
        return t;
    };
    if (token() != "P5") {
        throw ConfigError(path.string() + ": not a binary PGM");
    }
    const int w = parse_number<int>(token(), path);
    const int h = parse_number<int>(token(), path);
    const int maxval = parse_number<int>(token(), path);
    if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) {
        throw ConfigError(path.string() + ": bad PGM header");
    }
    const int bytes = maxval > 255 ? 2 : 1;
    const int dims[2] = {w, h};
    ImageVolume img(dims);
    std::vector<unsigned char> buf(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(bytes));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
        throw ConfigError(path.string() + ": truncated PGM data");
    }
    for (std::size_t i = 0; i < img.size(); ++i) {
        const unsigned v = bytes == 2 ? (static_cast<unsigned>(buf[2 * i]) << 8) | buf[2 * i + 1] : buf[i];
        img.values[i] = static_cast<double>(v) / maxval;
    }
    return img;
}

void write_field(const fs::path& header, const DgScalarField& field) {
    json h = field_header("dg-scalar", field.mesh, field.size(), header);
    h["ordering"] = "cell-major";
    save_text(header, h.dump(2) + "\n");
    write_raw(raw_path(header), field.coefficients);
}

void write_field(const fs::path& header, const CgVectorField& field) {
    json h = field_header("cg-vector", field.mesh, field.values.size(), header);
    h["ordering"] = "vertex-major-interleaved";
    h["components"] = field.mesh->dim();
    h["dirichlet_zero"] = field.dirichlet_zero;
    save_text(header, h.dump(2) + "\n");
    write_raw(raw_path(header), field.values);
}

std::vector<int> read_field_dims(const fs::path& header) {
    const json h = load_json(header);
    require(h, "format", "dgreg-field", header);
    return get_dims(h, "dims", header);
}

DgScalarField read_dg_field(const fs::path& header, const MeshPtr& mesh) {
    const json h = load_json(header);
    require(h, "format", "dgreg-field", header);
    require(h, "kind", "dg-scalar", header);
    check_field_mesh(h, mesh, header);
    const auto n = static_cast<std::size_t>(mesh->num_cells() * mesh->vertices_per_cell());
    return DgScalarField(mesh, read_raw(data_path(h, header), n));
}

CgVectorField read_cg_field(const fs::path& header, const MeshPtr& mesh) {
    const json h = load_json(header);
    require(h, "format", "dgreg-field", header);
    require(h, "kind", "cg-vector", header);
    check_field_mesh(h, mesh, header);
    const auto n = static_cast<std::size_t>(mesh->num_vertices() * mesh->dim());
    const bool zero = h.value("dirichlet_zero", false);
    CgVectorField f(mesh, read_raw(data_path(h, header), n), false);
    f.dirichlet_zero = zero;
    if (zero) {
        try {
            f.check_boundary();
        } catch (const InvalidArgument& e) {
            throw ConfigError(header.string() + ": " + e.what());
        }
    }
    return f;
}

void write_mesh(const fs::path& path, const SimplicialMesh& mesh) {
    mesh.validate();
    const int d = mesh.dim;
    std::string s = "dgreg-mesh 1\ndim " + std::to_string(d) + "\ncounts " + std::to_string(mesh.vertices.size()) +
                    ' ' + std::to_string(mesh.cells.size()) + ' ' + std::to_string(mesh.boundary.size()) +
                    "\nvertices\n";
    for (const Vec3& p : mesh.vertices) {
        for (int a = 0; a < d; ++a) {
            s += (a ? " " : "") + format_double(p[static_cast<std::size_t>(a)]);
        }
        s += '\n';
    }
    s += "cells\n";
    for (const auto& c : mesh.cells) {
        for (int k = 0; k <= d; ++k) {
            s += (k ? " " : "") + std::to_string(c[static_cast<std::size_t>(k)]);
        }
        s += '\n';
    }
    s += "boundary\n";
    for (const auto& f : mesh.boundary) {
        for (int k = 0; k < d; ++k) {
            s += (k ? " " : "") + std::to_string(f[static_cast<std::size_t>(k)]);
        }
        s += '\n';
    }
    save_text(path, s);
}

SimplicialMesh read_mesh(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    std::string line;
    auto next = [&]() {
        if (!std::getline(in, line)) {
            throw ConfigError(path.string() + ": unexpected end of mesh file");
        }
        return line;
    };
    auto split = [](const std::string& l) {
        std::vector<std::string> t;
        std::istringstream is(l);
        std::string w;
        while (is >> w) {
            t.push_back(w);
        }
        return t;
    };
    if (next() != "dgreg-mesh 1") {
        throw ConfigError(path.string() + ": missing 'dgreg-mesh 1' header");
    }
    auto dl = split(next());
    if (dl.size() != 2 || dl[0] != "dim") {
        throw ConfigError(path.string() + ": expected 'dim d'");
    }
    SimplicialMesh m;
    m.dim = parse_number<int>(dl[1], path);
    if (m.dim != 2 && m.dim != 3) {
        throw ConfigError(path.string() + ": dim must be 2 or 3");
    }
    auto cl = split(next());
    if (cl.size() != 4 || cl[0] != "counts") {
        throw ConfigError(path.string() + ": expected 'counts nv nc nb'");
    }
    const auto nv = parse_number<std::size_t>(cl[1], path);
    const auto nc = parse_number<std::size_t>(cl[2], path);
    const auto nb = parse_number<std::size_t>(cl[3], path);
    const auto d = static_cast<std::size_t>(m.dim);
    if (next() != "vertices") {
        throw ConfigError(path.string() + ": expected 'vertices'");
    }
    for (std::size_t i = 0; i < nv; ++i) {
        const auto t = split(next());
        if (t.size() != d) {
            throw ConfigError(path.string() + ": vertex line needs " + std::to_string(d) + " numbers");
        }
        Vec3 p{0.0, 0.0, 0.0};
        for (std::size_t a = 0; a < d; ++a) {
            p[a] = parse_number<double>(t[a], path);
        }
        m.vertices.push_back(p);
    }
    if (next() != "cells") {
        throw ConfigError(path.string() + ": expected 'cells'");
    }
    for (std::size_t i = 0; i < nc; ++i) {
        const auto t = split(next());
        if (t.size() != d + 1) {
            throw ConfigError(path.string() + ": cell line needs " + std::to_string(d + 1) + " indices");
        }
        std::array<Index, 4> c{-1, -1, -1, -1};
        for (std::size_t k = 0; k <= d; ++k) {
            c[k] = parse_number<Index>(t[k], path);
        }
        m.cells.push_back(c);
    }
    if (next() != "boundary") {
        throw ConfigError(path.string() + ": expected 'boundary'");
    }
    for (std::size_t i = 0; i < nb; ++i) {
        const auto t = split(next());
        if (t.size() != d) {
            throw ConfigError(path.string() + ": boundary line needs " + std::to_string(d) + " indices");
        }
        std::array<Index, 3> f{-1, -1, -1};
        for (std::size_t k = 0; k < d; ++k) {
            f[k] = parse_number<Index>(t[k], path);
        }
        m.boundary.push_back(f);
    }
    try {
        m.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return m;
}

void write_vtk(const fs::path& path, const SimplicialMesh& mesh, const std::vector<double>& cell_scalars,
               const std::string& scalar_name) {
    mesh.validate();
    const int d = mesh.dim;
    std::string s = "# vtk DataFile Version 3.0\ndgreg mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    s += "POINTS " + std::to_string(mesh.vertices.size()) + " double\n";
    for (const Vec3& p : mesh.vertices) {
        s += format_double(p[0]) + ' ' + format_double(p[1]) + ' ' + format_double(d == 3 ? p[2] : 0.0) + '\n';
    }
    s += "CELLS " + std::to_string(mesh.cells.size()) + ' ' + std::to_string(mesh.cells.size() * static_cast<std::size_t>(d + 2)) + '\n';
    for (const auto& c : mesh.cells) {
        s += std::to_string(d + 1);
        for (int k = 0; k <= d; ++k) {
            s += ' ' + std::to_string(c[static_cast<std::size_t>(k)]);
        }
        s += '\n';
    }
    s += "CELL_TYPES " + std::to_string(mesh.cells.size()) + '\n';
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
        s += d == 2 ? "5\n" : "10\n";
    }
    if (!cell_scalars.empty()) {
        if (cell_scalars.size() != mesh.cells.size()) {
            throw InvalidArgument("VTK export: one scalar per cell required");
        }
        s += "CELL_DATA " + std::to_string(mesh.cells.size()) + "\nSCALARS " + scalar_name + " double 1\nLOOKUP_TABLE default\n";
        for (double v : cell_scalars) {
            s += format_double(v) + '\n';
        }
    }
    save_text(path, s);
}

void write_affine(const fs::path& path, const AffineMap& map) {
    const auto h = map.to_homogeneous();
    const auto n = static_cast<std::size_t>(map.dim) + 1;
    json rows = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        rows.push_back(std::vector<double>(h.begin() + static_cast<long>(i * n), h.begin() + static_cast<long>((i + 1) * n)));
    }
    save_text(path, rows.dump() + "\n");
}

AffineMap read_affine(const fs::path& path) {
    const json j = load_json(path);
    if (!j.is_array() || (j.size() != 3 && j.size() != 4)) {
        throw ConfigError(path.string() + ": affine must be a 3x3 or 4x4 array of rows");
    }
    const std::size_t n = j.size();
    std::vector<double> flat;
    for (const auto& row : j) {
        if (!row.is_array() || row.size() != n) {
            throw ConfigError(path.string() + ": affine rows must have " + std::to_string(n) + " entries");
        }
        for (const auto& v : row) {
            if (!v.is_number()) {
                throw ConfigError(path.string() + ": affine entries must be numbers");
            }
            flat.push_back(v.get<double>());
        }
    }
    try {
        return AffineMap::from_homogeneous(static_cast<int>(n) - 1, flat);
    } catch (const InvalidArgument& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string trace_csv(const std::vector<TraceRow>& rows) {
    std::string s = "stage,iteration,objective,mismatch,regularizer,l2,grad_norm,step\n";
    for (const TraceRow& r : rows) {
        s += std::to_string(r.stage) + ',' + std::to_string(r.iteration) + ',' + format_double(r.objective) + ',' +
             format_double(r.mismatch) + ',' + format_double(r.regularizer) + ',' + format_double(r.l2) + ',' +
             format_double(r.grad_norm) + ',' + format_double(r.step) + '\n';
    }
    return s;
}

void write_trace_csv(const fs::path& path, const std::vector<TraceRow>& rows) { save_text(path, trace_csv(rows)); }

void write_quality_json(const fs::path& path, const TransformResult& result) {
    auto report = [](const QualityReport& q) {
        json j;
        j["min_radius_ratio"] = q.min_ratio;
        j["mean_radius_ratio"] = q.mean_ratio;
        j["roughness"] = q.roughness;
        j["nonpositive_cells"] = q.inverted.size();
        return j;
    };
    json j;
    j["before"] = report(result.before);
    j["after"] = report(result.after);
    j["inverted_cells"] = result.inverted;
    j["clamped_vertices"] = result.clamped;
    save_text(path, j.dump(2) + "\n");
}

} // namespace dgreg
