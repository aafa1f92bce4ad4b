#include "hnls/checkpoint.hpp"

#include "hnls/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hnls {

namespace {

using nlohmann::json;

void put_le(std::string& out, double x) {
    auto bits = std::bit_cast<std::uint64_t>(x);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

double get_le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t(p[b]) << (8 * b);
    return std::bit_cast<double>(bits);
}

json grid_json(const Field& f) {
    if (f.is_radial()) {
        const auto& g = f.radial_grid();
        return {{"nodes", g.size()}, {"s_min", g.s_min()}, {"r_max", g.r_max()}};
    }
    const auto& g = f.cartesian_grid();
    return {{"points", g.points_per_axis()}, {"half_width", g.half_width()}};
}

template <class T>
T field_of(const json& j, const char* key) {
    if (!j.contains(key)) fail(ErrorKind::Format, std::string("checkpoint header lacks '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorKind::Format, std::string("checkpoint header key '") + key + "' has the wrong type");
    }
}

} // namespace

std::string encode_checkpoint(const Field& f, const json& meta) {
    const json header = {{"format_version", kCheckpointFormatVersion},
                         {"tag", f.tag()},
                         {"d", f.dimension()},
                         {"c", f.coupling()},
                         {"grid", grid_json(f)},
                         {"count", f.size()},
                         {"post_blowup", f.post_blowup()},
                         {"meta", meta.is_null() ? json::object() : meta}};
    std::string out = header.dump();
    out.push_back('\n');
    out.reserve(out.size() + 16 * f.size());
    for (const auto& v : f.values()) {
        put_le(out, v.real());
        put_le(out, v.imag());
    }
    return out;
}

LoadedCheckpoint decode_checkpoint(std::string_view bytes) {
    const auto nl = bytes.find('\n');
    if (nl == std::string_view::npos) fail(ErrorKind::Format, "checkpoint has no header line");
    json h;
    try {
        h = json::parse(bytes.substr(0, nl));
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, std::string("checkpoint header is not JSON: ") + e.what());
    }
    if (!h.is_object()) fail(ErrorKind::Format, "checkpoint header is not a JSON object");
    const int version = field_of<int>(h, "format_version");
    if (version != kCheckpointFormatVersion)
        fail(ErrorKind::Format, "unsupported checkpoint format_version " + std::to_string(version));
    const auto tag = field_of<std::string>(h, "tag");
    const int d = field_of<int>(h, "d");
    const double c = field_of<double>(h, "c");
    const auto count = field_of<std::size_t>(h, "count");
    const json grid = field_of<json>(h, "grid");

    GridHandle handle;
    if (tag == "radial") {
        handle = RadialGrid::make_log(d, c, field_of<std::size_t>(grid, "nodes"), field_of<double>(grid, "s_min"),
                                      field_of<double>(grid, "r_max"));
    } else if (tag == "cartesian") {
        handle = CartesianGrid::make(d, field_of<int>(grid, "points"), field_of<double>(grid, "half_width"), c);
    } else {
        fail(ErrorKind::Format, "unknown checkpoint tag '" + tag + "'");
    }

    const auto body = bytes.substr(nl + 1);
    if (body.size() != 16 * count)
        fail(ErrorKind::Format, "checkpoint body holds " + std::to_string(body.size()) + " bytes, expected " +
                                    std::to_string(16 * count));
    std::vector<cplx> values(count);
    const auto* p = reinterpret_cast<const unsigned char*>(body.data());
    for (std::size_t i = 0; i < count; ++i) values[i] = cplx(get_le(p + 16 * i), get_le(p + 16 * i + 8));
    const bool post = h.contains("post_blowup") ? field_of<bool>(h, "post_blowup") : false;
    Field f(handle, std::move(values), post);
    json meta = h.contains("meta") ? h["meta"] : json::object();
    return {std::move(f), std::move(meta)};
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) fail(ErrorKind::Io, "read error on " + path.string());
    return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    auto tmp = path;
    tmp += ".tmp";
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot create " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) fail(ErrorKind::Io, "write error on " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail(ErrorKind::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

void write_checkpoint(const std::filesystem::path& path, const Field& f, const json& meta) {
    write_file_atomic(path, encode_checkpoint(f, meta));
}

LoadedCheckpoint read_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

} // namespace hnls
