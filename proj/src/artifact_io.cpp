#include "volinfo/artifact_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "volinfo/errors.hpp"
#include "volinfo/version.hpp"

namespace volinfo {

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

namespace {

std::string to_hex(const unsigned char* data, unsigned len) {
    std::ostringstream os;
    for (unsigned i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(data[i]);
    return os.str();
}

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
            throw Error("sha256: digest initialisation failed");
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(const void* data, std::size_t len) {
        if (EVP_DigestUpdate(ctx_, data, len) != 1) throw Error("sha256: update failed");
    }
    std::string hex() {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned len = 0;
        if (EVP_DigestFinal_ex(ctx_, md, &len) != 1) throw Error("sha256: final failed");
        return to_hex(md, len);
    }

private:
    EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view data) {
    Sha256 h;
    h.update(data.data(), data.size());
    return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    Sha256 h;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

std::string fingerprint(const HestonParams& params) {
    return sha256_hex(params.describe()).substr(0, 16);
}

Json to_json(const HestonParams& params) {
    Json j;
    j["gamma"] = params.gamma;
    j["theta"] = params.theta;
    j["kappa"] = params.kappa;
    j["rho"] = params.rho;
    j["mu"] = params.mu;
    j["feller_alpha"] = params.feller_alpha();
    j["feller_satisfied"] = params.feller_satisfied();
    return j;
}

Json to_json(const Axis& axis) {
    Json j;
    switch (axis.spacing) {
    case Axis::Spacing::Uniform: j["spacing"] = "uniform"; break;
    case Axis::Spacing::Geometric: j["spacing"] = "geometric"; break;
    case Axis::Spacing::Lattice: j["spacing"] = "lattice"; break;
    }
    j["n"] = axis.size();
    j["min"] = axis.nodes.empty() ? 0.0 : axis.front();
    j["max"] = axis.nodes.empty() ? 0.0 : axis.back();
    return j;
}

Json provenance(const HestonParams& params, std::uint64_t seed) {
    Json j;
    j["version"] = kVersion;
    j["fingerprint"] = fingerprint(params);
    j["seed"] = seed;
    j["params"] = to_json(params);
    return j;
}

void write_text(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InputError("write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const Json& doc) {
    write_text(path, doc.dump(2) + "\n");
}

void export_density(const DensityGrid1D& grid, const std::string& axis_name,
                    const std::filesystem::path& stem, const Json& metadata) {
    std::filesystem::path csv = stem;
    csv += ".csv";
    std::filesystem::path js = stem;
    js += ".json";
    write_text(csv, to_csv(grid, axis_name));
    Json doc = metadata;
    doc["axis"] = to_json(grid.axis);
    doc["mass"] = grid.mass;
    doc["clipped_mass"] = grid.clipped_mass;
    doc["mass_tolerance"] = grid.mass_tolerance;
    write_json(js, doc);
}

void export_density(const DensityGrid2D& grid, const std::string& x_name,
                    const std::string& v_name, const std::filesystem::path& stem,
                    const Json& metadata) {
    std::filesystem::path csv = stem;
    csv += ".csv";
    std::filesystem::path js = stem;
    js += ".json";
    write_text(csv, to_csv(grid, x_name, v_name));
    Json doc = metadata;
    doc["x_axis"] = to_json(grid.x_axis);
    doc["v_axis"] = to_json(grid.v_axis);
    doc["mass"] = grid.mass;
    doc["clipped_mass"] = grid.clipped_mass;
    doc["mass_tolerance"] = grid.mass_tolerance;
    write_json(js, doc);
}

}  // namespace volinfo
