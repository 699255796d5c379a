#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "volinfo/density_grid.hpp"
#include "volinfo/heston_transforms.hpp"

namespace volinfo {

using Json = nlohmann::ordered_json;

// Shortest decimal representation that round-trips.
std::string format_double(double v);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Short stable hash of the parameter values.
std::string fingerprint(const HestonParams& params);

Json to_json(const HestonParams& params);
Json to_json(const Axis& axis);

// Metadata block embedded in every sidecar.
Json provenance(const HestonParams& params, std::uint64_t seed);

void write_text(const std::filesystem::path& path, std::string_view content);
void write_json(const std::filesystem::path& path, const Json& doc);

// Writes <stem>.csv and <stem>.json.
void export_density(const DensityGrid1D& grid, const std::string& axis_name,
                    const std::filesystem::path& stem, const Json& metadata);
void export_density(const DensityGrid2D& grid, const std::string& x_name,
                    const std::string& v_name, const std::filesystem::path& stem,
                    const Json& metadata);

}  // namespace volinfo
