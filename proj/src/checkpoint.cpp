#include "torl/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace torl {

namespace {
constexpr char kMagic[5] = {'T', 'O', 'R', 'L', '1'};

static_assert(sizeof(float) == 4);

// All supported targets are little-endian; refuse to write otherwise.
bool host_is_little_endian() {
    const std::uint32_t probe = 1;
    return *reinterpret_cast<const std::uint8_t*>(&probe) == 1;
}
}  // namespace

void save_checkpoint(const ParameterStore<float>& params, const std::string& path) {
    if (!host_is_little_endian())
        throw std::runtime_error("checkpoint format requires a little-endian host");

    nlohmann::json header;
    header["entries"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, e] : params) {
        header["entries"].push_back({{"name", name},
                                     {"rows", e.value.rows()},
                                     {"cols", e.value.cols()},
                                     {"offset", offset}});
        offset += static_cast<std::uint64_t>(e.value.size()) * sizeof(float);
    }
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    const auto header_len = static_cast<std::uint32_t>(header_str.size());
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_str.data(), header_str.size());

    for (const auto& [name, e] : params) {
        Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = e.value;
        out.write(reinterpret_cast<const char*>(rm.data()),
                  static_cast<std::streamsize>(rm.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

ParameterStore<float> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

    char magic[5];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("not a TORL1 checkpoint: " + path);

    std::uint32_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    std::string header_str(header_len, '\0');
    in.read(header_str.data(), header_len);
    if (!in) throw std::runtime_error("truncated checkpoint header: " + path);

    const auto header = nlohmann::json::parse(header_str);
    const std::streampos data_start = in.tellg();

    ParameterStore<float> params;
    for (const auto& entry : header.at("entries")) {
        const std::string name = entry.at("name");
        const Eigen::Index rows = entry.at("rows");
        const Eigen::Index cols = entry.at("cols");
        const std::uint64_t offset = entry.at("offset");

        auto& e = params.add(name, rows, cols);
        Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
        in.seekg(data_start + static_cast<std::streamoff>(offset));
        in.read(reinterpret_cast<char*>(rm.data()),
                static_cast<std::streamsize>(rm.size() * sizeof(float)));
        if (!in) throw std::runtime_error("truncated checkpoint data: " + path);
        e.value = rm;
    }
    return params;
}

}  // namespace torl
