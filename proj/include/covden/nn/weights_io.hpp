#ifndef COVDEN_NN_WEIGHTS_IO_HPP
#define COVDEN_NN_WEIGHTS_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>

#include <boost/crc.hpp>

#include "covden/io.hpp"
#include "covden/nn/denoiser.hpp"

// Weights file layout (all integers little-endian):
//
//   "CDNWGT01"                 8-byte magic
//   u64 metadata length
//   metadata                   text, one "key=value" per line
//   f32 tensors                stem.w, stem.b, then conv1.w, conv1.b, conv2.w,
//                              conv2.b per block, then head.w, head.b; weights
//                              flattened as (out, in, ky, kx) row-major
//   u32 CRC-32                 of every preceding byte

namespace covden::nn {

inline constexpr char kWeightsMagic[8] = {'C', 'D', 'N', 'W', 'G', 'T', '0', '1'};
inline constexpr int kWeightsFormatVersion = 1;

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const std::string& in, std::size_t offset) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<T>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
    }
    return v;
}

inline std::uint32_t crc32(const char* data, std::size_t size) {
    boost::crc_32_type crc;
    crc.process_bytes(data, size);
    return crc.checksum();
}

inline std::string metadata_text(const DenoiserWeights& w) {
    const DenoiserConfig& c = w.config;
    std::ostringstream out;
    out << "format_version=" << kWeightsFormatVersion << "\n"
        << "input_size=" << c.input_size << "\n"
        << "num_blocks=" << c.num_blocks << "\n"
        << "num_filters=" << c.num_filters << "\n"
        << "kernel=" << c.kernel << "\n"
        << "learning_rate=" << io::format_double(c.learning_rate) << "\n"
        << "batch_size=" << c.batch_size << "\n"
        << "epochs=" << c.epochs << "\n"
        << "validation_fraction=" << io::format_double(c.validation_fraction) << "\n"
        << "seed=" << c.seed << "\n"
        << "mode=" << to_string(c.mode) << "\n"
        << "normalizer=" << io::format_double(w.normalizer) << "\n";
    return out.str();
}

}  // namespace detail

inline std::string serialize_weights(const DenoiserWeights& w) {
    std::string out(kWeightsMagic, sizeof kWeightsMagic);
    const std::string meta = detail::metadata_text(w);
    detail::put_le<std::uint64_t>(out, meta.size());
    out += meta;
    auto put_values = [&](const double* data, Index n) {
        for (Index i = 0; i < n; ++i) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(data[i])));
    };
    for (const ConvLayer* layer : w.layers()) {
        put_values(layer->weight.data(), layer->weight.size());
        put_values(layer->bias.data(), layer->bias.size());
    }
    detail::put_le<std::uint32_t>(out, detail::crc32(out.data(), out.size()));
    return out;
}

inline DenoiserWeights deserialize_weights(const std::string& bytes) {
    constexpr std::size_t header = sizeof kWeightsMagic + 8;
    if (bytes.size() < header + 4) throw FormatError("weights file is truncated");
    if (std::memcmp(bytes.data(), kWeightsMagic, 6) != 0) throw FormatError("not a weights file (bad magic)");
    if (std::memcmp(bytes.data(), kWeightsMagic, sizeof kWeightsMagic) != 0) {
        throw FormatError("unsupported weights format version '" + bytes.substr(6, 2) + "'");
    }
    const std::size_t body = bytes.size() - 4;
    if (detail::crc32(bytes.data(), body) != detail::get_le<std::uint32_t>(bytes, body)) {
        throw FormatError("weights file checksum mismatch (corrupt or truncated)");
    }

    const auto meta_len = detail::get_le<std::uint64_t>(bytes, sizeof kWeightsMagic);
    if (meta_len > body - header) throw FormatError("weights metadata length exceeds file size");
    std::map<std::string, std::string> meta;
    std::istringstream lines(bytes.substr(header, meta_len));
    std::string line;
    while (std::getline(lines, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("malformed metadata line '" + line + "'");
        meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto field = [&](const char* key) -> const std::string& {
        const auto it = meta.find(key);
        if (it == meta.end()) throw FormatError(std::string("weights metadata lacks '") + key + "'");
        return it->second;
    };
    if (field("format_version") != std::to_string(kWeightsFormatVersion)) {
        throw FormatError("unsupported weights format version " + field("format_version"));
    }

    DenoiserConfig c;
    try {
        c.input_size = std::stoll(field("input_size"));
        c.num_blocks = std::stoll(field("num_blocks"));
        c.num_filters = std::stoll(field("num_filters"));
        c.kernel = std::stoll(field("kernel"));
        c.learning_rate = io::parse_double(field("learning_rate"));
        c.batch_size = std::stoll(field("batch_size"));
        c.epochs = std::stoll(field("epochs"));
        c.validation_fraction = io::parse_double(field("validation_fraction"));
        c.seed = std::stoull(field("seed"));
        c.mode = parse_denoiser_mode(field("mode"));
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception& e) {
        throw FormatError(std::string("invalid weights metadata: ") + e.what());
    }

    DenoiserWeights w = DenoiserWeights::zeros(c);
    w.normalizer = io::parse_double(field("normalizer"));
    std::size_t offset = header + meta_len;
    auto take_values = [&](double* data, Index n) {
        if (offset + 4 * static_cast<std::size_t>(n) > body) throw FormatError("weights tensors are truncated");
        for (Index i = 0; i < n; ++i) {
            data[i] = static_cast<double>(std::bit_cast<float>(detail::get_le<std::uint32_t>(bytes, offset)));
            offset += 4;
        }
    };
    for (ConvLayer* layer : w.layers()) {
        take_values(layer->weight.data(), layer->weight.size());
        take_values(layer->bias.data(), layer->bias.size());
    }
    if (offset != body) throw FormatError("weights file has trailing bytes");
    if (!w.all_finite()) throw FormatError("weights file contains non-finite values");
    return w;
}

inline void save_weights(const DenoiserWeights& w, const std::filesystem::path& path) {
    io::write_atomic(path, serialize_weights(w));
}

inline DenoiserWeights load_weights(const std::filesystem::path& path) { return deserialize_weights(io::read_file(path)); }

}  // namespace covden::nn

#endif  // COVDEN_NN_WEIGHTS_IO_HPP
