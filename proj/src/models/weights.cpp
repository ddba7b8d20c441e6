#include "zoo/weights.hpp"

#include "zoo/error.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <set>

namespace zoo {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'Z', 'O', 'O', 'W'};

template <typename Sink>
void put_u8(Sink& sink, std::uint8_t v) {
    sink(&v, 1);
}

template <typename Sink>
void put_le(Sink& sink, std::uint64_t v, int bytes) {
    std::array<std::uint8_t, 8> buf{};
    for (int i = 0; i < bytes; ++i) buf[i] = static_cast<std::uint8_t>(v >> (8 * i));
    sink(buf.data(), static_cast<std::size_t>(bytes));
}

template <typename Sink>
void write_payload(Sink& sink, std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
        sink(reinterpret_cast<const std::uint8_t*>(values.data()), values.size() * sizeof(float));
    } else {
        std::vector<std::uint8_t> buf(values.size() * 4);
        for (std::size_t i = 0; i < values.size(); ++i) {
            const auto bits = std::bit_cast<std::uint32_t>(values[i]);
            for (int b = 0; b < 4; ++b) buf[i * 4 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
        }
        sink(buf.data(), buf.size());
    }
}

template <typename Sink>
void write_container(Sink& sink, const ParamTable& table) {
    sink(kMagic.data(), kMagic.size());
    put_le(sink, kWeightFormatVersion, 4);
    put_le(sink, table.size(), 4);
    for (const auto& [name, tensor] : table) {
        if (name.size() > 0xFFFF) throw ContainerError("tensor name too long: " + name.substr(0, 32), 0);
        put_le(sink, name.size(), 2);
        sink(reinterpret_cast<const std::uint8_t*>(name.data()), name.size());
        put_u8(sink, static_cast<std::uint8_t>(DType::F32));
        put_u8(sink, static_cast<std::uint8_t>(tensor.rank()));
        for (auto d : tensor.shape()) put_le(sink, static_cast<std::uint64_t>(d), 4);
        write_payload(sink, tensor.data());
    }
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint64_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    std::uint64_t le(int width, const std::string& what) {
        need(static_cast<std::size_t>(width), what);
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    std::span<const std::uint8_t> take(std::size_t n, const std::string& what) {
        need(n, what);
        auto out = bytes_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    void need(std::size_t n, const std::string& what) const {
        if (remaining() < n)
            throw ContainerError("truncated container: " + what + " needs " + std::to_string(n) + " bytes, " +
                                     std::to_string(remaining()) + " left",
                                 pos_);
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::vector<float> decode_payload(std::span<const std::uint8_t> raw) {
    std::vector<float> values(raw.size() / 4);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(values.data(), raw.data(), raw.size());
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(raw[i * 4 + b]) << (8 * b);
            values[i] = std::bit_cast<float>(bits);
        }
    }
    return values;
}

}  // namespace

std::vector<std::uint8_t> encode_weights(const ParamTable& table) {
    std::vector<std::uint8_t> out;
    auto sink = [&](const std::uint8_t* p, std::size_t n) { out.insert(out.end(), p, p + n); };
    write_container(sink, table);
    return out;
}

std::vector<std::pair<std::string, Tensor>> decode_weights_ordered(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
        throw ContainerError("bad magic, expected 'ZOOW'", 0);
    r.take(kMagic.size(), "magic");
    const auto version_at = r.offset();
    const auto version = r.le(4, "version");
    if (version != kWeightFormatVersion)
        throw ContainerError("unsupported container version " + std::to_string(version), version_at);
    const auto count = r.le(4, "tensor count");

    std::vector<std::pair<std::string, Tensor>> out;
    std::set<std::string, std::less<>> names;
    for (std::uint64_t t = 0; t < count; ++t) {
        const auto entry_at = r.offset();
        const auto name_len = r.le(2, "name length of tensor " + std::to_string(t));
        const auto name_bytes = r.take(name_len, "name of tensor " + std::to_string(t));
        std::string name(name_bytes.begin(), name_bytes.end());
        if (!names.insert(name).second) throw ContainerError("duplicate tensor name '" + name + "'", entry_at);

        const auto dtype_at = r.offset();
        const auto dtype = r.le(1, "dtype of tensor '" + name + "'");
        if (dtype != static_cast<std::uint8_t>(DType::F32))
            throw ContainerError("tensor '" + name + "' has unsupported dtype " + std::to_string(dtype), dtype_at);
        const auto rank_at = r.offset();
        const auto rank = r.le(1, "rank of tensor '" + name + "'");
        if (rank < 1 || rank > 4)
            throw ContainerError("tensor '" + name + "' has invalid rank " + std::to_string(rank), rank_at);
        Shape shape;
        std::uint64_t elements = 1;
        for (std::uint64_t a = 0; a < rank; ++a) {
            const auto dim_at = r.offset();
            const auto d = r.le(4, "dims of tensor '" + name + "'");
            if (d == 0) throw ContainerError("tensor '" + name + "' has a zero dimension", dim_at);
            shape.push_back(static_cast<std::int64_t>(d));
            elements = elements > UINT64_MAX / d ? UINT64_MAX : elements * d;
        }
        if (elements > r.remaining() / 4)
            throw ContainerError("truncated container: payload of tensor '" + name + "' needs " +
                                     std::to_string(elements) + " f32 values, " + std::to_string(r.remaining()) +
                                     " bytes left",
                                 r.offset());
        const auto raw = r.take(static_cast<std::size_t>(elements * 4), "payload of tensor '" + name + "'");
        out.emplace_back(name, Tensor(std::move(shape), decode_payload(raw)));
    }
    if (r.remaining() != 0) throw ContainerError("trailing bytes after last tensor", r.offset());
    return out;
}

ParamTable decode_weights(std::span<const std::uint8_t> bytes) {
    ParamTable table;
    for (auto& [name, tensor] : decode_weights_ordered(bytes)) table.emplace(std::move(name), std::move(tensor));
    return table;
}

void save_weights(const ParamTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    auto sink = [&](const std::uint8_t* p, std::size_t n) {
        out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
    };
    write_container(sink, table);
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::uint8_t> f32_to_le_bytes(std::span<const float> values) {
    std::vector<std::uint8_t> out;
    out.reserve(values.size() * 4);
    auto sink = [&](const std::uint8_t* p, std::size_t n) { out.insert(out.end(), p, p + n); };
    write_payload(sink, values);
    return out;
}

std::vector<float> f32_from_le_bytes(std::span<const std::uint8_t> bytes) { return decode_payload(bytes); }

ParamTable load_weights(const std::filesystem::path& path) { return decode_weights(read_file(path)); }

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot read " + path.string());
    const auto size = static_cast<std::size_t>(in.tellg());
    std::vector<std::uint8_t> bytes(size);
    in.seekg(0);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (!in) throw IoError("failed reading " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace zoo
