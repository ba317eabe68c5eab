#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "cpi/correlation.hpp"
#include "cpi/errors.hpp"
#include "cpi/image.hpp"
#include "cpi/scenario.hpp"
#include "cpi/speckle.hpp"

namespace cpi {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace detail {

template <class T>
void write_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_raw(std::istream& in, const char* what) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError(std::string("unexpected end of file reading ") + what);
    return v;
}

inline void write_grid(std::ostream& out, const SampledGrid& g) {
    write_raw<std::uint64_t>(out, g.n);
    write_raw<double>(out, g.spacing);
    write_raw<double>(out, g.offset);
}

inline SampledGrid read_grid(std::istream& in, const char* what) {
    const auto n = read_raw<std::uint64_t>(in, what);
    const auto spacing = read_raw<double>(in, what);
    const auto offset = read_raw<double>(in, what);
    if (n < 2 || !(spacing > 0.0)) throw IoError(std::string("corrupt grid in ") + what);
    return SampledGrid(static_cast<std::size_t>(n), spacing, offset);
}

inline void write_scenario_blob(std::ostream& out, const ScenarioConfig& cfg) {
    const std::string text = serialize_scenario(cfg);
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

inline ScenarioConfig read_scenario_blob(std::istream& in, const char* what) {
    const auto len = read_raw<std::uint32_t>(in, what);
    if (len > (1u << 20)) throw IoError(std::string("unreasonable scenario block in ") + what);
    std::string text(len, '\0');
    in.read(text.data(), len);
    if (!in) throw IoError(std::string("unexpected end of file reading ") + what);
    std::istringstream ss(text);
    return parse_scenario(ss);
}

}  // namespace detail

// --- correlation tensor: self-describing binary grid ---

inline constexpr char tensor_magic[8] = {'C', 'P', 'I', 'G', 'R', 'D', '1', '\0'};
inline constexpr std::uint32_t tensor_format_version = 1;

inline void save_tensor(const CorrelationTensor& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write tensor file: " + path);
    out.write(tensor_magic, sizeof(tensor_magic));
    detail::write_raw<std::uint32_t>(out, tensor_format_version);
    detail::write_raw<std::uint32_t>(out, t.provenance == Provenance::analytic ? 0u : 1u);
    detail::write_grid(out, t.grid_a);
    detail::write_grid(out, t.grid_b);
    detail::write_scenario_blob(out, t.scenario);
    const auto bytes = t.values.size() * sizeof(double);
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(bytes));
    detail::write_raw<std::uint64_t>(out, fnv1a64(t.values.data(), bytes));
    if (!out) throw IoError("failed while writing tensor file: " + path);
}

inline CorrelationTensor load_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open tensor file: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, tensor_magic, sizeof(magic)) != 0) {
        throw IoError("not a correlation tensor file: " + path);
    }
    const auto version = detail::read_raw<std::uint32_t>(in, "tensor header");
    if (version != tensor_format_version) {
        throw IoError("unsupported tensor format version " + std::to_string(version) + " in " + path);
    }
    const auto prov = detail::read_raw<std::uint32_t>(in, "tensor header");
    CorrelationTensor t;
    t.provenance = prov == 0 ? Provenance::analytic : Provenance::monte_carlo;
    t.grid_a = detail::read_grid(in, "tensor grid_a");
    t.grid_b = detail::read_grid(in, "tensor grid_b");
    t.scenario = detail::read_scenario_blob(in, "tensor scenario");
    t.values.resize(t.grid_a.n * t.grid_b.n);
    const auto bytes = t.values.size() * sizeof(double);
    in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw IoError("tensor payload truncated: " + path);
    const auto stored = detail::read_raw<std::uint64_t>(in, "tensor checksum");
    if (stored != fnv1a64(t.values.data(), bytes)) {
        throw IoError("tensor checksum mismatch (corrupt file): " + path);
    }
    return t;
}

// --- frame stacks: chunked binary with an index for streaming re-reads ---

inline constexpr char stack_magic[8] = {'C', 'P', 'I', 'F', 'S', 'K', '1', '\0'};
inline constexpr std::uint32_t stack_format_version = 1;
inline constexpr std::size_t stack_chunk_frames = 256;

inline void save_frame_stack(const FrameStack& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write frame stack: " + path);
    out.write(stack_magic, sizeof(stack_magic));
    detail::write_raw<std::uint32_t>(out, stack_format_version);
    detail::write_raw<std::uint32_t>(out, 0u);
    detail::write_raw<std::uint64_t>(out, s.seed);
    detail::write_raw<std::uint64_t>(out, s.n_frames);
    detail::write_raw<std::uint64_t>(out, stack_chunk_frames);
    detail::write_grid(out, s.grid_a);
    detail::write_grid(out, s.grid_b);
    detail::write_scenario_blob(out, s.scenario);

    const std::size_t px = s.grid_a.n + s.grid_b.n;
    const std::size_t n_chunks = (s.n_frames + stack_chunk_frames - 1) / stack_chunk_frames;
    detail::write_raw<std::uint64_t>(out, n_chunks);
    const auto index_pos = out.tellp();
    for (std::size_t c = 0; c < n_chunks; ++c) detail::write_raw<std::uint64_t>(out, 0);

    std::vector<std::uint64_t> offsets(n_chunks);
    std::vector<float> buf;
    for (std::size_t c = 0; c < n_chunks; ++c) {
        offsets[c] = static_cast<std::uint64_t>(out.tellp());
        const std::size_t f0 = c * stack_chunk_frames;
        const std::size_t f1 = std::min(s.n_frames, f0 + stack_chunk_frames);
        detail::write_raw<std::uint64_t>(out, f0);
        detail::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(f1 - f0));
        detail::write_raw<std::uint32_t>(out, 0u);
        buf.resize((f1 - f0) * px);
        for (std::size_t f = f0; f < f1; ++f) {
            float* dst = buf.data() + (f - f0) * px;
            std::memcpy(dst, s.frame_a(f), s.grid_a.n * sizeof(float));
            std::memcpy(dst + s.grid_a.n, s.frame_b(f), s.grid_b.n * sizeof(float));
        }
        const auto bytes = buf.size() * sizeof(float);
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(bytes));
        detail::write_raw<std::uint64_t>(out, fnv1a64(buf.data(), bytes));
    }
    out.seekp(index_pos);
    for (auto off : offsets) detail::write_raw<std::uint64_t>(out, off);
    if (!out) throw IoError("failed while writing frame stack: " + path);
}

/// Streaming reader over a persisted frame stack; chunks can be re-read in
/// any order through the index.
class FrameStackReader {
  public:
    explicit FrameStackReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw IoError("cannot open frame stack: " + path);
        char magic[8];
        in_.read(magic, sizeof(magic));
        if (!in_ || std::memcmp(magic, stack_magic, sizeof(magic)) != 0) {
            throw IoError("not a frame stack file: " + path);
        }
        const auto version = detail::read_raw<std::uint32_t>(in_, "stack header");
        if (version != stack_format_version) {
            throw IoError("unsupported frame-stack version " + std::to_string(version));
        }
        detail::read_raw<std::uint32_t>(in_, "stack header");
        seed_ = detail::read_raw<std::uint64_t>(in_, "stack header");
        n_frames_ = detail::read_raw<std::uint64_t>(in_, "stack header");
        chunk_frames_ = detail::read_raw<std::uint64_t>(in_, "stack header");
        grid_a_ = detail::read_grid(in_, "stack grid_a");
        grid_b_ = detail::read_grid(in_, "stack grid_b");
        scenario_ = detail::read_scenario_blob(in_, "stack scenario");
        const auto n_chunks = detail::read_raw<std::uint64_t>(in_, "stack index");
        offsets_.resize(n_chunks);
        for (auto& off : offsets_) off = detail::read_raw<std::uint64_t>(in_, "stack index");
    }

    std::uint64_t seed() const { return seed_; }
    std::size_t n_frames() const { return static_cast<std::size_t>(n_frames_); }
    std::size_t n_chunks() const { return offsets_.size(); }
    const SampledGrid& grid_a() const { return grid_a_; }
    const SampledGrid& grid_b() const { return grid_b_; }
    const ScenarioConfig& scenario() const { return scenario_; }

    /// Frames of chunk c, concatenated per frame as [S_a pixels | S_b pixels].
    std::vector<float> read_chunk(std::size_t c, std::size_t* frame_begin = nullptr,
                                  std::size_t* count = nullptr) {
        if (c >= offsets_.size()) throw IoError("chunk index out of range in " + path_);
        in_.clear();
        in_.seekg(static_cast<std::streamoff>(offsets_[c]));
        const auto f0 = detail::read_raw<std::uint64_t>(in_, "chunk header");
        const auto n = detail::read_raw<std::uint32_t>(in_, "chunk header");
        detail::read_raw<std::uint32_t>(in_, "chunk header");
        std::vector<float> buf(std::size_t(n) * (grid_a_.n + grid_b_.n));
        const auto bytes = buf.size() * sizeof(float);
        in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
        if (!in_) throw IoError("chunk payload truncated: " + path_);
        const auto stored = detail::read_raw<std::uint64_t>(in_, "chunk checksum");
        if (stored != fnv1a64(buf.data(), bytes)) {
            throw IoError("frame-stack chunk checksum mismatch: " + path_);
        }
        if (frame_begin) *frame_begin = static_cast<std::size_t>(f0);
        if (count) *count = n;
        return buf;
    }

    FrameStack read_all() {
        FrameStack s;
        s.seed = seed_;
        s.n_frames = n_frames();
        s.grid_a = grid_a_;
        s.grid_b = grid_b_;
        s.scenario = scenario_;
        s.frames_a.assign(s.n_frames * grid_a_.n, 0.0f);
        s.frames_b.assign(s.n_frames * grid_b_.n, 0.0f);
        const std::size_t px = grid_a_.n + grid_b_.n;
        for (std::size_t c = 0; c < n_chunks(); ++c) {
            std::size_t f0 = 0, n = 0;
            const auto buf = read_chunk(c, &f0, &n);
            for (std::size_t f = 0; f < n; ++f) {
                const float* src = buf.data() + f * px;
                std::memcpy(s.frames_a.data() + (f0 + f) * grid_a_.n, src,
                            grid_a_.n * sizeof(float));
                std::memcpy(s.frames_b.data() + (f0 + f) * grid_b_.n, src + grid_a_.n,
                            grid_b_.n * sizeof(float));
            }
        }
        return s;
    }

  private:
    std::ifstream in_;
    std::string path_;
    std::uint64_t seed_ = 0, n_frames_ = 0, chunk_frames_ = 0;
    SampledGrid grid_a_, grid_b_;
    ScenarioConfig scenario_;
    std::vector<std::uint64_t> offsets_;
};

// --- CSV export ---

inline void profile_to_csv(const ImageProfile& img, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write profile CSV: " + path);
    out << "# kind = " << to_string(img.kind) << "\n";
    out << "# object_scale = " << img.object_scale << "\n";
    out << "# pixel_rescale = " << img.pixel_rescale << "\n";
    out << "# clipped_fraction = " << img.clipped_fraction << "\n";
    out << "# normalization = " << img.normalization << "\n";
    out << "x,intensity\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < img.grid.n; ++i) {
        out << img.grid.coord(i) << "," << img.values[i] << "\n";
    }
    if (!out) throw IoError("failed while writing profile CSV: " + path);
}

inline std::uint64_t file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for checksum: " + path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const auto got = in.gcount();
        if (got > 0) h = fnv1a64(buf, static_cast<std::size_t>(got), h);
    }
    return h;
}

}  // namespace cpi
