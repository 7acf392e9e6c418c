#include "datamix/pack/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>

#include "datamix/common/error.hpp"
#include "datamix/common/parallel.hpp"
#include "datamix/simd/kernels.hpp"

namespace datamix::pack {

namespace {

constexpr std::string_view kMagic{"CTNS1\0", 6};

template <typename T>
void put(std::string& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::string_view take(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) throw Error("bad_container", std::string("truncated checkpoint while reading ") + what);
        const auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    template <typename T>
    T get(const char* what) {
        const auto raw = take(sizeof(T), what);
        unsigned char buf[sizeof(T)];
        std::memcpy(buf, raw.data(), sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
        T value;
        std::memcpy(&value, buf, sizeof(T));
        return value;
    }

    template <typename T>
    std::vector<T> values(std::uint64_t count, const char* what) {
        if (count > (bytes_.size() - pos_) / sizeof(T)) {
            throw Error("bad_container", std::string("truncated checkpoint while reading ") + what);
        }
        std::vector<T> out(count);
        for (auto& v : out) v = get<T>(what);
        return out;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string dtype_name(DType d) { return d == DType::f32 ? "f32" : "f64"; }

Tensor Tensor::of_f32(std::vector<std::uint64_t> shape, std::vector<float> values) {
    Tensor t;
    t.dtype = DType::f32;
    t.shape = std::move(shape);
    t.f32 = std::move(values);
    return t;
}

Tensor Tensor::of_f64(std::vector<std::uint64_t> shape, std::vector<double> values) {
    Tensor t;
    t.dtype = DType::f64;
    t.shape = std::move(shape);
    t.f64 = std::move(values);
    return t;
}

std::uint64_t element_count(const std::vector<std::uint64_t>& shape) {
    std::uint64_t n = 1;
    for (const auto d : shape) {
        if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) throw Error("bad_shape", "shape product overflows");
        n *= d;
    }
    return n;
}

void CheckpointTensorSet::validate() const {
    for (const auto& [name, t] : tensors) {
        if (name.empty() || name.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw Error("bad_tensor", "tensor name length must be in [1, 65535]: '" + name + "'");
        }
        if (t.shape.size() > std::numeric_limits<std::uint8_t>::max()) throw Error("bad_tensor", "tensor " + name + ": rank above 255");
        if ((t.dtype == DType::f32 && !t.f64.empty()) || (t.dtype == DType::f64 && !t.f32.empty())) {
            throw Error("bad_tensor", "tensor " + name + ": values stored under the wrong dtype");
        }
        if (element_count(t.shape) != t.size()) {
            throw Error("bad_tensor", "tensor " + name + ": " + std::to_string(t.size()) + " values for shape product " +
                                          std::to_string(element_count(t.shape)));
        }
    }
}

std::string serialize_checkpoint(const CheckpointTensorSet& set) {
    set.validate();
    if (set.tensors.size() > std::numeric_limits<std::uint32_t>::max()) throw Error("bad_tensor", "too many tensors");
    std::string out(kMagic);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(set.tensors.size()));
    for (const auto& [name, t] : set.tensors) {
        put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
        out += name;
        put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dtype));
        put<std::uint8_t>(out, static_cast<std::uint8_t>(t.shape.size()));
        for (const auto d : t.shape) put<std::uint64_t>(out, d);
        if (t.dtype == DType::f32) {
            if constexpr (std::endian::native == std::endian::little) {
                out.append(reinterpret_cast<const char*>(t.f32.data()), t.f32.size() * sizeof(float));
            } else {
                for (const float v : t.f32) put(out, v);
            }
        } else {
            if constexpr (std::endian::native == std::endian::little) {
                out.append(reinterpret_cast<const char*>(t.f64.data()), t.f64.size() * sizeof(double));
            } else {
                for (const double v : t.f64) put(out, v);
            }
        }
    }
    return out;
}

CheckpointTensorSet parse_checkpoint(std::string_view bytes) {
    Reader in(bytes);
    if (in.take(std::min(bytes.size(), kMagic.size()), "magic") != kMagic) {
        throw Error("bad_container", "missing CTNS1 magic header");
    }
    const auto count = in.get<std::uint32_t>("tensor count");
    CheckpointTensorSet set;
    std::string previous;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = in.get<std::uint16_t>("name length");
        std::string name(in.take(name_len, "tensor name"));
        if (name.empty()) throw Error("bad_container", "tensor " + std::to_string(i) + " has an empty name");
        if (i > 0 && name <= previous) {
            throw Error("bad_container", "tensor names not in strictly sorted order at '" + name + "'");
        }
        const auto code = in.get<std::uint8_t>("dtype");
        if (code > 1) throw Error("bad_container", "tensor " + name + ": unknown dtype code " + std::to_string(code));
        const auto rank = in.get<std::uint8_t>("rank");
        Tensor t;
        t.dtype = static_cast<DType>(code);
        for (std::uint8_t r = 0; r < rank; ++r) t.shape.push_back(in.get<std::uint64_t>("dims"));
        std::uint64_t n = 0;
        try {
            n = element_count(t.shape);
        } catch (const Error&) {
            throw Error("bad_container", "tensor " + name + ": shape product overflows");
        }
        if (t.dtype == DType::f32) {
            t.f32 = in.values<float>(n, "tensor values");
        } else {
            t.f64 = in.values<double>(n, "tensor values");
        }
        previous = name;
        set.tensors.emplace(std::move(name), std::move(t));
    }
    if (!in.done()) throw Error("bad_container", "trailing bytes after the last tensor");
    return set;
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointTensorSet& set) {
    const std::string bytes = serialize_checkpoint(set);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io_error", "cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("io_error", "failed writing " + path.string());
}

CheckpointTensorSet read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io_error", "cannot open " + path.string());
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    try {
        return parse_checkpoint(bytes);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

CheckpointTensorSet average_checkpoints(const std::vector<CheckpointTensorSet>& sets, const AverageOptions& options) {
    if (options.window < 2) throw ValidationError("window", "must be at least 2");
    if (sets.size() < 2) {
        throw Error("too_few_checkpoints", "averaging needs at least 2 checkpoints, got " + std::to_string(sets.size()));
    }
    const std::size_t n = std::min(options.window, sets.size());
    const std::size_t first = sets.size() - n;
    const CheckpointTensorSet& ref = sets[first];
    ref.validate();

    for (std::size_t k = first + 1; k < sets.size(); ++k) {
        const auto& other = sets[k];
        other.validate();
        std::set<std::string> names;
        for (const auto& [name, t] : ref.tensors) names.insert(name);
        for (const auto& [name, t] : other.tensors) names.insert(name);
        for (const auto& name : names) {
            auto a = ref.tensors.find(name);
            auto b = other.tensors.find(name);
            std::string why;
            if (a == ref.tensors.end() || b == other.tensors.end()) {
                why = "present in only one checkpoint";
            } else if (a->second.dtype != b->second.dtype) {
                why = "dtype " + dtype_name(a->second.dtype) + " vs " + dtype_name(b->second.dtype);
            } else if (a->second.shape != b->second.shape) {
                why = "shape differs";
            }
            if (!why.empty()) {
                throw Error("manifest_mismatch", "tensor '" + name + "' differs between checkpoint " +
                                                     std::to_string(first) + " and " + std::to_string(k) + ": " + why);
            }
        }
    }

    std::vector<const std::string*> names;
    for (const auto& [name, t] : ref.tensors) names.push_back(&name);
    std::vector<Tensor> results(names.size());
    const simd::KernelTable& kern = simd::active();
    const double divisor = static_cast<double>(n);

    parallel_for(names.size(), options.threads, [&](std::size_t i) {
        const Tensor& base = ref.tensors.at(*names[i]);
        const std::size_t len = base.size();
        std::vector<double> acc(len, 0.0);
        Tensor out;
        out.dtype = base.dtype;
        out.shape = base.shape;
        for (std::size_t k = first + 1; k < sets.size(); ++k) {
            const Tensor& t = sets[k].tensors.at(*names[i]);
            if (base.dtype == DType::f32) {
                kern.accumulate_delta_f32(acc.data(), t.f32.data(), base.f32.data(), len);
            } else {
                kern.accumulate_delta_f64(acc.data(), t.f64.data(), base.f64.data(), len);
            }
        }
        if (base.dtype == DType::f32) {
            out.f32.resize(len);
            kern.shifted_mean_f32(out.f32.data(), base.f32.data(), acc.data(), divisor, len);
        } else {
            out.f64.resize(len);
            kern.shifted_mean_f64(out.f64.data(), base.f64.data(), acc.data(), divisor, len);
        }
        results[i] = std::move(out);
    });

    CheckpointTensorSet avg;
    for (std::size_t i = 0; i < names.size(); ++i) avg.tensors.emplace(*names[i], std::move(results[i]));
    return avg;
}

}  // namespace datamix::pack
