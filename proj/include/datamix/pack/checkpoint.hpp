#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace datamix::pack {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

std::string dtype_name(DType d);

// One named tensor. Values live in `f32` or `f64` according to `dtype`.
struct Tensor {
    DType dtype = DType::f32;
    std::vector<std::uint64_t> shape;
    std::vector<float> f32;
    std::vector<double> f64;

    std::size_t size() const { return dtype == DType::f32 ? f32.size() : f64.size(); }
    static Tensor of_f32(std::vector<std::uint64_t> shape, std::vector<float> values);
    static Tensor of_f64(std::vector<std::uint64_t> shape, std::vector<double> values);
};

// Product of dims; raises "bad_shape" on overflow.
std::uint64_t element_count(const std::vector<std::uint64_t>& shape);

// Tensors keyed by name; std::map keeps the manifest sorted.
struct CheckpointTensorSet {
    std::map<std::string, Tensor> tensors;

    // Raises "bad_tensor" naming the tensor whose value count differs from
    // its shape product or whose name is empty or too long.
    void validate() const;
};

// Bit-exact container: "CTNS1\0", u32 count, then per tensor u16 name
// length, name bytes, u8 dtype, u8 rank, rank x u64 dims, raw values.
// Everything little-endian, tensors in sorted-name order.
std::string serialize_checkpoint(const CheckpointTensorSet& set);
// Raises "bad_container" on bad magic, truncation, unknown dtype, unsorted
// or duplicate names, or trailing bytes.
CheckpointTensorSet parse_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, const CheckpointTensorSet& set);
CheckpointTensorSet read_checkpoint(const std::filesystem::path& path);

struct AverageOptions {
    std::size_t window = 5;  // only the last `window` sets are averaged
    std::size_t threads = 1;
};

// Element-wise mean of the last `window` sets, accumulated in double and
// stored in each tensor's dtype. Each element is computed as
// ref + sum(x_i - ref) / n with ref taken from the first averaged set, so
// identical inputs reproduce exactly. Raises "too_few_checkpoints" for
// fewer than two sets, ValidationError "window" for a window below two,
// and "manifest_mismatch" naming the first differing tensor.
CheckpointTensorSet average_checkpoints(const std::vector<CheckpointTensorSet>& sets,
                                        const AverageOptions& options = {});

}  // namespace datamix::pack
