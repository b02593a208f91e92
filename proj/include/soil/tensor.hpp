#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

namespace soil::nn {

// Dense float32 tensor, NCHW row-major. The whole engine runs on this one
// currency type; shapes are small vectors of ints.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s);

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<int> s, float v);

    int64_t size() const { return int64_t(data.size()); }
    int dim(int i) const { return shape[size_t(i)]; }
    int rank() const { return int(shape.size()); }

    float* ptr() { return data.data(); }
    const float* ptr() const { return data.data(); }

    // NCHW accessors for rank-4 tensors
    float at4(int n, int c, int h, int w) const {
        return data[((size_t(n) * shape[1] + c) * shape[2] + h) * size_t(shape[3]) + w];
    }
    float& at4(int n, int c, int h, int w) {
        return data[((size_t(n) * shape[1] + c) * shape[2] + h) * size_t(shape[3]) + w];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
    std::string shape_str() const;
};

int64_t numel(const std::vector<int>& shape);

// Throws DataError when shapes differ; `what` names the operation.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

// Worker cap: min(SOILBENCH_THREADS, hardware). Parallel loops split [0,n)
// into contiguous chunks; callers only use this for disjoint writes with a
// fixed per-element accumulation order, so results do not depend on the
// worker count.
int worker_count();
void parallel_for(int64_t n, int64_t grain, const std::function<void(int64_t, int64_t)>& fn);

}  // namespace soil::nn
