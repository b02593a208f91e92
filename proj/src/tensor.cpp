#include "soil/tensor.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "soil/common.hpp"

namespace soil::nn {

int64_t numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
        if (d < 0) throw DataError("negative tensor dimension");
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)), data(size_t(numel(shape)), 0.0f) {}

Tensor Tensor::full(std::vector<int> s, float v) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
}

bool Tensor::all_finite() const {
    for (float v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DataError(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " +
                        b.shape_str());
    }
}

int worker_count() {
    static int cached = [] {
        int hw = int(std::thread::hardware_concurrency());
        if (hw < 1) hw = 1;
        if (const char* env = std::getenv("SOILBENCH_THREADS")) {
            int cap = std::atoi(env);
            if (cap >= 1 && cap < hw) hw = cap;
            if (cap >= 1 && cap >= hw) hw = std::min(cap, hw);
        }
        return hw;
    }();
    return cached;
}

void parallel_for(int64_t n, int64_t grain, const std::function<void(int64_t, int64_t)>& fn) {
    int workers = worker_count();
    if (n <= 0) return;
    if (workers <= 1 || n < 2 * grain) {
        fn(0, n);
        return;
    }
    int chunks = int(std::min<int64_t>(workers, (n + grain - 1) / grain));
    int64_t per = (n + chunks - 1) / chunks;
    std::vector<std::thread> pool;
    pool.reserve(size_t(chunks));
    for (int i = 0; i < chunks; ++i) {
        int64_t lo = i * per;
        int64_t hi = std::min(n, lo + per);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace soil::nn
