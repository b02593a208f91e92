#include "soil/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "soil/common.hpp"

namespace soil::nn {

namespace {

void write_u16(std::ostream& out, uint16_t v) {
    unsigned char b[2] = {(unsigned char)(v & 0xff), (unsigned char)(v >> 8)};
    out.write(reinterpret_cast<char*>(b), 2);
}

void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = (unsigned char)(v >> (8 * i));
    out.write(reinterpret_cast<char*>(b), 4);
}

void write_u64(std::ostream& out, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (unsigned char)(v >> (8 * i));
    out.write(reinterpret_cast<char*>(b), 8);
}

bool read_bytes(std::istream& in, void* dst, size_t n) {
    in.read(static_cast<char*>(dst), std::streamsize(n));
    return size_t(in.gcount()) == n;
}

uint16_t read_u16(std::istream& in, const std::string& path) {
    unsigned char b[2];
    if (!read_bytes(in, b, 2)) throw DataError("truncated checkpoint: " + path);
    return uint16_t(b[0] | (b[1] << 8));
}

uint32_t read_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!read_bytes(in, b, 4)) throw DataError("truncated checkpoint: " + path);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(b[i]) << (8 * i);
    return v;
}

uint64_t read_u64(std::istream& in, const std::string& path) {
    unsigned char b[8];
    if (!read_bytes(in, b, 8)) throw DataError("truncated checkpoint: " + path);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
    return v;
}

void write_tensor(std::ostream& out, const std::string& name, const Tensor& t) {
    write_u16(out, uint16_t(name.size()));
    out.write(name.data(), std::streamsize(name.size()));
    out.put(char(t.rank()));
    for (int d : t.shape) write_u32(out, uint32_t(d));
    // float32 little-endian; host is little-endian so raw bytes match
    out.write(reinterpret_cast<const char*>(t.data.data()),
              std::streamsize(t.data.size() * sizeof(float)));
}

}  // namespace

void save_checkpoint(const ParamStore& params, int64_t step, uint64_t config_digest,
                     const std::string& config_echo, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write("SOIL", 4);
    write_u32(out, kCheckpointVersion);
    write_u64(out, config_digest);

    for (const Param* p : params.all()) {
        write_tensor(out, p->name, p->value);
        write_tensor(out, p->name + "#m", p->m);
        write_tensor(out, p->name + "#v", p->v);
    }
    Tensor step_t({1});
    step_t.data[0] = float(step);
    write_tensor(out, "__step__", step_t);
    if (!out) throw DataError("write failed: " + path);
    out.close();

    std::ofstream echo(path + ".cfg");
    if (!echo) throw DataError("cannot write checkpoint config echo: " + path + ".cfg");
    echo << config_echo;
    if (!config_echo.empty() && config_echo.back() != '\n') echo << "\n";
}

int64_t load_checkpoint(ParamStore& params, uint64_t expected_digest, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);

    char magic[4];
    if (!read_bytes(in, magic, 4) || std::memcmp(magic, "SOIL", 4) != 0) {
        throw DataError("bad checkpoint magic: " + path);
    }
    uint32_t version = read_u32(in, path);
    if (version != kCheckpointVersion) {
        throw DataError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
    }
    uint64_t digest = read_u64(in, path);
    if (digest != expected_digest) {
        throw DataError("checkpoint config mismatch (digest " + std::to_string(digest) +
                        " != expected " + std::to_string(expected_digest) + "): " + path);
    }

    std::map<std::string, Tensor> tensors;
    while (true) {
        int peek = in.peek();
        if (peek == EOF) break;
        uint16_t name_len = read_u16(in, path);
        std::string name(name_len, '\0');
        if (!read_bytes(in, name.data(), name_len)) throw DataError("truncated checkpoint: " + path);
        int rank = in.get();
        if (rank == EOF) throw DataError("truncated checkpoint: " + path);
        std::vector<int> shape;
        for (int i = 0; i < rank; ++i) shape.push_back(int(read_u32(in, path)));
        Tensor t(shape);
        if (!read_bytes(in, t.data.data(), t.data.size() * sizeof(float))) {
            throw DataError("truncated checkpoint: " + path);
        }
        if (!tensors.emplace(name, std::move(t)).second) {
            throw DataError("duplicate tensor '" + name + "' in checkpoint: " + path);
        }
    }

    auto take = [&](const std::string& name, const Tensor& like) -> Tensor {
        auto it = tensors.find(name);
        if (it == tensors.end()) {
            throw DataError("checkpoint is missing tensor '" + name + "': " + path);
        }
        if (it->second.shape != like.shape) {
            throw DataError("checkpoint tensor '" + name + "' has shape " +
                            it->second.shape_str() + ", expected " + like.shape_str() + ": " + path);
        }
        Tensor t = std::move(it->second);
        tensors.erase(it);
        return t;
    };

    for (Param* p : params.all()) {
        p->value = take(p->name, p->value);
        p->m = take(p->name + "#m", p->m);
        p->v = take(p->name + "#v", p->v);
    }
    auto step_it = tensors.find("__step__");
    if (step_it == tensors.end()) throw DataError("checkpoint is missing step counter: " + path);
    int64_t step = int64_t(step_it->second.data.at(0));
    tensors.erase(step_it);
    if (!tensors.empty()) {
        throw DataError("checkpoint has unexpected tensor '" + tensors.begin()->first +
                        "': " + path);
    }
    return step;
}

}  // namespace soil::nn
