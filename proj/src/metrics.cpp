#include "soil/metrics.hpp"

#include "soil/common.hpp"

namespace soil::eval {

int hamming_error(data::SoilingClassVector gt, data::SoilingClassVector pred) {
    return int(gt.opaque != pred.opaque) + int(gt.transparent != pred.transparent);
}

double mean_hamming(const std::vector<data::SoilingClassVector>& preds,
                    const std::vector<data::SoilingClassVector>& gts) {
    if (preds.size() != gts.size()) throw DataError("mean_hamming: length mismatch");
    if (preds.empty()) throw DataError("mean_hamming: empty input");
    int64_t acc = 0;
    for (size_t i = 0; i < preds.size(); ++i) acc += hamming_error(gts[i], preds[i]);
    return double(acc) / double(preds.size());
}

double Ratio::value() const {
    if (!defined()) throw DataError("ratio undefined (zero support)");
    return double(num) / double(den);
}

int64_t ConfusionMatrix4::total() const {
    int64_t t = 0;
    for (const auto& row : raw) {
        for (int64_t v : row) t += v;
    }
    return t;
}

std::array<bool, 4> ConfusionMatrix4::row_support() const {
    std::array<bool, 4> has{};
    for (int r = 0; r < 4; ++r) {
        int64_t sum = 0;
        for (int c = 0; c < 4; ++c) sum += raw[size_t(r)][size_t(c)];
        has[size_t(r)] = sum > 0;
    }
    return has;
}

std::array<std::array<double, 4>, 4> ConfusionMatrix4::normalized() const {
    std::array<std::array<double, 4>, 4> norm{};
    for (int r = 0; r < 4; ++r) {
        int64_t sum = 0;
        for (int c = 0; c < 4; ++c) sum += raw[size_t(r)][size_t(c)];
        if (sum == 0) continue;  // flagged via row_support()
        for (int c = 0; c < 4; ++c) {
            norm[size_t(r)][size_t(c)] = double(raw[size_t(r)][size_t(c)]) / double(sum);
        }
    }
    return norm;
}

ConfusionMatrix4 confusion_4way(const std::vector<data::SoilingClassVector>& preds,
                                const std::vector<data::SoilingClassVector>& gts) {
    if (preds.size() != gts.size()) throw DataError("confusion_4way: length mismatch");
    if (preds.empty()) throw DataError("confusion_4way: empty input");
    ConfusionMatrix4 m;
    for (size_t i = 0; i < preds.size(); ++i) {
        m.raw[size_t(data::category_of(gts[i]))][size_t(data::category_of(preds[i]))] += 1;
    }
    return m;
}

namespace {

bool tile_positive(const geom::TileGrid& g, int ty, int tx, PositiveDef positive) {
    switch (positive) {
        case PositiveDef::AnySoiling:
            return g.at(ty, tx, geom::SoilClass::Opaque) ||
                   g.at(ty, tx, geom::SoilClass::Transparent);
        case PositiveDef::Opaque:
            return g.at(ty, tx, geom::SoilClass::Opaque);
        case PositiveDef::Transparent:
            return g.at(ty, tx, geom::SoilClass::Transparent);
    }
    return false;
}

}  // namespace

PRReport tile_pr(const std::vector<geom::TileGrid>& preds, const std::vector<geom::TileGrid>& gts,
                 const std::vector<data::Camera>& cameras, PositiveDef positive) {
    if (preds.size() != gts.size() || preds.size() != cameras.size()) {
        throw DataError("tile_pr: length mismatch");
    }
    PRReport report;
    for (size_t i = 0; i < preds.size(); ++i) {
        const geom::TileGrid& p = preds[i];
        const geom::TileGrid& g = gts[i];
        if (p.gh != g.gh || p.gw != g.gw) throw DataError("tile_pr: grid shape mismatch");
        PRCounts& cam = report.per_camera[size_t(cameras[i])];
        for (int ty = 0; ty < p.gh; ++ty) {
            for (int tx = 0; tx < p.gw; ++tx) {
                bool pp = tile_positive(p, ty, tx, positive);
                bool gg = tile_positive(g, ty, tx, positive);
                if (pp && gg) ++cam.tp;
                else if (pp && !gg) ++cam.fp;
                else if (!pp && gg) ++cam.fn;
                else ++cam.tn;
            }
        }
    }
    for (const PRCounts& cam : report.per_camera) {
        report.overall.tp += cam.tp;
        report.overall.fp += cam.fp;
        report.overall.fn += cam.fn;
        report.overall.tn += cam.tn;
    }
    return report;
}

RateReport image_tpr_fpr(const std::vector<data::SoilingClassVector>& preds,
                         const std::vector<data::SoilingClassVector>& gts) {
    if (preds.size() != gts.size()) throw DataError("image_tpr_fpr: length mismatch");
    if (preds.empty()) throw DataError("image_tpr_fpr: empty input");
    RateReport r;
    for (size_t i = 0; i < preds.size(); ++i) {
        bool p = preds[i].any();
        bool g = gts[i].any();
        if (p && g) ++r.tp;
        else if (p && !g) ++r.fp;
        else if (!p && g) ++r.fn;
        else ++r.tn;
    }
    return r;
}

double tile_bit_accuracy(const std::vector<geom::TileGrid>& preds,
                         const std::vector<geom::TileGrid>& gts) {
    if (preds.size() != gts.size() || preds.empty()) throw DataError("tile_bit_accuracy: bad input");
    int64_t match = 0, total = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        if (preds[i].bits.size() != gts[i].bits.size()) {
            throw DataError("tile_bit_accuracy: grid shape mismatch");
        }
        for (size_t k = 0; k < preds[i].bits.size(); ++k) {
            match += preds[i].bits[k] == gts[i].bits[k];
            ++total;
        }
    }
    return double(match) / double(total);
}

double tile_mean_hamming(const std::vector<geom::TileGrid>& preds,
                         const std::vector<geom::TileGrid>& gts) {
    if (preds.size() != gts.size() || preds.empty()) throw DataError("tile_mean_hamming: bad input");
    int64_t acc = 0, tiles = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        if (preds[i].bits.size() != gts[i].bits.size()) {
            throw DataError("tile_mean_hamming: grid shape mismatch");
        }
        for (size_t k = 0; k < preds[i].bits.size(); ++k) {
            acc += preds[i].bits[k] != gts[i].bits[k];
        }
        tiles += int64_t(preds[i].gh) * preds[i].gw;
    }
    return double(acc) / double(tiles);
}

}  // namespace soil::eval
