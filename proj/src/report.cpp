#include "soil/report.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "soil/common.hpp"

namespace fs = std::filesystem;

namespace soil::eval {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open report file: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) rows.push_back(split_csv_line(line));
    }
    return rows;
}

std::string ratio_cell(const Ratio& r) { return r.defined() ? fmt_double(r.value()) : "undefined"; }

}  // namespace

void write_report_bundle(const ReportBundle& bundle, const std::string& dir) {
    fs::create_directories(dir);

    {
        std::ofstream out(fs::path(dir) / "confusion_raw.csv");
        out << "gt";
        for (const char* name : data::kCategoryNames) out << "," << name;
        out << "\n";
        for (int r = 0; r < 4; ++r) {
            out << data::kCategoryNames[size_t(r)];
            for (int c = 0; c < 4; ++c) out << "," << bundle.confusion.raw[size_t(r)][size_t(c)];
            out << "\n";
        }
        if (!out) throw DataError("write failed: confusion_raw.csv");
    }
    {
        auto norm = bundle.confusion.normalized();
        auto support = bundle.confusion.row_support();
        std::ofstream out(fs::path(dir) / "confusion_norm.csv");
        out << "gt";
        for (const char* name : data::kCategoryNames) out << "," << name;
        out << ",support\n";
        for (int r = 0; r < 4; ++r) {
            out << data::kCategoryNames[size_t(r)];
            for (int c = 0; c < 4; ++c) out << "," << fmt_double(norm[size_t(r)][size_t(c)]);
            out << "," << (support[size_t(r)] ? 1 : 0) << "\n";
        }
        if (!out) throw DataError("write failed: confusion_norm.csv");
    }
    {
        std::ofstream out(fs::path(dir) / "rates.csv");
        out << "mean_hamming,tpr,fpr,tp,fp,tn,fn\n";
        out << fmt_double(bundle.mean_hamming_value) << "," << ratio_cell(bundle.rates.tpr()) << ","
            << ratio_cell(bundle.rates.fpr()) << "," << bundle.rates.tp << "," << bundle.rates.fp
            << "," << bundle.rates.tn << "," << bundle.rates.fn << "\n";
        if (!out) throw DataError("write failed: rates.csv");
    }
    {
        std::ofstream out(fs::path(dir) / "tile_pr.csv");
        out << "camera,precision,recall,tp,fp,fn,tn\n";
        if (bundle.has_tiles) {
            auto row = [&](const std::string& name, const PRCounts& c) {
                out << name << "," << ratio_cell(c.precision()) << "," << ratio_cell(c.recall())
                    << "," << c.tp << "," << c.fp << "," << c.fn << "," << c.tn << "\n";
            };
            for (size_t cam = 0; cam < 4; ++cam) {
                row(data::kCameraNames[cam], bundle.tiles.per_camera[cam]);
            }
            row("all", bundle.tiles.overall);
        }
        if (!out) throw DataError("write failed: tile_pr.csv");
    }
    {
        std::ofstream out(fs::path(dir) / "summary.txt");
        out << summarize_report(bundle);
        if (!out) throw DataError("write failed: summary.txt");
    }
}

ReportBundle read_report_bundle(const std::string& dir) {
    ReportBundle bundle;

    auto raw = read_csv((fs::path(dir) / "confusion_raw.csv").string());
    if (raw.size() != 5) throw DataError("confusion_raw.csv: expected 4 rows");
    for (int r = 0; r < 4; ++r) {
        const auto& row = raw[size_t(r + 1)];
        if (row.size() != 5 || row[0] != data::kCategoryNames[size_t(r)]) {
            throw DataError("confusion_raw.csv: bad row " + std::to_string(r));
        }
        for (int c = 0; c < 4; ++c) {
            bundle.confusion.raw[size_t(r)][size_t(c)] = std::stoll(row[size_t(c + 1)]);
        }
    }

    auto rates = read_csv((fs::path(dir) / "rates.csv").string());
    if (rates.size() != 2 || rates[1].size() != 7) throw DataError("rates.csv: bad layout");
    bundle.mean_hamming_value = std::stod(rates[1][0]);
    bundle.rates.tp = std::stoll(rates[1][3]);
    bundle.rates.fp = std::stoll(rates[1][4]);
    bundle.rates.tn = std::stoll(rates[1][5]);
    bundle.rates.fn = std::stoll(rates[1][6]);

    auto tiles = read_csv((fs::path(dir) / "tile_pr.csv").string());
    bundle.has_tiles = tiles.size() > 1;
    if (bundle.has_tiles) {
        if (tiles.size() != 6) throw DataError("tile_pr.csv: expected 5 rows");
        auto parse_row = [&](const std::vector<std::string>& row, PRCounts& c) {
            if (row.size() != 7) throw DataError("tile_pr.csv: bad row");
            c.tp = std::stoll(row[3]);
            c.fp = std::stoll(row[4]);
            c.fn = std::stoll(row[5]);
            c.tn = std::stoll(row[6]);
        };
        for (size_t cam = 0; cam < 4; ++cam) {
            if (tiles[cam + 1][0] != data::kCameraNames[cam]) {
                throw DataError("tile_pr.csv: unexpected camera order");
            }
            parse_row(tiles[cam + 1], bundle.tiles.per_camera[cam]);
        }
        if (tiles[5][0] != "all") throw DataError("tile_pr.csv: missing pooled row");
        parse_row(tiles[5], bundle.tiles.overall);
    }
    return bundle;
}

std::string summarize_report(const ReportBundle& bundle) {
    std::ostringstream os;
    os << "image-level results\n";
    os << "  frames evaluated: " << bundle.confusion.total() << "\n";
    os << "  mean hamming:     " << fmt_double(bundle.mean_hamming_value) << "\n";
    os << "  TPR: " << ratio_cell(bundle.rates.tpr()) << "  FPR: " << ratio_cell(bundle.rates.fpr())
       << "\n\n";

    auto norm = bundle.confusion.normalized();
    auto support = bundle.confusion.row_support();
    os << "normalized confusion (rows = ground truth)\n";
    char line[160];
    std::snprintf(line, sizeof line, "  %-12s %11s %11s %11s %11s\n", "", "Clean", "Transparent",
                  "Opaque", "Both");
    os << line;
    for (int r = 0; r < 4; ++r) {
        if (support[size_t(r)]) {
            std::snprintf(line, sizeof line, "  %-12s %11.3f %11.3f %11.3f %11.3f\n",
                          data::kCategoryNames[size_t(r)], norm[size_t(r)][0], norm[size_t(r)][1],
                          norm[size_t(r)][2], norm[size_t(r)][3]);
        } else {
            std::snprintf(line, sizeof line, "  %-12s %11s %11s %11s %11s\n",
                          data::kCategoryNames[size_t(r)], "-", "-", "-", "-");
        }
        os << line;
    }

    if (bundle.has_tiles) {
        os << "\ntile-level precision/recall per camera\n";
        std::snprintf(line, sizeof line, "  %-8s %11s %11s\n", "camera", "precision", "recall");
        os << line;
        for (size_t cam = 0; cam < 4; ++cam) {
            const PRCounts& c = bundle.tiles.per_camera[cam];
            std::snprintf(line, sizeof line, "  %-8s %11s %11s\n", data::kCameraNames[cam],
                          ratio_cell(c.precision()).c_str(), ratio_cell(c.recall()).c_str());
            os << line;
        }
        std::snprintf(line, sizeof line, "  %-8s %11s %11s\n", "all",
                      ratio_cell(bundle.tiles.overall.precision()).c_str(),
                      ratio_cell(bundle.tiles.overall.recall()).c_str());
        os << line;
    }
    return os.str();
}

}  // namespace soil::eval
