#pragma once

#include <optional>
#include <string>

#include "soil/metrics.hpp"

namespace soil::eval {

// Everything one evaluation run produces. Serialized as a directory of
// CSVs (confusion_raw.csv, confusion_norm.csv, tile_pr.csv, rates.csv)
// plus a human-readable summary.txt.
struct ReportBundle {
    ConfusionMatrix4 confusion;
    double mean_hamming_value = 0.0;
    RateReport rates;
    bool has_tiles = false;
    PRReport tiles;

    bool operator==(const ReportBundle&) const = default;
};

void write_report_bundle(const ReportBundle& bundle, const std::string& dir);
ReportBundle read_report_bundle(const std::string& dir);

std::string summarize_report(const ReportBundle& bundle);

}  // namespace soil::eval
