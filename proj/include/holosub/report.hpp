#pragma once

// Evaluation report: per-class accuracy per (variant, loss) column with the
// boundary-overcount flag, in both aligned-text and machine-readable forms.
// The machine form round-trips through parse_accuracy_table.

#include <algorithm>
#include <array>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "holosub/errors.hpp"
#include "holosub/kv.hpp"

namespace holosub::report {

struct EvalColumn {
    std::string variant;
    std::string loss;                  // column label, e.g. "hrr" or "ce"
    std::array<double, 6> acc{};       // per-class accuracy, target 1..6
    std::array<double, 6> mean_pred{}; // mean predicted count per true class
    bool overcount6 = false;
    double mean_acc = 0.0;
    double boundary_mass = 0.0;  // mean saliency mass near boundaries
    int images = 0;
};

struct AccuracyTable {
    std::vector<EvalColumn> columns;
};

// Spuriously strong class-6 cells: accuracy jumps over class 5 while the
// class-5 predictions pile up at the ceiling.
inline bool overcount_flag(const std::array<double, 6>& acc,
                           const std::array<double, 6>& mean_pred) {
    return acc[5] - acc[4] > 0.2 && mean_pred[4] > 5.5;
}

inline std::string serialize_accuracy_table(const AccuracyTable& table) {
    std::ostringstream out;
    for (const auto& col : table.columns) {
        for (int c = 0; c < 6; ++c) {
            kv::Record rec;
            rec.emplace_back("variant", col.variant);
            rec.emplace_back("loss", col.loss);
            rec.emplace_back("class", std::to_string(c + 1));
            std::ostringstream a, mp;
            a << std::setprecision(17) << col.acc[static_cast<std::size_t>(c)];
            mp << std::setprecision(17) << col.mean_pred[static_cast<std::size_t>(c)];
            rec.emplace_back("acc", a.str());
            rec.emplace_back("mean_pred", mp.str());
            rec.emplace_back("flag",
                             (c == 5 && col.overcount6) ? "boundary-overcount" : "-");
            out << kv::serialize_record(rec) << '\n';
        }
        kv::Record rec;
        rec.emplace_back("variant", col.variant);
        rec.emplace_back("loss", col.loss);
        rec.emplace_back("class", "summary");
        std::ostringstream m, b;
        m << std::setprecision(17) << col.mean_acc;
        b << std::setprecision(17) << col.boundary_mass;
        rec.emplace_back("mean_acc", m.str());
        rec.emplace_back("boundary_mass", b.str());
        rec.emplace_back("images", std::to_string(col.images));
        out << kv::serialize_record(rec) << '\n';
    }
    return out.str();
}

inline AccuracyTable parse_accuracy_table(const std::string& text) {
    AccuracyTable table;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (kv::trim(line).empty()) continue;
        const kv::Record rec = kv::parse_record(line);
        const std::string variant = kv::record_get(rec, "variant");
        const std::string loss = kv::record_get(rec, "loss");
        EvalColumn* col = nullptr;
        for (auto& c : table.columns)
            if (c.variant == variant && c.loss == loss) col = &c;
        if (!col) {
            table.columns.push_back({});
            col = &table.columns.back();
            col->variant = variant;
            col->loss = loss;
        }
        const std::string cls = kv::record_get(rec, "class");
        if (cls == "summary") {
            col->mean_acc = std::stod(kv::record_get(rec, "mean_acc"));
            col->boundary_mass = std::stod(kv::record_get(rec, "boundary_mass"));
            col->images = std::stoi(kv::record_get(rec, "images"));
        } else {
            const int c = std::stoi(cls) - 1;
            if (c < 0 || c > 5) throw ValidationError("accuracy table: bad class");
            col->acc[static_cast<std::size_t>(c)] =
                std::stod(kv::record_get(rec, "acc"));
            col->mean_pred[static_cast<std::size_t>(c)] =
                std::stod(kv::record_get(rec, "mean_pred"));
            if (c == 5)
                col->overcount6 =
                    kv::record_get(rec, "flag") == "boundary-overcount";
        }
    }
    return table;
}

// Aligned text table grouped by variant: one row per target class, one
// subcolumn per loss. Flagged cells are marked with '*'.
inline std::string format_accuracy_text(const AccuracyTable& table) {
    std::vector<std::string> variants;
    for (const auto& col : table.columns)
        if (std::find(variants.begin(), variants.end(), col.variant) ==
            variants.end())
            variants.push_back(col.variant);
    std::ostringstream out;
    out << std::left << std::setw(8) << "Target";
    for (const auto& v : variants)
        for (const auto& col : table.columns)
            if (col.variant == v)
                out << std::setw(20) << (v + "/" + col.loss);
    out << '\n';
    for (int c = 0; c < 6; ++c) {
        out << std::left << std::setw(8) << (c + 1);
        for (const auto& v : variants)
            for (const auto& col : table.columns) {
                if (col.variant != v) continue;
                std::ostringstream cell;
                cell << std::fixed << std::setprecision(3)
                     << col.acc[static_cast<std::size_t>(c)];
                if (c == 5 && col.overcount6) cell << " *";
                out << std::setw(20) << cell.str();
            }
        out << '\n';
    }
    out << std::left << std::setw(8) << "mean";
    for (const auto& v : variants)
        for (const auto& col : table.columns) {
            if (col.variant != v) continue;
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(3) << col.mean_acc;
            out << std::setw(20) << cell.str();
        }
    out << "\n* class-6 accuracy driven by systematic over-counting\n";
    return out.str();
}

}  // namespace holosub::report
