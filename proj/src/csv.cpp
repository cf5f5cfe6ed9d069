#include "qclt/csv.hpp"

#include "qclt/error.hpp"

#include <cmath>
#include <cstdio>

namespace qclt {

std::string format_cell(const CsvCell& cell) {
    if (const auto* s = std::get_if<std::string>(&cell)) return *s;
    if (const auto* u = std::get_if<std::uint64_t>(&cell)) return std::to_string(*u);
    const double v = std::get<double>(cell);
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& config_hash, const std::vector<std::string>& columns)
    : path_(path), columns_(columns.size()), out_(path) {
    if (!out_) throw DataError("cannot write " + path);
    out_ << "# config_hash=" << config_hash << "\n";
    for (std::size_t k = 0; k < columns.size(); ++k) out_ << (k ? "," : "") << columns[k];
    out_ << "\n";
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
    if (cells.size() != columns_) throw DataError(path_ + ": row has the wrong number of cells");
    for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << format_cell(cells[k]);
    out_ << "\n";
}

}  // namespace qclt
