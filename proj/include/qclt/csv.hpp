#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace qclt {

using CsvCell = std::variant<std::string, double, std::uint64_t>;

/// Writes "# config_hash=<hash>", a header row, then data rows. Doubles are
/// printed with 17 significant digits so files round-trip exactly.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& config_hash, const std::vector<std::string>& columns);

    void row(const std::vector<CsvCell>& cells);
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
    std::size_t columns_;
    std::ofstream out_;
};

std::string format_cell(const CsvCell& cell);

}  // namespace qclt
