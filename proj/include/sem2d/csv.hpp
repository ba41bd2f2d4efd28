#pragma once

// Minimal CSV writer: header row, then rows of numbers and strings. Doubles
// are printed with 17 significant digits so files round-trip exactly.

#include "sem2d/error.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>
#include <variant>
#include <vector>

namespace sem {

class CsvWriter {
public:
    using Cell = std::variant<double, long long, std::string>;

    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path)
    {
        SEM_REQUIRE(out_.good(), InvalidArgument, "cannot open " + path.string() + " for writing");
        out_ << std::setprecision(17);
        write_strings(header);
    }

    void row(const std::vector<Cell>& cells)
    {
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (k) out_ << ',';
            std::visit([this](const auto& v) { put(v); }, cells[k]);
        }
        out_ << '\n';
    }

private:
    void write_strings(const std::vector<std::string>& cells)
    {
        for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
        out_ << '\n';
    }
    void put(double v)
    {
        if (std::isnan(v))
            out_ << "nan";
        else
            out_ << v;
    }
    void put(long long v) { out_ << v; }
    void put(const std::string& v) { out_ << v; }

    std::ofstream out_;
};

} // namespace sem
