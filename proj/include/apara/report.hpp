#pragma once

#include "apara/types.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace apara {

/// Scientific notation with enough digits to round-trip a double; '.' decimal
/// separator regardless of locale.
inline std::string fmt_sci(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

inline std::string fmt_int(long long v) { return std::to_string(v); }

/// CSV file with '#' provenance comments, a header row and newline-terminated
/// data rows. No timestamps: identical inputs give byte-identical files.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& comments,
              const std::vector<std::string>& columns)
        : out_(path) {
        require(out_.good(), "csv: cannot open " + path.string());
        for (const auto& c : comments) out_ << "# " << c << "\n";
        write_row(columns);
    }

    void write_row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ",";
            out_ << cells[i];
        }
        out_ << "\n";
    }

    ~CsvWriter() { out_.flush(); }

  private:
    std::ofstream out_;
};

}  // namespace apara
