// CSV ingestion and canonical output for frames.
//
// Format: comma-separated, one header row, UTF-8, '.' decimal separator, no
// quoting. Numeric cells are parsed with std::from_chars (locale independent)
// and must be consumed entirely. Canonical output writes doubles in their
// shortest round-trip form, so write(read(write(f))) == write(f).

#ifndef MASSFUSE_CSV_H_
#define MASSFUSE_CSV_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "massfuse/frame.h"

namespace massfuse {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws SchemaError when the column is absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  // Numeric column; ParseError carries the 1-based data row.
  std::vector<double> numeric_column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

double parse_double(std::string_view cell, std::size_t row,
                    const std::string& column);
std::string format_double(double v);

// Columns: id, covariates..., outcomes..., [delta_b], [stratum]. Extra
// columns in the file are ignored. Throws SchemaError, ParseError,
// EmptyFrameError, IOError.
Frame read_frame_csv(const std::filesystem::path& path,
                     const FrameSchema& schema);
Frame parse_frame_csv(std::string_view text, const FrameSchema& schema);

std::string format_frame_csv(const Frame& frame);
void write_frame_csv(const Frame& frame, const std::filesystem::path& path);

}  // namespace massfuse

#endif  // MASSFUSE_CSV_H_
