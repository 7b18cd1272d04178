#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace spdelab {

// CSV with a header row, UTF-8, '.' decimal, locale-free shortest-round-trip
// doubles (std::to_chars), so identical data yields identical bytes.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::span<const std::string> header);
  ~CsvWriter();

  void row(std::span<const double> values);
  void raw_row(const std::string& line);
  static std::string format(double v);

 private:
  std::ofstream out_;
};

std::string format_double(double v);

// flat binary archive of replicate field values on a fixed grid
struct PathArchive {
  std::vector<double> times, xs;
  std::int64_t reps = 0;
  std::vector<double> values;  // reps x times x xs, row-major

  void save(const std::string& path) const;
  static PathArchive load(const std::string& path);

  std::span<const double> rep(std::int64_t r) const {
    const std::size_t stride = times.size() * xs.size();
    return {values.data() + static_cast<std::size_t>(r) * stride, stride};
  }
};

}  // namespace spdelab
