#include "spdelab/csvio.hpp"

#include <charconv>
#include <cstring>
#include <stdexcept>

namespace spdelab {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, std::span<const std::string> header)
    : out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

CsvWriter::~CsvWriter() = default;

void CsvWriter::row(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ << ',';
    out_ << format_double(values[i]);
  }
  out_ << '\n';
}

void CsvWriter::raw_row(const std::string& line) { out_ << line << '\n'; }

std::string CsvWriter::format(double v) { return format_double(v); }

namespace {
constexpr char kMagic[8] = {'S', 'P', 'D', 'E', 'P', 'A', 'T', 'H'};
constexpr std::int64_t kVersion = 1;

template <class T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void read_pod(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace

void PathArchive::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("PathArchive: cannot open " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  const std::int64_t nt = static_cast<std::int64_t>(times.size());
  const std::int64_t nx = static_cast<std::int64_t>(xs.size());
  write_pod(out, nt);
  write_pod(out, nx);
  write_pod(out, reps);
  out.write(reinterpret_cast<const char*>(times.data()),
            static_cast<std::streamsize>(times.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(xs.data()),
            static_cast<std::streamsize>(xs.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("PathArchive: write failed for " + path);
}

PathArchive PathArchive::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("PathArchive: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("PathArchive: bad magic in " + path);
  std::int64_t version = 0, nt = 0, nx = 0;
  read_pod(in, version);
  if (version != kVersion) throw std::runtime_error("PathArchive: unsupported version");
  PathArchive a;
  read_pod(in, nt);
  read_pod(in, nx);
  read_pod(in, a.reps);
  a.times.resize(static_cast<std::size_t>(nt));
  a.xs.resize(static_cast<std::size_t>(nx));
  a.values.resize(static_cast<std::size_t>(a.reps) * static_cast<std::size_t>(nt) *
                  static_cast<std::size_t>(nx));
  in.read(reinterpret_cast<char*>(a.times.data()),
          static_cast<std::streamsize>(a.times.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(a.xs.data()),
          static_cast<std::streamsize>(a.xs.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(a.values.data()),
          static_cast<std::streamsize>(a.values.size() * sizeof(double)));
  if (!in) throw std::runtime_error("PathArchive: truncated file " + path);
  return a;
}

}  // namespace spdelab
