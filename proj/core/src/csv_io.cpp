#include "cfid/csv_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cfid/errors.hpp"

namespace cfid {

namespace fs = std::filesystem;

void atomic_write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw ValidationError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

static void append_double(std::string& s, double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  s += buf;
}

void write_sequence_csv(const fs::path& path, const CarFollowingSequence& seq) {
  std::string out;
  out.reserve(seq.frames.size() * 64 + 16);
  out += "t,v,a,h,hdot\n";
  char tbuf[32];
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const Frame& f = seq.frames[k];
    std::snprintf(tbuf, sizeof(tbuf), "%.3f", static_cast<double>(k) * seq.dt);
    out += tbuf;
    out += ',';
    append_double(out, f.v);
    out += ',';
    append_double(out, f.a);
    out += ',';
    append_double(out, f.h);
    out += ',';
    append_double(out, f.hdot);
    out += '\n';
  }
  atomic_write_file(path, out);
}

CarFollowingSequence read_sequence_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open sequence file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty sequence file: " + path.string());
  // tolerate a UTF-8 BOM and trailing CR
  if (line.size() >= 3 && line.compare(0, 3, "\xef\xbb\xbf") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,v,a,h,hdot")
    throw ValidationError("bad header in " + path.string() + ": expected t,v,a,h,hdot");

  CarFollowingSequence seq;
  seq.source_id = path.stem().string();
  std::vector<double> times;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    double vals[5];
    std::string cell;
    for (int c = 0; c < 5; ++c) {
      if (!std::getline(row, cell, ','))
        throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                              ": expected 5 columns");
      try {
        vals[c] = std::stod(cell);
      } catch (const std::exception&) {
        throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                              ": bad number '" + cell + "'");
      }
    }
    times.push_back(vals[0]);
    seq.frames.push_back({vals[1], vals[2], vals[3], vals[4]});
  }
  if (seq.frames.empty()) throw ValidationError("no frames in " + path.string());

  if (times.size() >= 2) {
    seq.dt = times[1] - times[0];
    if (!(seq.dt > 0.0))
      throw ValidationError("non-increasing time column in " + path.string());
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (std::abs(times[k] - static_cast<double>(k) * seq.dt) > 1e-3)
        throw ValidationError("time column not on a fixed grid in " + path.string() +
                              " near row " + std::to_string(k + 2));
    }
  }
  return seq;
}

void write_dataset_csv(const fs::path& root, const Dataset& ds) {
  std::map<std::string, int> counters;
  for (const auto& seq : ds.sequences) {
    const std::string driver = seq.driver_id.empty() ? "unlabeled" : seq.driver_id;
    const int n = counters[driver]++;
    char name[32];
    std::snprintf(name, sizeof(name), "seq_%04d.csv", n);
    write_sequence_csv(root / driver / name, seq);
  }
}

Dataset read_dataset_csv(const fs::path& root, const std::string& split) {
  if (!fs::is_directory(root))
    throw ValidationError("dataset directory not found: " + root.string());
  Dataset ds;
  ds.split = split;

  std::vector<fs::path> driver_dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) driver_dirs.push_back(e.path());
  std::sort(driver_dirs.begin(), driver_dirs.end());

  for (const auto& dir : driver_dirs) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      CarFollowingSequence seq = read_sequence_csv(f);
      seq.driver_id = dir.filename().string();
      seq.source_id = seq.driver_id + "/" + f.stem().string();
      ds.sequences.push_back(std::move(seq));
    }
  }
  if (ds.sequences.empty())
    throw ValidationError("no sequence files under " + root.string());
  return ds;
}

}  // namespace cfid
