#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdoa/array_signal.hpp"
#include "hdoa/hankel.hpp"
#include "hdoa/util.hpp"

namespace hdoa {

// On-disk dataset: a directory holding `manifest.txt` (key=value) and
// `samples.bin`, little-endian f64 laid out as
// [count x (2m label floats || 2m input floats)], each snapshot stored as
// its m real parts followed by its m imaginary parts. See docs/FORMATS.md.
inline constexpr std::uint32_t kDatasetFormatVersion = 1;

struct StoredDataset {
  ArrayConfig config;
  DatasetParams params;
  std::vector<SamplePair> samples;  // sources/snr not persisted, see format doc
};

inline void write_dataset(const std::string& dir, const ArrayConfig& config,
                          const DatasetParams& params,
                          const std::vector<SamplePair>& samples) {
  std::filesystem::create_directories(dir);
  std::ostringstream man;
  man << "format_version=" << kDatasetFormatVersion << "\n";
  man << "m=" << config.m << "\n";
  man << "spacing_ratio=" << fmt_double(config.spacing_ratio) << "\n";
  man << "omega=";
  for (std::size_t i = 0; i < config.omega.size(); ++i)
    man << (i ? "," : "") << config.omega[i];
  man << "\n";
  man << "count=" << samples.size() << "\n";
  man << "p=" << params.p << "\n";
  man << "snr_lo_db=" << fmt_double(params.snr_lo_db) << "\n";
  man << "snr_hi_db=" << fmt_double(params.snr_hi_db) << "\n";
  man << "seed=" << params.seed << "\n";
  man << "min_separation_deg=" << fmt_double(params.min_separation_deg) << "\n";
  write_file(dir + "/manifest.txt", man.str());

  std::ofstream os(dir + "/samples.bin", std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + dir + "/samples.bin");
  for (const SamplePair& s : samples) {
    const Eigen::VectorXd label = complex_to_stacked(s.label.values);
    const Eigen::VectorXd input = complex_to_stacked(s.input.values);
    for (Eigen::Index i = 0; i < label.size(); ++i) write_f64le(os, label[i]);
    for (Eigen::Index i = 0; i < input.size(); ++i) write_f64le(os, input[i]);
  }
  if (!os) throw std::runtime_error("failed writing " + dir + "/samples.bin");
}

inline StoredDataset read_dataset(const std::string& dir) {
  StoredDataset ds;
  std::map<std::string, std::string> kv;
  for (const std::string& raw : split(read_file(dir + "/manifest.txt"), '\n')) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("malformed dataset manifest line: " + line);
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  if (std::stoul(kv.at("format_version")) != kDatasetFormatVersion)
    throw std::runtime_error("unsupported dataset format version");
  ds.config.m = std::stoi(kv.at("m"));
  ds.config.spacing_ratio = std::stod(kv.at("spacing_ratio"));
  for (const std::string& tok : split(kv.at("omega"), ','))
    ds.config.omega.push_back(std::stoi(trim(tok)));
  ds.config.validate();
  ds.params.count = std::stoi(kv.at("count"));
  ds.params.p = std::stoi(kv.at("p"));
  ds.params.snr_lo_db = std::stod(kv.at("snr_lo_db"));
  ds.params.snr_hi_db = std::stod(kv.at("snr_hi_db"));
  ds.params.seed = std::stoull(kv.at("seed"));
  ds.params.min_separation_deg = std::stod(kv.at("min_separation_deg"));

  std::ifstream is(dir + "/samples.bin", std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + dir + "/samples.bin");
  ds.samples.resize(ds.params.count);
  Eigen::VectorXd buf(2 * ds.config.m);
  for (SamplePair& s : ds.samples) {
    for (Eigen::Index i = 0; i < buf.size(); ++i) buf[i] = read_f64le(is);
    s.label = Snapshot{stacked_to_complex(buf), SnapshotKind::full_clean};
    for (Eigen::Index i = 0; i < buf.size(); ++i) buf[i] = read_f64le(is);
    s.input = Snapshot{stacked_to_complex(buf), SnapshotKind::masked};
  }
  is.peek();
  if (!is.eof()) throw std::runtime_error("trailing bytes in " + dir + "/samples.bin");
  return ds;
}

}  // namespace hdoa
