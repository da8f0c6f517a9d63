#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "hdoa/hankel.hpp"
#include "hdoa/net.hpp"
#include "hdoa/util.hpp"

namespace hdoa {

// Network checkpoint, bound to one array configuration. Layout (see
// docs/FORMATS.md): magic "IHTN", u32 format version, u32 header length,
// key=value header text, then all tensors as little-endian f64 in phase
// order 0..K; within a phase enc W1,b1,W2,b2,W3,b3, dec likewise, then
// beta, gamma. Matrices are written row-major.
inline constexpr char kCheckpointMagic[4] = {'I', 'H', 'T', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ArrayConfig config;
  ResidualMode residual_mode = ResidualMode::masked;
  NetParams params;
};

namespace detail {

inline void write_matrix(std::ostream& os, const Eigen::MatrixXd& w) {
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) write_f64le(os, w(i, j));
}

inline void read_matrix(std::istream& is, Eigen::MatrixXd& w) {
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = read_f64le(is);
}

inline void write_vector(std::ostream& os, const Eigen::VectorXd& b) {
  for (Eigen::Index i = 0; i < b.size(); ++i) write_f64le(os, b[i]);
}

inline void read_vector(std::istream& is, Eigen::VectorXd& b) {
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = read_f64le(is);
}

inline std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  for (const std::string& raw : split(text, '\n')) {
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("malformed header line: " + line);
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const ArrayConfig& config,
                            const NetParams& params, ResidualMode mode) {
  const HankelIndexMap map = build_index_map(config);
  std::ostringstream header;
  header << "m=" << config.m << "\n";
  header << "spacing_ratio=" << fmt_double(config.spacing_ratio) << "\n";
  header << "omega=";
  for (std::size_t i = 0; i < config.omega.size(); ++i)
    header << (i ? "," : "") << config.omega[i];
  header << "\n";
  header << "n1=" << map.n1 << "\n";
  header << "n2=" << map.n2 << "\n";
  header << "k=" << params.k_phases() << "\n";
  header << "flatten_order=row_major\n";
  header << "residual_mode=" << to_string(mode) << "\n";
  const std::string head = header.str();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  os.write(kCheckpointMagic, 4);
  write_u32le(os, kCheckpointVersion);
  write_u32le(os, static_cast<std::uint32_t>(head.size()));
  os.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const PhaseParams& ph : params.phases) {
    for (int l = 0; l < 3; ++l) {
      detail::write_matrix(os, ph.enc_w[l]);
      detail::write_vector(os, ph.enc_b[l]);
    }
    for (int l = 0; l < 3; ++l) {
      detail::write_matrix(os, ph.dec_w[l]);
      detail::write_vector(os, ph.dec_b[l]);
    }
    write_f64le(os, ph.beta);
    write_f64le(os, ph.gamma);
  }
  if (!os) throw std::runtime_error("failed writing checkpoint " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw std::runtime_error("not an IHTN checkpoint: " + path);
  const std::uint32_t version = read_u32le(is);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t head_len = read_u32le(is);
  std::string head(head_len, '\0');
  is.read(head.data(), head_len);
  if (!is) throw std::runtime_error("truncated checkpoint header");
  const auto kv = detail::parse_kv(head);

  Checkpoint ckpt;
  ckpt.config.m = std::stoi(kv.at("m"));
  ckpt.config.spacing_ratio = std::stod(kv.at("spacing_ratio"));
  for (const std::string& tok : split(kv.at("omega"), ','))
    ckpt.config.omega.push_back(std::stoi(trim(tok)));
  ckpt.config.validate();
  ckpt.residual_mode = residual_mode_from_string(kv.at("residual_mode"));
  const int k_phases = std::stoi(kv.at("k"));

  const HankelIndexMap map = build_index_map(ckpt.config);
  if (map.n1 != std::stoi(kv.at("n1")) || map.n2 != std::stoi(kv.at("n2")))
    throw std::runtime_error("checkpoint Hankel shape disagrees with its array config");
  if (kv.at("flatten_order") != "row_major")
    throw std::runtime_error("unsupported flatten order " + kv.at("flatten_order"));

  const int enc_dim = static_cast<int>(map.phi.size());
  const int dec_dim = 2 * map.hankel_size();
  ckpt.params.phases.resize(k_phases + 1);
  for (PhaseParams& ph : ckpt.params.phases) {
    for (int l = 0; l < 3; ++l) {
      ph.enc_w[l].resize(enc_dim, enc_dim);
      ph.enc_b[l].resize(enc_dim);
      detail::read_matrix(is, ph.enc_w[l]);
      detail::read_vector(is, ph.enc_b[l]);
    }
    for (int l = 0; l < 3; ++l) {
      ph.dec_w[l].resize(dec_dim, dec_dim);
      ph.dec_b[l].resize(dec_dim);
      detail::read_matrix(is, ph.dec_w[l]);
      detail::read_vector(is, ph.dec_b[l]);
    }
    ph.beta = read_f64le(is);
    ph.gamma = read_f64le(is);
  }
  is.peek();
  if (!is.eof()) throw std::runtime_error("trailing bytes in checkpoint " + path);
  return ckpt;
}

}  // namespace hdoa
