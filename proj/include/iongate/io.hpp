#pragma once

// Result persistence: CSV and JSON writers with 17-significant-digit
// serialization and atomic (write-then-rename) file creation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "iongate/drive.hpp"
#include "iongate/errors.hpp"
#include "iongate/phase_forms.hpp"
#include "iongate/trap.hpp"

namespace iongate {

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io: cannot open " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_atomic(path, j.dump(2) + "\n");
}

/// Mode table: mode_index, nu_over_nu1, eta, O_j1..O_jN.
inline std::string modes_csv(const IonChainModes& m) {
  std::ostringstream os;
  os << "mode_index,nu_over_nu1,eta";
  for (int n = 0; n < m.n_ions; ++n) os << ",O_j" << (n + 1);
  os << "\n";
  for (int jj = 0; jj < m.n_ions; ++jj) {
    os << jj << "," << fmt17(m.nu[jj]) << "," << fmt17(m.eta[jj]);
    for (int n = 0; n < m.n_ions; ++n) os << "," << fmt17(m.O(jj, n));
    os << "\n";
  }
  return os.str();
}

/// Spectrum: tone_index, omega_over_nu1, r_n.
inline std::string spectrum_csv(const ToneBasis& tones, const AmplitudeVector& amps) {
  std::ostringstream os;
  os << "tone_index,omega_over_nu1,r_n\n";
  for (int i = 0; i < tones.n_tones(); ++i)
    os << tones.index[i] << "," << fmt17(tones.omega[i]) << "," << fmt17(amps.r[i]) << "\n";
  return os.str();
}

/// Waveform: t_over_T, amplitude_over_Omega.
inline std::string waveform_csv(const ToneBasis& tones, const AmplitudeVector& amps,
                                int samples = 1001) {
  std::ostringstream os;
  os << "t_over_T,amplitude_over_Omega\n";
  for (int s = 0; s < samples; ++s) {
    double t = tones.T * double(s) / double(samples - 1);
    double v = 0.0;
    for (int i = 0; i < tones.n_tones(); ++i)
      v += amps.r[i] * std::cos(tones.omega[i] * t + tones.phi[i]);
    os << fmt17(t / tones.T) << "," << fmt17(v) << "\n";
  }
  return os.str();
}

/// Trajectories: t_over_T, then per mode Re alpha_j, Im alpha_j, A_j.
inline std::string trajectory_csv(const Trajectory& tr, double T) {
  std::ostringstream os;
  const int n = int(tr.alpha.rows());
  os << "t_over_T";
  for (int j = 0; j < n; ++j)
    os << ",re_alpha_" << (j + 1) << ",im_alpha_" << (j + 1) << ",A_" << (j + 1);
  os << "\n";
  for (int s = 0; s < int(tr.t_grid.size()); ++s) {
    os << fmt17(tr.t_grid[s] / T);
    for (int j = 0; j < n; ++j)
      os << "," << fmt17(tr.alpha(j, s).real()) << "," << fmt17(tr.alpha(j, s).imag()) << ","
         << fmt17(tr.A(j, s));
    os << "\n";
  }
  return os.str();
}

/// Coupling matrix as a plain N x N CSV.
inline std::string coupling_csv(const Eigen::MatrixXd& J) {
  std::ostringstream os;
  for (long i = 0; i < J.rows(); ++i) {
    for (long k = 0; k < J.cols(); ++k) os << (k ? "," : "") << fmt17(J(i, k));
    os << "\n";
  }
  return os.str();
}

inline nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (long r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (long c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[long(i)] = a[i].get<double>();
  return v;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& a) {
  if (a.empty()) return Eigen::MatrixXd();
  Eigen::MatrixXd m(a.size(), a[0].size());
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t c = 0; c < a[r].size(); ++c) m(long(r), long(c)) = a[r][c].get<double>();
  return m;
}

}  // namespace iongate
