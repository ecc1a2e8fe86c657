#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qtsynth/errors.hpp"
#include "qtsynth/metrics.hpp"
#include "qtsynth/mfpca.hpp"
#include "qtsynth/qts.hpp"
#include "qtsynth/rng.hpp"
#include "qtsynth/tuning.hpp"

namespace qtsynth {

namespace detail {

/// 17 significant digits: doubles survive a write/read roundtrip.
inline std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline double parse_double(const std::string& s, std::size_t line_no) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  }
  if (pos != s.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": trailing characters in '" + s + "'");
  }
  return v;
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace detail

inline constexpr const char* kQtsCsvHeader = "subject_id,t,qw,qx,qy,qz";

/// Reads a unit-QTS sample. Rows are grouped by subject in order of first
/// appearance; every subject must cover the identical grid. Quaternions
/// are renormalized on read and each series is flipped so it starts with
/// w >= 0.
inline QtsSample read_qts_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file: " + path.string());
  if (detail::strip_cr(line) != kQtsCsvHeader) {
    throw ParseError("line 1: expected header '" + std::string(kQtsCsvHeader) + "'");
  }

  struct Row {
    double t;
    UnitQuaternion q;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Row>> by_subject;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 6) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 6 fields, got " +
                       std::to_string(fields.size()));
    }
    const double t = detail::parse_double(fields[1], line_no);
    const double qw = detail::parse_double(fields[2], line_no);
    const double qx = detail::parse_double(fields[3], line_no);
    const double qy = detail::parse_double(fields[4], line_no);
    const double qz = detail::parse_double(fields[5], line_no);
    UnitQuaternion q;
    try {
      q = UnitQuaternion(qw, qx, qy, qz);
    } catch (const NormViolation& e) {
      throw NormViolation("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (by_subject.find(fields[0]) == by_subject.end()) order.push_back(fields[0]);
    by_subject[fields[0]].push_back({t, q});
  }
  if (order.empty()) throw ParseError("no data rows in " + path.string());

  QtsSample sample;
  sample.ids = order;
  for (const auto& id : order) {
    auto& rows = by_subject[id];
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
    std::vector<double> grid;
    std::vector<UnitQuaternion> series;
    for (const auto& r : rows) {
      grid.push_back(r.t);
      series.push_back(r.q);
    }
    if (sample.grid.empty()) {
      sample.grid = grid;
      try {
        validate_grid(sample.grid);
      } catch (const GridMismatch& e) {
        throw GridMismatch("subject " + id + ": " + e.what());
      }
    } else if (grid != sample.grid) {
      throw GridMismatch("subject " + id + " does not cover the shared grid");
    }
    if (series.front().w() < 0.0) {
      for (auto& q : series) q = q.negated();
    }
    sample.series.push_back(std::move(series));
  }
  sample.validate();
  return sample;
}

inline void write_qts_csv(const QtsSample& sample, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  out << kQtsCsvHeader << "\n";
  for (std::size_t i = 0; i < sample.n_subjects(); ++i) {
    for (std::size_t k = 0; k < sample.n_points(); ++k) {
      const auto& q = sample.series[i][k];
      out << sample.ids[i] << ',' << detail::fmt17(sample.grid[k]) << ',' << detail::fmt17(q.w())
          << ',' << detail::fmt17(q.x()) << ',' << detail::fmt17(q.y()) << ','
          << detail::fmt17(q.z()) << "\n";
    }
  }
}

inline void write_scores_csv(const std::vector<std::string>& ids, const Eigen::MatrixXd& scores,
                             const std::filesystem::path& path) {
  if (static_cast<Eigen::Index>(ids.size()) != scores.rows()) {
    throw ShapeMismatch("ids/scores length mismatch");
  }
  auto out = detail::open_output(path);
  out << "subject_id";
  for (Eigen::Index k = 0; k < scores.cols(); ++k) out << ",pc" << (k + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    out << ids[i];
    for (Eigen::Index k = 0; k < scores.cols(); ++k) out << ',' << detail::fmt17(scores(i, k));
    out << "\n";
  }
}

inline std::pair<std::vector<std::string>, Eigen::MatrixXd> read_scores_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file: " + path.string());
  const auto header = detail::split_csv_line(detail::strip_cr(line));
  if (header.size() < 2 || header[0] != "subject_id") {
    throw ParseError("line 1: expected header 'subject_id,pc1,...'");
  }
  const std::size_t cols = header.size() - 1;

  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != cols + 1) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(cols + 1) + " fields");
    }
    ids.push_back(fields[0]);
    std::vector<double> row;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      row.push_back(detail::parse_double(fields[k], line_no));
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd scores(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < cols; ++k) scores(i, k) = rows[i][k];
  }
  return {std::move(ids), std::move(scores)};
}

/// Seeded fixture: n subjects on the 0..100 grid built from three fixed
/// smooth tangent modes with Gaussian coefficients (sd 0.15, 0.08, 0.04,
/// clamped at four sigmas) around a fixed nontrivial mean series. Tangent
/// norms stay below pi/2 by construction.
inline QtsSample generate_demo_sample(int n, std::uint64_t seed) {
  if (n < 3) throw InvalidConfig("demo sample needs n >= 3");

  const Eigen::Vector3d u1 = Eigen::Vector3d(1.0, 0.4, -0.2).normalized();
  const Eigen::Vector3d u2 = Eigen::Vector3d(-0.3, 1.0, 0.5).normalized();
  const Eigen::Vector3d u3 = Eigen::Vector3d(0.2, -0.5, 1.0).normalized();
  const double sd[3] = {0.15, 0.08, 0.04};

  QtsSample sample;
  sample.grid.resize(101);
  for (int k = 0; k <= 100; ++k) sample.grid[k] = k;

  std::vector<UnitQuaternion> mean_series;
  for (int k = 0; k <= 100; ++k) {
    const double t = sample.grid[k];
    const TangentVector a(0.6 * std::sin(M_PI * t / 100.0), 0.4 * std::sin(2 * M_PI * t / 100.0),
                          0.2 * (1.0 - std::cos(2 * M_PI * t / 100.0)));
    mean_series.push_back(quat_exp(a));
  }

  Rng rng(derive_seed(seed, 0xDE30));
  for (int i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "subj%03d", i + 1);
    sample.ids.emplace_back(id);

    double c[3];
    for (int m = 0; m < 3; ++m) {
      c[m] = std::clamp(sd[m] * rng.normal(), -4.0 * sd[m], 4.0 * sd[m]);
    }
    std::vector<UnitQuaternion> series;
    series.reserve(101);
    for (int k = 0; k <= 100; ++k) {
      const double t = sample.grid[k];
      const TangentVector v = c[0] * std::sin(2 * M_PI * t / 100.0) * u1 +
                              c[1] * std::cos(2 * M_PI * t / 50.0) * u2 +
                              c[2] * std::sin(2 * M_PI * t / 33.0) * u3;
      series.push_back(mean_series[k] * quat_exp(v));
    }
    sample.series.push_back(std::move(series));
  }
  return sample;
}

inline nlohmann::ordered_json model_summary_json(const MfpcaModel& model) {
  nlohmann::ordered_json j;
  j["n_subjects"] = model.n_samples;
  j["n_points"] = model.grid.size();
  j["n_components"] = model.n_components();
  j["degenerate"] = model.degenerate;
  j["eigenvalues"] = std::vector<double>(model.eigenvalues.data(),
                                         model.eigenvalues.data() + model.eigenvalues.size());
  const Eigen::VectorXd shares = model.inertia_shares();
  std::vector<double> pct(shares.size());
  for (Eigen::Index k = 0; k < shares.size(); ++k) pct[k] = 100.0 * shares[k];
  j["inertia_pct"] = pct;
  return j;
}

inline nlohmann::ordered_json report_json(const MetricReport& report) {
  nlohmann::ordered_json j;
  j["paired"] = report.paired;
  j["k_min"] = report.k_min;
  j["k_max"] = report.k_max;
  j["frobenius"] = report.frobenius;
  if (report.rv) j["rv"] = *report.rv;
  j["rho_mean"] = report.rho_mean;
  j["rho_sd"] = report.rho_sd;
  j["rho_distr"] = report.rho_distr;
  if (report.cloaking) j["local_cloaking"] = *report.cloaking;
  if (report.mean_local_cloaking) j["mean_local_cloaking"] = *report.mean_local_cloaking;
  if (report.hidden_rate_value) j["hidden_rate"] = *report.hidden_rate_value;
  return j;
}

inline void write_tuning_csv(const TuningReport& report, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  out << "alpha0,gamma,tau,mean_dmin,mean_dmax,pass\n";
  for (const auto& row : report.rows) {
    out << detail::fmt17(row.alpha0) << ',' << row.gamma << ',' << row.tau << ','
        << detail::fmt17(row.mean_dmin) << ',' << detail::fmt17(row.mean_dmax) << ','
        << (row.pass ? 1 : 0) << "\n";
  }
}

/// Everything a command may emit; absent pieces are skipped.
struct RunOutputs {
  const QtsSample* original = nullptr;
  const QtsSample* synthetic = nullptr;
  const MfpcaModel* model = nullptr;
  const Eigen::MatrixXd* original_scores = nullptr;
  const Eigen::MatrixXd* synthetic_scores = nullptr;
  const MetricReport* report = nullptr;
  const TuningReport* tuning = nullptr;
  std::string method = "synthesize";
};

/// Writes the output bundle into a directory (created if missing):
/// synthetic_qts.csv, scores_*.csv, model_summary.json, report.json,
/// tuning.csv, and long-format plotdata_* tables for external plotting.
inline void write_outputs(const RunOutputs& outputs, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string());

  if (outputs.synthetic) write_qts_csv(*outputs.synthetic, dir / "synthetic_qts.csv");
  if (outputs.original_scores && outputs.original) {
    write_scores_csv(outputs.original->ids, *outputs.original_scores, dir / "scores_original.csv");
  }
  if (outputs.synthetic_scores && outputs.synthetic) {
    write_scores_csv(outputs.synthetic->ids, *outputs.synthetic_scores,
                     dir / "scores_synthetic.csv");
  }
  if (outputs.model) {
    auto out = detail::open_output(dir / "model_summary.json");
    out << model_summary_json(*outputs.model).dump(2) << "\n";
  }
  if (outputs.report) {
    auto out = detail::open_output(dir / "report.json");
    out << report_json(*outputs.report).dump(2) << "\n";
  }
  if (outputs.tuning) write_tuning_csv(*outputs.tuning, dir / "tuning.csv");

  // Long-format plot tables: per-component curves, score scatter, and the
  // per-k graph distances.
  if (outputs.original && outputs.synthetic) {
    auto out = detail::open_output(dir / "plotdata_qts.csv");
    out << "dataset,subject_id,t,component,value\n";
    const char* names[4] = {"qw", "qx", "qy", "qz"};
    const auto emit = [&](const char* dataset, const QtsSample& s) {
      for (std::size_t i = 0; i < s.n_subjects(); ++i) {
        for (std::size_t k = 0; k < s.n_points(); ++k) {
          const auto& q = s.series[i][k];
          const double comps[4] = {q.w(), q.x(), q.y(), q.z()};
          for (int c = 0; c < 4; ++c) {
            out << dataset << ',' << s.ids[i] << ',' << detail::fmt17(s.grid[k]) << ',' << names[c]
                << ',' << detail::fmt17(comps[c]) << "\n";
          }
        }
      }
    };
    emit("original", *outputs.original);
    emit("synthetic", *outputs.synthetic);
  }
  if (outputs.original && outputs.synthetic && outputs.original_scores &&
      outputs.synthetic_scores && outputs.original_scores->cols() >= 2) {
    auto out = detail::open_output(dir / "plotdata_scores.csv");
    out << "dataset,subject_id,pc1,pc2\n";
    for (Eigen::Index i = 0; i < outputs.original_scores->rows(); ++i) {
      out << "original," << outputs.original->ids[i] << ','
          << detail::fmt17((*outputs.original_scores)(i, 0)) << ','
          << detail::fmt17((*outputs.original_scores)(i, 1)) << "\n";
    }
    for (Eigen::Index i = 0; i < outputs.synthetic_scores->rows(); ++i) {
      out << "synthetic," << outputs.synthetic->ids[i] << ','
          << detail::fmt17((*outputs.synthetic_scores)(i, 0)) << ','
          << detail::fmt17((*outputs.synthetic_scores)(i, 1)) << "\n";
    }
  }
  if (outputs.report) {
    auto out = detail::open_output(dir / "plotdata_frobenius.csv");
    out << "k,method,value\n";
    for (std::size_t idx = 0; idx < outputs.report->frobenius.size(); ++idx) {
      out << (outputs.report->k_min + static_cast<int>(idx)) << ',' << outputs.method << ','
          << detail::fmt17(outputs.report->frobenius[idx]) << "\n";
    }
  }
}

}  // namespace qtsynth
