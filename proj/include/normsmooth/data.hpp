#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "normsmooth/random.hpp"
#include "normsmooth/solver.hpp"
#include "normsmooth/types.hpp"

namespace normsmooth {

struct Dataset {
  SparseRowMatrix A;
  Vector b;
  std::string name;
  enum class Provenance { File, Synthetic } provenance = Provenance::File;
  std::uint64_t seed = 0;

  Index samples() const { return A.rows(); }
  Index features() const { return A.cols(); }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Reads the libsvm text format: "label index:value index:value ...", indices
/// 1-based and strictly increasing per row. The feature count is inferred from
/// the largest index unless dim_override exceeds it. When the file carries
/// exactly two distinct label values, the smaller maps to -1, the larger to +1.
inline Dataset load_libsvm(const std::string& path, Index dim_override = 0) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_libsvm: cannot open " + path);

  std::vector<Eigen::Triplet<double>> entries;
  std::vector<double> labels;
  Index max_index = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;  // blank line
    std::size_t used = 0;
    double label = 0.0;
    try {
      label = std::stod(token, &used);
    } catch (const std::exception&) {
      throw ParseError("load_libsvm: bad label '" + token + "'", line_no);
    }
    if (used != token.size()) throw ParseError("load_libsvm: bad label '" + token + "'", line_no);
    const int row = static_cast<int>(labels.size());
    labels.push_back(label);

    Index prev_index = 0;
    while (ls >> token) {
      const std::size_t colon = token.find(':');
      if (colon == std::string::npos)
        throw ParseError("load_libsvm: expected index:value, got '" + token + "'", line_no);
      Index idx = 0;
      double val = 0.0;
      try {
        idx = static_cast<Index>(std::stoll(token.substr(0, colon), &used));
        if (used != colon) throw std::invalid_argument("trailing");
        val = std::stod(token.substr(colon + 1), &used);
        if (used != token.size() - colon - 1) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError("load_libsvm: malformed pair '" + token + "'", line_no);
      }
      if (idx < 1) throw ParseError("load_libsvm: indices are 1-based", line_no);
      if (idx <= prev_index)
        throw ParseError("load_libsvm: non-increasing feature index " + std::to_string(idx),
                         line_no);
      prev_index = idx;
      max_index = std::max(max_index, idx);
      entries.emplace_back(row, static_cast<int>(idx - 1), val);
    }
  }
  if (labels.empty()) throw std::runtime_error("load_libsvm: no samples in " + path);

  Index dim = max_index;
  if (dim_override > 0) {
    if (dim_override < max_index)
      throw std::invalid_argument("load_libsvm: dimension override below largest index");
    dim = dim_override;
  }
  if (dim == 0) throw std::runtime_error("load_libsvm: no features in " + path);

  Dataset ds;
  ds.A.resize(static_cast<Index>(labels.size()), dim);
  ds.A.setFromTriplets(entries.begin(), entries.end());
  ds.b = Eigen::Map<Vector>(labels.data(), static_cast<Index>(labels.size()));
  std::vector<double> distinct = labels;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() == 2) {
    for (Index i = 0; i < ds.b.size(); ++i) ds.b[i] = ds.b[i] == distinct[0] ? -1.0 : 1.0;
  }
  ds.name = path;
  ds.provenance = Dataset::Provenance::File;
  return ds;
}

inline void write_libsvm(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_libsvm: cannot open " + path);
  char buf[64];
  for (Index i = 0; i < ds.A.rows(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", ds.b[i]);
    out << buf;
    for (SparseRowMatrix::InnerIterator it(ds.A, i); it; ++it) {
      std::snprintf(buf, sizeof(buf), "%.17g", it.value());
      out << ' ' << (it.col() + 1) << ':' << buf;
    }
    out << '\n';
  }
}

/// Reproducible synthetic instances. kind "logistic": spherical features with
/// the requested fill-in, labels sign(<a_i, x*>) with 5% flips around a sparse
/// ground truth x*. kind "sigmoid-ls": same features, b_i = sigmoid(<a_i, x*>)
/// plus small noise.
inline Dataset synth_problem(const std::string& kind, Index N, Index n, double sparsity,
                             std::uint64_t seed) {
  if (N < 1 || n < 1) throw std::invalid_argument("synth_problem: N, n must be positive");
  if (!(sparsity > 0.0 && sparsity <= 1.0))
    throw std::invalid_argument("synth_problem: sparsity must lie in (0, 1]");
  if (kind != "logistic" && kind != "sigmoid-ls")
    throw std::invalid_argument("synth_problem: unknown kind " + kind);

  Rng rng(seed);
  Vector truth = Vector::Zero(n);
  const Index support = std::max<Index>(1, n / 10);
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(order);
  for (Index i = 0; i < support; ++i) truth[order[i]] = rng.uniform() < 0.5 ? -1.0 : 1.0;

  std::vector<Eigen::Triplet<double>> entries;
  for (Index i = 0; i < N; ++i) {
    for (Index j = 0; j < n; ++j) {
      const bool keep = sparsity >= 1.0 || rng.uniform() < sparsity;
      const double value = rng.normal();
      if (keep) entries.emplace_back(static_cast<int>(i), static_cast<int>(j), value);
    }
  }
  Dataset ds;
  ds.A.resize(N, n);
  ds.A.setFromTriplets(entries.begin(), entries.end());

  const Vector margins = ds.A * truth;
  ds.b.resize(N);
  if (kind == "logistic") {
    for (Index i = 0; i < N; ++i) {
      double label = margins[i] >= 0.0 ? 1.0 : -1.0;
      if (rng.uniform() < 0.05) label = -label;
      ds.b[i] = label;
    }
  } else {
    for (Index i = 0; i < N; ++i) {
      const double s = 1.0 / (1.0 + std::exp(-margins[i]));
      ds.b[i] = s + 0.01 * rng.normal();
    }
  }
  ds.name = kind + "-N" + std::to_string(N) + "-n" + std::to_string(n) + "-seed" +
            std::to_string(seed);
  ds.provenance = Dataset::Provenance::Synthetic;
  ds.seed = seed;
  return ds;
}

enum class TraceFormat { Csv, JsonLines };

inline TraceFormat trace_format_from_string(const std::string& s) {
  if (s == "csv") return TraceFormat::Csv;
  if (s == "jsonl" || s == "json-lines") return TraceFormat::JsonLines;
  throw std::invalid_argument("unknown trace format " + s);
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double rel_err(double psi, double psi_star) {
  return (psi - psi_star) / std::max(1.0, psi_star);
}

}  // namespace detail

inline const char* trace_csv_header() {
  return "iter,chi,nat_res,psi,rel_err,merit,alpha,flag,tau,lip_est,nu,cg_iters,cg_status,"
         "backtracks,f_evals,grad_evals,prox_evals,time_sec";
}

/// One row per outer iteration; the relative-error column is computed against
/// the supplied reference value psi_star. time_sec is deliberately last so
/// determinism checks can strip it.
inline void write_trace_csv(const std::vector<TraceRecord>& trace, const std::string& path,
                            double psi_star) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
  out << trace_csv_header() << '\n';
  for (const TraceRecord& r : trace) {
    out << r.iter << ',' << detail::fmt_double(r.chi) << ',' << detail::fmt_double(r.nat_res)
        << ',' << detail::fmt_double(r.psi) << ','
        << detail::fmt_double(detail::rel_err(r.psi, psi_star)) << ','
        << detail::fmt_double(r.merit) << ',' << detail::fmt_double(r.alpha) << ','
        << to_string(r.flag) << ',' << detail::fmt_double(r.tau) << ','
        << detail::fmt_double(r.lip_est) << ',' << detail::fmt_double(r.nu) << ','
        << r.cg_iterations << ',' << to_string(r.cg_status) << ',' << r.backtracks << ','
        << r.f_evals << ',' << r.grad_evals << ',' << r.prox_evals << ','
        << detail::fmt_double(r.time_sec) << '\n';
  }
}

inline void write_trace_jsonl(const std::vector<TraceRecord>& trace, const std::string& path,
                              double psi_star) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_jsonl: cannot open " + path);
  for (const TraceRecord& r : trace) {
    nlohmann::ordered_json row;
    row["iter"] = r.iter;
    row["chi"] = r.chi;
    row["nat_res"] = r.nat_res;
    row["psi"] = r.psi;
    row["rel_err"] = detail::rel_err(r.psi, psi_star);
    row["merit"] = r.merit;
    row["alpha"] = r.alpha;
    row["flag"] = to_string(r.flag);
    row["tau"] = r.tau;
    row["lip_est"] = r.lip_est;
    row["nu"] = r.nu;
    row["cg_iters"] = r.cg_iterations;
    row["cg_status"] = to_string(r.cg_status);
    row["backtracks"] = r.backtracks;
    row["f_evals"] = r.f_evals;
    row["grad_evals"] = r.grad_evals;
    row["prox_evals"] = r.prox_evals;
    row["time_sec"] = r.time_sec;
    out << row.dump() << '\n';
  }
}

inline void write_trace(const std::vector<TraceRecord>& trace, const std::string& path,
                        TraceFormat format, double psi_star) {
  if (format == TraceFormat::Csv)
    write_trace_csv(trace, path, psi_star);
  else
    write_trace_jsonl(trace, path, psi_star);
}

/// Reads back a json-lines trace (numeric fields only; enums stay strings in
/// the file and are re-mapped here).
inline std::vector<TraceRecord> read_trace_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_trace_jsonl: cannot open " + path);
  std::vector<TraceRecord> trace;
  std::string line;
  auto flag_of = [](const std::string& s) {
    if (s == "FO") return TraceFlag::FO;
    if (s == "SO") return TraceFlag::SO;
    return TraceFlag::None;
  };
  auto cg_of = [](const std::string& s) {
    if (s == "tol") return TraceCg::Tol;
    if (s == "zero-start") return TraceCg::ZeroStart;
    if (s == "neg-curv") return TraceCg::NegCurv;
    if (s == "cap") return TraceCg::Cap;
    return TraceCg::None;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = nlohmann::json::parse(line);
    TraceRecord r;
    r.iter = row.at("iter").get<int>();
    r.chi = row.at("chi").get<double>();
    r.nat_res = row.at("nat_res").get<double>();
    r.psi = row.at("psi").get<double>();
    r.merit = row.at("merit").get<double>();
    r.alpha = row.at("alpha").get<double>();
    r.flag = flag_of(row.at("flag").get<std::string>());
    r.tau = row.at("tau").get<double>();
    r.lip_est = row.at("lip_est").get<double>();
    r.nu = row.at("nu").get<double>();
    r.cg_iterations = row.at("cg_iters").get<int>();
    r.cg_status = cg_of(row.at("cg_status").get<std::string>());
    r.backtracks = row.at("backtracks").get<int>();
    r.f_evals = row.at("f_evals").get<long>();
    r.grad_evals = row.at("grad_evals").get<long>();
    r.prox_evals = row.at("prox_evals").get<long>();
    r.time_sec = row.at("time_sec").get<double>();
    trace.push_back(r);
  }
  return trace;
}

}  // namespace normsmooth
