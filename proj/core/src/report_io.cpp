#include "sketchreg/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "sketchreg/data.hpp"
#include "sketchreg/error.hpp"

namespace sketchreg::io {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON has no infinity; non-finite values are exported as null.
nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

nlohmann::json vec(const DenseVector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

}  // namespace

std::string to_key_value(const metrics::EmbeddingReport& r, const std::string& scope) {
  std::ostringstream o;
  o << scope << ".deviation=" << fmt(r.deviation) << '\n'
    << scope << ".epsilon_target=" << fmt(r.epsilon_target) << '\n'
    << scope << ".pass=" << (r.pass ? "true" : "false") << '\n'
    << scope << ".squared_singular_values_preserved="
    << (r.squared_singular_values_preserved ? "true" : "false") << '\n'
    << scope << ".inverse_singular_values_preserved="
    << (r.inverse_singular_values_preserved ? "true" : "false") << '\n';
  for (Eigen::Index i = 0; i < r.singular_ratios.size(); ++i) {
    o << scope << ".singular_ratio." << i << '=' << fmt(r.singular_ratios(i)) << '\n';
  }
  return o.str();
}

std::string to_key_value(const metrics::BoundReport& r) {
  std::ostringstream o;
  const std::string& s = r.name;
  o << s << ".lhs=" << fmt(r.lhs) << '\n'
    << s << ".rhs=" << fmt(r.rhs) << '\n'
    << s << ".satisfied=" << (r.satisfied ? "true" : "false") << '\n'
    << s << ".slack=" << fmt(r.slack) << '\n'
    << s << ".applicable=" << (r.applicable ? "true" : "false") << '\n';
  for (const auto& [k, v] : r.details) o << s << '.' << k << '=' << fmt(v) << '\n';
  return o.str();
}

std::string to_key_value(const metrics::InstabilityReport& r, const std::string& scope) {
  std::ostringstream o;
  o << scope << ".kappa_x=" << fmt(r.kappa_x) << '\n'
    << scope << ".kappa_gram=" << fmt(r.kappa_gram) << '\n'
    << scope << ".kappa_sketch=" << fmt(r.kappa_sketch) << '\n'
    << scope << ".sketch_rows=" << r.sketch_rows << '\n'
    << scope << ".sketch_epsilon=" << fmt(r.sketch_epsilon) << '\n'
    << scope << ".gram_check_applicable=" << (r.gram_check_applicable ? "true" : "false") << '\n'
    << scope << ".gram_squares_condition=" << (r.gram_squares_condition ? "true" : "false")
    << '\n';
  return o.str();
}

std::string to_json(const metrics::EmbeddingReport& r) {
  nlohmann::json j = {{"deviation", num(r.deviation)},
                      {"epsilon_target", num(r.epsilon_target)},
                      {"pass", r.pass},
                      {"squared_singular_values_preserved", r.squared_singular_values_preserved},
                      {"inverse_singular_values_preserved", r.inverse_singular_values_preserved},
                      {"singular_ratios", vec(r.singular_ratios)}};
  return j.dump();
}

std::string to_json(const metrics::BoundReport& r) {
  nlohmann::json details = nlohmann::json::object();
  for (const auto& [k, v] : r.details) details[k] = num(v);
  nlohmann::json j = {{"name", r.name},         {"lhs", num(r.lhs)},
                      {"rhs", num(r.rhs)},      {"satisfied", r.satisfied},
                      {"slack", num(r.slack)},  {"applicable", r.applicable},
                      {"details", details}};
  return j.dump();
}

std::string to_json(const metrics::InstabilityReport& r) {
  nlohmann::json j = {{"kappa_x", num(r.kappa_x)},
                      {"kappa_gram", num(r.kappa_gram)},
                      {"kappa_sketch", num(r.kappa_sketch)},
                      {"sketch_rows", r.sketch_rows},
                      {"sketch_epsilon", r.sketch_epsilon},
                      {"gram_check_applicable", r.gram_check_applicable},
                      {"gram_squares_condition", r.gram_squares_condition}};
  return j.dump();
}

void write_matrix_csv(const std::filesystem::path& path, const DenseMatrix& m) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) std::fprintf(f, c ? ",%.17g" : "%.17g", m(r, c));
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw IoError("failed to write " + path.string());
}

void write_posterior_csv(const std::filesystem::path& summary,
                         const std::filesystem::path& covariance,
                         const bayes::GaussianMeasure& posterior) {
  std::FILE* f = std::fopen(summary.string().c_str(), "w");
  if (!f) throw IoError("cannot open " + summary.string() + " for writing");
  std::fputs("param,mean,sd\n", f);
  const DenseVector sd = posterior.sd();
  for (Eigen::Index i = 0; i < posterior.mean.size(); ++i) {
    std::fprintf(f, "beta%lld,%.17g,%.17g\n", static_cast<long long>(i), posterior.mean(i), sd(i));
  }
  if (std::fclose(f) != 0) throw IoError("failed to write " + summary.string());
  write_matrix_csv(covariance, posterior.cov);
}

DenseMatrix read_matrix_csv(const std::filesystem::path& path) {
  auto stream = read_csv(path, false);
  std::vector<double> values;
  std::vector<double> row;
  std::uint64_t rows = 0;
  while (stream->next(row)) {
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  const auto cols = static_cast<Eigen::Index>(stream->d_total());
  DenseMatrix m(static_cast<Eigen::Index>(rows), cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = values[static_cast<std::size_t>(i)];
  return m;
}

}  // namespace sketchreg::io
