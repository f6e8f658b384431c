#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Cholesky>
#include <json.hpp>

#include "sketchreg/bayes.hpp"
#include "sketchreg/cli/cli.hpp"
#include "sketchreg/cli/manifest.hpp"
#include "sketchreg/error.hpp"
#include "sketchreg/metrics.hpp"
#include "sketchreg/report_io.hpp"
#include "sketchreg/simulate.hpp"
#include "sketchreg/sketch_io.hpp"

namespace sketchreg::cli {
namespace {

namespace fs = std::filesystem;

struct DataArgs {
  std::string input;
  std::string format = "auto";
  bool header = false;
  bool intercept = false;
};

void add_data_options(CLI::App& sub, DataArgs& a, const std::string& input_flag, bool allow_updates) {
  sub.add_option(input_flag, a.input, "Data file ('-' for stdin)")->required();
  const std::vector<std::string> formats =
      allow_updates ? std::vector<std::string>{"auto", "csv", "bin", "updates"}
                    : std::vector<std::string>{"auto", "csv", "bin"};
  sub.add_option("--format", a.format, "Input format; auto picks bin for .bin/.skdt, else csv")
      ->check(CLI::IsMember(formats));
  sub.add_flag("--header", a.header, "CSV input starts with a header line");
  sub.add_flag("--add-intercept", a.intercept, "Insert a leading column of ones");
}

std::string resolve_format(const DataArgs& a) {
  if (a.format != "auto") return a.format;
  const std::string ext = fs::path(a.input).extension().string();
  return (ext == ".bin" || ext == ".skdt") ? "bin" : "csv";
}

std::unique_ptr<RowStream> open_rows(const DataArgs& a) {
  const std::string fmt = resolve_format(a);
  std::unique_ptr<RowStream> rows;
  if (fmt == "csv") {
    rows = read_csv(a.input, a.header);
  } else if (fmt == "bin") {
    rows = read_binary(a.input);
  } else {
    throw ContractError("format '" + fmt + "' does not yield rows");
  }
  if (a.intercept) rows = with_intercept(std::move(rows));
  if (rows->d_total() == 0) throw ContractError("input " + a.input + " has no columns");
  return rows;
}

struct PriorArgs {
  std::string kind = "uniform";
  std::string mean_path;
  std::string s_path;
  std::string sigma = "estimate";
};

void add_prior_options(CLI::App& sub, PriorArgs& a) {
  sub.add_option("--prior", a.kind, "Prior family")->check(CLI::IsMember({"uniform", "gaussian"}));
  sub.add_option("--prior-mean", a.mean_path, "CSV with the prior mean (d values)");
  sub.add_option("--prior-s", a.s_path, "CSV with the d x d prior matrix S");
  sub.add_option("--sigma", a.sigma, "Noise scale, or 'estimate'");
}

std::optional<double> parse_sigma(const std::string& text) {
  if (text == "estimate") return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !(v > 0.0) || !std::isfinite(v)) {
    throw ContractError("--sigma must be a positive number or 'estimate', got '" + text + "'");
  }
  return v;
}

bayes::PriorSpec build_prior(const PriorArgs& a, Eigen::Index d, std::optional<double> sigma) {
  if (a.kind == "uniform") {
    if (!a.mean_path.empty() || !a.s_path.empty()) {
      throw ContractError("--prior-mean/--prior-s need --prior gaussian");
    }
    return bayes::PriorSpec::uniform(sigma);
  }
  if (a.mean_path.empty() || a.s_path.empty()) {
    throw ContractError("--prior gaussian requires --prior-mean and --prior-s");
  }
  const DenseMatrix m = io::read_matrix_csv(a.mean_path);
  if (m.size() != d || (m.rows() != 1 && m.cols() != 1)) {
    throw ContractError("prior mean must hold " + std::to_string(d) + " values in one row or column");
  }
  DenseVector mean(d);
  for (Eigen::Index i = 0; i < d; ++i) mean[i] = m.data()[i];
  return bayes::PriorSpec::gaussian(std::move(mean), io::read_matrix_csv(a.s_path), sigma);
}

void record_flags(const CLI::App& sub, RunManifest& m) {
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->count() == 0 || opt->get_name() == "--help") continue;
    std::string joined;
    for (const std::string& r : opt->results()) {
      if (!joined.empty()) joined += ',';
      joined += r;
    }
    m.flags.emplace_back(opt->get_name(), joined.empty() ? "true" : joined);
  }
}

void finish_manifest(RunManifest& m, const CLI::App& sub, const std::vector<std::string>& argv,
                     const std::string& explicit_path, const std::string& output) {
  m.command = sub.get_name();
  m.argv = argv;
  record_flags(sub, m);
  fs::path path = "-";
  if (!explicit_path.empty()) {
    path = explicit_path;
  } else if (!output.empty()) {
    path = manifest_path_for(output);
  }
  write_manifest(path, m);
}

void add_input_digest(RunManifest& m, const std::string& path) {
  m.inputs.push_back(digest_file(path));
}

void print_kv(std::ostream& out, const std::string& key, const std::string& value) {
  out << key << '=' << value << '\n';
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- sketch

struct SketchArgs {
  DataArgs data;
  std::string method;
  std::optional<double> epsilon;
  std::optional<std::uint64_t> k;
  double alpha = 0.1;
  bool alpha_strict = false;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> n_hint;
  std::optional<std::uint64_t> d_total;
  std::uint64_t row_offset = 0;
  std::string srht_mode = "per-row";
  std::size_t block_rows = 1024;
  std::string output;
  std::string csv_export;
  std::string manifest;
};

SketchBuilder sketch_updates(const SketchArgs& a, SketchMethod method, const BuilderOptions& opts,
                             StreamTimings& timings, std::uint64_t& k_out) {
  if (method == SketchMethod::Gram) {
    throw ContractError("gram sketches depend on whole rows; --format updates is not supported");
  }
  if (!a.d_total) throw ContractError("--format updates requires --d-total");
  if (a.data.intercept && !a.n_hint) {
    throw ContractError("--add-intercept with --format updates requires --n-hint");
  }
  const std::uint64_t d_total = *a.d_total + (a.data.intercept ? 1 : 0);
  const std::uint64_t k =
      resolve_k(method, d_total, a.data.intercept, a.epsilon, a.k, a.alpha, a.alpha_strict);
  k_out = k;
  if (method == SketchMethod::Srht && !a.n_hint) {
    throw ContractError("srht requires --n-hint (the row count) for this input");
  }
  SketchBuilder builder(method, d_total, k, a.n_hint, hashing::SketchSeed(a.seed), opts);
  UpdateStream updates(a.data.input);
  UpdateTriple t;
  std::uint64_t rows = a.n_hint.value_or(0);
  while (true) {
    Stopwatch read;
    const bool more = updates.next(t);
    timings.read_ms += read.elapsed_ms();
    if (!more) break;
    if (a.data.intercept) ++t.col;
    Stopwatch push;
    builder.push_update(t);
    timings.sketch_ms += push.elapsed_ms();
    rows = std::max(rows, t.row + 1);
  }
  Stopwatch push;
  if (a.data.intercept) {
    for (std::uint64_t i = 0; i < *a.n_hint; ++i) builder.push_update({i, 0, 1.0});
  }
  builder.set_rows_seen(rows);
  timings.sketch_ms += push.elapsed_ms();
  return builder;
}

void run_sketch(const SketchArgs& a, const CLI::App& sub, const std::vector<std::string>& argv) {
  const SketchMethod method = parse_method(a.method);
  if (method == SketchMethod::Gram && (a.epsilon || a.k)) {
    std::cerr << "warning: gram sketches have k = d_total - 1; ignoring --epsilon/--k\n";
  }
  BuilderOptions opts;
  opts.srht_mode = a.srht_mode == "block" ? SrhtMode::Block : SrhtMode::PerRow;
  opts.block_rows = a.block_rows;

  RunManifest man;
  man.seed = a.seed;
  StreamTimings timings;
  std::uint64_t k = 0;
  SketchBuilder result = [&] {
    if (resolve_format(a.data) == "updates") return sketch_updates(a, method, opts, timings, k);
    if (a.d_total) throw ContractError("--d-total only applies to --format updates");
    auto rows = open_rows(a.data);
    const std::uint64_t d_total = rows->d_total();
    k = resolve_k(method, d_total, a.data.intercept,
                  method == SketchMethod::Gram ? std::nullopt : a.epsilon,
                  method == SketchMethod::Gram ? std::nullopt : a.k, a.alpha, a.alpha_strict);
    std::optional<std::uint64_t> n_hint = a.n_hint;
    if (!n_hint && rows->n_hint() && (a.row_offset == 0 || method != SketchMethod::Srht)) {
      n_hint = *rows->n_hint() + a.row_offset;
    }
    if (method == SketchMethod::Srht && !n_hint) {
      throw ContractError("srht requires --n-hint (the row count) for this input");
    }
    SketchJob job{method, d_total, k, n_hint, hashing::SketchSeed(a.seed), opts, a.row_offset};
    return sketch_rows(*rows, job, thread_cap(), timings);
  }();

  io::write_sketch(fs::path(a.output), result);
  man.outputs.push_back(a.output);
  if (!a.csv_export.empty()) {
    io::write_sketch_csv(a.csv_export, result);
    man.outputs.push_back(a.csv_export);
  }
  man.read_ms = timings.read_ms;
  man.sketch_ms = timings.sketch_ms;
  add_input_digest(man, a.data.input);
  print_kv(std::cout, "method", std::string(method_name(method)));
  print_kv(std::cout, "k", std::to_string(result.k()));
  print_kv(std::cout, "d_total", std::to_string(result.d_total()));
  print_kv(std::cout, "rows", std::to_string(result.rows_seen()));
  finish_manifest(man, sub, argv, a.manifest, a.output);
}

// ---------------------------------------------------------------- merge

struct MergeArgs {
  std::vector<std::string> inputs;
  std::string output;
  std::string manifest;
};

void run_merge(const MergeArgs& a, const CLI::App& sub, const std::vector<std::string>& argv) {
  RunManifest man;
  Stopwatch read;
  std::optional<SketchBuilder> acc;
  double merge_ms = 0.0;
  for (const std::string& path : a.inputs) {
    SketchBuilder s = io::read_sketch(fs::path(path));
    Stopwatch m;
    acc = acc ? merge(*acc, s) : std::move(s);
    merge_ms += m.elapsed_ms();
    add_input_digest(man, path);
  }
  man.read_ms = read.elapsed_ms() - merge_ms;
  man.sketch_ms = merge_ms;
  man.seed = acc->seed().master();
  io::write_sketch(fs::path(a.output), *acc);
  man.outputs.push_back(a.output);
  print_kv(std::cout, "inputs", std::to_string(a.inputs.size()));
  print_kv(std::cout, "rows", std::to_string(acc->rows_seen()));
  finish_manifest(man, sub, argv, a.manifest, a.output);
}

// ---------------------------------------------------------------- posterior

struct PosteriorArgs {
  std::string sketch;
  PriorArgs prior;
  std::optional<std::uint64_t> n;
  std::string output;
  std::string cov_output;
  std::string manifest;
};

std::string default_cov_path(const std::string& output) {
  fs::path p(output);
  const std::string stem = p.extension() == ".csv" ? p.replace_extension().string() : output;
  return stem + ".cov.csv";
}

void run_posterior(const PosteriorArgs& a, const CLI::App& sub,
                   const std::vector<std::string>& argv) {
  RunManifest man;
  Stopwatch read;
  const SketchBuilder sk = io::read_sketch(fs::path(a.sketch));
  man.read_ms = read.elapsed_ms();
  man.seed = sk.seed().master();
  add_input_digest(man, a.sketch);
  if (sk.d_total() < 2) throw ContractError("sketch has no variable columns");
  const auto d = static_cast<Eigen::Index>(sk.d_total() - 1);
  const std::optional<double> sigma = parse_sigma(a.prior.sigma);
  const bayes::PriorSpec prior = build_prior(a.prior, d, sigma);
  if (!a.prior.mean_path.empty()) add_input_digest(man, a.prior.mean_path);
  if (!a.prior.s_path.empty()) add_input_digest(man, a.prior.s_path);
  const std::uint64_t n = a.n.value_or(sk.rows_seen());
  if (!sigma && n == 0) throw ContractError("--sigma estimate needs --n (the original row count)");

  Stopwatch solve;
  const DenseMatrix fin = sk.finalize();
  const bayes::SketchFit fit = sk.method() == SketchMethod::Gram ? bayes::fit_gram(fin, prior)
                                                                 : bayes::fit_sketch(fin, prior, n);
  man.solve_ms = solve.elapsed_ms();

  const std::string cov = a.cov_output.empty() ? default_cov_path(a.output) : a.cov_output;
  io::write_posterior_csv(a.output, cov, fit.posterior);
  man.outputs = {a.output, cov};
  print_kv(std::cout, "sigma", fmt_double(fit.sigma));
  print_kv(std::cout, "sigma_estimated", fit.sigma_estimated ? "true" : "false");
  print_kv(std::cout, "n", std::to_string(n));
  finish_manifest(man, sub, argv, a.manifest, a.output);
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  DataArgs data;
  std::string sketch;
  double epsilon = 0.1;
  PriorArgs prior;
  std::optional<double> rho;
  bool instability = false;
  std::uint64_t seed = 0;
  bool json = false;
  std::string output;
  std::string manifest;
};

void run_verify(const VerifyArgs& a, const CLI::App& sub, const std::vector<std::string>& argv) {
  RunManifest man;
  Stopwatch read;
  auto rows = open_rows(a.data);
  const DenseMatrix data = collect(*rows);
  add_input_digest(man, a.data.input);
  if (data.cols() < 2) throw ContractError("data needs at least one variable and a response");
  const Eigen::Index d = data.cols() - 1;
  const DenseMatrix x = data.leftCols(d);
  const DenseVector y = data.col(d);

  std::string method = "identity";
  DenseMatrix fin = data;
  hashing::SketchSeed seed(a.seed);
  if (!a.sketch.empty()) {
    const SketchBuilder sk = io::read_sketch(fs::path(a.sketch));
    add_input_digest(man, a.sketch);
    if (sk.d_total() != static_cast<std::uint64_t>(data.cols())) {
      throw ContractError("sketch has " + std::to_string(sk.d_total()) + " columns, data has " +
                          std::to_string(data.cols()));
    }
    if (sk.rows_seen() != static_cast<std::uint64_t>(data.rows())) {
      std::cerr << "warning: sketch summarizes " << sk.rows_seen() << " rows, data has "
                << data.rows() << "\n";
    }
    method = std::string(method_name(sk.method()));
    fin = sk.finalize();
    seed = sk.seed();
  }
  man.seed = seed.master();
  man.read_ms = read.elapsed_ms();

  Stopwatch solve;
  const bool gram = method == "gram";
  const auto [sx, sy] = split_response(fin);
  std::optional<metrics::EmbeddingReport> embedding;
  DenseVector nu;
  if (gram) {
    Eigen::LLT<DenseMatrix> llt(sx);
    if (llt.info() != Eigen::Success) throw NumericalError("GRAM normal equations are not positive definite");
    nu = llt.solve(sy);
  } else {
    embedding = metrics::verify_embedding(data, fin, a.epsilon);
    nu = linalg::ols_solve(sx, sy);
  }
  std::optional<double> sigma = parse_sigma(a.prior.sigma);
  if (!sigma) {
    const auto n = static_cast<std::uint64_t>(data.rows());
    sigma = gram ? (x * nu - y).norm() / std::sqrt(static_cast<double>(n))
                 : bayes::estimate_sigma(sx, sy, nu, n);
    if (!(*sigma > 0.0)) throw NumericalError("estimated sigma is zero: the data is fitted exactly");
  }
  const bayes::PriorSpec prior = build_prior(a.prior, d, sigma);
  const bayes::GaussianMeasure exact = bayes::posterior(x, y, prior, *sigma);
  const bayes::GaussianMeasure sketched =
      gram ? bayes::fit_gram(fin, prior).posterior
           : bayes::posterior(bayes::augment(sx, sy, prior), *sigma);
  std::vector<metrics::BoundReport> bounds;
  bounds.push_back(metrics::check_lemma1(x, y, nu, a.epsilon));
  bounds.push_back(metrics::check_lemma2(x, y, nu, a.epsilon));
  bounds.push_back(metrics::check_theorem1(x, y, prior, sketched, exact, a.epsilon));
  bounds.push_back(
      metrics::check_corollary(bayes::augment(x, y, prior), exact, sketched, a.epsilon, a.rho));
  std::optional<metrics::InstabilityReport> inst;
  if (a.instability) inst = metrics::instability_report(data, seed, a.epsilon);
  man.solve_ms = solve.elapsed_ms();

  std::string report;
  if (a.json) {
    nlohmann::ordered_json j;
    j["method"] = method;
    j["n"] = data.rows();
    j["d_total"] = data.cols();
    j["epsilon"] = a.epsilon;
    j["sigma"] = *sigma;
    j["embedding"] = embedding ? nlohmann::ordered_json::parse(io::to_json(*embedding))
                               : nlohmann::ordered_json(nullptr);
    j["bounds"] = nlohmann::ordered_json::array();
    for (const auto& b : bounds) j["bounds"].push_back(nlohmann::ordered_json::parse(io::to_json(b)));
    if (inst) j["instability"] = nlohmann::ordered_json::parse(io::to_json(*inst));
    report = j.dump(2) + "\n";
  } else {
    std::ostringstream out;
    print_kv(out, "verify.method", method);
    print_kv(out, "verify.n", std::to_string(data.rows()));
    print_kv(out, "verify.d_total", std::to_string(data.cols()));
    print_kv(out, "verify.epsilon", fmt_double(a.epsilon));
    print_kv(out, "verify.sigma", fmt_double(*sigma));
    if (embedding) out << io::to_key_value(*embedding);
    for (const auto& b : bounds) out << io::to_key_value(b);
    if (inst) out << io::to_key_value(*inst);
    report = out.str();
  }
  std::cout << report;
  if (!a.output.empty() && a.output != "-") {
    std::ofstream f(a.output, std::ios::trunc);
    if (!f) throw IoError("cannot open " + a.output + " for writing");
    f << report;
    man.outputs.push_back(a.output);
  }
  finish_manifest(man, sub, argv, a.manifest, a.output == "-" ? "" : a.output);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  SimConfig cfg;
  std::string format = "csv";
  bool header = false;
  std::string output;
  std::string beta_output;
  std::string manifest;
};

void write_csv_value(std::string& line, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  line.append(buf, ptr);
}

void run_simulate(const SimulateArgs& a, const CLI::App& sub, const std::vector<std::string>& argv) {
  RunManifest man;
  man.seed = a.cfg.seed;
  Simulator sim(a.cfg);
  std::vector<double> row(a.cfg.d + 1);
  Stopwatch gen;
  if (a.format == "bin") {
    BinaryWriter writer(a.output, a.cfg.n, a.cfg.d + 1);
    for (std::uint64_t i = 0; i < a.cfg.n; ++i) {
      sim.next_row(row);
      writer.write_row(row);
    }
    writer.close();
  } else {
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (a.output != "-") {
      file.open(a.output, std::ios::trunc);
      if (!file) throw IoError("cannot open " + a.output + " for writing");
      out = &file;
    }
    std::string line;
    if (a.header) {
      for (std::uint64_t j = 1; j <= a.cfg.d; ++j) line += "x" + std::to_string(j) + ",";
      line += "y\n";
      *out << line;
    }
    for (std::uint64_t i = 0; i < a.cfg.n; ++i) {
      sim.next_row(row);
      line.clear();
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) line += ',';
        write_csv_value(line, row[j]);
      }
      line += '\n';
      out->write(line.data(), static_cast<std::streamsize>(line.size()));
    }
    out->flush();
    if (!*out) throw IoError("write failed: " + a.output);
  }
  man.sketch_ms = gen.elapsed_ms();
  man.outputs.push_back(a.output);
  std::string beta_path = a.beta_output;
  if (beta_path.empty() && a.output != "-") beta_path = a.output + ".beta.csv";
  if (!beta_path.empty()) {
    io::write_matrix_csv(beta_path, DenseMatrix(sim.beta()));
    man.outputs.push_back(beta_path);
  }
  finish_manifest(man, sub, argv, a.manifest, a.output == "-" ? "" : a.output);
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::vector<std::string> methods{"cw"};
  std::vector<std::uint64_t> sizes{100000, 200000, 400000};
  std::uint64_t d = 50;
  std::optional<double> epsilon;
  std::optional<std::uint64_t> k;
  double alpha = 0.1;
  int repeats = 3;
  std::uint64_t seed = 0;
  std::string srht_mode = "block";
  std::string output = "-";
  std::string manifest;
};

void run_bench(const BenchArgs& a, const CLI::App& sub, const std::vector<std::string>& argv) {
  if (a.sizes.empty()) throw ContractError("--sizes must list at least one row count");
  RunManifest man;
  man.seed = a.seed;
  std::vector<SketchMethod> methods;
  for (const auto& m : a.methods) methods.push_back(parse_method(m));
  const std::uint64_t max_n = *std::max_element(a.sizes.begin(), a.sizes.end());

  SimConfig cfg;
  cfg.n = max_n;
  cfg.d = a.d;
  cfg.seed = a.seed;
  const DenseMatrix data = simulate(cfg).joined();
  const auto d_total = static_cast<std::uint64_t>(data.cols());

  const fs::path tmp = fs::temp_directory_path() /
                       ("sketchreg-bench-" + std::to_string(::getpid()) + ".skdt");
  std::vector<double> read_ms;
  for (std::uint64_t n : a.sizes) {
    if (n == 0) throw ContractError("--sizes entries must be positive");
    write_binary(tmp, data.topRows(static_cast<Eigen::Index>(n)));
    double best = 0.0;
    for (int r = 0; r < std::max(1, a.repeats); ++r) {
      Stopwatch clock;
      const DenseMatrix back = read_binary_matrix(tmp);
      const double ms = clock.elapsed_ms();
      if (back.rows() != static_cast<Eigen::Index>(n)) throw IoError("bench read-back mismatch");
      if (r == 0 || ms < best) best = ms;
    }
    read_ms.push_back(best);
    man.read_ms += best;
  }
  std::error_code ec;
  fs::remove(tmp, ec);

  std::ostringstream csv;
  csv << "method,n,d_total,k,read_ms,sketch_ms,ratio_to_previous\n";
  Stopwatch total;
  for (SketchMethod method : methods) {
    const std::uint64_t k = resolve_k(method, d_total, false,
                                      (a.epsilon || a.k) ? a.epsilon : std::optional<double>(0.1),
                                      a.k, a.alpha, false);
    double previous = 0.0;
    for (std::size_t s = 0; s < a.sizes.size(); ++s) {
      const std::uint64_t n = a.sizes[s];
      BuilderOptions opts;
      opts.srht_mode = a.srht_mode == "block" ? SrhtMode::Block : SrhtMode::PerRow;
      SketchJob job{method, d_total, k, n, hashing::SketchSeed(a.seed), opts};
      const double ms = time_sketch_ms(job, data.topRows(static_cast<Eigen::Index>(n)), a.repeats);
      csv << method_name(method) << ',' << n << ',' << d_total << ',' << k << ','
          << fmt_double(read_ms[s]) << ',' << fmt_double(ms) << ',';
      if (s > 0 && previous > 0.0) csv << fmt_double(ms / previous);
      csv << '\n';
      previous = ms;
    }
  }
  man.sketch_ms = total.elapsed_ms();
  if (a.output == "-") {
    std::cout << csv.str();
  } else {
    std::ofstream f(a.output, std::ios::trunc);
    if (!f) throw IoError("cannot open " + a.output + " for writing");
    f << csv.str();
    man.outputs.push_back(a.output);
  }
  finish_manifest(man, sub, argv, a.manifest, a.output == "-" ? "" : a.output);
}

}  // namespace

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const ContractError*>(&e) != nullptr) return kExitContract;
  if (dynamic_cast<const IoError*>(&e) != nullptr) return kExitIo;
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) return kExitNumerical;
  if (dynamic_cast<const fs::filesystem_error*>(&e) != nullptr) return kExitIo;
  if (dynamic_cast<const std::ios_base::failure*>(&e) != nullptr) return kExitIo;
  return kExitFailure;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Sketch-and-solve Bayesian linear regression on streamed data", "sketchreg"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "sketchreg 0.3.0");
  std::vector<std::string> args(argv, argv + argc);

  SketchArgs sk;
  CLI::App* sketch = app.add_subcommand("sketch", "Stream data into a sketch file");
  add_data_options(*sketch, sk.data, "--input", true);
  sketch->add_option("--method", sk.method, "rad, srht, cw or gram")
      ->required()
      ->check(CLI::IsMember({"rad", "srht", "cw", "gram"}, CLI::ignore_case));
  CLI::Option* eps = sketch->add_option("--epsilon", sk.epsilon, "Target embedding accuracy in (0, 0.5]");
  CLI::Option* k = sketch->add_option("--k", sk.k, "Sketch rows (bypasses --epsilon)");
  eps->excludes(k);
  sketch->add_option("--alpha", sk.alpha, "Failure probability in (0, 0.5]");
  sketch->add_flag("--alpha-strict", sk.alpha_strict, "CW sizing with d^2 / (eps^2 alpha)");
  sketch->add_option("--seed", sk.seed, "Master seed");
  sketch->add_option("--n-hint", sk.n_hint, "Row count (required by srht for CSV input)");
  sketch->add_option("--d-total", sk.d_total, "Column count of an update stream, response included");
  sketch->add_option("--row-offset", sk.row_offset, "Global index of the first input row (partition sketches)");
  sketch->add_option("--srht-mode", sk.srht_mode, "per-row or block")
      ->check(CLI::IsMember({"per-row", "block"}));
  sketch->add_option("--block-rows", sk.block_rows, "SRHT block size (power of two)");
  sketch->add_option("--output", sk.output, "SKRG output file")->required();
  sketch->add_option("--csv", sk.csv_export, "Also export the finalized sketch as CSV");
  sketch->add_option("--manifest", sk.manifest, "Manifest path (default <output>.manifest.json)");

  MergeArgs mg;
  CLI::App* merge_cmd = app.add_subcommand("merge", "Sum sketches drawn with the same seed");
  merge_cmd->add_option("inputs", mg.inputs, "SKRG files")->required();
  merge_cmd->add_option("--output", mg.output, "SKRG output file")->required();
  merge_cmd->add_option("--manifest", mg.manifest, "Manifest path");

  PosteriorArgs po;
  CLI::App* post = app.add_subcommand("posterior", "Posterior over the coefficients from a sketch");
  post->add_option("--sketch", po.sketch, "SKRG file")->required();
  add_prior_options(*post, po.prior);
  post->add_option("--n", po.n, "Original row count for --sigma estimate (default: from the sketch)");
  post->add_option("--output", po.output, "Summary CSV (param,mean,sd)")->required();
  post->add_option("--cov-output", po.cov_output, "Covariance CSV (default <output>.cov.csv)");
  post->add_option("--manifest", po.manifest, "Manifest path");

  VerifyArgs ve;
  CLI::App* verify = app.add_subcommand("verify", "Check embedding quality and approximation bounds");
  add_data_options(*verify, ve.data, "--data", false);
  verify->add_option("--sketch", ve.sketch, "SKRG file (omit to verify the identity sketch)");
  verify->add_option("--epsilon", ve.epsilon, "Accuracy the bounds are evaluated at");
  add_prior_options(*verify, ve.prior);
  verify->add_option("--rho", ve.rho, "Lower bound on |Z mu| / |z| assumed by the corollary");
  verify->add_flag("--instability", ve.instability, "Add the Gram conditioning report");
  verify->add_option("--seed", ve.seed, "Seed for the identity case's instability sketch");
  verify->add_flag("--json", ve.json, "JSON instead of key=value lines");
  verify->add_option("--output", ve.output, "Also write the report to this file");
  verify->add_option("--manifest", ve.manifest, "Manifest path");

  SimulateArgs si;
  CLI::App* sim = app.add_subcommand("simulate", "Generate synthetic regression data");
  sim->add_option("--n", si.cfg.n, "Rows")->required();
  sim->add_option("--d", si.cfg.d, "Variables")->required();
  sim->add_option("--sigma", si.cfg.sigma, "Noise standard deviation")->required();
  sim->add_option("--seed", si.cfg.seed, "Seed");
  sim->add_option("--zero-inflation", si.cfg.zero_inflation, "P(beta_j is an excess zero)");
  sim->add_option("--poisson-mean", si.cfg.poisson_mean, "Mean of |beta_j| draws");
  sim->add_option("--col-mean-sd", si.cfg.col_mean_sd, "SD of the column means");
  sim->add_option("--x-var", si.cfg.x_var, "Variance of X entries around their column mean");
  sim->add_option("--format", si.format, "csv or bin")->check(CLI::IsMember({"csv", "bin"}));
  sim->add_flag("--header", si.header, "Write a CSV header line");
  sim->add_option("--output", si.output, "Data file ('-' for stdout)")->required();
  sim->add_option("--beta-output", si.beta_output, "Coefficient CSV (default <output>.beta.csv)");
  sim->add_option("--manifest", si.manifest, "Manifest path");

  BenchArgs be;
  CLI::App* bench = app.add_subcommand("bench", "Time reading and sketching over a size ladder");
  bench->add_option("--methods", be.methods, "Comma-separated methods")
      ->delimiter(',')
      ->check(CLI::IsMember({"rad", "srht", "cw", "gram"}, CLI::ignore_case));
  bench->add_option("--sizes", be.sizes, "Comma-separated row counts")->delimiter(',');
  bench->add_option("--d", be.d, "Variables");
  CLI::Option* beps = bench->add_option("--epsilon", be.epsilon, "Sizing accuracy (default 0.1)");
  CLI::Option* bk = bench->add_option("--k", be.k, "Sketch rows");
  beps->excludes(bk);
  bench->add_option("--alpha", be.alpha, "Failure probability");
  bench->add_option("--repeats", be.repeats, "Best-of repetitions")->check(CLI::PositiveNumber);
  bench->add_option("--seed", be.seed, "Seed");
  bench->add_option("--srht-mode", be.srht_mode, "per-row or block")
      ->check(CLI::IsMember({"per-row", "block"}));
  bench->add_option("--output", be.output, "Timing CSV ('-' for stdout)");
  bench->add_option("--manifest", be.manifest, "Manifest path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitContract;
  }

  try {
    if (*sketch) run_sketch(sk, *sketch, args);
    if (*merge_cmd) run_merge(mg, *merge_cmd, args);
    if (*post) run_posterior(po, *post, args);
    if (*verify) run_verify(ve, *verify, args);
    if (*sim) run_simulate(si, *sim, args);
    if (*bench) run_bench(be, *bench, args);
  } catch (const std::exception& e) {
    std::cout.flush();
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitOk;
}

}  // namespace sketchreg::cli
