#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sketchreg/bayes.hpp"
#include "sketchreg/metrics.hpp"

namespace sketchreg::io {

/// Line-oriented "key=value" text, one field per line, prefixed by `scope.`.
std::string to_key_value(const metrics::EmbeddingReport& r, const std::string& scope = "embedding");
std::string to_key_value(const metrics::BoundReport& r);
std::string to_key_value(const metrics::InstabilityReport& r,
                         const std::string& scope = "instability");

std::string to_json(const metrics::EmbeddingReport& r);
std::string to_json(const metrics::BoundReport& r);
std::string to_json(const metrics::InstabilityReport& r);

/// Summary CSV ("param,mean,sd") plus the d x d covariance as its own CSV.
void write_posterior_csv(const std::filesystem::path& summary, const std::filesystem::path& covariance,
                         const bayes::GaussianMeasure& posterior);

/// Reads a numeric CSV without header into a matrix (prior-mean / prior-S files).
DenseMatrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const DenseMatrix& m);

}  // namespace sketchreg::io
