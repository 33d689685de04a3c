#include "rct/embedding_fusion.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace rct {
namespace {

constexpr std::string_view kPcaMagic = "rct-pca";
constexpr int kPcaVersion = 1;

void append_number(std::string& out, double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), ptr);
}

double read_double(std::istream& in) {
  std::string word;
  in >> word;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), v);
  if (!in || ec != std::errc() || ptr != word.data() + word.size()) {
    throw std::runtime_error("pca file: bad number '" + word + "'");
  }
  return v;
}

}  // namespace

PCAModel fit_pca(const Eigen::MatrixXd& H, std::size_t k) {
  const auto n = static_cast<std::size_t>(H.rows());
  const auto dim = static_cast<std::size_t>(H.cols());
  if (k < 1 || n < k || dim < k) {
    throw std::invalid_argument("fit_pca requires n >= k >= 1 and D >= k");
  }
  PCAModel model;
  model.mean = H.colwise().mean().transpose();
  const Eigen::MatrixXd centered = H.rowwise() - model.mean.transpose();
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("fit_pca: eigendecomposition failed");
  }
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale * static_cast<double>(dim);

  model.components.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(dim));
  model.explained_variance.resize(static_cast<Eigen::Index>(k));
  for (std::size_t c = 0; c < k; ++c) {
    const auto src = static_cast<Eigen::Index>(dim - 1 - c);
    const auto dst = static_cast<Eigen::Index>(c);
    Eigen::VectorXd v = vectors.col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    model.components.row(dst) = v.transpose();
    double ev = values(src);
    if (ev <= tol) {
      ev = 0.0;
      model.rank_deficient = true;
    }
    model.explained_variance(dst) = ev;
  }
  if (model.rank_deficient) {
    std::clog << "warning: fit_pca: embedding matrix has rank below " << k
              << "; trailing components carry zero variance\n";
  }
  return model;
}

Eigen::VectorXd transform(const PCAModel& model, const Eigen::VectorXd& h) {
  if (static_cast<std::size_t>(h.size()) != model.input_dim()) {
    throw std::invalid_argument("pca transform: expected dimension " +
                                std::to_string(model.input_dim()));
  }
  return model.components * (h - model.mean);
}

Eigen::MatrixXd transform(const PCAModel& model, const Eigen::MatrixXd& H) {
  if (static_cast<std::size_t>(H.cols()) != model.input_dim()) {
    throw std::invalid_argument("pca transform: expected dimension " +
                                std::to_string(model.input_dim()));
  }
  return (H.rowwise() - model.mean.transpose()) * model.components.transpose();
}

std::string PCAModel::serialize() const {
  std::string out = std::string(kPcaMagic) + " " + std::to_string(kPcaVersion) + "\n";
  out += "dims " + std::to_string(input_dim()) + " " + std::to_string(output_dim()) +
         " " + (rank_deficient ? "1" : "0") + "\nmean";
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    out.push_back(' ');
    append_number(out, mean(i));
  }
  out += "\nvariance";
  for (Eigen::Index i = 0; i < explained_variance.size(); ++i) {
    out.push_back(' ');
    append_number(out, explained_variance(i));
  }
  out.push_back('\n');
  for (Eigen::Index r = 0; r < components.rows(); ++r) {
    out += "component";
    for (Eigen::Index c = 0; c < components.cols(); ++c) {
      out.push_back(' ');
      append_number(out, components(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

PCAModel PCAModel::deserialize(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic, tag;
  int version = 0;
  in >> magic >> version;
  if (magic != kPcaMagic || version != kPcaVersion) {
    throw std::runtime_error("not a pca file (version " + std::to_string(kPcaVersion) + ")");
  }
  std::size_t dim = 0, k = 0;
  int deficient = 0;
  in >> tag >> dim >> k >> deficient;
  if (!in || tag != "dims") throw std::runtime_error("pca file: expected 'dims'");
  PCAModel model;
  model.rank_deficient = deficient != 0;
  model.mean.resize(static_cast<Eigen::Index>(dim));
  model.explained_variance.resize(static_cast<Eigen::Index>(k));
  model.components.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(dim));
  in >> tag;
  if (tag != "mean") throw std::runtime_error("pca file: expected 'mean'");
  for (Eigen::Index i = 0; i < model.mean.size(); ++i) model.mean(i) = read_double(in);
  in >> tag;
  if (tag != "variance") throw std::runtime_error("pca file: expected 'variance'");
  for (Eigen::Index i = 0; i < model.explained_variance.size(); ++i) {
    model.explained_variance(i) = read_double(in);
  }
  for (Eigen::Index r = 0; r < model.components.rows(); ++r) {
    in >> tag;
    if (tag != "component") throw std::runtime_error("pca file: expected 'component'");
    for (Eigen::Index c = 0; c < model.components.cols(); ++c) {
      model.components(r, c) = read_double(in);
    }
  }
  return model;
}

void PCAModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write pca model " + path.string());
  out << serialize();
}

PCAModel PCAModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read pca model " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return deserialize(buffer.str());
}

AugmentedMatrix augment(const Eigen::MatrixXd& X_tab, const Eigen::MatrixXd& H_reduced,
                        const std::vector<std::string>& tabular_names) {
  const bool has_embedding = H_reduced.cols() > 0;
  if (has_embedding && X_tab.rows() != H_reduced.rows()) {
    throw std::invalid_argument("augment: tabular and embedding row counts differ");
  }
  if (!tabular_names.empty() &&
      tabular_names.size() != static_cast<std::size_t>(X_tab.cols())) {
    throw std::invalid_argument("augment: tabular name count does not match columns");
  }
  AugmentedMatrix out;
  out.values.resize(X_tab.rows(), X_tab.cols() + H_reduced.cols());
  out.values.leftCols(X_tab.cols()) = X_tab;
  if (has_embedding) out.values.rightCols(H_reduced.cols()) = H_reduced;
  for (Eigen::Index c = 0; c < X_tab.cols(); ++c) {
    out.sources.push_back(ColumnSource::kTabular);
    out.names.push_back(tabular_names.empty() ? "tab" + std::to_string(c)
                                              : tabular_names[static_cast<std::size_t>(c)]);
  }
  for (Eigen::Index c = 0; c < H_reduced.cols(); ++c) {
    out.sources.push_back(ColumnSource::kEmbedding);
    out.names.push_back("embedding_pc" + std::to_string(c + 1));
  }
  return out;
}

std::string AugmentedMatrix::serialize_columns() const {
  std::string out;
  for (std::size_t c = 0; c < names.size(); ++c) {
    out += sources[c] == ColumnSource::kTabular ? "tabular\t" : "embedding\t";
    out += names[c];
    out.push_back('\n');
  }
  return out;
}

AugmentedMatrix AugmentedMatrix::columns_from(std::string_view text) {
  AugmentedMatrix out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::runtime_error("column list: missing tab");
    const auto source = line.substr(0, tab);
    if (source == "tabular") {
      out.sources.push_back(ColumnSource::kTabular);
    } else if (source == "embedding") {
      out.sources.push_back(ColumnSource::kEmbedding);
    } else {
      throw std::runtime_error("column list: unknown source '" + source + "'");
    }
    out.names.push_back(line.substr(tab + 1));
  }
  return out;
}

}  // namespace rct
