#ifndef RCT_EMBEDDING_FUSION_H_
#define RCT_EMBEDDING_FUSION_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rct {

struct PCAModel {
  Eigen::VectorXd mean;          // length D
  Eigen::MatrixXd components;    // k x D, orthonormal rows
  Eigen::VectorXd explained_variance;  // length k, nonincreasing
  bool rank_deficient = false;

  std::size_t input_dim() const { return static_cast<std::size_t>(mean.size()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(components.rows()); }

  std::string serialize() const;
  static PCAModel deserialize(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static PCAModel load(const std::filesystem::path& path);
};

// Top-k eigenvectors of the sample covariance of H (rows are observations),
// by descending eigenvalue. Each component is signed so that its largest
// magnitude coordinate is positive. When the rank of the centred data is
// below k the remaining components span part of the null space and carry
// zero explained variance; rank_deficient is set and a warning is logged.
PCAModel fit_pca(const Eigen::MatrixXd& H, std::size_t k = 5);

// components * (h - mean)
Eigen::VectorXd transform(const PCAModel& model, const Eigen::VectorXd& h);
Eigen::MatrixXd transform(const PCAModel& model, const Eigen::MatrixXd& H);

enum class ColumnSource { kTabular, kEmbedding };

struct AugmentedMatrix {
  Eigen::MatrixXd values;
  std::vector<ColumnSource> sources;
  std::vector<std::string> names;  // tabular names, then "embedding_pc<i>"

  // Header line plus one source tag per column.
  std::string serialize_columns() const;
  static AugmentedMatrix columns_from(std::string_view text);
};

// [X_tab, H_reduced]; H_reduced may have zero columns.
AugmentedMatrix augment(const Eigen::MatrixXd& X_tab, const Eigen::MatrixXd& H_reduced,
                        const std::vector<std::string>& tabular_names = {});

}  // namespace rct

#endif  // RCT_EMBEDDING_FUSION_H_
