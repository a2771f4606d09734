#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "david/dataset.hpp"
#include "david/kde.hpp"
#include "david/vae.hpp"
#include "david/weights.hpp"

namespace david {

// The generator ablation ladder. KBVAEw is the full DAVID algorithm.
enum class GeneratorKind {
  Baseline,  // no synthetic rows
  OS,        // weighted random oversampling, no noise
  CSB,       // smoothed bootstrap directly in (x, y) space
  ZeroVAE,   // natural generation, KL weight 0
  BVAE,      // natural generation, plain loss (alpha = 0)
  KBVAE,     // latent smoothed bootstrap on the plain-loss model
  BVAEw,     // natural generation, balanced loss (alpha > 0)
  KBVAEw,    // latent smoothed bootstrap on the balanced model = DAVID
  KPCA,      // smoothed bootstrap in PCA score space
};

GeneratorKind parse_generator_kind(const std::string& name);  // accepts "david" for KBVAEw
std::string generator_kind_name(GeneratorKind kind);
bool generator_needs_vae(GeneratorKind kind);

struct AugmentationPlan {
  long long n_synthetic = -1;  // -1 = training-set size
  double alpha = 1.0;          // seed-drawing weight exponent
  double rho = 0.1;            // noise scale applied to the smoothing matrix
  BandwidthRule bandwidth_rule = BandwidthRule::silverman();
  BandwidthConvention convention = BandwidthConvention::Squared;
  std::string mix = "append";  // append | replace-duplicates
  std::uint64_t rng_seed = 0;

  long long resolved_count(int train_n) const {
    return n_synthetic < 0 ? train_n : n_synthetic;
  }

  // Rule for the seed-drawing density. A zero Fixed bandwidth only makes
  // sense for the smoothing matrix, so that case falls back to Silverman.
  BandwidthRule weight_rule() const {
    if (bandwidth_rule.kind == BandwidthKind::Fixed && bandwidth_rule.fixed_factor == 0.0)
      return BandwidthRule::silverman();
    return bandwidth_rule;
  }
};

struct PcaModel {
  Eigen::VectorXd mean;        // d
  Eigen::MatrixXd components;  // d x d orthonormal columns, descending eigenvalues
  Eigen::VectorXd eigenvalues; // descending
  int retained = 0;
};

// m categorical draws with replacement from the normalized weights.
std::vector<int> draw_seeds(const RelevanceWeights& weights, long long m, Rng& rng);

// Dispatches per kind; train must be in scaled space and the output stays in
// scaled space. VAE-family kinds validate the model's training config.
TabularDataset generate(GeneratorKind kind, const TabularDataset& train_scaled,
                        const VaeModel* model, const AugmentationPlan& plan);

// The headline path: encode all rows, smoothed bootstrap over the latent
// means with inverse-density seed weights, decode. Same as generate(KBVAEw)
// but callable with an alpha = 0 model (that is KBVAE).
TabularDataset david_generate(const VaeModel& model, const TabularDataset& train_scaled,
                              const AugmentationPlan& plan);

PcaModel pca_fit(const Eigen::MatrixXd& points);
Eigen::MatrixXd pca_project(const PcaModel& model, const Eigen::MatrixXd& points);
Eigen::MatrixXd pca_inverse(const PcaModel& model, const Eigen::MatrixXd& scores);

// Mixes original and synthetic rows (append mode concatenates; the
// replace-duplicates mode drops synthetic rows that exactly equal a row
// already present).
TabularDataset augment(const TabularDataset& train, const TabularDataset& synthetic,
                       const AugmentationPlan& plan);

}  // namespace david
