#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "oscar/rng.hpp"
#include "oscar/tape.hpp"

namespace oscar::field {

// One linear layer; W is (in x out) so activations multiply on the left.
struct Dense {
  ad::RowMat W;
  Eigen::VectorXd b;
};

// Shared MLP backbone plus the two output heads. The backbone consumes the
// raw point concatenated with the latent code; there is deliberately no
// positional encoding, so backbone input width is exactly point_dim + latent_dim.
struct FieldParams {
  int point_dim = 3;
  int latent_dim = 128;
  int hidden = 128;
  int layers = 8;
  std::vector<Dense> backbone;
  Dense acoustic;   // hidden -> 3, softplus applied at evaluation
  Dense occupancy;  // hidden -> 1, sigmoid applied at evaluation

  static FieldParams create(int latent_dim, int hidden, int layers, Rng& rng);
  long count() const;
  uint32_t checksum() const;
};

// Mutable view over every parameter array, in the fixed serialization order.
struct ParamSlot {
  std::string name;
  double* data;
  long size;
};
std::vector<ParamSlot> param_slots(FieldParams& p);

struct Codebook {
  ad::RowMat z;  // one row per subject
  long count() const { return z.rows(); }
  int dim() const { return static_cast<int>(z.cols()); }
};

// Independent Gaussian draws with the configured variance (std = sqrt(var)).
Codebook init_latent_codebook(long n, int dim, uint64_t seed, double variance = 1e-3);
Eigen::VectorXd mean_latent(const Codebook& cb);

// Binds the parameters as tape leaves and exposes the taped evaluation path.
class TapedField {
 public:
  TapedField(ad::Tape& tape, const FieldParams& params, bool trainable);

  // pts: (n x point_dim) constants, z: latent code var of rank 1.
  ad::Var features(const ad::RowMat& pts, ad::Var z);
  ad::Var acoustic(ad::Var h);   // (n x 3) >= 0
  ad::Var occupancy(ad::Var h);  // (n x 1) in (0,1)

  const std::vector<std::pair<std::string, ad::Var>>& leaves() const { return leaves_; }

 private:
  ad::Tape* tape_;
  const FieldParams* params_;
  std::vector<ad::Var> bb_w_, bb_b_;
  ad::Var ac_w_, ac_b_, oc_w_, oc_b_;
  std::vector<std::pair<std::string, ad::Var>> leaves_;
};

// Fast evaluation without a tape (rendering, grid queries, validation).
ad::RowMat eval_features(const FieldParams& p, const ad::RowMat& pts, const Eigen::VectorXd& z);
ad::RowMat eval_acoustic(const FieldParams& p, const ad::RowMat& pts, const Eigen::VectorXd& z);
Eigen::ArrayXd eval_occupancy(const FieldParams& p, const ad::RowMat& pts, const Eigen::VectorXd& z);

Eigen::ArrayXd softplus(const Eigen::ArrayXd& x);
Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& x);

}  // namespace oscar::field
