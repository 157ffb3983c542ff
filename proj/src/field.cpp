#include "oscar/field.hpp"

#include <cmath>

#include "oscar/io.hpp"

namespace oscar::field {

namespace {

Dense init_dense(long in, long out, double limit, Rng& rng) {
  Dense d;
  d.W.resize(in, out);
  for (long r = 0; r < in; ++r)
    for (long c = 0; c < out; ++c) d.W(r, c) = rng.uniform(-limit, limit);
  d.b = Eigen::VectorXd::Zero(out);
  return d;
}

}  // namespace

FieldParams FieldParams::create(int latent_dim, int hidden, int layers, Rng& rng) {
  if (latent_dim < 1 || hidden < 1 || layers < 1)
    throw ShapeError("field params: dimensions must be positive");
  FieldParams p;
  p.latent_dim = latent_dim;
  p.hidden = hidden;
  p.layers = layers;
  long in = p.point_dim + latent_dim;
  for (int l = 0; l < layers; ++l) {
    // He-uniform for the ReLU stack.
    p.backbone.push_back(init_dense(in, hidden, std::sqrt(6.0 / static_cast<double>(in)), rng));
    in = hidden;
  }
  // Glorot-uniform for the linear heads.
  p.acoustic = init_dense(hidden, 3, std::sqrt(6.0 / (hidden + 3.0)), rng);
  p.occupancy = init_dense(hidden, 1, std::sqrt(6.0 / (hidden + 1.0)), rng);
  return p;
}

long FieldParams::count() const {
  long n = 0;
  for (const Dense& d : backbone) n += d.W.size() + d.b.size();
  n += acoustic.W.size() + acoustic.b.size();
  n += occupancy.W.size() + occupancy.b.size();
  return n;
}

uint32_t FieldParams::checksum() const {
  uint32_t c = 0;
  auto slots = param_slots(const_cast<FieldParams&>(*this));
  for (const ParamSlot& s : slots)
    c = io::crc32(s.data, static_cast<size_t>(s.size) * sizeof(double), c);
  return c;
}

std::vector<ParamSlot> param_slots(FieldParams& p) {
  std::vector<ParamSlot> slots;
  for (size_t l = 0; l < p.backbone.size(); ++l) {
    slots.push_back({"backbone." + std::to_string(l) + ".W", p.backbone[l].W.data(),
                     p.backbone[l].W.size()});
    slots.push_back({"backbone." + std::to_string(l) + ".b", p.backbone[l].b.data(),
                     p.backbone[l].b.size()});
  }
  slots.push_back({"acoustic.W", p.acoustic.W.data(), p.acoustic.W.size()});
  slots.push_back({"acoustic.b", p.acoustic.b.data(), p.acoustic.b.size()});
  slots.push_back({"occupancy.W", p.occupancy.W.data(), p.occupancy.W.size()});
  slots.push_back({"occupancy.b", p.occupancy.b.data(), p.occupancy.b.size()});
  return slots;
}

Codebook init_latent_codebook(long n, int dim, uint64_t seed, double variance) {
  if (n < 1 || dim < 1) throw ShapeError("latent codebook: need n >= 1 and dim >= 1");
  Rng rng(seed);
  Codebook cb;
  cb.z.resize(n, dim);
  const double stddev = std::sqrt(variance);
  for (long r = 0; r < n; ++r)
    for (int c = 0; c < dim; ++c) cb.z(r, c) = rng.normal(0.0, stddev);
  return cb;
}

Eigen::VectorXd mean_latent(const Codebook& cb) {
  if (cb.count() == 0) throw ShapeError("mean_latent: empty codebook");
  return cb.z.colwise().mean().transpose();
}

TapedField::TapedField(ad::Tape& tape, const FieldParams& params, bool trainable)
    : tape_(&tape), params_(&params) {
  auto bind = [&](const std::string& name, const ad::RowMat& m) {
    ad::Var v = tape.leaf(ad::Tensor::from_mat(m), trainable);
    leaves_.emplace_back(name, v);
    return v;
  };
  auto bind_vec = [&](const std::string& name, const Eigen::VectorXd& b) {
    ad::Var v = tape.leaf(ad::Tensor::vector(b.array()), trainable);
    leaves_.emplace_back(name, v);
    return v;
  };
  for (size_t l = 0; l < params.backbone.size(); ++l) {
    bb_w_.push_back(bind("backbone." + std::to_string(l) + ".W", params.backbone[l].W));
    bb_b_.push_back(bind_vec("backbone." + std::to_string(l) + ".b", params.backbone[l].b));
  }
  ac_w_ = bind("acoustic.W", params.acoustic.W);
  ac_b_ = bind_vec("acoustic.b", params.acoustic.b);
  oc_w_ = bind("occupancy.W", params.occupancy.W);
  oc_b_ = bind_vec("occupancy.b", params.occupancy.b);
}

ad::Var TapedField::features(const ad::RowMat& pts, ad::Var z) {
  if (pts.cols() != params_->point_dim) throw ShapeError("features: points must be (n x 3)");
  if (z.value().size() != params_->latent_dim)
    throw ShapeError("features: latent dimension mismatch, expected " +
                     std::to_string(params_->latent_dim) + " got " +
                     std::to_string(z.value().size()));
  ad::Tape& t = *tape_;
  const long n = pts.rows();
  ad::Var x = t.concat({t.leaf(ad::Tensor::from_mat(pts)), t.broadcast_rows(z, n)}, 1);
  for (size_t l = 0; l < bb_w_.size(); ++l)
    x = t.relu(t.add(t.matmul(x, bb_w_[l]), t.broadcast_rows(bb_b_[l], n)));
  return x;
}

ad::Var TapedField::acoustic(ad::Var h) {
  ad::Tape& t = *tape_;
  const long n = h.value().rows();
  return t.softplus(t.add(t.matmul(h, ac_w_), t.broadcast_rows(ac_b_, n)));
}

ad::Var TapedField::occupancy(ad::Var h) {
  ad::Tape& t = *tape_;
  const long n = h.value().rows();
  return t.sigmoid(t.add(t.matmul(h, oc_w_), t.broadcast_rows(oc_b_, n)));
}

Eigen::ArrayXd softplus(const Eigen::ArrayXd& x) {
  return (x > 0.0).select(x + (-x).exp().log1p(), x.exp().log1p());
}

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& x) {
  Eigen::ArrayXd ex = (-x.abs()).exp();
  return (x >= 0.0).select(1.0 / (1.0 + ex), ex / (1.0 + ex));
}

ad::RowMat eval_features(const FieldParams& p, const ad::RowMat& pts, const Eigen::VectorXd& z) {
  if (pts.cols() != p.point_dim) throw ShapeError("eval_features: points must be (n x 3)");
  if (z.size() != p.latent_dim) throw ShapeError("eval_features: latent dimension mismatch");
  ad::RowMat x(pts.rows(), p.point_dim + p.latent_dim);
  x.leftCols(p.point_dim) = pts;
  x.rightCols(p.latent_dim).rowwise() = z.transpose();
  ad::RowMat y;
  for (const Dense& d : p.backbone) {
    y.noalias() = x * d.W;
    y.rowwise() += d.b.transpose();
    x = y.cwiseMax(0.0);
  }
  return x;
}

ad::RowMat eval_acoustic(const FieldParams& p, const ad::RowMat& pts, const Eigen::VectorXd& z) {
  ad::RowMat h = eval_features(p, pts, z);
  ad::RowMat lin = h * p.acoustic.W;
  lin.rowwise() += p.acoustic.b.transpose();
  ad::RowMat out(lin.rows(), lin.cols());
  Eigen::Map<Eigen::ArrayXd>(out.data(), out.size()) =
      softplus(Eigen::Map<const Eigen::ArrayXd>(lin.data(), lin.size()));
  return out;
}

Eigen::ArrayXd eval_occupancy(const FieldParams& p, const ad::RowMat& pts,
                              const Eigen::VectorXd& z) {
  ad::RowMat h = eval_features(p, pts, z);
  Eigen::ArrayXd lin = (h * p.occupancy.W).array().col(0);
  lin += p.occupancy.b[0];
  return sigmoid(lin);
}

}  // namespace oscar::field
