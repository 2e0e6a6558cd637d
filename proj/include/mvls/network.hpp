#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mvls/numerics.hpp"
#include "mvls/parallel.hpp"

namespace mvls::network {

using numerics::DenseMatrix;
using numerics::Index;

// One hidden layer. The first layer is an affine map of the input point;
// deeper (grown) layers consume the full feature vector of everything before
// them and carry a Gaussian localization bump per neuron.
struct Layer {
  DenseMatrix weights;          // width x input_width
  std::vector<double> biases;   // width
  DenseMatrix centers;          // width x m0, empty for the first layer
  DenseMatrix scales;           // width x m0 (the h_j rows), empty for the first layer
  double sharpness = 0.0;       // eta2 of the localization bump

  Index width() const { return static_cast<Index>(biases.size()); }
  bool has_localization() const { return centers.rows() > 0; }
};

// Randomized feature basis: Gaussian activation rho(u) = exp(-u^2/2) in every
// layer, outer coefficients trained elsewhere. Immutable after construction;
// growth returns a new basis whose feature vector has the old one as an exact
// prefix.
struct FeatureBasis {
  Index input_dim = 0;  // m0 = 1 + dim(Y)
  std::vector<Layer> layers;
  std::string provenance;  // free-form seed/config note carried through serialization

  Index feature_count() const {
    Index m = 0;
    for (const auto& l : layers) m += l.width();
    return m;
  }
};

enum class ScaleSource { random_uniform, gradient_scaled };

struct GrowthParams {
  Index width = 0;                // m_l, number of new neurons
  std::vector<double> range;      // r_l, per-dimension uniform range (size m0)
  double sharpness = 15.0;        // eta2
  ScaleSource scale_source = ScaleSource::random_uniform;
  double gradient_scale = 0.0;    // eta1, required for gradient_scaled
};

// First layer with W1 ~ U(-r1, r1) columnwise and biases drawn from the last
// entry of r1. Draw order: weights row by row, then biases; deterministic for
// a fixed seed.
FeatureBasis init_first_layer(Index input_dim, Index width,
                              std::span<const double> range, std::uint64_t seed);

// Feature vector psi(X), length feature_count().
std::vector<double> features(const FeatureBasis& basis, std::span<const double> X);

// Analytic Jacobian d psi / d X, feature_count() x input_dim.
DenseMatrix feature_jacobian(const FeatureBasis& basis, std::span<const double> X);

// psi(X) together with the directional derivative (d psi) . v, both length
// feature_count(). This is what operator assembly consumes; it matches
// feature_jacobian(basis, X) * v exactly.
void features_and_directional(const FeatureBasis& basis, std::span<const double> X,
                              std::span<const double> direction,
                              std::vector<double>& psi, std::vector<double>& dpsi);

// Appends one grown layer: scale rows h_j from U(-r,r) (or eta1 * grad phi at
// the error points), H_j = |h_j|_2, W = H alpha^T (outer product),
// b_j = -H_j phi(x_j), bump centers at the error points. Each new neuron
// evaluates to exactly 1 at its own center.
FeatureBasis grow_layer(const FeatureBasis& basis, std::span<const double> alpha,
                        const DenseMatrix& error_points, const GrowthParams& params,
                        std::uint64_t seed);

// Batch evaluation of phi_k(X) = alpha_k . psi(X) for every row of `points`;
// output is points.rows() x alphas.cols().
DenseMatrix evaluate_many(const FeatureBasis& basis, const DenseMatrix& alphas,
                          const DenseMatrix& points,
                          par::Exec exec = par::Exec::Parallel);

void save_basis(const FeatureBasis& basis, std::ostream& out);
FeatureBasis load_basis(std::istream& in);
void save_basis_file(const FeatureBasis& basis, const std::string& path);
FeatureBasis load_basis_file(const std::string& path);

}  // namespace mvls::network
