#include "mvls/network.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "mvls/rng.hpp"

namespace mvls::network {

namespace {

inline double rho(double u) { return std::exp(-0.5 * u * u); }
inline double rho_prime(double u) { return -u * std::exp(-0.5 * u * u); }

void check_point(const FeatureBasis& basis, std::span<const double> X) {
  if (static_cast<Index>(X.size()) != basis.input_dim)
    throw std::invalid_argument("feature evaluation: point dimension mismatch");
}

// Localization bump value and, optionally, its gradient factor
// d log g / d X_k = -eta2^2 h_k^2 (X_k - c_k).
double bump(const Layer& layer, Index j, std::span<const double> X,
            double* dlog = nullptr) {
  const double* c = layer.centers.row(j);
  const double* h = layer.scales.row(j);
  const double e2 = layer.sharpness * layer.sharpness;
  double q = 0.0;
  for (Index k = 0; k < layer.centers.cols(); ++k) {
    double d = X[static_cast<std::size_t>(k)] - c[k];
    q += h[k] * h[k] * d * d;
    if (dlog) dlog[k] = -e2 * h[k] * h[k] * d;
  }
  return std::exp(-0.5 * e2 * q);
}

}  // namespace

FeatureBasis init_first_layer(Index input_dim, Index width,
                              std::span<const double> range, std::uint64_t seed) {
  if (width < 1) throw std::invalid_argument("init_first_layer: zero width");
  if (static_cast<Index>(range.size()) != input_dim)
    throw std::invalid_argument("init_first_layer: range size must equal input_dim");
  for (double r : range)
    if (!(r > 0.0)) throw std::invalid_argument("init_first_layer: range must be positive");

  rng::Engine eng(seed);
  Layer layer;
  layer.weights = DenseMatrix(width, input_dim);
  layer.biases.resize(static_cast<std::size_t>(width));
  for (Index j = 0; j < width; ++j)
    for (Index k = 0; k < input_dim; ++k)
      layer.weights(j, k) = eng.uniform(-range[static_cast<std::size_t>(k)],
                                        range[static_cast<std::size_t>(k)]);
  const double rb = range[static_cast<std::size_t>(input_dim - 1)];
  for (Index j = 0; j < width; ++j)
    layer.biases[static_cast<std::size_t>(j)] = eng.uniform(-rb, rb);

  FeatureBasis basis;
  basis.input_dim = input_dim;
  basis.layers.push_back(std::move(layer));
  return basis;
}

std::vector<double> features(const FeatureBasis& basis, std::span<const double> X) {
  check_point(basis, X);
  std::vector<double> psi;
  psi.reserve(static_cast<std::size_t>(basis.feature_count()));
  for (std::size_t li = 0; li < basis.layers.size(); ++li) {
    const Layer& layer = basis.layers[li];
    const Index in_w = layer.weights.cols();
    const Index prev_count = static_cast<Index>(psi.size());
    if (li == 0) {
      for (Index j = 0; j < layer.width(); ++j) {
        const double* w = layer.weights.row(j);
        double u = layer.biases[static_cast<std::size_t>(j)];
        for (Index k = 0; k < in_w; ++k) u += w[k] * X[static_cast<std::size_t>(k)];
        psi.push_back(rho(u));
      }
    } else {
      if (in_w != prev_count)
        throw std::invalid_argument("features: layer input width mismatch");
      for (Index j = 0; j < layer.width(); ++j) {
        const double* w = layer.weights.row(j);
        double u = layer.biases[static_cast<std::size_t>(j)];
        for (Index k = 0; k < in_w; ++k) u += w[k] * psi[static_cast<std::size_t>(k)];
        psi.push_back(rho(u) * bump(layer, j, X));
      }
    }
  }
  return psi;
}

DenseMatrix feature_jacobian(const FeatureBasis& basis, std::span<const double> X) {
  check_point(basis, X);
  const Index m0 = basis.input_dim;
  const Index total = basis.feature_count();
  DenseMatrix jac(total, m0);
  std::vector<double> psi;
  psi.reserve(static_cast<std::size_t>(total));
  std::vector<double> dlog(static_cast<std::size_t>(m0));
  Index row = 0;
  for (std::size_t li = 0; li < basis.layers.size(); ++li) {
    const Layer& layer = basis.layers[li];
    const Index in_w = layer.weights.cols();
    for (Index j = 0; j < layer.width(); ++j, ++row) {
      const double* w = layer.weights.row(j);
      double u = layer.biases[static_cast<std::size_t>(j)];
      double* out = jac.row(row);
      if (li == 0) {
        for (Index k = 0; k < in_w; ++k) u += w[k] * X[static_cast<std::size_t>(k)];
        double rp = rho_prime(u);
        for (Index k = 0; k < m0; ++k) out[k] = rp * w[k];
        psi.push_back(rho(u));
      } else {
        for (Index k = 0; k < in_w; ++k) u += w[k] * psi[static_cast<std::size_t>(k)];
        // du/dX = W_row . J_prefix
        for (Index k = 0; k < m0; ++k) {
          double s = 0.0;
          for (Index i = 0; i < in_w; ++i) s += w[i] * jac(i, k);
          out[k] = s;
        }
        double g = bump(layer, j, X, dlog.data());
        double r = rho(u), rp = rho_prime(u);
        for (Index k = 0; k < m0; ++k)
          out[k] = rp * out[k] * g + r * g * dlog[static_cast<std::size_t>(k)];
        psi.push_back(r * g);
      }
    }
  }
  return jac;
}

void features_and_directional(const FeatureBasis& basis, std::span<const double> X,
                              std::span<const double> direction,
                              std::vector<double>& psi, std::vector<double>& dpsi) {
  check_point(basis, X);
  if (direction.size() != X.size())
    throw std::invalid_argument("features_and_directional: direction dimension mismatch");
  const Index m0 = basis.input_dim;
  const Index total = basis.feature_count();
  psi.clear();
  dpsi.clear();
  psi.reserve(static_cast<std::size_t>(total));
  dpsi.reserve(static_cast<std::size_t>(total));
  for (std::size_t li = 0; li < basis.layers.size(); ++li) {
    const Layer& layer = basis.layers[li];
    const Index in_w = layer.weights.cols();
    for (Index j = 0; j < layer.width(); ++j) {
      const double* w = layer.weights.row(j);
      double u = layer.biases[static_cast<std::size_t>(j)];
      double du = 0.0;
      if (li == 0) {
        for (Index k = 0; k < in_w; ++k) {
          u += w[k] * X[static_cast<std::size_t>(k)];
          du += w[k] * direction[static_cast<std::size_t>(k)];
        }
        psi.push_back(rho(u));
        dpsi.push_back(rho_prime(u) * du);
      } else {
        for (Index k = 0; k < in_w; ++k) {
          u += w[k] * psi[static_cast<std::size_t>(k)];
          du += w[k] * dpsi[static_cast<std::size_t>(k)];
        }
        const double* c = layer.centers.row(j);
        const double* h = layer.scales.row(j);
        const double e2 = layer.sharpness * layer.sharpness;
        double q = 0.0, dq = 0.0;
        for (Index k = 0; k < m0; ++k) {
          double d = X[static_cast<std::size_t>(k)] - c[k];
          q += h[k] * h[k] * d * d;
          dq += -e2 * h[k] * h[k] * d * direction[static_cast<std::size_t>(k)];
        }
        double g = std::exp(-0.5 * e2 * q);
        double r = rho(u);
        psi.push_back(r * g);
        dpsi.push_back(rho_prime(u) * du * g + r * g * dq);
      }
    }
  }
}

FeatureBasis grow_layer(const FeatureBasis& basis, std::span<const double> alpha,
                        const DenseMatrix& error_points, const GrowthParams& params,
                        std::uint64_t seed) {
  const Index m0 = basis.input_dim;
  const Index m_prev = basis.feature_count();
  if (static_cast<Index>(alpha.size()) != m_prev)
    throw std::invalid_argument("grow_layer: coefficient length mismatch");
  if (error_points.rows() != params.width || error_points.cols() != m0)
    throw std::invalid_argument("grow_layer: error point shape mismatch");
  if (params.width < 1) throw std::invalid_argument("grow_layer: zero width");
  if (!(params.sharpness > 0.0))
    throw std::invalid_argument("grow_layer: sharpness must be positive");

  Layer layer;
  layer.sharpness = params.sharpness;
  layer.centers = error_points;
  layer.scales = DenseMatrix(params.width, m0);

  if (params.scale_source == ScaleSource::random_uniform) {
    if (static_cast<Index>(params.range.size()) != m0)
      throw std::invalid_argument("grow_layer: range size must equal input_dim");
    for (double r : params.range)
      if (!(r > 0.0)) throw std::invalid_argument("grow_layer: range must be positive");
    rng::Engine eng(seed);
    for (Index j = 0; j < params.width; ++j)
      for (Index k = 0; k < m0; ++k)
        layer.scales(j, k) = eng.uniform(-params.range[static_cast<std::size_t>(k)],
                                         params.range[static_cast<std::size_t>(k)]);
  } else {
    if (!(params.gradient_scale > 0.0))
      throw std::invalid_argument("grow_layer: gradient_scaled requires an explicit eta1");
    for (Index j = 0; j < params.width; ++j) {
      DenseMatrix jac = feature_jacobian(basis, {error_points.row(j),
                                                 static_cast<std::size_t>(m0)});
      for (Index k = 0; k < m0; ++k) {
        double s = 0.0;
        for (Index i = 0; i < m_prev; ++i) s += alpha[static_cast<std::size_t>(i)] * jac(i, k);
        layer.scales(j, k) = params.gradient_scale * s;
      }
    }
  }

  layer.weights = DenseMatrix(params.width, m_prev);
  layer.biases.resize(static_cast<std::size_t>(params.width));
  for (Index j = 0; j < params.width; ++j) {
    double H = 0.0;
    for (Index k = 0; k < m0; ++k) H += layer.scales(j, k) * layer.scales(j, k);
    H = std::sqrt(H);
    for (Index i = 0; i < m_prev; ++i)
      layer.weights(j, i) = H * alpha[static_cast<std::size_t>(i)];
    std::vector<double> psi =
        features(basis, {error_points.row(j), static_cast<std::size_t>(m0)});
    double phi = 0.0;
    for (Index i = 0; i < m_prev; ++i) phi += alpha[static_cast<std::size_t>(i)] * psi[static_cast<std::size_t>(i)];
    layer.biases[static_cast<std::size_t>(j)] = -H * phi;
  }

  FeatureBasis grown = basis;
  grown.layers.push_back(std::move(layer));
  return grown;
}

DenseMatrix evaluate_many(const FeatureBasis& basis, const DenseMatrix& alphas,
                          const DenseMatrix& points, par::Exec exec) {
  if (alphas.rows() != basis.feature_count())
    throw std::invalid_argument("evaluate_many: coefficient length mismatch");
  const Index n = points.rows();
  const Index k = alphas.cols();
  DenseMatrix out(n, k);
  par::for_each_index(exec, n, [&](Index i) {
    std::vector<double> psi =
        features(basis, {points.row(i), static_cast<std::size_t>(basis.input_dim)});
    for (Index c = 0; c < k; ++c) {
      double s = 0.0;
      for (Index j = 0; j < alphas.rows(); ++j)
        s += alphas(j, c) * psi[static_cast<std::size_t>(j)];
      out(i, c) = s;
    }
  });
  return out;
}

namespace {

constexpr char kMagic[9] = "MVLSBAS1";

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
void write_doubles(std::ostream& out, std::span<const double> v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}
void read_doubles(std::istream& in, std::span<double> v) {
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
}
void write_matrix(std::ostream& out, const DenseMatrix& m) {
  write_u64(out, static_cast<std::uint64_t>(m.rows()));
  write_u64(out, static_cast<std::uint64_t>(m.cols()));
  write_doubles(out, m.data());
}
DenseMatrix read_matrix(std::istream& in) {
  Index rows = static_cast<Index>(read_u64(in));
  Index cols = static_cast<Index>(read_u64(in));
  DenseMatrix m(rows, cols);
  read_doubles(in, m.data());
  return m;
}

}  // namespace

void save_basis(const FeatureBasis& basis, std::ostream& out) {
  out.write(kMagic, 8);
  write_u64(out, static_cast<std::uint64_t>(basis.input_dim));
  write_u64(out, basis.provenance.size());
  out.write(basis.provenance.data(), static_cast<std::streamsize>(basis.provenance.size()));
  write_u64(out, basis.layers.size());
  for (const Layer& l : basis.layers) {
    write_matrix(out, l.weights);
    write_u64(out, l.biases.size());
    write_doubles(out, l.biases);
    write_u64(out, l.has_localization() ? 1 : 0);
    if (l.has_localization()) {
      write_matrix(out, l.centers);
      write_matrix(out, l.scales);
      write_doubles(out, {&l.sharpness, 1});
    }
  }
}

FeatureBasis load_basis(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != std::string(kMagic, 8))
    throw std::runtime_error("load_basis: bad magic");
  FeatureBasis basis;
  basis.input_dim = static_cast<Index>(read_u64(in));
  std::uint64_t plen = read_u64(in);
  basis.provenance.resize(plen);
  in.read(basis.provenance.data(), static_cast<std::streamsize>(plen));
  std::uint64_t nl = read_u64(in);
  for (std::uint64_t li = 0; li < nl; ++li) {
    Layer l;
    l.weights = read_matrix(in);
    l.biases.resize(read_u64(in));
    read_doubles(in, l.biases);
    if (read_u64(in)) {
      l.centers = read_matrix(in);
      l.scales = read_matrix(in);
      read_doubles(in, {&l.sharpness, 1});
    }
    basis.layers.push_back(std::move(l));
  }
  if (!in) throw std::runtime_error("load_basis: truncated stream");
  return basis;
}

void save_basis_file(const FeatureBasis& basis, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_basis_file: cannot open " + path);
  save_basis(basis, out);
}

FeatureBasis load_basis_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_basis_file: cannot open " + path);
  return load_basis(in);
}

}  // namespace mvls::network
