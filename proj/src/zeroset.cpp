#include "mvls/zeroset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mvls/io.hpp"

namespace mvls::zeroset {

std::vector<double> SeedGrid::spacings() const {
  std::vector<double> h(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k)
    h[k] = (hi[k] - lo[k]) / static_cast<double>(counts[k] - 1);
  return h;
}

void SeedGrid::validate() const {
  if (lo.size() != hi.size() || lo.size() != counts.size() || counts.empty())
    throw std::invalid_argument("SeedGrid: inconsistent sizes");
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] < 2) throw std::invalid_argument("SeedGrid: need >= 2 nodes per dimension");
    if (!(lo[k] < hi[k])) throw std::invalid_argument("SeedGrid: empty interval");
  }
}

namespace {

struct GridIndexer {
  std::vector<Index> counts;
  std::vector<Index> strides;  // row-major, last dimension contiguous
  Index total = 1;

  explicit GridIndexer(const SeedGrid& grid) : counts(grid.counts) {
    strides.assign(counts.size(), 1);
    for (std::size_t k = counts.size(); k-- > 0;) {
      strides[k] = total;
      total *= counts[k];
    }
  }

  void unflatten(Index flat, std::span<Index> idx) const {
    for (std::size_t k = 0; k < counts.size(); ++k) {
      idx[k] = flat / strides[k];
      flat -= idx[k] * strides[k];
    }
  }
};

void node_coords(const SeedGrid& grid, std::span<const Index> idx,
                 std::span<const double> h, std::span<double> x) {
  for (std::size_t k = 0; k < grid.counts.size(); ++k)
    x[k] = grid.lo[k] + h[k] * static_cast<double>(idx[k]);
}

// Mixed-sign test against the axis neighbors of node `flat` in one value
// channel laid out on the grid.
bool mixed_sign(const GridIndexer& gi, std::span<const Index> idx, Index flat,
                const std::vector<double>& values, Index stride_per_node,
                Index channel) {
  const double v = values[static_cast<std::size_t>(flat * stride_per_node + channel)];
  if (v == 0.0) return true;
  for (std::size_t k = 0; k < gi.counts.size(); ++k) {
    for (int dir = -1; dir <= 1; dir += 2) {
      Index nk = idx[k] + dir;
      if (nk < 0 || nk >= gi.counts[k]) continue;
      Index nflat = flat + dir * gi.strides[k];
      double nv = values[static_cast<std::size_t>(nflat * stride_per_node + channel)];
      if (v * nv < 0.0 || nv == 0.0) return true;
    }
  }
  return false;
}

DenseMatrix gather_seeds(const SeedGrid& grid, const GridIndexer& gi,
                         const std::vector<char>& keep) {
  Index n = 0;
  for (char c : keep) n += c;
  const Index dim = grid.dim();
  DenseMatrix seeds(n, dim);
  std::vector<Index> idx(static_cast<std::size_t>(dim));
  std::vector<double> h = grid.spacings();
  Index row = 0;
  for (Index flat = 0; flat < gi.total; ++flat) {
    if (!keep[static_cast<std::size_t>(flat)]) continue;
    gi.unflatten(flat, idx);
    node_coords(grid, idx, h, {seeds.row(row), static_cast<std::size_t>(dim)});
    ++row;
  }
  return seeds;
}

}  // namespace

DenseMatrix detect_seeds_scalar(const ScalarEvaluator& phi, const SeedGrid& grid,
                                par::Exec exec) {
  grid.validate();
  GridIndexer gi(grid);
  const Index dim = grid.dim();
  std::vector<double> h = grid.spacings();
  std::vector<double> values(static_cast<std::size_t>(gi.total));
  par::for_each_index(exec, gi.total, [&](Index flat) {
    std::vector<Index> idx(static_cast<std::size_t>(dim));
    std::vector<double> x(static_cast<std::size_t>(dim));
    gi.unflatten(flat, idx);
    node_coords(grid, idx, h, x);
    values[static_cast<std::size_t>(flat)] = phi(x);
  });
  std::vector<char> keep(static_cast<std::size_t>(gi.total), 0);
  par::for_each_index(exec, gi.total, [&](Index flat) {
    std::vector<Index> idx(static_cast<std::size_t>(dim));
    gi.unflatten(flat, idx);
    keep[static_cast<std::size_t>(flat)] = mixed_sign(gi, idx, flat, values, 1, 0) ? 1 : 0;
  });
  return gather_seeds(grid, gi, keep);
}

DenseMatrix detect_seeds_vector(const VectorEvaluator& phi, Index components,
                                const SeedGrid& grid, double eps0, par::Exec exec) {
  grid.validate();
  if (components < 2)
    throw std::invalid_argument("detect_seeds_vector: needs at least two components");
  GridIndexer gi(grid);
  const Index dim = grid.dim();
  std::vector<double> h = grid.spacings();
  std::vector<double> values(static_cast<std::size_t>(gi.total * components));
  par::for_each_index(exec, gi.total, [&](Index flat) {
    std::vector<Index> idx(static_cast<std::size_t>(dim));
    std::vector<double> x(static_cast<std::size_t>(dim));
    gi.unflatten(flat, idx);
    node_coords(grid, idx, h, x);
    phi(x, {values.data() + flat * components, static_cast<std::size_t>(components)});
  });
  std::vector<char> keep(static_cast<std::size_t>(gi.total), 0);
  par::for_each_index(exec, gi.total, [&](Index flat) {
    double norm2 = 0.0;
    for (Index c = 0; c < components; ++c) {
      double v = values[static_cast<std::size_t>(flat * components + c)];
      norm2 += v * v;
    }
    if (norm2 > eps0 * eps0) return;
    std::vector<Index> idx(static_cast<std::size_t>(dim));
    gi.unflatten(flat, idx);
    for (Index c = 0; c < components; ++c)
      if (!mixed_sign(gi, idx, flat, values, components, c)) return;
    keep[static_cast<std::size_t>(flat)] = 1;
  });
  return gather_seeds(grid, gi, keep);
}

PointCloud refine(const ScalarEvaluator& objective, const DenseMatrix& seeds,
                  std::span<const double> initial_steps, int iterations,
                  par::Exec exec) {
  const Index dim = seeds.cols();
  if (static_cast<Index>(initial_steps.size()) != dim)
    throw std::invalid_argument("refine: step size dimension mismatch");
  for (double s : initial_steps)
    if (!(s > 0.0)) throw std::invalid_argument("refine: steps must be positive");
  if (iterations < 1) throw std::invalid_argument("refine: need at least one iteration");

  PointCloud cloud;
  cloud.points = seeds;
  cloud.values.assign(static_cast<std::size_t>(seeds.rows()), 0.0);

  Index n_offsets = 1;
  for (Index k = 0; k < dim; ++k) n_offsets *= 3;

  par::for_each_index(exec, seeds.rows(), [&](Index i) {
    std::vector<double> x(cloud.points.row(i), cloud.points.row(i) + dim);
    std::vector<double> cand(static_cast<std::size_t>(dim));
    std::vector<double> h(initial_steps.begin(), initial_steps.end());
    double value = objective(x);
    for (int it = 0; it < iterations; ++it) {
      double best = value;
      std::vector<double> best_x = x;
      // lexicographic enumeration of {-1, 0, +1}^dim; strict improvement
      // keeps the first (smallest) offset on ties
      for (Index o = 0; o < n_offsets; ++o) {
        Index rem = o;
        for (Index k = dim - 1; k >= 0; --k) {
          int digit = static_cast<int>(rem % 3) - 1;
          cand[static_cast<std::size_t>(k)] =
              x[static_cast<std::size_t>(k)] + digit * h[static_cast<std::size_t>(k)];
          rem /= 3;
        }
        double v = objective(cand);
        if (v < best) {
          best = v;
          best_x = cand;
        }
      }
      x = best_x;
      value = best;
      for (double& s : h) s *= 0.5;
    }
    for (Index k = 0; k < dim; ++k) cloud.points(i, k) = x[static_cast<std::size_t>(k)];
    cloud.values[static_cast<std::size_t>(i)] = value;
  });
  return cloud;
}

namespace {

// Distance from `x` to its k-th nearest row of `ref` (brute force).
double kth_nearest_dist(std::span<const double> x, const DenseMatrix& ref, Index k) {
  std::vector<double> best(static_cast<std::size_t>(k),
                           std::numeric_limits<double>::infinity());
  for (Index i = 0; i < ref.rows(); ++i) {
    const double* r = ref.row(i);
    double d2 = 0.0;
    for (Index c = 0; c < ref.cols(); ++c) {
      double d = x[static_cast<std::size_t>(c)] - r[c];
      d2 += d * d;
    }
    if (d2 < best.back()) {
      // insertion into the sorted small buffer
      std::size_t pos = best.size() - 1;
      while (pos > 0 && best[pos - 1] > d2) {
        best[pos] = best[pos - 1];
        --pos;
      }
      best[pos] = d2;
    }
  }
  return std::sqrt(best.back());
}

}  // namespace

PointCloud project(const PointCloud& cloud, std::span<const Index> keep_dims,
                   const std::optional<NearestFilter>& filter, par::Exec exec) {
  const Index dim = cloud.points.cols();
  for (Index k : keep_dims)
    if (k < 0 || k >= dim) throw std::invalid_argument("project: bad dimension index");

  std::vector<char> keep(static_cast<std::size_t>(cloud.size()), 1);
  if (filter) {
    if (!filter->reference || filter->reference->cols() != dim)
      throw std::invalid_argument("project: filter reference dimension mismatch");
    if (filter->k < 1 || filter->k > filter->reference->rows())
      throw std::invalid_argument("project: filter k out of range");
    par::for_each_index(exec, cloud.size(), [&](Index i) {
      double d = kth_nearest_dist({cloud.points.row(i), static_cast<std::size_t>(dim)},
                                  *filter->reference, filter->k);
      keep[static_cast<std::size_t>(i)] = d <= filter->max_dist ? 1 : 0;
    });
  }

  Index n = 0;
  for (char c : keep) n += c;
  PointCloud out;
  out.points = DenseMatrix(n, static_cast<Index>(keep_dims.size()));
  out.values.reserve(static_cast<std::size_t>(n));
  Index row = 0;
  for (Index i = 0; i < cloud.size(); ++i) {
    if (!keep[static_cast<std::size_t>(i)]) continue;
    for (std::size_t k = 0; k < keep_dims.size(); ++k)
      out.points(row, static_cast<Index>(k)) = cloud.points(i, keep_dims[k]);
    out.values.push_back(cloud.values[static_cast<std::size_t>(i)]);
    ++row;
  }
  return out;
}

double knn_distance_scale(const DenseMatrix& reference, Index k, Index sample_cap,
                          par::Exec exec) {
  const Index n = reference.rows();
  if (n < 2 || k < 1 || k >= n)
    throw std::invalid_argument("knn_distance_scale: bad reference or k");
  const Index stride = std::max<Index>(1, n / sample_cap);
  const Index samples = (n + stride - 1) / stride;
  std::vector<double> dists(static_cast<std::size_t>(samples));
  par::for_each_index(exec, samples, [&](Index s) {
    Index i = s * stride;
    // k + 1 including the point itself
    dists[static_cast<std::size_t>(s)] = kth_nearest_dist(
        {reference.row(i), static_cast<std::size_t>(reference.cols())}, reference, k + 1);
  });
  std::sort(dists.begin(), dists.end());
  return dists[dists.size() / 2];
}

void save_cloud_csv(const PointCloud& cloud, const std::vector<std::string>& names,
                    const std::string& path) {
  if (static_cast<Index>(names.size()) != cloud.points.cols())
    throw std::invalid_argument("save_cloud_csv: name count mismatch");
  std::ostringstream out;
  for (const auto& n : names) out << n << ',';
  out << "objective\n";
  for (Index i = 0; i < cloud.size(); ++i) {
    for (Index k = 0; k < cloud.points.cols(); ++k)
      out << io::format_double(cloud.points(i, k)) << ',';
    out << io::format_double(cloud.values[static_cast<std::size_t>(i)]) << '\n';
  }
  io::write_text_atomic(path, out.str());
}

PointCloud load_cloud_csv(const std::string& path) {
  io::Csv csv = io::read_csv(path);
  if (csv.header.empty() || csv.header.back() != "objective")
    throw std::runtime_error("load_cloud_csv: missing objective column in " + path);
  const Index dim = static_cast<Index>(csv.header.size()) - 1;
  PointCloud cloud;
  cloud.points = DenseMatrix(static_cast<Index>(csv.rows.size()), dim);
  cloud.values.reserve(csv.rows.size());
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    for (Index k = 0; k < dim; ++k)
      cloud.points(static_cast<Index>(i), k) = csv.rows[i][static_cast<std::size_t>(k)];
    cloud.values.push_back(csv.rows[i].back());
  }
  return cloud;
}

}  // namespace mvls::zeroset
