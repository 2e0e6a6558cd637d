#include "mvls/collocation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mvls/io.hpp"
#include "mvls/rng.hpp"

namespace mvls::collocation {

CollocationSet sample_initial(const SamplingConfig& config, const DomainBox& domain,
                              std::uint64_t seed) {
  domain.validate();
  const Index dy = domain.dim_y();
  if (config.n_interior < 1 || config.n_boundary < 1)
    throw std::invalid_argument("sample_initial: counts must be positive");
  if (config.mode == SamplingMode::normal_initial) {
    if (static_cast<Index>(config.mean.size()) != dy ||
        static_cast<Index>(config.variance.size()) != dy)
      throw std::invalid_argument("sample_initial: mean/variance size mismatch");
    for (double v : config.variance)
      if (!(v > 0.0)) throw std::invalid_argument("sample_initial: variance must be positive");
  }

  rng::Engine eng(seed);
  CollocationSet set;
  set.interior = DenseMatrix(config.n_interior, 1 + dy);
  set.boundary = DenseMatrix(config.n_boundary, dy);

  auto draw_y = [&](double* out) {
    for (Index k = 0; k < dy; ++k) {
      if (config.mode == SamplingMode::normal_initial) {
        out[k] = eng.normal(config.mean[static_cast<std::size_t>(k)],
                            std::sqrt(config.variance[static_cast<std::size_t>(k)]));
      } else {
        out[k] = eng.uniform(domain.lo[static_cast<std::size_t>(k)],
                             domain.hi[static_cast<std::size_t>(k)]);
      }
    }
  };

  for (Index i = 0; i < config.n_interior; ++i) {
    double* row = set.interior.row(i);
    row[0] = eng.uniform(0.0, domain.t_final);
    draw_y(row + 1);
  }
  for (Index i = 0; i < config.n_boundary; ++i) draw_y(set.boundary.row(i));
  return set;
}

TubeResult adapt_tube(const ComponentEvaluator& evaluator, Index components,
                      const DomainBox& domain, const TubeConfig& tube,
                      std::uint64_t seed, par::Exec exec) {
  domain.validate();
  if (tube.n_candidates < 1) throw std::invalid_argument("adapt_tube: no candidates");
  if (!(tube.eps > 0.0)) throw std::invalid_argument("adapt_tube: eps must be positive");
  if (components < 1) throw std::invalid_argument("adapt_tube: need at least one component");

  const Index dy = domain.dim_y();
  const std::int64_t n_int = tube.n_candidates;
  const std::int64_t n_bnd = std::llround(
      std::pow(static_cast<double>(tube.n_candidates),
               static_cast<double>(dy) / static_cast<double>(dy + 1)));

  rng::Engine eng(seed);
  DenseMatrix cand_int(n_int, 1 + dy);
  for (std::int64_t i = 0; i < n_int; ++i) {
    double* row = cand_int.row(i);
    row[0] = eng.uniform(0.0, domain.t_final);
    for (Index k = 0; k < dy; ++k)
      row[1 + k] = eng.uniform(domain.lo[static_cast<std::size_t>(k)],
                               domain.hi[static_cast<std::size_t>(k)]);
  }
  DenseMatrix cand_bnd(n_bnd, dy);
  for (std::int64_t i = 0; i < n_bnd; ++i) {
    double* row = cand_bnd.row(i);
    for (Index k = 0; k < dy; ++k)
      row[k] = eng.uniform(domain.lo[static_cast<std::size_t>(k)],
                           domain.hi[static_cast<std::size_t>(k)]);
  }

  DenseMatrix val_int(n_int, components);
  par::for_each_index(exec, n_int, [&](Index i) {
    evaluator({cand_int.row(i), static_cast<std::size_t>(1 + dy)},
              {val_int.row(i), static_cast<std::size_t>(components)});
  });
  DenseMatrix val_bnd(n_bnd, components);
  par::for_each_index(exec, n_bnd, [&](Index i) {
    std::vector<double> xb(static_cast<std::size_t>(1 + dy), 0.0);
    for (Index k = 0; k < dy; ++k) xb[static_cast<std::size_t>(1 + k)] = cand_bnd(i, k);
    evaluator(xb, {val_bnd.row(i), static_cast<std::size_t>(components)});
  });

  TubeResult result;
  result.candidates_interior = n_int;
  result.candidates_boundary = n_bnd;
  result.per_component.resize(static_cast<std::size_t>(components));
  for (Index c = 0; c < components; ++c) {
    std::vector<Index> keep_int, keep_bnd;
    for (std::int64_t i = 0; i < n_int; ++i)
      if (std::fabs(val_int(i, c)) <= tube.eps) keep_int.push_back(i);
    for (std::int64_t i = 0; i < n_bnd; ++i)
      if (std::fabs(val_bnd(i, c)) <= tube.eps) keep_bnd.push_back(i);
    if (keep_int.empty() || keep_bnd.empty())
      throw std::runtime_error(
          "adapt_tube: empty tube for component " + std::to_string(c) +
          "; increase eps_a (the tube must contain the zero level set)");
    CollocationSet& set = result.per_component[static_cast<std::size_t>(c)];
    set.interior = DenseMatrix(static_cast<Index>(keep_int.size()), 1 + dy);
    for (std::size_t i = 0; i < keep_int.size(); ++i)
      for (Index k = 0; k < 1 + dy; ++k)
        set.interior(static_cast<Index>(i), k) = cand_int(keep_int[i], k);
    set.boundary = DenseMatrix(static_cast<Index>(keep_bnd.size()), dy);
    for (std::size_t i = 0; i < keep_bnd.size(); ++i)
      for (Index k = 0; k < dy; ++k)
        set.boundary(static_cast<Index>(i), k) = cand_bnd(keep_bnd[i], k);
  }
  return result;
}

std::vector<Index> select_error_points(std::span<const double> residuals, Index count) {
  const Index n = static_cast<Index>(residuals.size());
  if (count > n)
    throw std::invalid_argument("select_error_points: pool too small, short by " +
                                std::to_string(count - n) + " points");
  if (count < 1) throw std::invalid_argument("select_error_points: count must be positive");
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return residuals[static_cast<std::size_t>(a)] > residuals[static_cast<std::size_t>(b)];
  });
  order.resize(static_cast<std::size_t>(count));
  return order;
}

void save_collocation_csv(const CollocationSet& set,
                          const std::vector<std::string>& coord_names,
                          const std::string& path) {
  const Index dy = set.boundary.cols();
  if (static_cast<Index>(coord_names.size()) != 1 + dy)
    throw std::invalid_argument("save_collocation_csv: name count mismatch");
  std::ostringstream out;
  out << "kind";
  for (const auto& n : coord_names) out << ',' << n;
  out << '\n';
  for (Index i = 0; i < set.interior.rows(); ++i) {
    out << "interior";
    for (Index k = 0; k < 1 + dy; ++k) out << ',' << io::format_double(set.interior(i, k));
    out << '\n';
  }
  for (Index i = 0; i < set.boundary.rows(); ++i) {
    out << "boundary," << io::format_double(0.0);
    for (Index k = 0; k < dy; ++k) out << ',' << io::format_double(set.boundary(i, k));
    out << '\n';
  }
  io::write_text_atomic(path, out.str());
}

CollocationSet load_collocation_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv " + path);
  Index cols = -1;  // 1 + dy, counted from the header (minus the kind column)
  {
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) ++cols;
  }
  std::vector<std::vector<double>> interior, boundary;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string kind, cell;
    std::getline(ls, kind, ',');
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<Index>(row.size()) != cols)
      throw std::runtime_error("ragged csv row in " + path);
    if (kind == "interior") {
      interior.push_back(std::move(row));
    } else if (kind == "boundary") {
      row.erase(row.begin());  // drop the t = 0 column
      boundary.push_back(std::move(row));
    } else {
      throw std::runtime_error("unknown point kind '" + kind + "' in " + path);
    }
  }
  CollocationSet set;
  set.interior = DenseMatrix(static_cast<Index>(interior.size()), cols);
  for (std::size_t i = 0; i < interior.size(); ++i)
    for (Index k = 0; k < cols; ++k)
      set.interior(static_cast<Index>(i), k) = interior[i][static_cast<std::size_t>(k)];
  set.boundary = DenseMatrix(static_cast<Index>(boundary.size()), cols - 1);
  for (std::size_t i = 0; i < boundary.size(); ++i)
    for (Index k = 0; k < cols - 1; ++k)
      set.boundary(static_cast<Index>(i), k) = boundary[i][static_cast<std::size_t>(k)];
  return set;
}

}  // namespace mvls::collocation
