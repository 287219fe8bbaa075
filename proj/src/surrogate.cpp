// Sampling-based explainers: LIME-style local surrogate and KernelSHAP.

#include <Eigen/Dense>
#include <cmath>
#include <set>

#include "tsxai/attribution.hpp"
#include "tsxai/error.hpp"
#include "tsxai/rng.hpp"

namespace tsxai {
namespace {

ValueFunction logit_of(const NetworkModel& model, std::size_t target_class) {
  if (target_class >= model.class_count()) {
    throw InvalidArgument("target class " + std::to_string(target_class) +
                          " out of range");
  }
  return [&model, target_class](std::span<const double> x) {
    return forward_logits(model, x)[target_class];
  };
}

// Solves the symmetric positive semi-definite system or reports it singular.
Eigen::VectorXd solve_normal(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                             std::string_view what) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.rcond() < 1e-13) {
    throw SingularSystem(std::string(what) +
                         ": regression system is singular; increase the "
                         "number of samples");
  }
  return ldlt.solve(b);
}

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    r *= static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return r;
}

}  // namespace

std::vector<double> lime_surrogate(const ValueFunction& f,
                                   std::span<const double> sample,
                                   const LimeConfig& config,
                                   std::uint64_t stream_seed) {
  const std::size_t m = sample.size();
  if (config.num_samples < 10) {
    throw InvalidArgument("lime num_samples must be >= 10");
  }
  if (m == 0) throw InvalidArgument("lime: empty sample");
  const double width =
      config.kernel_width ? *config.kernel_width
                          : 0.75 * std::sqrt(static_cast<double>(m));
  const std::size_t n = config.num_samples;

  Rng rng(stream_seed);
  Eigen::MatrixXd z = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(m));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  std::vector<std::size_t> idx(m);
  std::vector<double> x(m);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    std::size_t off = 0;
    // Row 0 is the unperturbed sample.
    if (r > 0) {
      off = 1 + rng.below(m);
      for (std::size_t i = 0; i < m; ++i) idx[i] = i;
      // Partial Fisher-Yates picks `off` distinct positions to mask.
      for (std::size_t i = 0; i < off; ++i) {
        const std::size_t j = i + rng.below(m - i);
        std::swap(idx[i], idx[j]);
        z(row, static_cast<Eigen::Index>(idx[i])) = 0.0;
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      x[i] = z(row, static_cast<Eigen::Index>(i)) != 0.0 ? sample[i]
                                                          : config.mask_value;
    }
    y(row) = f(x);
    // Euclidean distance to the all-ones mask is sqrt(off).
    w(row) = std::exp(-static_cast<double>(off) / (width * width));
  }

  const double wsum = w.sum();
  const Eigen::RowVectorXd zmean = (w.transpose() * z) / wsum;
  const double ymean = w.dot(y) / wsum;
  const Eigen::MatrixXd zc = z.rowwise() - zmean;
  const Eigen::VectorXd yc = y.array() - ymean;
  Eigen::MatrixXd a = zc.transpose() * w.asDiagonal() * zc;
  a.diagonal().array() += config.ridge;
  const Eigen::VectorXd b = zc.transpose() * (w.asDiagonal() * yc);
  const Eigen::VectorXd coef = solve_normal(a, b, "lime");
  return {coef.data(), coef.data() + coef.size()};
}

std::vector<double> lime_surrogate(const NetworkModel& model,
                                   std::span<const double> sample,
                                   std::size_t target_class,
                                   const LimeConfig& config,
                                   std::size_t sample_index) {
  if (sample.size() != model.input_length()) {
    throw ShapeError("lime: sample length does not match model input");
  }
  return lime_surrogate(logit_of(model, target_class), sample, config,
                        derive_seed(config.seed, sample_index));
}

std::vector<double> kernel_shap(const ValueFunction& f,
                                std::span<const double> sample,
                                std::span<const double> background,
                                const ShapConfig& config,
                                std::uint64_t stream_seed) {
  const std::size_t m = sample.size();
  if (m == 0) throw InvalidArgument("kernel_shap: empty sample");
  if (background.size() != m) {
    throw ShapeError("kernel_shap background of length " +
                     std::to_string(background.size()) +
                     " does not match sample length " + std::to_string(m));
  }
  const bool exact =
      config.mode == ShapMode::exact ||
      (config.mode == ShapMode::automatic && m <= kShapAutoExactLimit);
  if (exact && m > kShapExactMax) {
    throw InvalidArgument("kernel_shap exact mode is limited to " +
                          std::to_string(kShapExactMax) + " time points, got " +
                          std::to_string(m));
  }
  if (!exact && config.num_coalitions < m + 2) {
    throw InvalidArgument("kernel_shap needs at least m + 2 = " +
                          std::to_string(m + 2) + " coalitions");
  }

  const double f_bg = f(background);
  const double f_x = f(sample);
  const double delta = f_x - f_bg;
  if (m == 1) return {delta};

  // Coalitions as 0/1 rows with their regression weights.
  std::vector<std::vector<char>> rows;
  std::vector<double> weights;
  if (exact) {
    const std::uint64_t total = 1ULL << m;
    rows.reserve(total - 2);
    for (std::uint64_t mask = 1; mask + 1 < total; ++mask) {
      std::vector<char> row(m);
      std::size_t s = 0;
      for (std::size_t i = 0; i < m; ++i) {
        row[i] = static_cast<char>((mask >> i) & 1U);
        s += row[i];
      }
      rows.push_back(std::move(row));
      weights.push_back(static_cast<double>(m - 1) /
                        (binomial(m, s) * static_cast<double>(s) *
                         static_cast<double>(m - s)));
    }
  } else {
    // Whole subset sizes are enumerated in order of kernel weight (1, m-1,
    // 2, m-2, ...) while the budget allows. The m singletons alone give the
    // constrained system full rank. The rest of the budget is drawn from the
    // remaining sizes in proportion to their kernel mass and shares that
    // mass equally.
    std::vector<std::size_t> order;
    for (std::size_t lo = 1, hi = m - 1; lo <= hi; ++lo, --hi) {
      order.push_back(lo);
      if (hi != lo) order.push_back(hi);
    }
    auto size_mass = [&](std::size_t k) {
      return static_cast<double>(m - 1) /
             (static_cast<double>(k) * static_cast<double>(m - k));
    };
    std::size_t budget = config.num_coalitions;
    std::vector<bool> complete(m, false);
    for (std::size_t k : order) {
      const double count = binomial(m, k);
      if (count > static_cast<double>(budget)) break;
      const double w = size_mass(k) / count;
      std::vector<std::size_t> pick(k);
      for (std::size_t i = 0; i < k; ++i) pick[i] = i;
      while (true) {
        std::vector<char> row(m, 0);
        for (std::size_t i : pick) row[i] = 1;
        rows.push_back(std::move(row));
        weights.push_back(w);
        // Next k-combination in lexicographic order.
        std::size_t i = k;
        while (i > 0 && pick[i - 1] == m - k + i - 1) --i;
        if (i == 0) break;
        ++pick[i - 1];
        for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
      }
      budget -= static_cast<std::size_t>(count);
      complete[k] = true;
    }

    std::vector<std::size_t> open_sizes;
    std::vector<double> cdf;
    double left = 0.0;
    for (std::size_t k = 1; k < m; ++k) {
      if (complete[k]) continue;
      left += size_mass(k);
      open_sizes.push_back(k);
      cdf.push_back(left);
    }
    if (budget > 0 && !open_sizes.empty()) {
      Rng rng(stream_seed);
      std::vector<std::size_t> idx(m);
      std::set<std::vector<char>> seen;
      const std::size_t first = rows.size();
      while (rows.size() - first < budget) {
        const double u = rng.uniform() * left;
        std::size_t pos = 0;
        while (pos + 1 < cdf.size() && cdf[pos] <= u) ++pos;
        const std::size_t k = open_sizes[pos];
        for (std::size_t i = 0; i < m; ++i) idx[i] = i;
        std::vector<char> row(m, 0);
        for (std::size_t i = 0; i < k; ++i) {
          const std::size_t j = i + rng.below(m - i);
          std::swap(idx[i], idx[j]);
          row[idx[i]] = 1;
        }
        // A repeated coalition adds no equation.
        if (!seen.insert(row).second) continue;
        rows.push_back(std::move(row));
      }
      weights.resize(rows.size(), left / static_cast<double>(budget));
    }
  }

  // Eliminate the last feature through the efficiency constraint
  // phi_last = delta - sum(phi_other).
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(m - 1);
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  Eigen::VectorXd w(n);
  std::vector<double> probe(m);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    for (std::size_t i = 0; i < m; ++i) probe[i] = row[i] ? sample[i] : background[i];
    const double last = row[m - 1];
    for (Eigen::Index i = 0; i < p; ++i) {
      x(r, i) = row[static_cast<std::size_t>(i)] - last;
    }
    y(r) = f(probe) - f_bg - last * delta;
    w(r) = weights[static_cast<std::size_t>(r)];
  }
  const Eigen::MatrixXd a = x.transpose() * w.asDiagonal() * x;
  const Eigen::VectorXd b = x.transpose() * (w.asDiagonal() * y);
  const Eigen::VectorXd phi = solve_normal(a, b, "kernel_shap");
  std::vector<double> out(phi.data(), phi.data() + phi.size());
  double sum = 0.0;
  for (double v : out) sum += v;
  out.push_back(delta - sum);
  return out;
}

std::vector<double> kernel_shap(const NetworkModel& model,
                                std::span<const double> sample,
                                std::size_t target_class,
                                const ShapConfig& config,
                                std::span<const double> background,
                                std::size_t sample_index) {
  if (sample.size() != model.input_length()) {
    throw ShapeError("kernel_shap: sample length does not match model input");
  }
  return kernel_shap(logit_of(model, target_class), sample, background, config,
                     derive_seed(config.seed, sample_index));
}

}  // namespace tsxai
