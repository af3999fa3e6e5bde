#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mfc/dpp.hpp"
#include "mfc/errors.hpp"

namespace mfc {

namespace {

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

// Contracts every coordinate of a base-S tensor (first coordinate most
// significant) against its own weight vector. Contracts the last
// coordinate first.
double contract(std::span<const double> tensor, std::size_t S,
                std::span<const std::span<const double>> factors, std::vector<double>& scratch) {
  scratch.assign(tensor.begin(), tensor.end());
  std::size_t len = tensor.size();
  for (std::size_t i = factors.size(); i-- > 0;) {
    const auto f = factors[i];
    const std::size_t out_len = len / S;
    for (std::size_t prefix = 0; prefix < out_len; ++prefix) {
      double s = 0.0;
      for (std::size_t j = 0; j < S; ++j) s += f[j] * scratch[prefix * S + j];
      scratch[prefix] = s;
    }
    len = out_len;
  }
  return scratch[0];
}

}  // namespace

double ValueTensor::at(std::span<const std::size_t> coords) const {
  if (coords.size() != static_cast<std::size_t>(arity)) {
    throw std::invalid_argument("tensor index arity mismatch");
  }
  std::size_t flat = 0;
  for (std::size_t c : coords) flat = flat * base + c;
  return values[flat];
}

double integrate_tensor(const ValueTensor& tensor, std::span<const double> weights) {
  if (weights.size() != tensor.base) throw std::invalid_argument("weight vector does not match tensor base");
  std::vector<std::span<const double>> factors(tensor.arity, weights);
  std::vector<double> scratch;
  return contract(tensor.values, tensor.base, factors, scratch);
}

std::vector<ValueTensor> first_order_value_tensors(const FiniteMFModel& model,
                                                   const FirstOrderOptions& options) {
  const auto& components = model.first_order_components();
  if (!components) throw std::invalid_argument("model does not declare first order interactions");
  const std::size_t S = model.states().size();
  const std::size_t M = model.actions().size();
  const int n = model.horizon();

  if (n > options.max_horizon || S > options.max_states) {
    std::ostringstream os;
    os << "first order tensors limited to n <= " << options.max_horizon << " and S <= "
       << options.max_states << " (got n = " << n << ", S = " << S << ")";
    throw BudgetError(os.str(), 0, 0);
  }
  const double entries0 = std::pow(static_cast<double>(S), std::pow(2.0, n + 1));
  if (entries0 > static_cast<double>(options.max_entries)) {
    std::ostringstream os;
    os << "first order tensor at stage 0 has " << entries0 << " entries, cap is "
       << options.max_entries;
    throw BudgetError(os.str(), static_cast<std::uint64_t>(entries0), options.max_entries);
  }

  // P̃ rows per (k, x, y, a, b), validated once.
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(n) * S * S * M * M);
  auto row_index = [&](int k, std::size_t x, std::size_t y, std::size_t a, std::size_t b) {
    return (((static_cast<std::size_t>(k) * S + x) * S + y) * M + a) * M + b;
  };
  for (int k = 0; k < n; ++k) {
    for (std::size_t x = 0; x < S; ++x) {
      for (std::size_t y = 0; y < S; ++y) {
        for (std::size_t a = 0; a < M; ++a) {
          for (std::size_t b = 0; b < M; ++b) {
            auto r = components->kernel(k, x, y, a, b);
            double total = 0.0;
            bool bad = r.size() != S;
            for (double p : r) {
              bad = bad || !std::isfinite(p) || p < 0.0;
              total += p;
            }
            if (bad || std::abs(total - 1.0) > kMassTolerance) {
              std::ostringstream os;
              os << "first order kernel row at stage " << k << ", (x, y) = (" << x << ", " << y
                 << ") is not a probability vector";
              throw ModelError(os.str());
            }
            rows[row_index(k, x, y, a, b)] = std::move(r);
          }
        }
      }
    }
  }

  std::vector<ValueTensor> tensors(n + 1);
  tensors[n] = {n, 2, S, std::vector<double>(S * S)};
  for (std::size_t x = 0; x < S; ++x) {
    for (std::size_t y = 0; y < S; ++y) tensors[n].values[x * S + y] = components->terminal_cost(x, y);
  }

  const auto maps = enumerate_maps(S, M);
  std::vector<double> scratch;
  for (int k = n - 1; k >= 0; --k) {
    const int p = 1 << (n - k);
    const int arity = 2 * p;
    const ValueTensor& next = tensors[k + 1];
    ValueTensor& cur = tensors[k];
    cur = {k, arity, S, std::vector<double>(ipow(S, arity))};

    std::vector<std::size_t> coords(arity);
    std::vector<std::span<const double>> factors(p);
    for (std::size_t flat = 0; flat < cur.values.size(); ++flat) {
      std::size_t rem = flat;
      for (int i = arity; i-- > 0;) {
        coords[i] = rem % S;
        rem /= S;
      }
      double best = std::numeric_limits<double>::infinity();
      for (const auto& m : maps) {
        const std::size_t x1 = coords[0];
        const std::size_t y1 = coords[p];
        double v = components->stage_cost(k, x1, y1, m[x1], m[y1]);
        for (int i = 0; i < p; ++i) {
          const std::size_t xi = coords[i];
          const std::size_t yi = coords[p + i];
          factors[i] = rows[row_index(k, xi, yi, m[xi], m[yi])];
        }
        v += contract(next.values, S, factors, scratch);
        best = std::min(best, v);
      }
      cur.values[flat] = best;
    }
  }
  return tensors;
}

ValueTensor first_order_value_tensor(const FiniteMFModel& model, int stage,
                                     const FirstOrderOptions& options) {
  if (stage < 0 || stage > model.horizon()) throw std::out_of_range("stage outside [0, n]");
  auto all = first_order_value_tensors(model, options);
  return std::move(all[stage]);
}

FirstOrderReport first_order_check(const FiniteMFModel& model, const DiscreteMeasure& mu0,
                                   const FirstOrderOptions& options,
                                   const SolveOptions& solve_options) {
  const auto tensors = first_order_value_tensors(model, options);
  const SolveResult solved = solve(model, mu0, solve_options);

  FirstOrderReport report;
  report.stage_discrepancy.assign(model.horizon() + 1, 0.0);
  report.stage_gap.assign(model.horizon() + 1, 0.0);
  for (const auto& [key, node] : solved.value_cache) {
    const GridLaw law(model.states(), node.measure);
    const double integral = integrate_tensor(tensors[node.stage], law.weights());
    const double diff = node.value - integral;
    auto& d = report.stage_discrepancy[node.stage];
    d = std::max(d, std::abs(diff));
    auto& g = report.stage_gap[node.stage];
    g = std::max(g, diff);
    report.max_discrepancy = std::max(report.max_discrepancy, std::abs(diff));
    ++report.nodes_checked;
  }
  return report;
}

}  // namespace mfc
