#include "hope/gradcheck.hpp"

#include "hope/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace hope {

namespace {

double evaluate(const LossBuilder& loss) {
  Tape tape;
  const Var out = loss(tape);
  if (out.value().size() != 1) throw UsageError("grad_check: loss is not scalar");
  const double v = out.value()[0];
  if (!std::isfinite(v)) throw NumericError("grad_check: loss is not finite");
  return v;
}

} // namespace

GradCheckResult grad_check(const LossBuilder& loss, std::span<const NamedParam> params,
                           const GradCheckOptions& options) {
  if (!(options.eps > 0.0)) throw UsageError("grad_check: eps must be positive");

  for (const auto& p : params) {
    if (!p.tensor->requires_grad()) p.tensor->set_requires_grad(true);
    p.tensor->zero_grad();
  }
  {
    Tape tape;
    const Var out = loss(tape);
    if (!std::isfinite(out.value()[0])) throw NumericError("grad_check: loss is not finite");
    tape.backward(out);
  }

  std::mt19937_64 rng(options.seed);
  GradCheckResult result;
  for (const auto& p : params) {
    Tensor& t = *p.tensor;
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());

    std::vector<std::size_t> coords(t.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > options.coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.coords_per_param);
      std::sort(coords.begin(), coords.end());
    }

    for (std::size_t idx : coords) {
      const double saved = t[idx];
      t[idx] = saved + options.eps;
      const double plus = evaluate(loss);
      t[idx] = saved - options.eps;
      const double minus = evaluate(loss);
      t[idx] = saved;

      const double numeric = (plus - minus) / (2.0 * options.eps);
      const double a = analytic[idx];
      const double err = std::abs(a - numeric) / std::max({options.denominator_floor, std::abs(a), std::abs(numeric)});
      ++result.coords_checked;
      if (result.worst_param.empty() || err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = p.name;
        result.worst_index = idx;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
    t.zero_grad();
  }
  return result;
}

} // namespace hope
