#include "emogan/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "emogan/errors.hpp"

namespace emogan {

std::string GradientCheckReport::describe() const {
  std::ostringstream os;
  os << (passed ? "pass" : "FAIL") << ": " << parameters_checked
     << " parameters, worst relative error " << worst_relative_error;
  if (parameters_checked > 0) {
    os << " at layer " << worst_layer << ' '
       << (worst_kind == ParameterKind::weight ? "weight" : "bias") << '[' << worst_index << ']';
  }
  return os.str();
}

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradientCheckReport compare_gradients(const Mlp& net, const Matrix& input, const OutputLoss& loss,
                                      const Gradients& analytic, double tolerance, double step) {
  if (analytic.layers.size() != net.num_layers()) {
    throw ShapeError("gradient_check: analytic gradient has wrong layer count");
  }
  GradientCheckReport report;
  Mlp probe = net;
  auto evaluate = [&]() { return loss(probe.predict(input)).value; };

  auto check_entry = [&](double& param, double analytic_value, std::size_t layer,
                         ParameterKind kind, Eigen::Index index) {
    const double saved = param;
    param = saved + step;
    const double plus = evaluate();
    param = saved - step;
    const double minus = evaluate();
    param = saved;
    const double numeric = (plus - minus) / (2.0 * step);
    const double err = relative_error(analytic_value, numeric);
    ++report.parameters_checked;
    if (err > report.worst_relative_error || report.parameters_checked == 1) {
      report.worst_relative_error = err;
      report.worst_layer = layer;
      report.worst_kind = kind;
      report.worst_index = index;
    }
  };

  auto& layers = probe.mutable_layers();
  for (std::size_t li = 0; li < layers.size(); ++li) {
    auto& l = layers[li];
    const auto& g = analytic.layers[li];
    for (Eigen::Index k = 0; k < l.weight.size(); ++k) {
      check_entry(l.weight.data()[k], g.weight.data()[k], li, ParameterKind::weight, k);
    }
    for (Eigen::Index k = 0; k < l.bias.size(); ++k) {
      check_entry(l.bias.data()[k], g.bias.data()[k], li, ParameterKind::bias, k);
    }
  }
  report.passed = report.worst_relative_error <= tolerance;
  return report;
}

GradientCheckReport gradient_check(const Mlp& net, const Matrix& input, const OutputLoss& loss,
                                   double tolerance) {
  const ForwardCache cache = net.forward(input);
  const LossResult r = loss(cache.output());
  const Gradients g = net.backward(cache, r.gradient);
  return compare_gradients(net, input, loss, g, tolerance);
}

}  // namespace emogan
