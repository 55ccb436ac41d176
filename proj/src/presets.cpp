#include "mrs/presets.hpp"

#include "mrs/errors.hpp"

namespace mrs::presets {

namespace {

Matrix two_state(double p11, double p22) {
  Matrix P(2, 2);
  P(0, 0) = p11;
  P(0, 1) = 1.0 - p11;
  P(1, 0) = 1.0 - p22;
  P(1, 1) = p22;
  return P;
}

}  // namespace

MrsModel model1() {
  return {{RegimeSpec::ar1(0.0, 0.75, 1.0), RegimeSpec::normal(0.0, 1.0)}, two_state(0.9, 0.9), {0.5, 0.5}};
}

MrsModel model2() {
  return {{RegimeSpec::ar1(0.0, 0.9, 1.0), RegimeSpec::ar1(0.0, 0.4, 1.0)}, two_state(0.6, 0.6), {0.5, 0.5}};
}

MrsModel example2() {
  return {{RegimeSpec::ar1(0.0, 0.6, 1.0), RegimeSpec::ar1(1.0, 0.9, 1.0)}, two_state(0.9, 0.9), {0.5, 0.5}};
}

MrsModel example3() {
  return {{RegimeSpec::ar1(0.0, 0.95, 0.2), RegimeSpec::normal(2.0, 1.0)}, two_state(0.5, 0.8), {1.0, 0.0}};
}

DependentMrsModel example1() { return {example2()}; }

MrsModel m1_ln() {
  return {{RegimeSpec::ar1(-3.257, 0.6830, 213.26), RegimeSpec::shifted_lognormal(3.751, 1.268, 7.106, 1)},
          two_state(0.9140, 0.3945),
          {0.5, 0.5}};
}

std::vector<std::string> names() { return {"model1", "model2", "example2", "example3", "m1-ln"}; }

MrsModel by_name(const std::string& name) {
  if (name == "model1") return model1();
  if (name == "model2") return model2();
  if (name == "example2") return example2();
  if (name == "example3") return example3();
  if (name == "m1-ln") return m1_ln();
  throw ValidationError("unknown preset '" + name + "'");
}

}  // namespace mrs::presets
