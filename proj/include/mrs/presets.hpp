#ifndef MRS_PRESETS_HPP
#define MRS_PRESETS_HPP

#include <string>
#include <vector>

#include "mrs/baselines.hpp"
#include "mrs/model.hpp"

namespace mrs::presets {

// AR(1) alpha 0, phi 0.75, sigma2 1 plus N(0, 1); p11 = p22 = 0.9.
MrsModel model1();
// Two AR(1) regimes, phi 0.9 and 0.4, sigma2 1; p11 = p22 = 0.6.
MrsModel model2();
// AR(1) phi 0.95, sigma2 0.2 plus N(2, 1); p11 = 0.5, p22 = 0.8; starts in regime 1.
MrsModel example3();
// Independent AR(1) regimes (0, 0.6, 1) and (1, 0.9, 1); p11 = p22 = 0.9.
MrsModel example2();
// Dependent AR(1) regimes (0, 0.6, 1) and (1, 0.9, 1); p11 = p22 = 0.9.
DependentMrsModel example1();
// AR(1) base regime plus a log-normal spike shifted by 7.106, fitted values
// reported for South Australian daily prices.
MrsModel m1_ln();

std::vector<std::string> names();
// Throws ValidationError for an unknown name or a dependent preset.
MrsModel by_name(const std::string& name);

}  // namespace mrs::presets

#endif  // MRS_PRESETS_HPP
