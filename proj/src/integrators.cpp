/*
 Copyright 2026 The vimppi Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/


#include "vimppi/integrators.hpp"

#include <cctype>

namespace vimppi {

StepperKind parse_stepper(std::string_view name) {
    if (name == "e") return StepperKind::ExplicitEuler;
    if (name == "if") return StepperKind::SemiImplicit;
    if (name == "i") return StepperKind::ImplicitMidpoint;
    if (name == "vi") return StepperKind::Variational;
    if (name == "rk4") return StepperKind::RK4;
    throw std::invalid_argument("unknown stepper '" + std::string(name) +
                                "' (expected e, i, if, vi or rk4)");
}

std::string stepper_name(StepperKind kind) {
    switch (kind) {
        case StepperKind::ExplicitEuler: return "e";
        case StepperKind::SemiImplicit: return "if";
        case StepperKind::ImplicitMidpoint: return "i";
        case StepperKind::RK4: return "rk4";
        case StepperKind::Variational: return "vi";
    }
    return "?";
}

std::string stepper_label(StepperKind kind) {
    std::string label = stepper_name(kind);
    for (char& c : label) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return label + "MPPI";
}

}  // namespace vimppi
