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


#ifndef VIMPPI_ERRORS_HPP
#define VIMPPI_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vimppi {

/// Newton matrix of the variational step is numerically singular.
class SingularCorrectionMatrix : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Implicit midpoint fixed-point iteration failed to contract.
class FixedPointDivergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Every rollout in a batch was disqualified.
class DegenerateWeights : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Controller exceeded the episode's wall-clock budget.
class ControllerTimeout : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace vimppi

#endif  // VIMPPI_ERRORS_HPP
