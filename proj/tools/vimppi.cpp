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


#include <iostream>

#include "vimppi/cli.hpp"
#include "vimppi/config.hpp"
#include "vimppi/errors.hpp"

int main(int argc, char** argv) {
    try {
        const vimppi::RunSpec spec = vimppi::parse_args(argc, argv);
        return vimppi::execute(spec, std::cout, std::cerr, vimppi::process_environment());
    } catch (const vimppi::UsageError& e) {
        std::cerr << "vimppi: " << e.what() << "\nRun 'vimppi run --help' for usage.\n";
        return 2;
    }
}
