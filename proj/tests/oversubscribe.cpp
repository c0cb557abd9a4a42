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

#include <tbb/global_control.h>

// TBB caps its workers at the core count. Lift the cap so worker-count checks
// get real concurrency even on a single-core machine.
static tbb::global_control oversubscribe(tbb::global_control::max_allowed_parallelism, 4);
