//
// Copyright 2026 The cfre Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef CFRE_CFRE_HPP_
#define CFRE_CFRE_HPP_

#include "cfre/alt_search.hpp"
#include "cfre/cleanup.hpp"
#include "cfre/corpus_io.hpp"
#include "cfre/document.hpp"
#include "cfre/embedding.hpp"
#include "cfre/error.hpp"
#include "cfre/evaluation.hpp"
#include "cfre/generator.hpp"
#include "cfre/pool.hpp"

#endif  // CFRE_CFRE_HPP_
