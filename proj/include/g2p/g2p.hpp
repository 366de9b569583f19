// Copyright (c) 2026 The g2p-multilingual Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "g2p/checkpoint.hpp"
#include "g2p/config.hpp"
#include "g2p/corpus.hpp"
#include "g2p/decoding.hpp"
#include "g2p/errors.hpp"
#include "g2p/evaluation.hpp"
#include "g2p/model.hpp"
#include "g2p/numerics.hpp"
#include "g2p/training.hpp"
