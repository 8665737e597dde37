// Copyright 2026 The refgame Authors
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

#pragma once

#define REFGAME_VERSION "0.1.0"

#include "refgame/agents/model_config.hpp"
#include "refgame/agents/receiver.hpp"
#include "refgame/agents/sender.hpp"
#include "refgame/analysis/episode_log.hpp"
#include "refgame/analysis/report.hpp"
#include "refgame/analysis/stats.hpp"
#include "refgame/core/binary_io.hpp"
#include "refgame/core/error.hpp"
#include "refgame/core/rng.hpp"
#include "refgame/data/dataset.hpp"
#include "refgame/data/importer.hpp"
#include "refgame/data/io.hpp"
#include "refgame/data/splits.hpp"
#include "refgame/data/synthetic.hpp"
#include "refgame/game/instance.hpp"
#include "refgame/game/message.hpp"
#include "refgame/game/play.hpp"
#include "refgame/game/trace.hpp"
#include "refgame/nn/checkpoint.hpp"
#include "refgame/nn/grad_check.hpp"
#include "refgame/nn/layers.hpp"
#include "refgame/nn/param.hpp"
#include "refgame/nn/rmsprop.hpp"
#include "refgame/nn/tape.hpp"
#include "refgame/training/losses.hpp"
#include "refgame/training/model.hpp"
#include "refgame/training/trainer.hpp"
