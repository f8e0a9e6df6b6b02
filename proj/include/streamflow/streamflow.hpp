// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "streamflow/builder.hpp"
#include "streamflow/builtin_tools.hpp"
#include "streamflow/channel.hpp"
#include "streamflow/definition.hpp"
#include "streamflow/engine.hpp"
#include "streamflow/errors.hpp"
#include "streamflow/file_channel.hpp"
#include "streamflow/memory_channel.hpp"
#include "streamflow/plates.hpp"
#include "streamflow/plugins.hpp"
#include "streamflow/store_channel.hpp"
#include "streamflow/stream.hpp"
#include "streamflow/timeline.hpp"
#include "streamflow/tool.hpp"
#include "streamflow/value.hpp"
#include "streamflow/workflow.hpp"
