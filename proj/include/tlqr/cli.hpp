// Copyright 2026 The tlqr Authors
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

#ifndef TLQR__CLI_HPP_
#define TLQR__CLI_HPP_

#include "tlqr/experiment.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace tlqr
{

inline constexpr const char * kToolVersion = "0.1.0";

/// Process exit codes. 4 is returned by `verify` when a check fails.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitNotConverged = 2,
  kExitIo = 3,
  kExitCheckFailed = 4,
};

struct CommandOptions
{
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool full_grid = false;
  std::string mode = "both";  // both | closed | open
  std::string suite = "all";
};

/// --threads if given, else TLQR_THREADS, else 1. A malformed TLQR_THREADS is a ConfigError.
unsigned resolve_threads(std::optional<unsigned> flag);

/// Fields: command, config_hash, tool_version, master_seed, started_at, finished_at, outputs.
/// Timestamps honor SOURCE_DATE_EPOCH when it is set.
struct RunManifest
{
  std::string command;
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::uint64_t master_seed = 0;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;  // file names relative to the output directory
  nlohmann::json notes = nlohmann::json::object();  // command-specific metadata, e.g. the NMSE norm

  nlohmann::json to_json() const;
};

std::string utc_timestamp();

int cmd_plan(const CommandOptions & options, std::ostream & out, std::ostream & err);
int cmd_sweep(const CommandOptions & options, std::ostream & out, std::ostream & err);
int cmd_verify(const CommandOptions & options, std::ostream & out, std::ostream & err);
int cmd_ldp(const CommandOptions & options, std::ostream & out, std::ostream & err);

}  // namespace tlqr

#endif  // TLQR__CLI_HPP_
