#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace rockmass::workflows {

// One command of the CLI surface. `config` fully captures the run (inputs,
// seed, pipeline, model); `out_dir` receives the artifacts plus the resolved
// run_config.json, so replaying the saved config reproduces every output.
//
// Commands: synth | ingest | aggregate | train | cv | tune | predict | report
//
// Errors are rockmass::Error; the caller maps kinds to exit codes
// (config -> 2, data -> 3, runtime -> 4).
void run_command(const std::string& command, const nlohmann::json& config,
                 const std::string& out_dir);

// Exit-code category for an error kind.
int exit_code_for(const std::string& error_kind);

}  // namespace rockmass::workflows
