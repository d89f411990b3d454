//===- pipeflow_main.cpp - pipeflow command-line tool ---------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "pipeflow/driver.h"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char **argv) {
  using namespace pipeflow;
  CLI::App app{"Static pipelined scheduler for affine loop kernels"};
  app.require_subcommand(1, 1);

  RunConfig cfg;
  std::vector<std::string> iiArgs;
  std::string out;
  std::string dumpIlp;

  auto addCommon = [&](CLI::App *cmd) {
    cmd->add_option("--input", cfg.input, "Kernel source file")->required();
    cmd->add_option("--ii", iiArgs, "Initiation interval as LOOP=N")
        ->allow_extra_args(false);
    cmd->add_option("--out", out, "Output file (directory for dump-ilp)");
    cmd->add_flag("--gantt", cfg.gantt, "Print a Gantt chart");
    cmd->add_option("--dump-ilp", dumpIlp, "Write every ILP to DIR");
    cmd->add_flag("--dump-deps", cfg.dumpDeps,
                  "Print the dependence problems");
    cmd->add_option("--max-instances", cfg.maxInstances,
                    "Cap on dynamic instances during verification");
  };

  struct Command {
    const char *name;
    const char *help;
  };
  const Command commands[] = {
      {"schedule", "Schedule at the given IIs"},
      {"autotune", "Search the smallest IIs for loops without one"},
      {"verify", "Replay a schedule file and check it"},
      {"report", "Schedule, verify and report latencies"},
      {"dump-ilp", "Write the slack and scheduling ILPs"},
      {"dump-deps", "Print the dependence problems"},
  };
  for (const Command &c : commands) {
    CLI::App *cmd = app.add_subcommand(c.name, c.help);
    addCommon(cmd);
    if (std::string(c.name) == "verify")
      cmd->add_option("schedule", cfg.scheduleFile, "Schedule file")
          ->required();
    cmd->callback([&cfg, name = std::string(c.name)] { cfg.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? ExitOk : ExitInvalid;
  }

  for (const std::string &arg : iiArgs) {
    size_t eq = arg.find('=');
    int64_t value = 0;
    bool ok = eq != std::string::npos && eq > 0 && eq + 1 < arg.size();
    if (ok) {
      try {
        size_t used = 0;
        value = std::stoll(arg.substr(eq + 1), &used);
        ok = used == arg.size() - eq - 1;
      } catch (const std::exception &) {
        ok = false;
      }
    }
    if (!ok) {
      std::cerr << "error: --ii expects LOOP=N, got '" << arg << "'\n";
      return ExitInvalid;
    }
    cfg.iiOverrides[arg.substr(0, eq)] = value;
  }
  if (!out.empty())
    cfg.out = out;
  if (!dumpIlp.empty())
    cfg.dumpIlpDir = dumpIlp;
  return runDriver(cfg, std::cout, std::cerr);
}
