//===- driver.cpp - Command-line pipeline ---------------------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "pipeflow/driver.h"
#include "pipeflow/io.h"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>

namespace pipeflow {

namespace {

constexpr size_t kShownProblems = 20;

std::string iiSummary(const IIAssignment &ii) {
  std::string s;
  for (const auto &[id, v] : ii)
    s += (s.empty() ? "" : ",") + id + ":" + std::to_string(v);
  return s.empty() ? "-" : s;
}

std::string sanitize(const std::string &name) {
  std::string out = name;
  for (char &c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' &&
        c != '-' && c != '.')
      c = '_';
  return out;
}

class Driver {
public:
  Driver(const RunConfig &cfg, std::ostream &out, std::ostream &err)
      : cfg(cfg), out(out), err(err) {}

  int run() {
    static const char *commands[] = {"schedule", "autotune",  "verify",
                                     "report",   "dump-ilp", "dump-deps"};
    bool known = false;
    for (const char *c : commands)
      known |= cfg.command == c;
    if (!known) {
      err << "error: unknown command '" << cfg.command << "'\n";
      return ExitInvalid;
    }

    std::string source = readFile(cfg.input);
    Program program = lowerKernel(source);
    IIAssignment ii = initialIIs(program, cfg.iiOverrides);

    if (cfg.command == "dump-deps") {
      emit(dependenceText(program));
      return ExitOk;
    }
    if (cfg.dumpDeps)
      out << dependenceText(program);
    if (cfg.command == "verify")
      return verify(program);
    return scheduleAndReport(program, ii);
  }

private:
  /// Writes an artifact to --out, or to stdout without one.
  void emit(const std::string &text) {
    if (cfg.out)
      writeFile(*cfg.out, text);
    else
      out << text;
  }

  std::string dependenceText(const Program &program) {
    DependenceInfo deps = analyzeDependences(program);
    std::string text;
    for (const auto &problems : deps.problems)
      for (const DependenceProblem &p : problems)
        text += formatDependenceProblem(program, p) + "\n";
    return text;
  }

  SchedulerOptions schedulerOptions() {
    SchedulerOptions options;
    std::string dir;
    if (cfg.dumpIlpDir)
      dir = *cfg.dumpIlpDir;
    else if (cfg.command == "dump-ilp" && cfg.out)
      dir = *cfg.out;
    if (dir.empty())
      return options;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
      throw IoError("cannot create directory '" + dir + "'");
    ilpDir = dir;
    options.onIlp = [this](const std::string &name, const ILPProblem &p) {
      char prefix[16];
      std::snprintf(prefix, sizeof(prefix), "%04d_", ilpCount++);
      writeFile((std::filesystem::path(ilpDir) /
                 (prefix + sanitize(name) + ".ilp"))
                    .string(),
                formatProblem(p));
    };
    return options;
  }

  int scheduleAndReport(const Program &program, IIAssignment ii) {
    std::vector<std::string> missing;
    for (const LoopInfo &l : program.loops())
      if (!ii.count(l.id))
        missing.push_back(l.id);
    if (cfg.command == "schedule" && !missing.empty()) {
      err << "error: loop '" << missing.front()
          << "' has no initiation interval; pass --ii or use autotune\n";
      return ExitInvalid;
    }
    if (cfg.command == "dump-ilp" && !cfg.dumpIlpDir && !cfg.out) {
      err << "error: dump-ilp needs --dump-ilp DIR or --out DIR\n";
      return ExitInvalid;
    }

    SchedulerOptions options = schedulerOptions();
    ScheduleResult result;
    if (missing.empty()) {
      result = scheduleKernel(program, ii, options);
    } else {
      try {
        AutotuneResult tuned = autotune(program, ii, options);
        ii = tuned.ii;
        result = std::move(tuned.result);
      } catch (const SolverError &) {
        throw;
      } catch (const Error &e) {
        out << "infeasible ii=" << iiSummary(ii) << " (" << e.what() << ")\n";
        return ExitInfeasible;
      }
    }
    if (!result.feasible) {
      out << "infeasible ii=" << iiSummary(ii) << "\n";
      return ExitInfeasible;
    }
    const Schedule &schedule = result.schedule;

    if (cfg.command == "dump-ilp") {
      out << "wrote " << ilpCount << " problems to " << ilpDir << "\n";
      return ExitOk;
    }

    if (cfg.command == "report") {
      VerifyReport report = verifyWith(program, schedule);
      emit(reportToJson(report));
      if (cfg.gantt)
        out << renderGantt(program, schedule);
      summarize(report, result.delayObjective, iiOf(schedule));
      return report.clean() ? ExitOk : ExitVerifyFailed;
    }

    emit(scheduleToJson(schedule));
    if (cfg.gantt)
      out << renderGantt(program, schedule);
    int64_t overlapped = overlappedLatency(program, schedule);
    int64_t sequential = sequentialLatency(program, ii);
    std::optional<Rational> speedup;
    if (overlapped > 0)
      speedup = Rational(sequential) / Rational(overlapped);
    out << "feasible delay=" << formatRational(result.delayObjective)
        << " overlapped-latency=" << overlapped
        << " sequential-latency=" << sequential
        << " speedup=" << formatSpeedup(speedup) << " ii=" << iiSummary(ii)
        << "\n";
    return ExitOk;
  }

  int verify(const Program &program) {
    if (cfg.scheduleFile.empty()) {
      err << "error: verify needs a schedule file\n";
      return ExitInvalid;
    }
    Schedule schedule = scheduleFromJson(readFile(cfg.scheduleFile));
    checkScheduleShape(program, schedule);
    VerifyReport report = verifyWith(program, schedule);
    if (cfg.out)
      writeFile(*cfg.out, reportToJson(report));
    if (cfg.gantt)
      out << renderGantt(program, schedule);
    // The report file has the full list; the terminal gets a sample.
    size_t shown = 0;
    for (const DependenceViolation &v : report.violations) {
      if (shown++ == kShownProblems)
        break;
      err << "violation " << v.kind << " " << v.source << " -> " << v.sink;
      if (!v.array.empty())
        err << " on " << v.array;
      err << " src=[";
      for (size_t i = 0; i < v.srcIvs.size(); ++i)
        err << (i ? "," : "") << v.srcIvs[i];
      err << "] snk=[";
      for (size_t i = 0; i < v.snkIvs.size(); ++i)
        err << (i ? "," : "") << v.snkIvs[i];
      err << "] gap " << v.actualGap << " < " << v.requiredGap << "\n";
    }
    if (report.totalViolations > kShownProblems)
      err << "... " << report.totalViolations - kShownProblems
          << " more violations\n";
    shown = 0;
    for (const PortConflict &c : report.portConflicts) {
      if (shown++ == kShownProblems)
        break;
      err << "port conflict " << c.bank << " port " << c.port << " cycle "
          << c.cycle << ":";
      for (const std::string &i : c.instances)
        err << " " << i;
      err << "\n";
    }
    if (report.totalPortConflicts > kShownProblems)
      err << "... " << report.totalPortConflicts - kShownProblems
          << " more port conflicts\n";
    summarize(report, delayObjective(program, schedule), iiOf(schedule));
    return report.clean() ? ExitOk : ExitVerifyFailed;
  }

  VerifyReport verifyWith(const Program &program, const Schedule &schedule) {
    VerifyOptions options;
    options.maxInstances = cfg.maxInstances;
    return verifySchedule(program, schedule, options);
  }

  void summarize(const VerifyReport &report, const Rational &delay,
                 const IIAssignment &ii) {
    out << (report.clean() ? "valid" : "invalid")
        << " violations=" << report.totalViolations
        << " port-conflicts=" << report.totalPortConflicts
        << " delay=" << formatRational(delay)
        << " overlapped-latency=" << report.overlappedLatency
        << " sequential-latency=" << report.sequentialLatency
        << " speedup=" << formatSpeedup(report.speedup)
        << " ii=" << iiSummary(ii) << "\n";
  }

  const RunConfig &cfg;
  std::ostream &out;
  std::ostream &err;
  std::string ilpDir;
  int ilpCount = 0;
};

} // namespace

int runDriver(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
  try {
    return Driver(cfg, out, err).run();
  } catch (const IoError &e) {
    err << "error: " << e.what() << "\n";
    return ExitIo;
  } catch (const KernelError &e) {
    err << cfg.input << ": " << e.what() << "\n";
    return ExitInvalid;
  } catch (const SolverError &e) {
    err << "error: solver gave up: " << e.what() << "\n";
    return ExitInfeasible;
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return ExitInvalid;
  }
}

} // namespace pipeflow
