//===- io.cpp - Files, schedules and reports as text ----------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "pipeflow/io.h"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

using Json = nlohmann::ordered_json;

namespace pipeflow {

std::string readFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad())
    throw IoError("cannot read '" + path + "'");
  return ss.str();
}

void writeFile(const std::string &path, const std::string &contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open '" + path + "' for writing");
  out << contents;
  out.flush();
  if (!out)
    throw IoError("cannot write '" + path + "'");
}

Program lowerKernel(const std::string &source) {
  return Program(applyPartition(applyUnroll(parseKernel(source))));
}

std::string scheduleToJson(const Schedule &schedule) {
  Json j;
  j["loops"] = Json::array();
  for (const ScheduledLoop &l : schedule.loops)
    j["loops"].push_back({{"id", l.id}, {"start", l.start}, {"ii", l.ii}});
  j["ops"] = Json::array();
  for (const ScheduledOp &o : schedule.ops)
    j["ops"].push_back({{"id", o.id}, {"start", o.start}});
  j["horizon"] = schedule.horizon;
  return j.dump(2) + "\n";
}

static int64_t intField(const Json &obj, const char *key) {
  if (!obj.is_object() || !obj.contains(key) ||
      !obj.at(key).is_number_integer())
    throw Error(std::string("schedule: missing integer field '") + key + "'");
  return obj.at(key).get<int64_t>();
}

static std::string stringField(const Json &obj, const char *key) {
  if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_string())
    throw Error(std::string("schedule: missing string field '") + key + "'");
  return obj.at(key).get<std::string>();
}

Schedule scheduleFromJson(const std::string &text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error &e) {
    throw Error(std::string("schedule: ") + e.what());
  }
  if (!j.is_object() || !j.contains("loops") || !j["loops"].is_array() ||
      !j.contains("ops") || !j["ops"].is_array())
    throw Error("schedule: expected an object with 'loops' and 'ops' arrays");
  Schedule s;
  for (const Json &l : j["loops"])
    s.loops.push_back(
        {stringField(l, "id"), intField(l, "start"), intField(l, "ii")});
  for (const Json &o : j["ops"])
    s.ops.push_back({stringField(o, "id"), intField(o, "start")});
  s.horizon = intField(j, "horizon");
  return s;
}

std::string formatSpeedup(const std::optional<Rational> &speedup) {
  if (!speedup)
    return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", speedup->get_d());
  return formatRational(*speedup) + " (" + buf + ")";
}

std::string reportToJson(const VerifyReport &report) {
  Json j;
  j["dependence-violations"] = Json::array();
  for (const DependenceViolation &v : report.violations)
    j["dependence-violations"].push_back({{"source", v.source},
                                          {"sink", v.sink},
                                          {"kind", v.kind},
                                          {"array", v.array},
                                          {"level", v.level},
                                          {"source-ivs", v.srcIvs},
                                          {"sink-ivs", v.snkIvs},
                                          {"required-gap", v.requiredGap},
                                          {"actual-gap", v.actualGap}});
  j["dependence-violation-count"] = report.totalViolations;
  j["port-conflicts"] = Json::array();
  for (const PortConflict &c : report.portConflicts)
    j["port-conflicts"].push_back({{"bank", c.bank},
                                   {"port", c.port},
                                   {"cycle", c.cycle},
                                   {"instances", c.instances}});
  j["port-conflict-count"] = report.totalPortConflicts;
  j["overlapped-latency"] = report.overlappedLatency;
  j["sequential-latency"] = report.sequentialLatency;
  if (report.speedup) {
    j["speedup"] = formatRational(*report.speedup);
    j["speedup-value"] = report.speedup->get_d();
  } else {
    j["speedup"] = nullptr;
    j["speedup-value"] = nullptr;
  }
  return j.dump(2) + "\n";
}

} // namespace pipeflow
