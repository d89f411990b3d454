//===- io.h - Files, schedules and reports as text --------------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef PIPEFLOW_IO_H
#define PIPEFLOW_IO_H

#include "pipeflow/simulator.h"

namespace pipeflow {

/// A file could not be read or written.
class IoError : public Error {
public:
  using Error::Error;
};

std::string readFile(const std::string &path);
void writeFile(const std::string &path, const std::string &contents);

/// Parse, validate, unroll and partition.
Program lowerKernel(const std::string &source);

/// `{"loops": [{"id", "start", "ii"}], "ops": [{"id", "start"}],
/// "horizon"}`, two-space indented, newline terminated.
std::string scheduleToJson(const Schedule &schedule);

/// Throws Error on malformed input.
Schedule scheduleFromJson(const std::string &text);

std::string reportToJson(const VerifyReport &report);

/// "7/2" style exact value followed by a 3-digit decimal, e.g. "7/2 (3.500)".
std::string formatSpeedup(const std::optional<Rational> &speedup);

} // namespace pipeflow

#endif // PIPEFLOW_IO_H
