#pragma once

namespace socsim {

/// Selects the OpenMP kernel or the serial reference path. Both produce
/// bit-identical results; the serial path is the one tests and benchmarks
/// compare against.
enum class ExecPolicy { serial, parallel };

}  // namespace socsim
