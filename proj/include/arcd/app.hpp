#pragma once

// Command dispatch with the exit-code contract:
//   0 success, 1 verification failure, 2 input/validation error, 3 numeric error.

#include <exception>
#include <ostream>

#include "arcd/commands.hpp"
#include "arcd/error.hpp"
#include "arcd/image_io.hpp"
#include "arcd/verify.hpp"

namespace arcd {

inline int cmd_verify(const RunConfig& rc, std::ostream& out, const verify::Options& opts = {}) {
  const auto results = verify::run_acceptance(opts);
  bool all = true;
  for (const auto& r : results) {
    out << verify::report_line(r) << "\n";
    all = all && r.passed;
  }
  out << results.size() << " criteria, " << (all ? "all passed" : "FAILURES present") << "\n";
  if (rc.out_path) write_file(*rc.out_path, verify::report_json(results));
  return all ? exit_code::ok : exit_code::verification_failed;
}

inline int run_command(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  try {
    switch (rc.command) {
      case Command::mask: return cmd_mask(rc, out);
      case Command::decode: return cmd_decode(rc, out);
      case Command::sweep: return cmd_sweep(rc, out);
      case Command::fixture: return cmd_fixture(rc, out);
      case Command::verify: return cmd_verify(rc, out);
    }
    err << "error: unknown command\n";
    return exit_code::input_error;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::input_error;
  }
}

}  // namespace arcd
