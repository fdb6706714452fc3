#ifndef CALIBREX_EXTERNAL_PROCESS_HPP
#define CALIBREX_EXTERNAL_PROCESS_HPP

#include <string>

namespace calibrex {

struct ProcessResult {
    bool timed_out = false;
    bool spawn_failed = false;
    int exit_code = -1;
    std::string out;  // child stdout
    std::string err;  // child stderr (truncated)
};

/// Run `command` through /bin/sh, write `input` to its stdin, read stdout
/// and stderr to completion or until `timeout_s` elapses (the child is then
/// killed). Never hangs.
ProcessResult run_process_once(const std::string& command, const std::string& input, double timeout_s);

}  // namespace calibrex

#endif
