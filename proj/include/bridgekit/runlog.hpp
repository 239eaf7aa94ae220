#ifndef BRIDGEKIT_RUNLOG_HPP
#define BRIDGEKIT_RUNLOG_HPP

#include <mutex>
#include <string>
#include <vector>

namespace bridgekit::runlog {

// Process-wide warning sink. Clamped schedule-derivative evaluations and
// similar recoverable events land here instead of being silently dropped;
// the CLI drains it into the run log next to the other outputs.

void record(const std::string& message);
std::vector<std::string> drain();
std::size_t warning_count();
void reset();

}  // namespace bridgekit::runlog

#endif
