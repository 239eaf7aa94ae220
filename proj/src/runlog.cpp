#include "bridgekit/runlog.hpp"

namespace bridgekit::runlog {

namespace {
std::mutex g_mutex;
std::vector<std::string> g_messages;
std::size_t g_count = 0;
}  // namespace

void record(const std::string& message) {
    std::lock_guard<std::mutex> lock(g_mutex);
    ++g_count;
    // Cap retained messages; repeated clamp warnings from dense grids would
    // otherwise grow without bound.
    if (g_messages.size() < 4096) g_messages.push_back(message);
}

std::vector<std::string> drain() {
    std::lock_guard<std::mutex> lock(g_mutex);
    std::vector<std::string> out;
    out.swap(g_messages);
    return out;
}

std::size_t warning_count() {
    std::lock_guard<std::mutex> lock(g_mutex);
    return g_count;
}

void reset() {
    std::lock_guard<std::mutex> lock(g_mutex);
    g_messages.clear();
    g_count = 0;
}

}  // namespace bridgekit::runlog
