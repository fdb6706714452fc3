#include "calibrex/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace calibrex::log {

namespace {

Level parse_env() {
    const char* v = std::getenv("CALIBREX_LOG");
    if (!v) return Level::Info;
    std::string s(v);
    if (s == "error") return Level::Error;
    if (s == "warn") return Level::Warn;
    if (s == "info") return Level::Info;
    if (s == "debug") return Level::Debug;
    return Level::Info;
}

Level& threshold() {
    static Level lv = parse_env();
    return lv;
}

const char* tag(Level lv) {
    switch (lv) {
        case Level::Error: return "error";
        case Level::Warn: return "warn";
        case Level::Info: return "info";
        default: return "debug";
    }
}

std::mutex& out_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

Level level() { return threshold(); }
void set_level(Level lv) { threshold() = lv; }

void write(Level lv, const std::string& msg) {
    std::lock_guard<std::mutex> lock(out_mutex());
    std::cerr << "[" << tag(lv) << "] " << msg << "\n";
}

}  // namespace calibrex::log
