#ifndef FADERSYNTH_LOG_H_
#define FADERSYNTH_LOG_H_

#include <string_view>

namespace fadersynth {

enum class LogLevel { kDebug = 0, kInfo = 1, kWarning = 2, kError = 3, kOff = 4 };

void SetLogLevel(LogLevel level);
LogLevel GetLogLevel();

// Writes "[level] message" to stderr when `level` passes the threshold.
void Log(LogLevel level, std::string_view message);

inline void LogInfo(std::string_view m) { Log(LogLevel::kInfo, m); }
inline void LogWarning(std::string_view m) { Log(LogLevel::kWarning, m); }
inline void LogError(std::string_view m) { Log(LogLevel::kError, m); }

}  // namespace fadersynth

#endif  // FADERSYNTH_LOG_H_
