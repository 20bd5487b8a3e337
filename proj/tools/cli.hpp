#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vstitch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitAlignment = 3;

// `args` excludes the program name; the first element picks the command.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_stitch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_synth(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_eval(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vstitch::cli
