#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "emgo/stream.hpp"

namespace emgo::cli {

// Runs one subcommand. `args[0]` is the program name. Returns 0 on success,
// 1 on a domain error, 2 on a usage error. `stdin_source` feeds `stream`
// when neither --listen nor --replay is given.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const ByteSource& stdin_source = {});

// Flat config grammar, one `key = value` per line, `#` starts a comment.
// Keys are long flag names; `.` and `_` read as `-`, so
// `filter.band_order = 4` sets `--filter-band-order 4`.
std::vector<std::pair<std::string, std::string>> parse_config(const std::string& text);

}  // namespace emgo::cli
