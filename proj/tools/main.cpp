#include <unistd.h>

#include <cerrno>
#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  const std::vector<std::string> args(argv, argv + argc);
  const emgo::ByteSource in = [](std::span<std::uint8_t> buf) -> std::size_t {
    for (;;) {
      const ssize_t n = ::read(STDIN_FILENO, buf.data(), buf.size());
      if (n >= 0) return static_cast<std::size_t>(n);
      if (errno != EINTR) return 0;
    }
  };
  return emgo::cli::run_cli(args, std::cout, std::cerr, in);
}
