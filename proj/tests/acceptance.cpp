// Acceptance gate: runs every criterion of the verification suite at its
// stated tolerance and prints one line per criterion. With a criterion
// number as argument only that criterion runs. Exit code 1 on any failure.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "finsler/verify.hpp"

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  int failures = 0, ran = 0;
  for (const auto& c : finsler::verification_suite()) {
    if (only != 0 && c.number != only) continue;
    const auto r = finsler::run_criterion(c, {});
    ++ran;
    if (!r.pass) ++failures;
    std::printf("criterion %2d %-28s %s (%.2fs) %s\n", c.number, c.id.c_str(), r.pass ? "PASS" : "FAIL", r.seconds,
                r.detail.c_str());
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion numbered %d\n", only);
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
