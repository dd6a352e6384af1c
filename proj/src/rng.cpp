#include "semcrypt/rng.hpp"

#include <cstdio>

#include "semcrypt/error.hpp"

namespace semcrypt {

void OsEntropy::fill(uint8_t* p, size_t n) {
  FILE* f = std::fopen("/dev/urandom", "rb");
  if (!f) fail(Err::Internal, "cannot open /dev/urandom");
  const size_t got = std::fread(p, 1, n, f);
  std::fclose(f);
  if (got != n) fail(Err::Internal, "short read from /dev/urandom");
}

}  // namespace semcrypt
