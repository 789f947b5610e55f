#include "aemr/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <string_view>

#include "aemr/error.hpp"

namespace aemr {

std::size_t resolve_threads(std::optional<std::size_t> requested) {
  std::size_t n = 1;
  if (requested) {
    n = *requested;
  } else if (const char* env = std::getenv("AEMR_THREADS"); env && *env) {
    const std::string_view text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw Error(ErrorCode::Config, "AEMR_THREADS is not a nonnegative integer");
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

}  // namespace aemr
