#include "nids/error.hpp"

namespace nids {

int exit_code(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::data: return 3;
    case ErrorCategory::model: return 4;
    case ErrorCategory::internal: return 5;
  }
  return 5;
}

}  // namespace nids
