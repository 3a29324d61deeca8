#include "hypoprop/error.hpp"

namespace hypoprop {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::dimension: return "dimension error";
    case ErrorKind::inconsistency: return "internal inconsistency";
    case ErrorKind::singular: return "singular";
    case ErrorKind::branch: return "branch error";
    case ErrorKind::unsupported_limit: return "unsupported limit";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::invariant_violation: return "invariant violation";
    case ErrorKind::state: return "state error";
    case ErrorKind::coverage: return "domain-coverage error";
    case ErrorKind::resolution: return "resolution error";
    case ErrorKind::sharpness_violation: return "sharpness violation";
  }
  return "error";
}

}  // namespace hypoprop
