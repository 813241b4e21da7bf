#include "cnls/error.hpp"

namespace cnls {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::domain: return "domain";
    case ErrorKind::admissibility: return "admissibility";
    case ErrorKind::degenerate_candidate: return "degenerate_candidate";
    case ErrorKind::candidate: return "candidate";
    case ErrorKind::non_convergence: return "non_convergence";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::oracle_failure: return "oracle_failure";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace cnls
