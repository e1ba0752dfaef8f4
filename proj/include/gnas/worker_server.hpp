#pragma once

#include <iosfwd>

#include "gnas/evaluation.hpp"

namespace gnas {

/// Worker side of the evaluation protocol: answers the hello, then one
/// response per evaluate request until shutdown or end of input. A bad
/// request gets an error response and never ends the session. Returns 0 on
/// clean shutdown, 1 if the handshake fails.
int serve_worker(std::istream& in, std::ostream& out, Evaluator& evaluator);

}
