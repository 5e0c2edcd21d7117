#pragma once

namespace hbnet::cli {

/// Entry point of the hbnet binary. Returns 0 on success, 1 on usage
/// errors and 2 on data or model errors.
int run(int argc, const char* const* argv);

}  // namespace hbnet::cli
