#pragma once

#include <cstddef>
#include <functional>

namespace moc {

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware concurrency).
/// Results must be written by index; the first exception (lowest index) is rethrown.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

} // namespace moc
