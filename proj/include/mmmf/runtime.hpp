#pragma once

#if defined(__GLIBC__) || defined(__linux__)
#include <malloc.h>
#endif

namespace mmmf {

/**
 * @brief Keeps large temporaries on the heap instead of fresh mmap pages.
 *
 * Training allocates many short-lived matrices of a few hundred kilobytes;
 * with glibc's default thresholds each one costs page faults. No-op elsewhere.
 */
inline void tune_allocator() {
#if defined(M_MMAP_THRESHOLD) && defined(M_TRIM_THRESHOLD)
    mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 1024 * 1024 * 1024);
    mallopt(M_TOP_PAD, 64 * 1024 * 1024);
#endif
}

}  // namespace mmmf
